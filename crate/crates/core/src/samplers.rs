//! Seeded random instances for property tests, the CLI probe suites and the demo.

use crate::convexfn::{ConvexPotential, PdQuadratic};
use crate::geometry::Polytope;
use crate::laplace::{Atom, AtomicMeasure};
use crate::momentum::{ProjectiveVector, TorusWeightSystem};
use crate::rational::{self, Rational};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rational in `[-bound, bound]` with the given denominator.
pub fn rational_in<R: Rng>(rng: &mut R, bound: i64, denom: i64) -> Rational {
    rational::ratio(rng.gen_range(-bound * denom..=bound * denom), denom)
}

/// Full-dimensional hull of `points` random points with coordinates
/// `p / denom` in `[-bound, bound]`. Needs `points > n`.
pub fn random_polytope<R: Rng>(rng: &mut R, n: usize, points: usize, bound: i64, denom: i64) -> Polytope {
    assert!(points > n, "need more than {n} points for a full-dimensional hull");
    loop {
        let pts: Vec<Vec<Rational>> = (0..points)
            .map(|_| (0..n).map(|_| rational_in(rng, bound, denom)).collect())
            .collect();
        let p = Polytope::hull(pts, n).expect("valid sample");
        if p.is_full_dimensional() {
            return p;
        }
    }
}

pub fn random_weights<R: Rng>(rng: &mut R, n: usize, k: usize, bound: i64) -> TorusWeightSystem {
    let w = (0..k)
        .map(|_| (0..n).map(|_| rng.gen_range(-bound..=bound)).collect())
        .collect();
    TorusWeightSystem::new(n, w).expect("valid sample")
}

pub fn random_complex<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Complex64 {
    Complex64::from_polar(rng.gen_range(lo..hi), rng.gen_range(0.0..std::f64::consts::TAU))
}

/// Vector with every amplitude nonzero, moduli in `[1/2, 3/2)`.
pub fn random_vector<R: Rng>(rng: &mut R, k: usize) -> ProjectiveVector {
    ProjectiveVector::new((0..k).map(|_| random_complex(rng, 0.5, 1.5)).collect()).expect("nonzero")
}

pub fn random_real_vector<R: Rng>(rng: &mut R, n: usize, radius: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-radius..=radius)).collect()
}

/// Atoms at random integer points of `[-bound, bound]^n` with weights in `[1/2, 2)`.
pub fn random_measure<R: Rng>(rng: &mut R, n: usize, k: usize, bound: i64) -> AtomicMeasure {
    let atoms = (0..k)
        .map(|_| Atom {
            alpha: (0..n).map(|_| rational::rat(rng.gen_range(-bound..=bound))).collect(),
            weight: rng.gen_range(0.5..2.0),
        })
        .collect();
    AtomicMeasure::new(n, atoms).expect("valid sample")
}

/// Measure whose atoms affinely span `R^n`.
pub fn random_full_measure<R: Rng>(rng: &mut R, n: usize, k: usize, bound: i64) -> AtomicMeasure {
    loop {
        let m = random_measure(rng, n, k, bound);
        if m.support().is_full_dimensional() {
            return m;
        }
    }
}

/// Strictly positive convex weights summing to 1.
pub fn dirichlet<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln() + 1e-3).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|r| r / s).collect()
}

/// Random convex combination of the given points.
pub fn interior_point<R: Rng>(rng: &mut R, points: &[Vec<f64>]) -> Vec<f64> {
    let lam = dirichlet(rng, points.len());
    let n = points[0].len();
    (0..n)
        .map(|d| points.iter().zip(&lam).map(|(p, l)| p[d] * l).sum())
        .collect()
}

/// `(A - A*) / 2` for a random complex `A` with entries of modulus below `scale`.
pub fn random_skew_adjoint<R: Rng>(rng: &mut R, k: usize, scale: f64) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(k, k, |_, _| {
        Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
    });
    (&a - a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// `exp(X)` for a random skew-adjoint `X`.
pub fn random_unitary<R: Rng>(rng: &mut R, k: usize) -> DMatrix<Complex64> {
    random_skew_adjoint(rng, k, 1.0).exp()
}

/// `A = B B^T + I` with small integer `B`.
pub fn random_pd_quadratic<R: Rng>(rng: &mut R, n: usize) -> PdQuadratic {
    let b: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-2..=2)).collect()).collect();
    let a = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let s: i64 = (0..n).map(|m| b[i][m] * b[j][m]).sum();
                    rational::rat(s + i64::from(i == j))
                })
                .collect()
        })
        .collect();
    let lin = (0..n).map(|_| rational_in(rng, 2, 4)).collect();
    PdQuadratic::new(a, lin).expect("B B^T + I is positive definite")
}

/// One instance of each potential family in dimension `n`, plus a mixed sum.
pub fn potential_registry<R: Rng>(rng: &mut R, n: usize) -> Vec<(String, ConvexPotential)> {
    let quad = ConvexPotential::PdQuadratic(random_pd_quadratic(rng, n));
    let lse = ConvexPotential::lse(random_full_measure(rng, n, n + 3, 2), rng.gen_range(0.5..2.0)).expect("valid");
    let lse2 = ConvexPotential::lse(random_full_measure(rng, n, n + 2, 1), 1.0).expect("valid");
    let combo = ConvexPotential::combo(vec![
        (rational::ratio(1, 2), lse.clone()),
        (rational::ratio(3, 2), lse2),
    ])
    .expect("valid");
    let mixed = ConvexPotential::combo(vec![(rational::rat(1), quad.clone()), (rational::ratio(1, 3), lse.clone())])
        .expect("valid");
    vec![
        ("pdquad".into(), quad),
        ("lse".into(), lse),
        ("combo-lse".into(), combo),
        ("combo-mixed".into(), mixed),
    ]
}
