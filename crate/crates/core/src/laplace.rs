//! Laplace transforms of finite atomic measures and their log-gradients.
//!
//! For `mu = sum_j w_j delta_{alpha_j}` the log-Laplace transform
//! `x -> log sum_j w_j exp(<alpha_j, x>)` is convex; its gradient is the mean
//! of the Gibbs reweighting of `mu` at `x` and sweeps out the relative
//! interior of the support polytope `C_mu`. [`solve_moment`] inverts that
//! gradient by Newton's method.

use crate::geometry::{GeometryError, Polytope};
use crate::newton::{self, NewtonConfig, NewtonError, Objective};
use crate::rational::{self, Rational};
use nalgebra::DMatrix;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LaplaceError {
    #[error("measure has no atoms")]
    Empty,
    #[error("atom weight must be positive and finite, got {0}")]
    NonPositiveWeight(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("target is on the boundary of or outside the support polytope")]
    TargetOnBoundaryOrOutside,
    #[error("support is not full-dimensional; quotient the measure first")]
    DegenerateSupport,
    #[error("support is already full-dimensional")]
    FullDimensional,
    #[error("polytope is not full-dimensional")]
    DegeneratePolytope,
    #[error("grid resolution must be positive")]
    InvalidResolution,
    #[error("solver failed: {0}")]
    Solver(NewtonError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub alpha: Vec<Rational>,
    pub weight: f64,
}

/// Finite positive combination of point masses in `R^n`.
#[derive(Debug, Clone)]
pub struct AtomicMeasure {
    dim: usize,
    atoms: Vec<Atom>,
    alphas: Vec<Vec<f64>>,
    log_weights: Vec<f64>,
    support: Polytope,
}

impl PartialEq for AtomicMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.atoms == other.atoms
    }
}

impl AtomicMeasure {
    pub fn new(dim: usize, atoms: Vec<Atom>) -> Result<Self, LaplaceError> {
        if atoms.is_empty() {
            return Err(LaplaceError::Empty);
        }
        for a in &atoms {
            if a.alpha.len() != dim {
                return Err(LaplaceError::DimensionMismatch {
                    expected: dim,
                    found: a.alpha.len(),
                });
            }
            if !(a.weight > 0.0 && a.weight.is_finite()) {
                return Err(LaplaceError::NonPositiveWeight(a.weight));
            }
        }
        let support = Polytope::hull(atoms.iter().map(|a| a.alpha.clone()).collect(), dim)?;
        let alphas = atoms
            .iter()
            .map(|a| a.alpha.iter().map(rational::to_f64).collect())
            .collect();
        let log_weights = atoms.iter().map(|a| a.weight.ln()).collect();
        Ok(AtomicMeasure {
            dim,
            atoms,
            alphas,
            log_weights,
            support,
        })
    }

    /// Unit-weight atoms at the given integer points.
    pub fn uniform_ints(points: &[Vec<i64>]) -> Result<Self, LaplaceError> {
        let dim = points.first().map_or(0, Vec::len);
        let atoms = points
            .iter()
            .map(|p| Atom {
                alpha: p.iter().map(|&x| rational::rat(x)).collect(),
                weight: 1.0,
            })
            .collect();
        Self::new(dim, atoms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `C_mu`, the convex hull of the atoms.
    pub fn support(&self) -> &Polytope {
        &self.support
    }

    pub fn alphas_f64(&self) -> &[Vec<f64>] {
        &self.alphas
    }

    fn check(&self, x: &[f64]) -> Result<(), LaplaceError> {
        if x.len() != self.dim {
            Err(LaplaceError::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Exponents `log w_j + <alpha_j, x>` and their maximum.
    fn exponents(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let e: Vec<f64> = self
            .alphas
            .iter()
            .zip(&self.log_weights)
            .map(|(a, lw)| lw + a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>())
            .collect();
        let m = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (e, m)
    }

    /// Normalised Gibbs weights `w_j e^{<alpha_j,x>} / L(mu)(x)`.
    pub fn gibbs(&self, x: &[f64]) -> Vec<f64> {
        let (e, m) = self.exponents(x);
        let mut p: Vec<f64> = e.iter().map(|v| (v - m).exp()).collect();
        let z: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= z);
        p
    }

    pub fn log_laplace_unchecked(&self, x: &[f64]) -> f64 {
        let (e, m) = self.exponents(x);
        m + e.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
    }

    pub fn grad_log_laplace_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let p = self.gibbs(x);
        let mut g = vec![0.0; self.dim];
        for (pj, a) in p.iter().zip(&self.alphas) {
            for (gi, ai) in g.iter_mut().zip(a) {
                *gi += pj * ai;
            }
        }
        g
    }

    pub fn hess_log_laplace_unchecked(&self, x: &[f64]) -> DMatrix<f64> {
        let p = self.gibbs(x);
        let n = self.dim;
        let mut mean = vec![0.0; n];
        for (pj, a) in p.iter().zip(&self.alphas) {
            for (mi, ai) in mean.iter_mut().zip(a) {
                *mi += pj * ai;
            }
        }
        let mut h = DMatrix::zeros(n, n);
        for (pj, a) in p.iter().zip(&self.alphas) {
            let d: Vec<f64> = a.iter().zip(&mean).map(|(x, m)| x - m).collect();
            for r in 0..n {
                for c in 0..n {
                    h[(r, c)] += pj * d[r] * d[c];
                }
            }
        }
        h
    }
}

/// `L(mu)(x) = sum_j w_j e^{<alpha_j, x>}`. Overflows to `+inf` only when
/// the true value exceeds the float range; see [`log_laplace`].
pub fn laplace(mu: &AtomicMeasure, x: &[f64]) -> Result<f64, LaplaceError> {
    Ok(log_laplace(mu, x)?.exp())
}

pub fn log_laplace(mu: &AtomicMeasure, x: &[f64]) -> Result<f64, LaplaceError> {
    mu.check(x)?;
    Ok(mu.log_laplace_unchecked(x))
}

pub fn grad_log_laplace(mu: &AtomicMeasure, x: &[f64]) -> Result<Vec<f64>, LaplaceError> {
    mu.check(x)?;
    Ok(mu.grad_log_laplace_unchecked(x))
}

/// Covariance of the Gibbs reweighting of `mu` at `x`.
pub fn hess_log_laplace(mu: &AtomicMeasure, x: &[f64]) -> Result<DMatrix<f64>, LaplaceError> {
    mu.check(x)?;
    Ok(mu.hess_log_laplace_unchecked(x))
}

struct MomentObjective<'a> {
    mu: &'a AtomicMeasure,
    beta: &'a [f64],
}

impl Objective for MomentObjective<'_> {
    fn dim(&self) -> usize {
        self.mu.dim
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.mu.log_laplace_unchecked(x) - x.iter().zip(self.beta).map(|(a, b)| a * b).sum::<f64>()
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.mu.grad_log_laplace_unchecked(x);
        g.iter_mut().zip(self.beta).for_each(|(gi, bi)| *gi -= bi);
        g
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        self.mu.hess_log_laplace_unchecked(x)
    }
}

/// Finds `x` with `grad_log_laplace(mu, x) = beta`.
///
/// `beta` must lie in the interior of `C_mu`, which must be full-dimensional.
/// The interior test is exact on the binary value of `beta`; boundary and
/// exterior targets are rejected before iterating, and runaway iterates are
/// reported the same way.
pub fn solve_moment(
    mu: &AtomicMeasure,
    beta: &[f64],
    x0: &[f64],
    cfg: &NewtonConfig,
) -> Result<Vec<f64>, LaplaceError> {
    mu.check(beta)?;
    mu.check(x0)?;
    if !mu.support.is_full_dimensional() {
        return Err(LaplaceError::DegenerateSupport);
    }
    let exact: Option<Vec<Rational>> = beta.iter().map(|&b| rational::from_f64_exact(b)).collect();
    match exact {
        Some(b) if mu.support.relative_interior_contains(&b) => {}
        _ => return Err(LaplaceError::TargetOnBoundaryOrOutside),
    }
    let obj = MomentObjective { mu, beta };
    let out = newton::minimize(&obj, x0, cfg).map_err(|e| match e {
        NewtonError::Divergence { .. } => LaplaceError::TargetOnBoundaryOrOutside,
        NewtonError::SingularHessian { .. } => LaplaceError::DegenerateSupport,
        other => LaplaceError::Solver(other),
    })?;
    let residual = newton::norm(&obj.gradient(&out.x));
    if residual > cfg.residual_tol {
        return Err(LaplaceError::Solver(NewtonError::Stalled {
            grad_norm: residual,
        }));
    }
    Ok(out.x)
}

/// `mu` re-expressed on its affine hull `alpha_0 + H`.
///
/// `basis` is an orthogonal basis of `H` made of primitive integer vectors,
/// so coordinates stay rational: an atom `alpha` has coordinates
/// `c_i = <alpha - alpha_0, u_i> / <u_i, u_i>` and `alpha = alpha_0 + sum c_i u_i`.
#[derive(Debug, Clone)]
pub struct Quotient {
    pub base: Vec<Rational>,
    pub basis: Vec<Vec<Rational>>,
    /// Translated measure in basis coordinates; `None` when `H = {0}`.
    pub measure: Option<AtomicMeasure>,
}

impl Quotient {
    pub fn reduced_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn coords(&self, alpha: &[Rational]) -> Vec<Rational> {
        let d = rational::sub(alpha, &self.base);
        self.basis
            .iter()
            .map(|u| rational::dot(&d, u) / rational::dot(u, u))
            .collect()
    }

    pub fn lift(&self, coords: &[Rational]) -> Vec<Rational> {
        let mut x = self.base.clone();
        for (c, u) in coords.iter().zip(&self.basis) {
            x = rational::add(&x, &rational::scale(u, c));
        }
        x
    }

    /// Float coordinates of a point and its distance from the affine hull.
    pub fn coords_f64(&self, beta: &[f64]) -> (Vec<f64>, f64) {
        let base: Vec<f64> = self.base.iter().map(rational::to_f64).collect();
        let d: Vec<f64> = beta.iter().zip(&base).map(|(b, a)| b - a).collect();
        let us: Vec<Vec<f64>> = self
            .basis
            .iter()
            .map(|u| u.iter().map(rational::to_f64).collect())
            .collect();
        let c: Vec<f64> = us
            .iter()
            .map(|u| {
                let uu: f64 = u.iter().map(|x| x * x).sum();
                d.iter().zip(u).map(|(a, b)| a * b).sum::<f64>() / uu
            })
            .collect();
        let mut back = base.clone();
        for (ci, u) in c.iter().zip(&us) {
            back.iter_mut().zip(u).for_each(|(b, ui)| *b += ci * ui);
        }
        let residual = back
            .iter()
            .zip(beta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        (c, residual)
    }

    /// Coordinates with respect to the normalised basis `u_i / |u_i|`.
    pub fn orthonormal_coords(&self, coords: &[Rational]) -> Vec<f64> {
        coords
            .iter()
            .zip(&self.basis)
            .map(|(c, u)| {
                let len = rational::to_f64(&rational::dot(u, u)).sqrt();
                rational::to_f64(c) * len
            })
            .collect()
    }

    /// Ambient dual vector `x` with `<u_i, x> = xi_i`, orthogonal to `H^perp`.
    pub fn dual_lift(&self, xi: &[f64]) -> Vec<f64> {
        let n = self.base.len();
        let mut x = vec![0.0; n];
        for (v, u) in xi.iter().zip(&self.basis) {
            let uu = rational::to_f64(&rational::dot(u, u));
            for (xj, uj) in x.iter_mut().zip(u) {
                *xj += v * rational::to_f64(uj) / uu;
            }
        }
        x
    }
}

pub fn quotient_degenerate(mu: &AtomicMeasure) -> Result<Quotient, LaplaceError> {
    if mu.support.is_full_dimensional() {
        return Err(LaplaceError::FullDimensional);
    }
    let base = mu.atoms[0].alpha.clone();
    let mut basis: Vec<Vec<Rational>> = Vec::new();
    for a in &mu.atoms[1..] {
        let mut w = rational::sub(&a.alpha, &base);
        for u in &basis {
            let c = rational::dot(&w, u) / rational::dot(u, u);
            w = rational::sub(&w, &rational::scale(u, &c));
        }
        if w.iter().any(|x| !x.is_zero()) {
            rational::make_primitive(&mut w);
            basis.push(w);
        }
    }
    let mut q = Quotient {
        base,
        basis,
        measure: None,
    };
    if q.reduced_dim() > 0 {
        let atoms = mu
            .atoms
            .iter()
            .map(|a| Atom {
                alpha: q.coords(&a.alpha),
                weight: a.weight,
            })
            .collect();
        q.measure = Some(AtomicMeasure::new(q.reduced_dim(), atoms)?);
    }
    Ok(q)
}

/// Moment inversion that first passes to the affine hull when the support is
/// lower-dimensional. The returned `x` is orthogonal to the directions the
/// log-Laplace transform is affine in.
pub fn solve_moment_any(
    mu: &AtomicMeasure,
    beta: &[f64],
    cfg: &NewtonConfig,
) -> Result<Vec<f64>, LaplaceError> {
    mu.check(beta)?;
    if mu.support.is_full_dimensional() {
        return solve_moment(mu, beta, &vec![0.0; mu.dim], cfg);
    }
    let q = quotient_degenerate(mu)?;
    let (coords, residual) = q.coords_f64(beta);
    if residual > crate::geometry::AFFINE_TOL {
        return Err(LaplaceError::TargetOnBoundaryOrOutside);
    }
    let xi = match &q.measure {
        None => Vec::new(),
        Some(m) => {
            // rounding the coordinates can pull a boundary target inside, so
            // decide membership on the exact projection
            let exact = beta
                .iter()
                .map(|&b| rational::from_f64_exact(b))
                .collect::<Option<Vec<_>>>()
                .ok_or(LaplaceError::TargetOnBoundaryOrOutside)?;
            if !m.support.relative_interior_contains(&q.coords(&exact)) {
                return Err(LaplaceError::TargetOnBoundaryOrOutside);
            }
            solve_moment(m, &coords, &vec![0.0; q.reduced_dim()], cfg)?
        }
    };
    Ok(q.dual_lift(&xi))
}

/// Grid discretisation of the Gaussian density `e^{-|y|^2} dy` restricted to
/// `P`: one atom per grid cell whose centre lies in `P`.
pub fn gaussian_polytope_measure(
    p: &Polytope,
    resolution: usize,
) -> Result<AtomicMeasure, LaplaceError> {
    if resolution == 0 {
        return Err(LaplaceError::InvalidResolution);
    }
    if !p.is_full_dimensional() {
        return Err(LaplaceError::DegeneratePolytope);
    }
    let n = p.dim();
    let lo: Vec<Rational> = (0..n)
        .map(|i| p.vertices().iter().map(|v| v[i].clone()).min().unwrap())
        .collect();
    let hi: Vec<Rational> = (0..n)
        .map(|i| p.vertices().iter().map(|v| v[i].clone()).max().unwrap())
        .collect();
    let res = rational::rat(resolution as i64);
    let width: Vec<Rational> = lo.iter().zip(&hi).map(|(l, h)| (h - l) / &res).collect();
    let cell_volume: f64 = width.iter().map(rational::to_f64).product();
    let half = rational::ratio(1, 2);

    let mut atoms = Vec::new();
    let total = resolution.pow(n as u32);
    for flat in 0..total {
        let mut k = flat;
        let centre: Vec<Rational> = (0..n)
            .map(|i| {
                let idx = k % resolution;
                k /= resolution;
                &lo[i] + &width[i] * (rational::rat(idx as i64) + &half)
            })
            .collect();
        if p.contains(&centre) {
            let sq: f64 = centre.iter().map(|c| rational::to_f64(c).powi(2)).sum();
            atoms.push(Atom {
                alpha: centre,
                weight: (-sq).exp() * cell_volume,
            });
        }
    }
    // sort for a canonical atom order independent of the loop layout
    atoms.sort_by(|a, b| a.alpha.cmp(&b.alpha));
    AtomicMeasure::new(n, atoms)
}

#[derive(Serialize, Deserialize)]
struct AtomJson {
    #[serde(with = "rational::serde_rational_vec")]
    alpha: Vec<Rational>,
    #[serde(with = "rational::serde_decimal")]
    w: f64,
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    dim: usize,
    atoms: Vec<AtomJson>,
}

impl Serialize for AtomicMeasure {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MeasureJson {
            dim: self.dim,
            atoms: self
                .atoms
                .iter()
                .map(|a| AtomJson {
                    alpha: a.alpha.clone(),
                    w: a.weight,
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AtomicMeasure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = MeasureJson::deserialize(d)?;
        let atoms = raw
            .atoms
            .into_iter()
            .map(|a| Atom {
                alpha: a.alpha,
                weight: a.w,
            })
            .collect();
        AtomicMeasure::new(raw.dim, atoms).map_err(serde::de::Error::custom)
    }
}

/// Is `beta` (as an exact binary rational) in the interior of `C_mu`?
pub fn is_interior_target(mu: &AtomicMeasure, beta: &[f64]) -> bool {
    beta.iter()
        .map(|&b| rational::from_f64_exact(b))
        .collect::<Option<Vec<_>>>()
        .is_some_and(|b| mu.support.relative_interior_contains(&b))
}
