use convex_toric::convexfn::{ConvexFunction, ConvexPotential};
use convex_toric::forms::{self, QuadratureConfig, Tangent, TorusFormField};
use convex_toric::geometry::Polytope;
use convex_toric::laplace::AtomicMeasure;
use convex_toric::rational::{self, rat};
use convex_toric::samplers;
use rand::Rng;

fn tangent<R: Rng>(rng: &mut R, n: usize) -> Tangent {
    Tangent::new(
        samplers::random_real_vector(rng, n, 1.0),
        samplers::random_real_vector(rng, n, 1.0),
    )
}

fn lin(a: f64, s: &Tangent, b: f64, t: &Tangent) -> Tangent {
    Tangent::new(
        s.v.iter().zip(&t.v).map(|(x, y)| a * x + b * y).collect(),
        s.w.iter().zip(&t.w).map(|(x, y)| a * x + b * y).collect(),
    )
}

fn vertex_lse(points: &[Vec<i64>]) -> ConvexPotential {
    ConvexPotential::lse(AtomicMeasure::uniform_ints(points).unwrap(), 2.0).unwrap()
}

fn square() -> ConvexPotential {
    vertex_lse(&[vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]])
}

fn simplex() -> ConvexPotential {
    vertex_lse(&[vec![0, 0], vec![1, 0], vec![0, 1]])
}

#[test]
fn form_is_antisymmetric_bilinear_and_j_invariant() {
    for n in 1..=3 {
        let mut rng = samplers::seeded(50 + n as u64);
        for (name, f) in samplers::potential_registry(&mut rng, n) {
            let field = TorusFormField::new(f);
            for _ in 0..100 {
                let x = samplers::random_real_vector(&mut rng, n, 2.0);
                let (a, b, c) = (tangent(&mut rng, n), tangent(&mut rng, n), tangent(&mut rng, n));
                let ab = forms::form_value(&field, &x, &a, &b).unwrap();
                let ba = forms::form_value(&field, &x, &b, &a).unwrap();
                assert!((ab + ba).abs() <= 1e-12, "{name}");
                let (s, t) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let combo = forms::form_value(&field, &x, &lin(s, &a, t, &c), &b).unwrap();
                let ac = forms::form_value(&field, &x, &c, &b).unwrap();
                assert!((combo - (s * ab + t * ac)).abs() <= 1e-12 * (1.0 + combo.abs()), "{name}");
                let jj = forms::form_value(&field, &x, &a.j(), &b.j()).unwrap();
                assert!((jj - ab).abs() <= 1e-12, "{name}");
                assert!(forms::positivity_probe(&field, &x, &a).unwrap() >= -1e-12);
                let via_j = forms::form_value(&field, &x, &a, &a.j()).unwrap();
                assert!((via_j - forms::positivity_probe(&field, &x, &a).unwrap()).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn top_power_is_the_hessian_determinant() {
    for n in 1..=4 {
        let mut rng = samplers::seeded(60 + n as u64);
        for (name, f) in samplers::potential_registry(&mut rng, n) {
            let field = TorusFormField::new(f.clone());
            for _ in 0..100 {
                let x = samplers::random_real_vector(&mut rng, n, 2.0);
                let top = forms::top_power_density(&field, &x).unwrap();
                let det = f.hess(&x).determinant();
                let rel = (top - det).abs() / det.abs().max(1e-300);
                assert!(rel <= 1e-10 || (top - det).abs() <= 1e-15, "{name}: {top} vs {det}");
            }
        }
    }
}

#[test]
fn sum_potential_integrates_to_minkowski_volume() {
    let sum = ConvexPotential::combo(vec![(rat(1), square()), (rat(1), simplex())]).unwrap();
    let r = forms::integrate_det_hess(&TorusFormField::new(sum), &QuadratureConfig::default()).unwrap();
    let target = rational::to_f64(
        &Polytope::unit_cube(2)
            .minkowski_sum(&Polytope::standard_simplex(2))
            .unwrap()
            .volume(),
    );
    assert!((r.value - target).abs() <= 0.02 * target, "{} vs {target}", r.value);
}

#[test]
fn mixed_volume_bridge_on_the_degree_two_simplex() {
    let r = forms::mixed_volume_bridge(&[square(), simplex()], &QuadratureConfig::default()).unwrap();
    assert_eq!(r.points.len(), 3);
    assert!(r.max_rel_error <= 0.02, "{r:?}");
}
