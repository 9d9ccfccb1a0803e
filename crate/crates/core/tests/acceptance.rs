//! Acceptance suite. Run with `--nocapture` to see one PASS/FAIL line per
//! criterion; the test fails if any criterion fails.

use convex_toric::convexfn::{conjugate, fenchel_gap, ConvexFunction, ConvexPotential};
use convex_toric::forms::{self, QuadratureConfig, TorusFormField};
use convex_toric::geometry::Polytope;
use convex_toric::laplace::{self, AtomicMeasure, LaplaceError};
use convex_toric::mixedvol::{self, CheckStatus, MultiIndex};
use convex_toric::momentum::{self, MomentumError, ProjectiveVector, TorusWeightSystem};
use convex_toric::newton::NewtonConfig;
use convex_toric::rational::{self, rat, ratio, Rational};
use convex_toric::samplers;
use num_traits::Zero;
use rand::Rng;
use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit, || {
        format!("runtime {:.2}s exceeds {limit}s", elapsed.as_secs_f64())
    })
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_body<R: Rng>(rng: &mut R, n: usize) -> Polytope {
    let pts = rng.gen_range(n + 1..=n + 4);
    samplers::random_polytope(rng, n, pts, 2, 3)
}

fn random_system<R: Rng>(rng: &mut R) -> (TorusWeightSystem, ProjectiveVector) {
    let n = rng.gen_range(1..=3);
    let k = rng.gen_range(1..=8);
    (samplers::random_weights(rng, n, k, 2), samplers::random_vector(rng, k))
}

fn vertex_lse(points: &[Vec<i64>]) -> ConvexPotential {
    ConvexPotential::lse(AtomicMeasure::uniform_ints(points).unwrap(), 2.0).unwrap()
}

const SQUARE: [[i64; 2]; 4] = [[0, 0], [1, 0], [0, 1], [1, 1]];

fn square_points() -> Vec<Vec<i64>> {
    SQUARE.iter().map(|p| p.to_vec()).collect()
}

fn simplex_points() -> Vec<Vec<i64>> {
    vec![vec![0, 0], vec![1, 0], vec![0, 1]]
}

fn mixed_volume_exactness() -> Outcome {
    let start = Instant::now();
    let y1 = Polytope::from_ints(&[vec![0, 0], vec![1, 0]]).unwrap();
    let y2 = Polytope::from_ints(&[vec![0, 0], vec![0, 1]]).unwrap();
    let t = mixedvol::mixed_volumes(&[y1, y2]).map_err(|e| e.to_string())?;
    let v = t.get(&MultiIndex::new(vec![1, 1])).cloned().unwrap_or_else(Rational::zero);
    ensure(v == ratio(1, 2), || format!("[Y1,Y2] = {v}"))?;
    let mut rng = samplers::seeded(1001);
    for seed in 0..20 {
        let a = random_body(&mut rng, 2);
        let b = random_body(&mut rng, 2);
        let t = mixedvol::mixed_volumes(&[a.clone(), b.clone()]).map_err(|e| e.to_string())?;
        let polar = (a.minkowski_sum(&b).unwrap().volume() - a.volume() - b.volume()) / rat(2);
        let got = t.get(&MultiIndex::new(vec![1, 1])).unwrap();
        ensure(got == &polar, || format!("pair {seed}: {got} vs polarization {polar}"))?;
    }
    within(start.elapsed(), 5.0)?;
    Ok(format!("20 pairs exact, {:.2}s", start.elapsed().as_secs_f64()))
}

fn interpolation_basis() -> Outcome {
    let start = Instant::now();
    for k in 1..=4 {
        for n in 1..=4 {
            let a = mixedvol::interp_matrix(k, n).map_err(|e| e.to_string())?;
            ensure(!rational::det(&a).is_zero(), || format!("singular at k = {k}, n = {n}"))?;
        }
    }
    within(start.elapsed(), 10.0)?;
    Ok(format!("16 matrices nonsingular, {:.2}s", start.elapsed().as_secs_f64()))
}

fn af_midpoint_suite() -> Outcome {
    let start = Instant::now();
    let mut rng = samplers::seeded(1003);
    let mut checks = 0;
    let mut min_margin: Option<Rational> = None;
    for (n, k) in [(2, 3), (3, 2)] {
        for trial in 0..30 {
            let bodies: Vec<Polytope> = (0..k).map(|_| random_body(&mut rng, n)).collect();
            let t = mixedvol::mixed_volumes(&bodies).map_err(|e| e.to_string())?;
            for c in mixedvol::af_midpoint_checks(&t) {
                ensure(c.status != CheckStatus::Fail, || {
                    format!("n = {n}, trial {trial}: {} at {}", c.margin, c.mid)
                })?;
                if min_margin.as_ref().map_or(true, |m| &c.margin < m) {
                    min_margin = Some(c.margin.clone());
                }
                checks += 1;
            }
        }
    }
    within(start.elapsed(), 60.0)?;
    Ok(format!(
        "{checks} exact checks, min margin {}, {:.2}s",
        min_margin.map_or("-".into(), |m| m.to_string()),
        start.elapsed().as_secs_f64()
    ))
}

fn brunn_minkowski() -> Outcome {
    let mut rng = samplers::seeded(1004);
    let mut worst = f64::INFINITY;
    for trial in 0..50 {
        let n = rng.gen_range(2..=3);
        let a = random_body(&mut rng, n);
        let b = random_body(&mut rng, n);
        let r = mixedvol::bmi_check(&a, &b).map_err(|e| e.to_string())?;
        ensure(r.binomial_identity, || format!("pair {trial}: binomial identity fails"))?;
        ensure(r.margin >= -1e-9, || format!("pair {trial}: margin {:e}", r.margin))?;
        worst = worst.min(r.margin);
    }
    let mut homothety_err: f64 = 0.0;
    for trial in 0..10 {
        let a = random_body(&mut rng, 2 + trial % 2);
        let s = ratio(rng.gen_range(1..7), rng.gen_range(1..4));
        let shift: Vec<Rational> = (0..a.dim()).map(|_| samplers::rational_in(&mut rng, 3, 5)).collect();
        let b = a.scale(&s).unwrap().translate(&shift).unwrap();
        let r = mixedvol::bmi_check(&a, &b).map_err(|e| e.to_string())?;
        ensure(r.margin.abs() <= 1e-12, || format!("homothet {trial}: margin {:e}", r.margin))?;
        homothety_err = homothety_err.max(r.margin.abs());
    }
    Ok(format!("min margin {worst:.3e}, homothet |margin| <= {homothety_err:.1e}"))
}

fn moment_convexity() -> Outcome {
    let mut rng = samplers::seeded(1005);
    let mut min_slack = f64::INFINITY;
    for sys in 0..10 {
        let (w, v) = random_system(&mut rng);
        let p = momentum::moment_polytope(&w, &v).map_err(|e| e.to_string())?;
        let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..500)
            .map(|_| {
                (
                    samplers::random_real_vector(&mut rng, w.rank(), PI),
                    samplers::random_real_vector(&mut rng, w.rank(), 0.5),
                )
            })
            .collect();
        let ms = momentum::orbit_momenta(&w, &v, &samples).map_err(|e| e.to_string())?;
        for m in ms {
            let margin = p.relative_interior_margin(&m);
            ensure(margin.is_interior(1e-9), || format!("system {sys}: {margin:?}"))?;
            if p.num_vertices() > 1 {
                min_slack = min_slack.min(margin.slack);
            }
        }
    }
    let cfg = NewtonConfig::default();
    let mut targets = 0;
    let mut vertices = 0;
    let mut worst: f64 = 0.0;
    while targets < 100 {
        let (w, v) = random_system(&mut rng);
        let p = momentum::moment_polytope(&w, &v).map_err(|e| e.to_string())?;
        if p.num_vertices() == 1 {
            continue;
        }
        let verts = p.vertices_f64();
        let beta = samplers::interior_point(&mut rng, &verts);
        let y = momentum::reach_target(&w, &v, &beta, &cfg).map_err(|e| e.to_string())?;
        let m = momentum::momentum(&w, &momentum::orbit_point(&w, &v, &vec![0.0; w.rank()], &y).unwrap()).unwrap();
        let err = max_diff(&m, &beta);
        ensure(err <= 1e-9, || format!("target residual {err:e}"))?;
        worst = worst.max(err);
        if vertices < 10 {
            let vert = &verts[rng.gen_range(0..verts.len())];
            let res = momentum::reach_target(&w, &v, vert, &cfg);
            ensure(
                matches!(res, Err(MomentumError::Laplace(LaplaceError::TargetOnBoundaryOrOutside))),
                || format!("vertex target gave {res:?}"),
            )?;
            vertices += 1;
        }
        targets += 1;
    }
    Ok(format!(
        "5000 samples, min slack {min_slack:.3e}; 100 targets, max residual {worst:.1e}; 10 vertices rejected"
    ))
}

fn cross_leg_identity() -> Outcome {
    let mut rng = samplers::seeded(1006);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (w, v) = random_system(&mut rng);
        let mu = momentum::orbit_measure(&w, &v).map_err(|e| e.to_string())?;
        let y = samplers::random_real_vector(&mut rng, w.rank(), 3.0);
        let z = momentum::orbit_point(&w, &v, &vec![0.0; w.rank()], &y).map_err(|e| e.to_string())?;
        let lhs = momentum::momentum(&w, &z).map_err(|e| e.to_string())?;
        let y2: Vec<f64> = y.iter().map(|t| 2.0 * t).collect();
        let rhs = laplace::grad_log_laplace(&mu, &y2).map_err(|e| e.to_string())?;
        let err = max_diff(&lhs, &rhs);
        ensure(err <= 1e-12, || format!("difference {err:e}"))?;
        worst = worst.max(err);
    }
    Ok(format!("1000 samples, max difference {worst:.1e}"))
}

fn determinant_integral_bridge() -> Outcome {
    let start = Instant::now();
    let cfg = QuadratureConfig::default();
    let integrate = |f: ConvexPotential| {
        forms::integrate_det_hess(&TorusFormField::new(f), &cfg).map(|r| r.value).map_err(|e| e.to_string())
    };
    let sq = integrate(vertex_lse(&square_points()))?;
    let sq_vol = rational::to_f64(&Polytope::unit_cube(2).volume());
    ensure((sq - sq_vol).abs() <= 0.01 * sq_vol, || format!("square {sq}"))?;
    let tri = integrate(vertex_lse(&simplex_points()))?;
    let tri_vol = rational::to_f64(&Polytope::standard_simplex(2).volume());
    ensure((tri - tri_vol).abs() <= 0.01 * tri_vol, || format!("simplex {tri}"))?;
    let sum = ConvexPotential::combo(vec![
        (rat(1), vertex_lse(&square_points())),
        (rat(1), vertex_lse(&simplex_points())),
    ])
    .unwrap();
    let both = integrate(sum)?;
    let sum_vol = rational::to_f64(
        &Polytope::unit_cube(2).minkowski_sum(&Polytope::standard_simplex(2)).unwrap().volume(),
    );
    ensure((both - sum_vol).abs() <= 0.02 * sum_vol, || format!("sum {both} vs {sum_vol}"))?;
    within(start.elapsed(), 120.0)?;
    Ok(format!(
        "square {sq:.5}, simplex {tri:.5}, sum {both:.5} vs {sum_vol}, {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

fn fenchel_duality() -> Outcome {
    let cfg = NewtonConfig::default();
    let mut worst_gap: f64 = 0.0;
    let mut worst_inv: f64 = 0.0;
    let mut count = 0;
    for n in 1..=3 {
        let mut rng = samplers::seeded(1008 + n as u64);
        for (name, f) in samplers::potential_registry(&mut rng, n) {
            for _ in 0..100 {
                let x = samplers::random_real_vector(&mut rng, n, 2.0);
                let alpha = f.grad(&x);
                let gap = fenchel_gap(&f, &x, &alpha, &cfg).map_err(|e| format!("{name}: {e}"))?;
                ensure(gap.abs() <= 1e-8, || format!("{name}: gap {gap:e}"))?;
                let c = conjugate(&f, &alpha, &vec![0.0; n], &cfg).map_err(|e| format!("{name}: {e}"))?;
                let err = max_diff(&c.argmax, &x);
                ensure(err <= 1e-6, || format!("{name}: inverse error {err:e}"))?;
                worst_gap = worst_gap.max(gap.abs());
                worst_inv = worst_inv.max(err);
            }
            count += 1;
        }
    }
    Ok(format!("{count} potentials x 100 probes, max gap {worst_gap:.1e}, max inverse error {worst_inv:.1e}"))
}

fn stratification() -> Outcome {
    let w = TorusWeightSystem::new(2, square_points()).map_err(|e| e.to_string())?;
    let v = ProjectiveVector::from_real(&[1.0; 4]).unwrap();
    let strata = momentum::stratify(&w, &v).map_err(|e| e.to_string())?;
    ensure(strata.len() == 9, || format!("{} strata", strata.len()))?;
    let mut by_dim = [0usize; 3];
    for s in &strata {
        ensure(s.in_relative_interior, || format!("representative off its face: {s:?}"))?;
        by_dim[s.face.dim] += 1;
    }
    ensure(by_dim == [4, 4, 1], || format!("face counts by dimension {by_dim:?}"))?;
    let faces: BTreeSet<Vec<usize>> = strata.iter().map(|s| s.face.vertices.clone()).collect();
    ensure(faces.len() == 9, || "repeated face".into())?;
    for (i, a) in strata.iter().enumerate() {
        for b in &strata[i + 1..] {
            ensure(max_diff(&a.momentum, &b.momentum) > 1e-12, || "coincident momenta".into())?;
        }
    }
    Ok("9 strata (4 vertices, 4 edges, 1 interior), momenta distinct".into())
}

fn unitary_momentum() -> Outcome {
    let mut rng = samplers::seeded(1010);
    let mut worst_eq: f64 = 0.0;
    let mut worst_br: f64 = 0.0;
    for _ in 0..50 {
        let k = rng.gen_range(1..=4);
        let x = samplers::random_skew_adjoint(&mut rng, k, 0.5);
        let y = samplers::random_skew_adjoint(&mut rng, k, 0.5);
        let v = samplers::random_vector(&mut rng, k);
        let g = samplers::random_unitary(&mut rng, k);
        let gv = momentum::apply(&g, &v).map_err(|e| e.to_string())?;
        let lhs = momentum::unitary_momentum(&x, &gv).map_err(|e| e.to_string())?;
        let conj = g.adjoint() * &x * &g;
        let rhs = momentum::unitary_momentum(&conj, &v).map_err(|e| e.to_string())?;
        let eq = (lhs - rhs).abs();
        ensure(eq <= 1e-10, || format!("equivariance residual {eq:e}"))?;
        let r = momentum::bracket_check(&x, &y, &v, 1e-4).map_err(|e| e.to_string())?;
        ensure(r.residual <= 1e-6, || format!("bracket residual {:e}", r.residual))?;
        worst_eq = worst_eq.max(eq);
        worst_br = worst_br.max(r.residual);
    }
    Ok(format!("50 pairs, equivariance {worst_eq:.1e}, bracket {worst_br:.1e}"))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("mixed-volume exactness", mixed_volume_exactness),
        ("interpolation basis", interpolation_basis),
        ("Alexandrov-Fenchel midpoints", af_midpoint_suite),
        ("Brunn-Minkowski", brunn_minkowski),
        ("moment-map convexity", moment_convexity),
        ("momentum vs log-Laplace gradient", cross_leg_identity),
        ("determinant-integral bridge", determinant_integral_bridge),
        ("Fenchel duality", fenchel_duality),
        ("stratification", stratification),
        ("unitary momentum map", unitary_momentum),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|p| Err(format!("panicked: {p:?}")));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
