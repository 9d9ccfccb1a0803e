use convex_toric::geometry::Polytope;
use convex_toric::mixedvol::{self, CheckStatus, MultiIndex};
use convex_toric::rational::{self, rat, ratio, Rational};
use convex_toric::samplers;
use num_traits::{Signed, Zero};
use rand::Rng;

fn random_body<R: Rng>(rng: &mut R, n: usize) -> Polytope {
    let pts = rng.gen_range(n + 1..=n + 4);
    samplers::random_polytope(rng, n, pts, 2, 3)
}

#[test]
fn polarization_identity() {
    let mut rng = samplers::seeded(41);
    for _ in 0..20 {
        let a = random_body(&mut rng, 2);
        let b = random_body(&mut rng, 2);
        let t = mixedvol::mixed_volumes(&[a.clone(), b.clone()]).unwrap();
        let polar = (a.minkowski_sum(&b).unwrap().volume() - a.volume() - b.volume()) / rat(2);
        assert_eq!(t.get(&MultiIndex::new(vec![1, 1])).unwrap(), &polar);
    }
}

#[test]
fn permuting_bodies_permutes_indices() {
    let mut rng = samplers::seeded(42);
    for _ in 0..5 {
        let bodies: Vec<Polytope> = (0..3).map(|_| random_body(&mut rng, 2)).collect();
        let t = mixedvol::mixed_volumes(&bodies).unwrap();
        let perm = [2usize, 0, 1];
        let permuted: Vec<Polytope> = perm.iter().map(|&i| bodies[i].clone()).collect();
        let tp = mixedvol::mixed_volumes(&permuted).unwrap();
        for (idx, v) in t.entries() {
            let e = idx.entries();
            let moved = MultiIndex::new(perm.iter().map(|&i| e[i]).collect());
            assert_eq!(tp.get(&moved).unwrap(), v);
        }
    }
}

#[test]
fn scaling_one_body_scales_by_its_exponent() {
    let mut rng = samplers::seeded(43);
    for _ in 0..5 {
        let a = random_body(&mut rng, 2);
        let b = random_body(&mut rng, 2);
        let s = ratio(rng.gen_range(0..7), rng.gen_range(1..4));
        let t = mixedvol::mixed_volumes(&[a.clone(), b.clone()]).unwrap();
        let ts = mixedvol::mixed_volumes(&[a.scale(&s).unwrap(), b]).unwrap();
        for (idx, v) in t.entries() {
            let want = rational::pow(&s, idx.entries()[0]) * v;
            assert_eq!(ts.get(idx).unwrap(), &want);
        }
    }
}

#[test]
fn translating_a_body_changes_nothing() {
    let mut rng = samplers::seeded(44);
    for _ in 0..5 {
        let bodies: Vec<Polytope> = (0..2).map(|_| random_body(&mut rng, 3)).collect();
        let t = mixedvol::mixed_volumes(&bodies).unwrap();
        let shift: Vec<Rational> = (0..3).map(|_| samplers::rational_in(&mut rng, 3, 5)).collect();
        let moved = vec![bodies[0].clone(), bodies[1].translate(&shift).unwrap()];
        assert_eq!(mixedvol::mixed_volumes(&moved).unwrap(), t);
    }
}

#[test]
fn interpolation_matrices_are_invertible() {
    for k in 1..=4 {
        for n in 1..=4 {
            let a = mixedvol::interp_matrix(k, n).unwrap();
            assert!(!rational::det(&a).is_zero(), "k = {k}, n = {n}");
        }
    }
}

#[test]
fn mixed_volumes_are_nonnegative() {
    let mut rng = samplers::seeded(45);
    for _ in 0..50 {
        let n = rng.gen_range(1..=3);
        let k = rng.gen_range(1..=3);
        let bodies: Vec<Polytope> = (0..k).map(|_| random_body(&mut rng, n)).collect();
        let t = mixedvol::mixed_volumes(&bodies).unwrap();
        assert!(t.entries().iter().all(|(_, v)| !v.is_negative()));
        for j in 0..k {
            assert_eq!(t.diagonal(j), &bodies[j].volume());
        }
    }
}

#[test]
fn square_and_triangle_table_matches_a_direct_fit() {
    // independent oracle: fit c20 t1^2 + c11 t1 t2 + c02 t2^2 to exact
    // volumes on a 4 x 4 grid of rational t and check every grid point
    let sq = Polytope::unit_cube(2);
    let tri = Polytope::standard_simplex(2);
    let vol = |a: &Rational, b: &Rational| {
        sq.scale(a).unwrap().minkowski_sum(&tri.scale(b).unwrap()).unwrap().volume()
    };
    let c20 = vol(&rat(1), &rat(0));
    let c02 = vol(&rat(0), &rat(1));
    let c11 = vol(&rat(1), &rat(1)) - &c20 - &c02;
    for i in 0..4 {
        for j in 0..4 {
            let (a, b) = (ratio(i, 2), ratio(j, 3));
            let poly = &c20 * &a * &a + &c11 * &a * &b + &c02 * &b * &b;
            assert_eq!(vol(&a, &b), poly);
        }
    }
    let t = mixedvol::mixed_volumes(&[sq, tri]).unwrap();
    assert_eq!(t.get(&MultiIndex::new(vec![2, 0])).unwrap(), &c20);
    assert_eq!(t.get(&MultiIndex::new(vec![1, 1])).unwrap(), &(c11 / rat(2)));
    assert_eq!(t.get(&MultiIndex::new(vec![0, 2])).unwrap(), &c02);
    let checks = mixedvol::af_midpoint_checks(&t);
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c.status == CheckStatus::Pass && c.margin.is_positive()));
}

#[test]
fn table_evaluates_to_the_sum_volume() {
    let mut rng = samplers::seeded(46);
    for _ in 0..10 {
        let bodies: Vec<Polytope> = (0..3).map(|_| random_body(&mut rng, 2)).collect();
        let t = mixedvol::mixed_volumes(&bodies).unwrap();
        let s: Vec<Rational> = (0..3).map(|_| ratio(rng.gen_range(0..5), rng.gen_range(1..4))).collect();
        let direct = mixedvol::weighted_sum(&bodies, &s).unwrap().volume();
        assert_eq!(t.evaluate(&s), direct);
    }
}

#[test]
fn inequalities_hold_on_random_bodies() {
    let mut rng = samplers::seeded(47);
    for _ in 0..10 {
        let n = rng.gen_range(2..=3);
        let a = random_body(&mut rng, n);
        let b = random_body(&mut rng, n);
        let t = mixedvol::mixed_volumes(&[a.clone(), b.clone()]).unwrap();
        assert!(mixedvol::lower_bound_check(&t).iter().all(|c| c.status != CheckStatus::Fail));
        let r = mixedvol::bmi_check(&a, &b).unwrap();
        assert!(r.binomial_identity && r.inequality == CheckStatus::Pass, "{r:?}");
        let lc = mixedvol::minkowski_logconcavity(&a, &b, 5).unwrap();
        assert!(lc.all_hold);
    }
}

#[test]
fn homothets_are_detected() {
    let mut rng = samplers::seeded(48);
    for _ in 0..10 {
        let a = random_body(&mut rng, 2);
        let s = ratio(rng.gen_range(1..7), rng.gen_range(1..4));
        let shift: Vec<Rational> = (0..2).map(|_| samplers::rational_in(&mut rng, 3, 5)).collect();
        let b = a.scale(&s).unwrap().translate(&shift).unwrap();
        let r = mixedvol::bmi_check(&a, &b).unwrap();
        assert_eq!(r.homothety, Some(s));
        assert!(r.equality_certified && r.margin.abs() <= 1e-12, "{r:?}");
    }
}
