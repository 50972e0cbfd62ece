use escortlab::boundary::busemann;
use escortlab::ergodic::{alignment_ensemble_check, birkhoff_average, kingman_rate, MoebiusWalk, PointMapGenerator};
use escortlab::escort::{rate_of_escape, AlignmentOptions};
use escortlab::{ModelId, ModelPoint, ModelVector, Moebius, PointSequence};
use proptest::prelude::*;

fn uhp(x: f64, y: f64) -> ModelPoint {
    ModelPoint::planar(ModelId::UpperHalfPlane, x, y).unwrap()
}

fn times_four() -> PointMapGenerator {
    let seeds = (0..8).map(|k| uhp(0.0, 1.5f64.powi(k))).collect();
    PointMapGenerator::new(
        ModelId::UpperHalfPlane,
        |p: &ModelPoint| ModelPoint::planar(p.model, 4.0 * p.coords[0], 4.0 * p.coords[1]),
        seeds,
    )
}

/// Unit translations along two perpendicular axes through i.
fn two_maps() -> Vec<Moebius> {
    let a = Moebius::new(0.5f64.exp(), 0.0, 0.0, (-0.5f64).exp()).unwrap();
    let (s, c) = std::f64::consts::FRAC_PI_4.sin_cos();
    let r = Moebius::new(c, s, -s, c).unwrap();
    vec![a, r.compose(&a).compose(&r.inverse())]
}

#[test]
fn constant_observable_has_constant_means() {
    let curves = birkhoff_average(&times_four(), |_| Ok(2.5), 50).unwrap();
    assert!(curves.iter().flatten().all(|&c| c == 2.5));
}

#[test]
fn busemann_increments_along_the_axis_average_to_ln_4() {
    let v = ModelVector::from_orthonormal(uhp(0.0, 1.0), &[0.0, 1.0]).unwrap();
    let gen = times_four();
    let curves = birkhoff_average(
        &gen,
        |x: &ModelPoint| busemann(&v, x, &ModelPoint::planar(x.model, 4.0 * x.coords[0], 4.0 * x.coords[1])?),
        40,
    )
    .unwrap();
    for c in curves.iter().flatten() {
        assert!((c - 4f64.ln()).abs() < 1e-9, "{c}");
    }
}

#[test]
fn torus_translation_mean_displacement() {
    let e = ModelId::Euclidean(2);
    let (a, b) = (0.3, 0.1);
    let seeds = vec![ModelPoint::planar(e, 0.2, 0.9).unwrap(), ModelPoint::planar(e, -1.0, 3.0).unwrap()];
    let gen = PointMapGenerator::new(e, move |p: &ModelPoint| ModelPoint::planar(e, p.coords[0] + a, p.coords[1] + b), seeds);
    let curves = birkhoff_average(&gen, |p: &ModelPoint| Ok((p.coords[0] + a) - p.coords[0]), 100).unwrap();
    for c in curves.iter().flatten() {
        assert!((c - a).abs() < 1e-12);
    }
}

#[test]
fn kingman_examples() {
    let gen = times_four();
    let k = kingman_rate(&gen, 30).unwrap();
    for r in &k.per_seed_r {
        assert!((r - 4f64.ln()).abs() < 1e-12);
    }
    assert!(k.max_subadditivity_violation <= 1e-9);

    let still = PointMapGenerator::new(ModelId::UpperHalfPlane, |p: &ModelPoint| Ok(p.clone()), vec![uhp(0.3, 2.0); 3]);
    let k = kingman_rate(&still, 20).unwrap();
    assert!(k.per_seed_r.iter().all(|&r| r == 0.0));
    assert_eq!(k.ensemble_mean, 0.0);
}

#[test]
fn kingman_and_rate_of_escape_agree() {
    let gen = PointMapGenerator::new(
        ModelId::PoincareDisk,
        |p: &ModelPoint| {
            // an elliptic-free hyperbolic map of the disk: conjugate of z ↦ 3z
            let z = escortlab::geometry::hyperbolic::cayley_inv(num_complex::Complex64::new(p.coords[0], p.coords[1]));
            let w = escortlab::geometry::hyperbolic::cayley(z * 3.0 + 0.5);
            ModelPoint::planar(ModelId::PoincareDisk, w.re, w.im)
        },
        vec![ModelPoint::planar(ModelId::PoincareDisk, 0.1, -0.2).unwrap()],
    );
    let n = 12;
    let k = kingman_rate(&gen, n).unwrap();
    let mut pts = vec![gen.seeds[0].clone()];
    for _ in 0..n {
        let z = escortlab::geometry::hyperbolic::cayley_inv(num_complex::Complex64::new(
            pts.last().unwrap().coords[0],
            pts.last().unwrap().coords[1],
        ));
        let w = escortlab::geometry::hyperbolic::cayley(z * 3.0 + 0.5);
        pts.push(ModelPoint::planar(ModelId::PoincareDisk, w.re, w.im).unwrap());
    }
    let seq = PointSequence::from_points(ModelId::PoincareDisk, pts).unwrap();
    let (r, _) = rate_of_escape(&seq).unwrap();
    assert!((k.per_seed_r[0] - r).abs() < 1e-12, "{} vs {r}", k.per_seed_r[0]);
}

#[test]
fn random_products_have_a_reproducible_drift() {
    let a = kingman_rate(&MoebiusWalk::new(two_maps(), 64, 7).unwrap(), 2000).unwrap();
    let b = kingman_rate(&MoebiusWalk::new(two_maps(), 64, 8).unwrap(), 4000).unwrap();
    assert!(a.ensemble_mean > 0.1);
    let rel = (a.ensemble_mean - b.ensemble_mean).abs() / b.ensemble_mean;
    assert!(rel < 0.02, "{} vs {}", a.ensemble_mean, b.ensemble_mean);
    // per-seed values concentrate around the drift
    let spread = a.per_seed_r.iter().map(|r| (r - a.ensemble_mean).abs()).fold(0.0, f64::max);
    assert!(spread < 0.1 * a.ensemble_mean, "{spread}");
    assert!(a.max_subadditivity_violation <= 1e-9);
}

#[test]
fn alignment_examples() {
    let single = MoebiusWalk::with_random_starts(vec![Moebius::new(2.0, 1.0, 1.0, 1.0).unwrap()], 16, 3, 1.0).unwrap();
    let rep = alignment_ensemble_check(&single, 500, 0.05, &AlignmentOptions::default()).unwrap();
    assert_eq!(rep.fraction, 1.0);
    assert_eq!(rep.escaping, 16);

    let still = PointMapGenerator::new(ModelId::UpperHalfPlane, |p: &ModelPoint| Ok(p.clone()), vec![uhp(0.0, 1.0); 4]);
    let rep = alignment_ensemble_check(&still, 400, 0.1, &AlignmentOptions::default()).unwrap();
    assert_eq!((rep.fraction, rep.escaping), (1.0, 0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn walk_distances_are_subadditive(seed in 0u64..1000, i in 0usize..200, j in 0usize..200, k in 0usize..200) {
        use escortlab::ergodic::OrbitGenerator;
        let walk = MoebiusWalk::new(two_maps(), 1, seed).unwrap();
        let m = walk.orbit_metric(&walk.seeds()[0], 200).unwrap();
        let mut t = [i, j, k];
        t.sort_unstable();
        let lhs = m.dist(t[0], t[2]).unwrap();
        let rhs = m.dist(t[0], t[1]).unwrap() + m.dist(t[1], t[2]).unwrap();
        prop_assert!(lhs <= rhs + 1e-9 * (1.0 + rhs));
    }
}
