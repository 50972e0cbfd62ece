use std::sync::Arc;

use escortlab::boundary::busemann;
use escortlab::escort::AlignmentOptions;
use escortlab::flows::magnetic::axis_adapted_start;
use escortlab::flows::{GeodesicFlow, MagneticFlow, SuspensionFlow};
use escortlab::geometry::distance;
use escortlab::rotation::{
    busemann_increment, past_future_compare, periodic_norm, rotation_vector_flow, rotation_vector_map,
    translation_length, translation_length_detailed, CoveredSystem, PeriodicOrbitSpec, RotationOptions, SearchBox,
};
use escortlab::{DeckTransformation, ModelId, ModelPoint, ModelVector, Moebius};

fn uhp(x: f64, y: f64) -> ModelPoint {
    ModelPoint::planar(ModelId::UpperHalfPlane, x, y).unwrap()
}

fn mobius(a: f64, b: f64, c: f64, d: f64) -> DeckTransformation {
    DeckTransformation::moebius(Moebius::new(a, b, c, d).unwrap(), ModelId::UpperHalfPlane).unwrap()
}

fn dilation_system(l: f64) -> CoveredSystem {
    let g = DeckTransformation::moebius(Moebius::dilation(l).unwrap(), ModelId::UpperHalfPlane).unwrap();
    let deck = DeckTransformation::moebius(Moebius::dilation(4.0).unwrap(), ModelId::UpperHalfPlane).unwrap();
    CoveredSystem::isometry(g, vec![deck], "dilation").unwrap()
}

fn perturbed_torus() -> CoveredSystem {
    let t = ModelId::FlatTorusCover(2);
    let deck = vec![DeckTransformation::lattice(vec![1, 0], t).unwrap(), DeckTransformation::lattice(vec![0, 1], t).unwrap()];
    let lift = Arc::new(move |p: &ModelPoint| {
        let c = &p.coords;
        ModelPoint::new(
            t,
            vec![
                c[0] + 0.3 + 0.05 * (2.0 * std::f64::consts::PI * c[0]).sin(),
                c[1] + 0.1 + 0.05 * (2.0 * std::f64::consts::PI * c[1]).sin(),
            ],
        )
    });
    CoveredSystem::new(t, deck, lift, None, "perturbed translation").unwrap()
}

#[test]
fn torus_translation_vector() {
    let sys = CoveredSystem::torus_translation(vec![0.3, 0.1]).unwrap();
    let x = ModelPoint::planar(ModelId::FlatTorusCover(2), 0.0, 0.0).unwrap();
    let est = rotation_vector_map(&sys, &x, &RotationOptions::with_horizon(1000)).unwrap();
    assert!((est.vector.components[0] - 0.3).abs() < 1e-12);
    assert!((est.vector.components[1] - 0.1).abs() < 1e-12);
}

#[test]
fn dilation_vector_points_up_the_axis() {
    let est = rotation_vector_map(&dilation_system(4.0), &uhp(0.0, 1.0), &RotationOptions::with_horizon(500)).unwrap();
    assert!((est.norm - 4f64.ln()).abs() < 1e-12);
    let u = est.vector.unit().orthonormal();
    assert!(u[0].abs() < 1e-9 && (u[1] - 1.0).abs() < 1e-9);
}

#[test]
fn perturbed_torus_matches_the_telescoping_average() {
    let sys = perturbed_torus();
    let n = 5000;
    let x = ModelPoint::planar(ModelId::FlatTorusCover(2), 0.0, 0.0).unwrap();
    let mut c = x.clone();
    for _ in 0..n {
        c = sys.lift(&c).unwrap();
    }
    let oracle = [c.coords[0] / n as f64, c.coords[1] / n as f64];
    let est = rotation_vector_map(&sys, &x, &RotationOptions::with_horizon(n)).unwrap();
    for (a, b) in est.vector.components.iter().zip(oracle) {
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }
}

#[test]
fn norm_is_constant_along_orbits() {
    let sys = perturbed_torus();
    let opts = RotationOptions::with_horizon(2000);
    let x = ModelPoint::planar(ModelId::FlatTorusCover(2), 0.2, 0.6).unwrap();
    let base = rotation_vector_map(&sys, &x, &opts).unwrap();
    let mut y = x;
    for _ in 1..=5 {
        y = sys.lift(&y).unwrap();
        let est = rotation_vector_map(&sys, &y, &opts).unwrap();
        let tol = 2.0 * base.direction_gap.max(est.direction_gap) * base.norm + 10.0 / opts.horizon as f64;
        assert!((est.norm - base.norm).abs() <= tol, "{} vs {} (tol {tol})", est.norm, base.norm);
    }
}

#[test]
fn estimates_are_deck_invariant() {
    let a = mobius(2.0, 1.0, 1.0, 1.0);
    let sys = CoveredSystem::isometry(a.clone(), vec![a.clone()], "hyperbolic translation").unwrap();
    let x = uhp(0.3, 0.8);
    let gx = a.apply(&x).unwrap();
    let opts = RotationOptions::with_horizon(300);
    let e1 = rotation_vector_map(&sys, &x, &opts).unwrap();
    let e2 = rotation_vector_map(&sys, &gx, &opts).unwrap();
    assert!((e1.norm - e2.norm).abs() < 1e-9);
    // the pushed-forward direction at g·x agrees with the estimate there
    let pushed = a.push(&e1.vector).unwrap();
    assert!(pushed.angle_to(&e2.vector) < 1e-6, "{}", pushed.angle_to(&e2.vector));
}

#[test]
fn busemann_increments_average_to_the_norm() {
    // z ↦ 4z + 1 pushes points toward ∞, which the chart resolves to full precision
    let a = mobius(2.0, 0.5, 0.0, 0.5);
    let sys = CoveredSystem::isometry(a.clone(), vec![a.clone()], "hyperbolic translation").unwrap();
    let x = uhp(0.3, 0.8);
    let n = 300;
    let est = rotation_vector_map(&sys, &x, &RotationOptions::with_horizon(n)).unwrap();
    let v = est.vector.unit();
    let mut p = x.clone();
    let mut sum = 0.0;
    for _ in 0..n {
        let q = sys.lift(&p).unwrap();
        sum += busemann(&v, &p, &q).unwrap();
        p = q;
    }
    let mean = sum / n as f64;
    assert!((mean - est.norm).abs() <= 1.0 / n as f64, "{mean} vs {}", est.norm);
}

#[test]
fn translation_length_examples() {
    let search = SearchBox::default();
    let e = ModelId::Euclidean(2);
    let l = translation_length(&DeckTransformation::lattice(vec![3, 4], e).unwrap(), &search).unwrap();
    assert!((l - 5.0).abs() < 1e-12);

    let g = DeckTransformation::moebius(Moebius::dilation(4.0).unwrap(), ModelId::UpperHalfPlane).unwrap();
    let t = translation_length_detailed(&g, &search).unwrap();
    assert!((t.value - 4f64.ln()).abs() < 1e-9);
    assert!(t.minimizer.coords[0].abs() < 1e-4);

    let w = DeckTransformation::x_shift(1.0, ModelId::WarpedXy).unwrap();
    let t = translation_length_detailed(&w, &SearchBox { grid: 9, ..Default::default() }).unwrap();
    assert!(t.value >= 1.0 - 1e-9 && t.value < 1.0 + 1e-6);
    assert!(t.at_boundary);
}

#[test]
fn periodic_norm_examples() {
    let search = SearchBox::default();
    let four = DeckTransformation::moebius(Moebius::dilation(4.0).unwrap(), ModelId::UpperHalfPlane).unwrap();
    for p in 1..=2usize {
        let sys = dilation_system(4f64.powf(1.0 / p as f64));
        let spec = PeriodicOrbitSpec::new(&sys, uhp(0.0, 1.0), p, four.clone()).unwrap();
        assert!((periodic_norm(&spec, &search).unwrap() - 4f64.ln() / p as f64).abs() < 1e-8);
        let est = rotation_vector_map(&sys, &uhp(0.0, 1.0), &RotationOptions::with_horizon(300)).unwrap();
        assert!((est.norm - 4f64.ln() / p as f64).abs() / est.norm < 0.01);
    }

    let t = ModelId::FlatTorusCover(2);
    let sys = CoveredSystem::torus_translation(vec![1.0 / 3.0, 0.0]).unwrap();
    let rho = DeckTransformation::lattice(vec![1, 0], t).unwrap();
    let spec = PeriodicOrbitSpec::new(&sys, ModelPoint::planar(t, 0.0, 0.0).unwrap(), 3, rho).unwrap();
    assert!((periodic_norm(&spec, &search).unwrap() - 1.0 / 3.0).abs() < 1e-9);
}

#[test]
fn busemann_increment_examples() {
    let up = ModelVector::from_orthonormal(uhp(0.0, 1.0), &[0.0, 1.0]).unwrap();
    let b = busemann_increment(&dilation_system(4.0), &uhp(0.0, 1.0), &up).unwrap();
    assert!((b - 4f64.ln()).abs() < 1e-12);

    let shift = DeckTransformation::x_shift(2.0, ModelId::UpperHalfPlane).unwrap();
    let sys = CoveredSystem::isometry(shift.clone(), vec![shift], "horizontal translation").unwrap();
    assert!(busemann_increment(&sys, &uhp(0.0, 1.0), &up).unwrap().abs() < 1e-12);

    let w = ModelId::WarpedXy;
    let g = DeckTransformation::x_shift(1.0, w).unwrap();
    let sys = CoveredSystem::isometry(g.clone(), vec![g], "x-shift").unwrap();
    let o = ModelPoint::planar(w, 0.0, 0.0).unwrap();
    let opts = RotationOptions { horizon: 1000, stride: 10, ..Default::default() };
    let v = rotation_vector_map(&sys, &o, &opts).unwrap().vector.unit();
    let d = distance(&o, &ModelPoint::planar(w, 1.0, 0.0).unwrap()).unwrap();
    let b = busemann_increment(&sys, &o, &v).unwrap();
    assert!(b.abs() <= d + 1e-9, "{b} vs {d}");
}

#[test]
fn past_and_future_examples() {
    let sys = CoveredSystem::torus_translation(vec![0.3, 0.1]).unwrap();
    let x = ModelPoint::planar(ModelId::FlatTorusCover(2), 0.0, 0.0).unwrap();
    let pf = past_future_compare(&sys, &x, &RotationOptions::with_horizon(500)).unwrap();
    assert!(pf.norm_gap() < 1e-12 && pf.angle < 1e-9);

    let pf = past_future_compare(&dilation_system(4.0), &uhp(0.0, 1.0), &RotationOptions::with_horizon(500)).unwrap();
    assert!(pf.norm_gap() < 1e-12 && pf.angle < 1e-9);
    let (f, b) = (pf.forward.vector.unit().orthonormal(), pf.backward.vector.unit().orthonormal());
    assert!(f[1] > 0.999 && b[1] < -0.999);
}

#[test]
fn flow_estimates() {
    let opts = AlignmentOptions::default();
    let u = ModelVector::from_orthonormal(uhp(0.2, 1.5), &[0.6, 0.8]).unwrap();
    let est = rotation_vector_flow(&GeodesicFlow { start: u }, 300.0, 1.0, &opts).unwrap();
    assert!((est.norm - 1.0).abs() < 1e-9);

    let sys = CoveredSystem::torus_translation(vec![0.3, 0.1]).unwrap();
    let x = ModelPoint::planar(ModelId::FlatTorusCover(2), 0.0, 0.0).unwrap();
    let map = rotation_vector_map(&sys, &x, &RotationOptions::with_horizon(400)).unwrap();
    let flow = SuspensionFlow { system: sys, start: x, return_time: 2.5 };
    let est = rotation_vector_flow(&flow, 1000.0, 0.5, &opts).unwrap();
    for (a, b) in est.vector.components.iter().zip(&map.vector.components) {
        assert!((a - b / 2.5).abs() < 1e-9);
    }

    let mag = rotation_vector_flow(&MagneticFlow::new(axis_adapted_start(2.0).unwrap()), 200.0, 1.0, &opts).unwrap();
    assert!((mag.norm - 3f64.sqrt()).abs() / 3f64.sqrt() < 0.01, "{}", mag.norm);
}
