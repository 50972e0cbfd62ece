use escortlab::geometry::deck::{lift_orbit, Cover, DeckWord, LiftOptions};
use escortlab::geometry::{distance, exp_map, geodesic_point, log_map, midpoint, ray_point, warped};
use escortlab::{DeckTransformation, ModelId, ModelPoint, ModelVector, Moebius};
use proptest::prelude::*;

fn pt(m: ModelId, a: f64, b: f64) -> ModelPoint {
    ModelPoint::planar(m, a, b).unwrap()
}

/// Half-plane distance from the arcosh formula, independent of the chart code.
fn uhp_oracle(a: (f64, f64), b: (f64, f64)) -> f64 {
    let num = (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
    (1.0 + num / (2.0 * a.1 * b.1)).acosh()
}

/// Disk distance from the arcosh formula.
fn disk_oracle(a: (f64, f64), b: (f64, f64)) -> f64 {
    let num = (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2);
    let den = (1.0 - a.0 * a.0 - a.1 * a.1) * (1.0 - b.0 * b.0 - b.1 * b.1);
    (1.0 + 2.0 * num / den).acosh()
}

#[test]
fn half_plane_and_disk_distances() {
    let h = ModelId::UpperHalfPlane;
    assert!((distance(&pt(h, 0.0, 1.0), &pt(h, 0.0, 3.0)).unwrap() - 3f64.ln()).abs() < 1e-12);
    let d = ModelId::PoincareDisk;
    assert!((distance(&pt(d, 0.0, 0.0), &pt(d, 0.5, 0.0)).unwrap() - 3f64.ln()).abs() < 1e-12);
    assert!((distance(&pt(d, 0.0, 0.0), &pt(d, 0.5, 0.0)).unwrap() - disk_oracle((0.0, 0.0), (0.5, 0.0))).abs() < 1e-12);
}

#[test]
fn fermi_and_polar_agree_with_the_half_plane() {
    let f = ModelId::FermiStrip;
    let d = distance(&pt(f, 0.0, 0.0), &pt(f, 0.0, 0.7)).unwrap();
    assert!((d - 0.7).abs() < 1e-12);
    let d = distance(&pt(f, 0.0, 0.0), &pt(f, 1.3, 0.0)).unwrap();
    assert!((d - 1.3).abs() < 1e-12);
    let p = ModelId::HyperbolicPolar;
    let d = distance(&pt(p, 1.0, 0.0), &pt(p, 2.0, std::f64::consts::PI)).unwrap();
    assert!((d - 3.0).abs() < 1e-12);
}

#[test]
fn exp_and_log_examples() {
    let e = ModelId::Euclidean(2);
    let v = ModelVector::new(pt(e, 0.0, 0.0), vec![1.0, 0.0]).unwrap();
    assert_eq!(exp_map(&v, 2.0).unwrap().coords, vec![2.0, 0.0]);

    let h = ModelId::UpperHalfPlane;
    let v = ModelVector::new(pt(h, 0.0, 1.0), vec![0.0, 1.0]).unwrap();
    let q = exp_map(&v, 3f64.ln()).unwrap();
    assert!(q.coords[0].abs() < 1e-12 && (q.coords[1] - 3.0).abs() < 1e-12);

    let d = ModelId::PoincareDisk;
    let v = log_map(&pt(d, 0.0, 0.0), &pt(d, 0.5, 0.0)).unwrap();
    assert!((v.norm - 3f64.ln()).abs() < 1e-12);
    let back = exp_map(&v, 1.0).unwrap();
    assert!((back.coords[0] - 0.5).abs() < 1e-12 && back.coords[1].abs() < 1e-12);
}

#[test]
fn warped_log_round_trip() {
    let w = ModelId::WarpedXy;
    let (p, q) = (pt(w, 0.0, 0.0), pt(w, 10.0, 0.0));
    let v = log_map(&p, &q).unwrap();
    let back = exp_map(&v, 1.0).unwrap();
    let err = (back.coords[0] - 10.0).hypot(back.coords[1]);
    assert!(err < 1e-5, "{err}");
    // the geodesic bulges upward, where horizontal motion is cheaper
    assert!(v.components[1] > 0.0);
    assert!(v.norm >= 10.0 && v.norm <= 10.0 + 2.0 * 10f64.ln() + 1.0);
}

#[test]
fn midpoint_examples() {
    let h = ModelId::UpperHalfPlane;
    let m = midpoint(&pt(h, 0.0, 1.0), &pt(h, 0.0, 9.0)).unwrap();
    assert!(m.coords[0].abs() < 1e-12 && (m.coords[1] - 3.0).abs() < 1e-12);
    let d = ModelId::PoincareDisk;
    let m = midpoint(&pt(d, -0.5, 0.0), &pt(d, 0.5, 0.0)).unwrap();
    assert!(m.coords[0].abs() < 1e-12 && m.coords[1].abs() < 1e-12);
    let (p, q) = (pt(d, -0.5, 0.0), pt(d, 0.5, 0.0));
    assert!(geodesic_point(&p, &q, 10.0).is_err());
}

#[test]
fn deck_examples() {
    let t = ModelId::FlatTorusCover(2);
    let g = DeckTransformation::lattice(vec![1, 0], t).unwrap();
    let p = g.apply(&pt(t, 0.3, 0.7)).unwrap();
    assert!((p.coords[0] - 1.3).abs() < 1e-15 && p.coords[1] == 0.7);

    let h = ModelId::UpperHalfPlane;
    let g = DeckTransformation::moebius(Moebius::new(2.0, 0.0, 0.0, 0.5).unwrap(), h).unwrap();
    let p = g.apply(&pt(h, 0.0, 1.0)).unwrap();
    assert!(p.coords[0].abs() < 1e-15 && (p.coords[1] - 4.0).abs() < 1e-12);

    let w = ModelId::WarpedXy;
    let s = DeckTransformation::x_shift(1.0, w).unwrap();
    let (a, b) = (pt(w, 0.0, 0.0), pt(w, 2.0, 0.5));
    let d0 = distance(&a, &b).unwrap();
    let d1 = distance(&s.apply(&a).unwrap(), &s.apply(&b).unwrap()).unwrap();
    assert!((d0 - d1).abs() < 1e-7);
    assert!(DeckTransformation::x_shift(1.0, ModelId::PoincareDisk).is_err());
}

#[test]
fn lift_examples() {
    let t = ModelId::FlatTorusCover(2);
    let cover = Cover {
        model: t,
        generators: vec![
            DeckTransformation::lattice(vec![1, 0], t).unwrap(),
            DeckTransformation::lattice(vec![0, 1], t).unwrap(),
        ],
    };
    let base: Vec<ModelPoint> = (0..=10)
        .map(|k| pt(t, (0.3 * k as f64).rem_euclid(1.0), (0.1 * k as f64).rem_euclid(1.0)))
        .collect();
    let lift = lift_orbit(&cover, &base, None, LiftOptions::default()).unwrap();
    let end = lift.sequence.points.last().unwrap();
    assert!((end.coords[0] - 3.0).abs() < 1e-12 && (end.coords[1] - 1.0).abs() < 1e-12);

    let still = vec![pt(t, 0.2, 0.4); 6];
    let lift = lift_orbit(&cover, &still, None, LiftOptions::default()).unwrap();
    assert!(lift.word.is_empty());
    assert!(lift.sequence.points.iter().all(|p| p == &still[0]));

    // once around ℍ/⟨z ↦ 4z⟩ along the imaginary axis
    let h = ModelId::UpperHalfPlane;
    let g = DeckTransformation::moebius(Moebius::dilation(4.0).unwrap(), h).unwrap();
    let cover = Cover { model: h, generators: vec![g.clone()] };
    let n = 32;
    let base: Vec<ModelPoint> = (0..=n)
        .map(|k| {
            let y = 4f64.powf(k as f64 / n as f64);
            pt(h, 0.0, if k == n { 1.0 } else { y })
        })
        .collect();
    let lift = lift_orbit(&cover, &base, None, LiftOptions::default()).unwrap();
    assert_eq!(lift.word, DeckWord(vec![1]));
    let end = lift.sequence.points.last().unwrap();
    assert!(distance(end, &g.apply(&base[0]).unwrap()).unwrap() < 1e-12);
}

fn hyperbolic_point(model: ModelId, a: f64, b: f64) -> ModelPoint {
    match model {
        ModelId::UpperHalfPlane => pt(model, a, b.exp()),
        ModelId::PoincareDisk => {
            let r = 0.95 * (b.abs() / 3.0).min(1.0);
            pt(model, r * a.cos(), r * a.sin())
        }
        ModelId::FermiStrip => pt(model, a, b),
        _ => pt(model, 0.1 + b.abs(), a),
    }
}

fn hyperbolic_model() -> impl Strategy<Value = ModelId> {
    prop_oneof![
        Just(ModelId::UpperHalfPlane),
        Just(ModelId::PoincareDisk),
        Just(ModelId::FermiStrip),
        Just(ModelId::HyperbolicPolar),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn half_plane_distance_matches_the_formula(a in -3.0..3.0f64, b in 0.1..4.0f64, c in -3.0..3.0f64, d in 0.1..4.0f64) {
        let h = ModelId::UpperHalfPlane;
        let got = distance(&pt(h, a, b), &pt(h, c, d)).unwrap();
        let want = uhp_oracle((a, b), (c, d));
        prop_assert!((got - want).abs() < 1e-9 * (1.0 + want));
    }

    #[test]
    fn moebius_deck_preserves_distance(
        model in hyperbolic_model(),
        p in (-3.0..3.0f64, -2.0..2.0f64),
        q in (-3.0..3.0f64, -2.0..2.0f64),
        m in (-2.0..2.0f64, -2.0..2.0f64, 0.2..3.0f64),
    ) {
        let (x, y) = (hyperbolic_point(model, p.0, p.1), hyperbolic_point(model, q.0, q.1));
        // [[a, b], [c, d]] with ad − bc = 1 built from a, b and d
        let (a, b, d) = (m.2, m.0, 1.0 / m.2 + m.0 * m.1 / m.2);
        let g = Moebius::new(a, b, m.1, d).unwrap();
        let g = DeckTransformation::moebius(g, model).unwrap();
        let d0 = distance(&x, &y).unwrap();
        let d1 = distance(&g.apply(&x).unwrap(), &g.apply(&y).unwrap()).unwrap();
        prop_assert!((d0 - d1).abs() < 1e-9 * (1.0 + d0), "{} vs {}", d0, d1);
    }

    #[test]
    fn flat_and_warped_decks_preserve_distance(
        p in (-3.0..3.0f64, -1.5..1.5f64),
        q in (-3.0..3.0f64, -1.5..1.5f64),
        k in -3i64..3,
        j in -3i64..3,
        t in -5.0..5.0f64,
    ) {
        let tor = ModelId::FlatTorusCover(2);
        let g = DeckTransformation::lattice(vec![k, j], tor).unwrap();
        let (x, y) = (pt(tor, p.0, p.1), pt(tor, q.0, q.1));
        let d0 = distance(&x, &y).unwrap();
        prop_assert!((d0 - distance(&g.apply(&x).unwrap(), &g.apply(&y).unwrap()).unwrap()).abs() < 1e-9);

        let w = ModelId::WarpedXy;
        let g = DeckTransformation::x_shift(t, w).unwrap();
        let (x, y) = (pt(w, p.0, p.1), pt(w, q.0, q.1));
        let d0 = distance(&x, &y).unwrap();
        let d1 = distance(&g.apply(&x).unwrap(), &g.apply(&y).unwrap()).unwrap();
        prop_assert!((d0 - d1).abs() < 1e-7, "{} vs {}", d0, d1);
    }

    #[test]
    fn geodesics_are_parametrised_by_arclength(
        model in hyperbolic_model(),
        p in (-2.0..2.0f64, -1.5..1.5f64),
        dir in -3.2..3.2f64,
        s in -2.0..2.0f64,
        t in -2.0..2.0f64,
    ) {
        let base = hyperbolic_point(model, p.0, p.1);
        let v = ModelVector::from_orthonormal(base, &[dir.cos(), dir.sin()]).unwrap();
        let a = exp_map(&v, s).unwrap();
        let b = exp_map(&v, t).unwrap();
        prop_assert!((distance(&a, &b).unwrap() - (t - s).abs()).abs() < 1e-8);
    }

    #[test]
    fn euclidean_parallelogram_law_is_an_equality(
        x in prop::array::uniform3(-5.0..5.0f64),
        y in prop::array::uniform3(-5.0..5.0f64),
        z in prop::array::uniform3(-5.0..5.0f64),
    ) {
        let e = ModelId::Euclidean(3);
        let (x, y, z) = (
            ModelPoint::new(e, x.to_vec()).unwrap(),
            ModelPoint::new(e, y.to_vec()).unwrap(),
            ModelPoint::new(e, z.to_vec()).unwrap(),
        );
        let m = midpoint(&x, &y).unwrap();
        let d = |a: &ModelPoint, b: &ModelPoint| distance(a, b).unwrap().powi(2);
        let defect = d(&x, &y) + 4.0 * d(&m, &z) - 2.0 * d(&x, &z) - 2.0 * d(&z, &y);
        prop_assert!(defect.abs() < 1e-9);
    }

    #[test]
    fn hyperbolic_semi_parallelogram_law(
        model in hyperbolic_model(),
        a in (-2.0..2.0f64, -1.5..1.5f64),
        b in (-2.0..2.0f64, -1.5..1.5f64),
        c in (-2.0..2.0f64, -1.5..1.5f64),
    ) {
        let (x, y, z) = (
            hyperbolic_point(model, a.0, a.1),
            hyperbolic_point(model, b.0, b.1),
            hyperbolic_point(model, c.0, c.1),
        );
        let m = midpoint(&x, &y).unwrap();
        let d = |p: &ModelPoint, q: &ModelPoint| distance(p, q).unwrap().powi(2);
        prop_assert!(d(&x, &y) + 4.0 * d(&m, &z) <= 2.0 * d(&x, &z) + 2.0 * d(&z, &y) + 1e-7);
    }

    #[test]
    fn warped_round_trip(p in (-2.0..2.0f64, -1.0..1.0f64), q in (-2.0..2.0f64, -1.0..1.0f64)) {
        let v = warped::log(p, q).unwrap();
        let back = warped::exp(p, v, 1.0).unwrap();
        prop_assert!((back.0 - q.0).hypot(back.1 - q.1) < 1e-6);
    }

    #[test]
    fn far_segments_split_exactly(
        p in (-5.0..5.0f64, -1.5..1.5f64),
        q in (100.0..400.0f64, -1.5..1.5f64),
        frac in 0.0..1.0f64,
    ) {
        // hundreds of units apart, where exp of a rounded direction is useless
        let f = ModelId::FermiStrip;
        let (a, b) = (pt(f, p.0, p.1), pt(f, q.0, q.1));
        let d = distance(&a, &b).unwrap();
        let s = frac * d;
        let m = geodesic_point(&a, &b, s).unwrap();
        prop_assert!((distance(&a, &m).unwrap() - s).abs() < 1e-9 * (1.0 + d));
        prop_assert!((distance(&m, &b).unwrap() - (d - s)).abs() < 1e-9 * (1.0 + d));
        let beyond = ray_point(&a, &b, d + 2.0).unwrap();
        prop_assert!((distance(&b, &beyond).unwrap() - 2.0).abs() < 1e-9);
        prop_assert!((distance(&a, &beyond).unwrap() - d - 2.0).abs() < 1e-9 * (1.0 + d));
    }

    #[test]
    fn interpolation_agrees_with_exp_nearby(
        model in hyperbolic_model(),
        a in (-2.0..2.0f64, -1.5..1.5f64),
        b in (-2.0..2.0f64, -1.5..1.5f64),
        frac in 0.0..1.0f64,
    ) {
        let (x, y) = (hyperbolic_point(model, a.0, a.1), hyperbolic_point(model, b.0, b.1));
        let v = log_map(&x, &y).unwrap();
        let via_exp = exp_map(&v, frac).unwrap();
        let direct = geodesic_point(&x, &y, frac * v.norm).unwrap();
        prop_assert!(distance(&via_exp, &direct).unwrap() < 1e-8);
    }
}
