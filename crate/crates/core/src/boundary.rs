//! Boundary endpoints, Busemann functions and horosphere projection.
//!
//! Sign convention: `B_v(x, y) = lim d(x, γ(t)) − d(γ(t), y)` with
//! `γ(t) = exp(tv)`, so moving `y` towards the endpoint of `v` increases
//! `B`. In the hyperbolic charts `B_v(x, y) = ln h(y) − ln h(x)` where `h`
//! is the horocyclic height at the endpoint.

use std::f64::consts::TAU;

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::escort::PointSequence;
use crate::geometry::deck::Moebius;
use crate::geometry::hyperbolic::{cayley, from_uhp, pull_from_uhp, push_to_uhp, to_uhp, wrap_angle};
use crate::geometry::{distance, exp_map, ModelId, ModelPoint, ModelVector};

/// A point at infinity of the disk or the half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "chart", rename_all = "kebab-case")]
pub enum BoundaryPoint {
    /// Angle in `[0, 2π)`.
    Disk { angle: f64 },
    /// Real point, or `None` for ∞.
    HalfPlane { x: Option<f64> },
}

impl BoundaryPoint {
    pub fn disk(angle: f64) -> Self {
        BoundaryPoint::Disk { angle: angle.rem_euclid(TAU) }
    }

    pub fn model(&self) -> ModelId {
        match self {
            BoundaryPoint::Disk { .. } => ModelId::PoincareDisk,
            BoundaryPoint::HalfPlane { .. } => ModelId::UpperHalfPlane,
        }
    }

    /// The same point seen in the half-plane.
    pub fn to_half_plane(&self) -> Option<f64> {
        match *self {
            BoundaryPoint::HalfPlane { x } => x,
            BoundaryPoint::Disk { angle } => {
                let h = 0.5 * angle;
                if h.sin() == 0.0 {
                    None
                } else {
                    Some(-h.cos() / h.sin())
                }
            }
        }
    }

    /// The same point seen in the disk, as an angle in `[0, 2π)`.
    pub fn to_disk_angle(&self) -> f64 {
        match *self {
            BoundaryPoint::Disk { angle } => angle,
            BoundaryPoint::HalfPlane { x: None } => 0.0,
            BoundaryPoint::HalfPlane { x: Some(x) } => (-2.0 * x).atan2(x * x - 1.0).rem_euclid(TAU),
        }
    }

    /// Angular distance in the disk picture, in `[0, π]`.
    pub fn separation(&self, other: &BoundaryPoint) -> f64 {
        wrap_angle(self.to_disk_angle() - other.to_disk_angle()).abs()
    }

    /// Equality up to `tol` in the disk angle.
    pub fn approx_eq(&self, other: &BoundaryPoint, tol: f64) -> bool {
        self.separation(other) <= tol
    }
}

fn require_hyperbolic(op: &'static str, model: ModelId) -> Result<()> {
    if model.is_hyperbolic() {
        Ok(())
    } else {
        Err(Error::UnsupportedModel { op, model: model.to_string() })
    }
}

/// Endpoint on `ℝ ∪ {∞}` of the ray from `z` with Euclidean velocity `(a, b)`.
pub fn uhp_endpoint(z: C, v: C) -> Option<f64> {
    let (x, y, a, b) = (z.re, z.im, v.re, v.im);
    let s = v.norm();
    if a == 0.0 {
        return if b > 0.0 { None } else { Some(x) };
    }
    if b >= 0.0 {
        Some(x + y * (b + s) / a)
    } else {
        Some(x + y * a / (s - b))
    }
}

/// Endpoint of the ray from `p` with Euclidean velocity `v` in the disk.
pub fn disk_endpoint(p: C, v: C) -> f64 {
    let u = v / v.norm();
    let xi = (u + p) / (1.0 + p.conj() * u);
    xi.arg().rem_euclid(TAU)
}

/// Endpoint of `exp(tv)` as `t → ∞` in the half-plane picture.
pub(crate) fn endpoint_in_uhp(v: &ModelVector) -> Result<Option<f64>> {
    let model = v.base.model;
    require_hyperbolic("boundary_endpoint", model)?;
    if v.norm == 0.0 {
        return Err(Error::domain("zero vector has no endpoint"));
    }
    let p = v.base.xy();
    Ok(uhp_endpoint(to_uhp(model, p), push_to_uhp(model, p, [v.components[0], v.components[1]])))
}

/// Endpoint of the geodesic ray `exp(tv)`; disk and half-plane only.
pub fn boundary_endpoint(v: &ModelVector) -> Result<BoundaryPoint> {
    if v.norm == 0.0 {
        return Err(Error::domain("zero vector has no endpoint"));
    }
    match v.base.model {
        ModelId::PoincareDisk => {
            let (x, y) = v.base.xy();
            Ok(BoundaryPoint::disk(disk_endpoint(C::new(x, y), C::new(v.components[0], v.components[1]))))
        }
        ModelId::UpperHalfPlane => {
            let (x, y) = v.base.xy();
            Ok(BoundaryPoint::HalfPlane {
                x: uhp_endpoint(C::new(x, y), C::new(v.components[0], v.components[1])),
            })
        }
        m => Err(Error::UnsupportedModel { op: "boundary_endpoint", model: m.to_string() }),
    }
}

/// `ln h(z)` for the horocyclic height of the half-plane at `xi`.
fn uhp_log_height(z: C, xi: Option<f64>) -> f64 {
    match xi {
        None => z.im.ln(),
        Some(x) => z.im.ln() - 2.0 * (z - x).norm().ln(),
    }
}

/// `ln |e^{x} u − ξ|` for `|u| = 1` without overflow.
fn ln_abs_scaled_minus(x: f64, u: C, xi: f64) -> f64 {
    if xi == 0.0 {
        return x;
    }
    let lx = xi.abs().ln();
    if x >= lx {
        x + (u - xi * (-x).exp()).norm().ln()
    } else {
        lx + (u * (x - lx).exp() - xi.signum()).norm().ln()
    }
}

fn ln_cosh(r: f64) -> f64 {
    let a = r.abs();
    a + (0.5 * (1.0 + (-2.0 * a).exp())).ln()
}

/// Horocyclic log-height of a chart point at the endpoint of `v`.
fn log_height(model: ModelId, p: (f64, f64), v: &ModelVector) -> Result<f64> {
    match model {
        ModelId::PoincareDisk => {
            let (bx, by) = v.base.xy();
            let ang = disk_endpoint(C::new(bx, by), C::new(v.components[0], v.components[1]));
            Ok(disk_log_height(C::new(p.0, p.1), ang))
        }
        ModelId::HyperbolicPolar => Ok(polar_log_height(p, polar_endpoint_angle(v))),
        m => log_height_at(m, p, endpoint_in_uhp(v)?),
    }
}

fn disk_log_height(z: C, ang: f64) -> f64 {
    let one_minus = (1.0 - z.norm()) * (1.0 + z.norm());
    one_minus.ln() - 2.0 * (C::from_polar(1.0, ang) - z).norm().ln()
}

fn polar_log_height(p: (f64, f64), phi: f64) -> f64 {
    let (r, th) = p;
    let t = (0.5 * r).tanh();
    let om = 2.0 / (r.exp() + 1.0);
    let hs = (0.5 * (phi - th)).sin();
    let dist2 = om * om + 4.0 * t * hs * hs;
    -2.0 * ln_cosh(0.5 * r) - dist2.ln()
}

/// Horocyclic log-height of a chart point at the half-plane boundary point `xi`.
fn log_height_at(model: ModelId, p: (f64, f64), xi: Option<f64>) -> Result<f64> {
    match model {
        ModelId::UpperHalfPlane => Ok(uhp_log_height(C::new(p.0, p.1), xi)),
        ModelId::PoincareDisk => {
            Ok(disk_log_height(C::new(p.0, p.1), BoundaryPoint::HalfPlane { x: xi }.to_disk_angle()))
        }
        ModelId::FermiStrip => {
            let (x, r) = p;
            let ln_im = x - ln_cosh(r);
            Ok(match xi {
                None => ln_im,
                Some(xi) => {
                    let u = C::new(r.tanh(), 1.0 / r.cosh());
                    ln_im - 2.0 * ln_abs_scaled_minus(x, u, xi)
                }
            })
        }
        ModelId::HyperbolicPolar => {
            Ok(polar_log_height(p, BoundaryPoint::HalfPlane { x: xi }.to_disk_angle()))
        }
        m => Err(Error::UnsupportedModel { op: "busemann", model: m.to_string() }),
    }
}

/// Busemann function `B(x, y)` of the half-plane boundary point `xi`, for
/// hyperbolic charts.
pub fn busemann_to(xi: Option<f64>, x: &ModelPoint, y: &ModelPoint) -> Result<f64> {
    require_hyperbolic("busemann_to", x.model)?;
    if x.model != y.model {
        return Err(Error::domain("busemann arguments must share a model"));
    }
    Ok(log_height_at(y.model, y.xy(), xi)? - log_height_at(x.model, x.xy(), xi)?)
}

/// Endpoint angle (disk picture centred at the polar origin) of a polar vector.
fn polar_endpoint_angle(v: &ModelVector) -> f64 {
    let (r, th) = v.base.xy();
    // frame where the base is at i and the origin at i e^{-r}
    let dz = C::new(-r.sinh() * v.components[1], v.components[0]);
    match uhp_endpoint(C::new(0.0, 1.0), dz) {
        None => th,
        Some(x) => {
            let es = (-r).exp();
            th + (-2.0 * x * es).atan2(x * x - es * es)
        }
    }
}

/// Options for the finite-horizon Busemann evaluation.
#[derive(Debug, Clone, Copy)]
pub struct BusemannOptions {
    pub horizon: f64,
    /// Allowed disagreement between horizons `T` and `2T`, relative to `1 + d(x,y)`.
    pub tol: f64,
}

impl Default for BusemannOptions {
    fn default() -> Self {
        BusemannOptions { horizon: 200.0, tol: 1e-3 }
    }
}

/// `d(x, γ(t)) − d(γ(t), y)` at a finite `t`.
pub fn busemann_at(v: &ModelVector, x: &ModelPoint, y: &ModelPoint, t: f64) -> Result<f64> {
    let g = exp_map(&v.unit(), t)?;
    Ok(distance(x, &g)? - distance(&g, y)?)
}

/// Busemann function of the unit vector `v`.
pub fn busemann(v: &ModelVector, x: &ModelPoint, y: &ModelPoint) -> Result<f64> {
    busemann_with(v, x, y, BusemannOptions::default())
}

pub fn busemann_with(v: &ModelVector, x: &ModelPoint, y: &ModelPoint, opts: BusemannOptions) -> Result<f64> {
    let model = v.base.model;
    if x.model != model || y.model != model {
        return Err(Error::domain("busemann arguments must share the model of v"));
    }
    x.validate()?;
    y.validate()?;
    if v.norm == 0.0 {
        return Err(Error::domain("busemann needs a unit vector"));
    }
    if x.coords == y.coords {
        return Ok(0.0);
    }
    match model {
        ModelId::Euclidean(_) | ModelId::FlatTorusCover(_) => {
            let u = v.unit();
            Ok(y.coords.iter().zip(&x.coords).zip(&u.components).map(|((b, a), c)| (b - a) * c).sum())
        }
        ModelId::WarpedXy => {
            let b1 = busemann_at(v, x, y, opts.horizon)?;
            let b2 = busemann_at(v, x, y, 2.0 * opts.horizon)?;
            let scale = 1.0 + distance(x, y)?;
            if (b1 - b2).abs() > opts.tol * scale {
                return Err(Error::numeric(
                    format!("finite-horizon Busemann values disagree: {b1} at T, {b2} at 2T"),
                    (b1 - b2).abs(),
                ));
            }
            Ok(b2)
        }
        _ => Ok(log_height(model, y.xy(), v)? - log_height(model, x.xy(), v)?),
    }
}

/// Verdict of [`asymptotic_test`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticVerdict {
    pub asymptotic: bool,
    /// Largest sampled `d(exp(tv), exp(tw))`; NaN for exact verdicts.
    pub sup_distance: f64,
    /// True when decided from boundary endpoints rather than sampling.
    pub exact: bool,
}

/// Whether the rays of `v` and `w` stay at bounded distance.
pub fn asymptotic_test(v: &ModelVector, w: &ModelVector, horizon: f64) -> Result<AsymptoticVerdict> {
    if v.base.model != w.base.model {
        return Err(Error::domain("asymptotic test needs vectors of the same model"));
    }
    let model = v.base.model;
    if model.is_hyperbolic() && !matches!(model, ModelId::HyperbolicPolar) {
        let a = endpoint_in_uhp(v)?;
        let b = endpoint_in_uhp(w)?;
        let same = match (a, b) {
            (None, None) => true,
            (Some(a), Some(b)) => (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs())),
            _ => false,
        };
        return Ok(AsymptoticVerdict { asymptotic: same, sup_distance: f64::NAN, exact: true });
    }
    if model == ModelId::HyperbolicPolar {
        let same = wrap_angle(polar_endpoint_angle(v) - polar_endpoint_angle(w)).abs() <= 1e-9;
        return Ok(AsymptoticVerdict { asymptotic: same, sup_distance: f64::NAN, exact: true });
    }
    let (vu, wu) = (v.unit(), w.unit());
    let samples = 16;
    let mut ds = Vec::with_capacity(samples + 1);
    for k in 0..=samples {
        let t = horizon * k as f64 / samples as f64;
        ds.push(distance(&exp_map(&vu, t)?, &exp_map(&wu, t)?)?);
    }
    let sup = ds.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-6 * (1.0 + sup);
    let half = ds[samples / 2];
    let imax = ds.iter().enumerate().fold(0, |b, (i, d)| if *d > ds[b] { i } else { b });
    let non_increasing = ds[imax..].windows(2).all(|w| w[1] <= w[0] + tol);
    let asymptotic = non_increasing && ds[samples] <= half + tol;
    Ok(AsymptoticVerdict { asymptotic, sup_distance: sup, exact: false })
}

/// A Möbius map sending `plus` to ∞ and `minus` to 0.
pub(crate) fn moebius_to_axis(plus: Option<f64>, minus: Option<f64>) -> Result<Moebius> {
    match (plus, minus) {
        (None, None) => Err(Error::Visibility("both directions end at the same boundary point".into())),
        (None, Some(a)) => Ok(Moebius { a: 1.0, b: -a, c: 0.0, d: 1.0 }),
        (Some(b), None) => Ok(Moebius { a: 0.0, b: -1.0, c: 1.0, d: -b }),
        (Some(p), Some(m)) => {
            if (p - m).abs() <= 1e-12 * (1.0 + p.abs().max(m.abs())) {
                return Err(Error::Visibility("both directions end at the same boundary point".into()));
            }
            let s = (m - p).signum();
            Moebius::new(s, -s * m, 1.0, -p)
        }
    }
}

/// Unit vector on the geodesic from the endpoint of `v_minus` to that of
/// `v_plus`, based where `B_{v_plus}(p, ·)` vanishes.
pub fn horosphere_project(v_plus: &ModelVector, v_minus: &ModelVector) -> Result<ModelVector> {
    let model = v_plus.base.model;
    require_hyperbolic("horosphere_project", model)?;
    if v_minus.base != v_plus.base {
        return Err(Error::domain("horosphere projection needs vectors at the same base point"));
    }
    project_to_axis(&v_plus.base, endpoint_in_uhp(v_plus)?, endpoint_in_uhp(v_minus)?)
}

/// Unit vector on the geodesic from `minus` to `plus` (half-plane boundary
/// points) lying on the horosphere centred at `plus` through `p`.
pub fn project_to_axis(p: &ModelPoint, plus: Option<f64>, minus: Option<f64>) -> Result<ModelVector> {
    let model = p.model;
    require_hyperbolic("horosphere_project", model)?;
    let m = moebius_to_axis(plus, minus)?;
    let pp = m.apply(to_uhp(model, p.xy()));
    let q_axis = C::new(0.0, pp.im);
    let inv = m.inverse();
    let q = inv.apply(q_axis);
    let dq = inv.derivative(q_axis) * C::new(0.0, q_axis.im);
    let hint = if model == ModelId::HyperbolicPolar { p.coords[1] } else { 0.0 };
    let (a, b) = from_uhp(model, q, hint);
    let base = ModelPoint::planar(model, a, b)?;
    let comps = pull_from_uhp(model, (a, b), dq);
    Ok(ModelVector::new(base, comps.to_vec())?.unit())
}

/// Half-plane boundary points within rounding of 0 or ∞, relative to `scale`,
/// moved exactly there.
pub fn snap_endpoint(xi: Option<f64>, scale: f64) -> Option<f64> {
    match xi {
        Some(x) if x.abs() > 1e12 * scale => None,
        Some(x) if x.abs() < 1e-12 * scale => Some(0.0),
        other => other,
    }
}

/// Unit vector at `p` pointing to the half-plane boundary point `xi`.
pub fn vector_towards(p: &ModelPoint, xi: Option<f64>) -> Result<ModelVector> {
    let model = p.model;
    require_hyperbolic("vector_towards", model)?;
    let z = to_uhp(model, p.xy());
    let dz = match xi {
        None => C::new(0.0, z.im),
        Some(x) => {
            // N(w) = −1/(w − x) sends x to ∞; pull back the upward vector
            let n = Moebius { a: 0.0, b: -1.0, c: 1.0, d: -x };
            let w = n.apply(z);
            n.inverse().derivative(w) * C::new(0.0, w.im)
        }
    };
    Ok(ModelVector::new(p.clone(), pull_from_uhp(model, p.xy(), dz).to_vec())?.unit())
}

/// Signed distance from `p` to the geodesic from `minus` to `plus`, positive
/// on the left of the direction of travel.
pub fn signed_distance_to_geodesic(p: &ModelPoint, plus: Option<f64>, minus: Option<f64>) -> Result<f64> {
    require_hyperbolic("signed_distance_to_geodesic", p.model)?;
    let m = moebius_to_axis(plus, minus)?;
    let w = m.apply(to_uhp(p.model, p.xy()));
    Ok((-w.re / w.im).asinh())
}

/// Limits of the two half-orbits on the boundary circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLimits {
    pub plus: BoundaryPoint,
    pub minus: BoundaryPoint,
    /// Angular distance between the limits, in `[0, π]`.
    pub separation: f64,
    /// Angular spread of the terminal window of each half-orbit.
    pub spread_plus: f64,
    pub spread_minus: f64,
}

fn terminal_angle(seq: &PointSequence, window: usize) -> Result<(f64, f64)> {
    let n = seq.points.len();
    let w = window.clamp(1, n);
    let mut angles = Vec::with_capacity(w);
    let mut radius = 0.0;
    for p in &seq.points[n - w..] {
        let z = match p.model {
            ModelId::PoincareDisk => C::new(p.coords[0], p.coords[1]),
            m if m.is_hyperbolic() => {
                let h = to_uhp(m, p.xy());
                if !h.re.is_finite() || !h.im.is_finite() {
                    return Err(Error::numeric("orbit left the floating-point range", f64::NAN));
                }
                if h.norm() > 1e150 {
                    // numerically at ∞ of the half-plane
                    C::new(1.0, 0.0)
                } else {
                    cayley(h)
                }
            }
            m => return Err(Error::UnsupportedModel { op: "orbit_boundary_limits", model: m.to_string() }),
        };
        radius = z.norm();
        angles.push(z.arg());
    }
    if 1.0 - radius > 1e-3 {
        return Err(Error::numeric(
            "terminal points do not approach the boundary circle",
            1.0 - radius,
        ));
    }
    let last = *angles.last().expect("nonempty");
    let spread = angles.iter().map(|a| wrap_angle(a - last).abs()).fold(0.0, f64::max);
    Ok((last.rem_euclid(TAU), spread))
}

/// Boundary limits of the forward and backward half-orbits. Points may be
/// given in any hyperbolic chart; angles refer to the disk picture.
pub fn orbit_boundary_limits(fwd: &PointSequence, bwd: &PointSequence, window: usize) -> Result<BoundaryLimits> {
    let (a, sa) = terminal_angle(fwd, window)?;
    let (b, sb) = terminal_angle(bwd, window)?;
    let plus = BoundaryPoint::disk(a);
    let minus = BoundaryPoint::disk(b);
    Ok(BoundaryLimits {
        separation: plus.separation(&minus),
        plus,
        minus,
        spread_plus: sa,
        spread_minus: sb,
    })
}

/// Half-plane endpoint of a vector as a [`BoundaryPoint`] in any hyperbolic chart.
pub fn endpoint_half_plane(v: &ModelVector) -> Result<BoundaryPoint> {
    Ok(BoundaryPoint::HalfPlane { x: endpoint_in_uhp(v)? })
}

/// Disk-picture endpoint of `v`: disk, half-plane via Cayley, other charts via the half-plane.
pub fn endpoint_angle(v: &ModelVector) -> Result<f64> {
    match v.base.model {
        ModelId::HyperbolicPolar => Ok(polar_endpoint_angle(v).rem_euclid(TAU)),
        _ => Ok(endpoint_half_plane(v)?.to_disk_angle()),
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::hyperbolic::cayley_inv;
    use std::f64::consts::PI;

    fn disk_from_uhp_boundary(x: Option<f64>) -> f64 {
        match x {
            None => 0.0,
            Some(x) => cayley(C::new(x, 0.0)).arg().rem_euclid(TAU),
        }
    }

    fn uhp_from_disk_boundary(angle: f64) -> Option<f64> {
        let w = C::from_polar(1.0, angle);
        if (w - 1.0).norm() < 1e-300 {
            None
        } else {
            Some(cayley_inv(w).re)
        }
    }

    fn vec_at(m: ModelId, p: (f64, f64), v: [f64; 2]) -> ModelVector {
        ModelVector::new(ModelPoint::planar(m, p.0, p.1).unwrap(), v.to_vec()).unwrap().unit()
    }

    #[test]
    fn endpoints() {
        let d = ModelId::PoincareDisk;
        let h = ModelId::UpperHalfPlane;
        assert_eq!(boundary_endpoint(&vec_at(d, (0.0, 0.0), [1.0, 0.0])).unwrap(), BoundaryPoint::disk(0.0));
        assert_eq!(boundary_endpoint(&vec_at(h, (0.0, 1.0), [0.0, 1.0])).unwrap(), BoundaryPoint::HalfPlane { x: None });
        let e = boundary_endpoint(&vec_at(d, (0.5, 0.0), [1.0, 0.0])).unwrap();
        assert!(e.approx_eq(&BoundaryPoint::disk(0.0), 1e-15));
        assert!(matches!(
            boundary_endpoint(&vec_at(ModelId::FermiStrip, (0.0, 0.0), [1.0, 0.0])),
            Err(Error::UnsupportedModel { .. })
        ));
        // a horizontal vector at i ends at ±1
        let e = boundary_endpoint(&vec_at(h, (0.0, 1.0), [1.0, 0.0])).unwrap();
        assert_eq!(e, BoundaryPoint::HalfPlane { x: Some(1.0) });
    }

    #[test]
    fn boundary_conversions_agree_with_cayley() {
        for x in [-3.0, -0.2, 0.0, 0.7, 5.0] {
            let p = BoundaryPoint::HalfPlane { x: Some(x) };
            assert!((p.to_disk_angle() - disk_from_uhp_boundary(Some(x))).abs() < 1e-12);
            let back = BoundaryPoint::disk(p.to_disk_angle()).to_half_plane().unwrap();
            assert!((back - x).abs() < 1e-12 * (1.0 + x.abs()));
            assert!((uhp_from_disk_boundary(p.to_disk_angle()).unwrap() - x).abs() < 1e-9);
        }
    }

    #[test]
    fn busemann_examples() {
        let h = ModelId::UpperHalfPlane;
        let v = vec_at(h, (0.0, 1.0), [0.0, 1.0]);
        let i = ModelPoint::planar(h, 0.0, 1.0).unwrap();
        let ai = ModelPoint::planar(h, 0.0, 2.5).unwrap();
        assert!((busemann(&v, &i, &ai).unwrap() - 2.5f64.ln()).abs() < 1e-14);
        assert_eq!(busemann(&v, &i, &i).unwrap(), 0.0);
    }

    #[test]
    fn closed_forms_match_finite_horizon() {
        let cases = [
            (ModelId::UpperHalfPlane, (0.3, 0.8), [0.5, -0.2], (1.0, 2.0), (-0.5, 0.3)),
            (ModelId::PoincareDisk, (0.1, 0.2), [0.3, 0.9], (-0.4, 0.1), (0.2, -0.6)),
            (ModelId::FermiStrip, (0.4, -0.3), [0.2, 0.7], (1.0, 0.5), (-1.0, 0.2)),
            (ModelId::HyperbolicPolar, (0.8, 1.0), [0.2, -0.7], (1.3, 2.0), (0.4, -1.0)),
        ];
        for (m, b, v, x, y) in cases {
            let v = vec_at(m, b, v);
            let x = ModelPoint::planar(m, x.0, x.1).unwrap();
            let y = ModelPoint::planar(m, y.0, y.1).unwrap();
            let closed = busemann(&v, &x, &y).unwrap();
            let fin = busemann_at(&v, &x, &y, 30.0).unwrap();
            assert!((closed - fin).abs() < 1e-8, "{m}: {closed} vs {fin}");
        }
    }

    #[test]
    fn projection_examples() {
        let h = ModelId::UpperHalfPlane;
        let up = vec_at(h, (0.0, 1.0), [0.0, 1.0]);
        let down = vec_at(h, (0.0, 1.0), [0.0, -1.0]);
        let q = horosphere_project(&up, &down).unwrap();
        assert!(q.base.coords[0].abs() < 1e-15 && (q.base.coords[1] - 1.0).abs() < 1e-15);
        assert!((q.components[1] - 1.0).abs() < 1e-15);

        // at 1+i with endpoints ∞ and 0 the base is i
        let p = ModelPoint::planar(h, 1.0, 1.0).unwrap();
        let up = ModelVector::new(p.clone(), vec![0.0, 1.0]).unwrap();
        let down = crate::geometry::log_map(&p, &ModelPoint::planar(h, 0.0, 1e-12).unwrap()).unwrap();
        let q = horosphere_project(&up, &down.unit()).unwrap();
        assert!((q.base.coords[1] - 1.0).abs() < 1e-6 && q.base.coords[0].abs() < 1e-6, "{:?}", q);

        assert!(matches!(horosphere_project(&up, &up), Err(Error::Visibility(_))));
    }

    #[test]
    fn radial_orbit_limit() {
        let d = ModelId::PoincareDisk;
        let fwd: Vec<ModelPoint> = (0..30).map(|n| ModelPoint::planar(d, (n as f64 / 2.0).tanh(), 0.0).unwrap()).collect();
        let bwd: Vec<ModelPoint> = (0..30).map(|n| ModelPoint::planar(d, -(n as f64 / 2.0).tanh(), 0.0).unwrap()).collect();
        let f = PointSequence::from_points(d, fwd).unwrap();
        let b = PointSequence::from_points(d, bwd).unwrap();
        let lim = orbit_boundary_limits(&f, &b, 5).unwrap();
        assert!(lim.plus.approx_eq(&BoundaryPoint::disk(0.0), 1e-12));
        assert!((lim.separation - PI).abs() < 1e-12);
        let short = PointSequence::from_points(d, vec![ModelPoint::planar(d, 0.1, 0.0).unwrap()]).unwrap();
        assert!(orbit_boundary_limits(&short, &b, 5).is_err());
    }
}
