//! Closed-form geometry of the hyperbolic plane in its four charts.
//!
//! The half-plane is the hub. Fermi and polar points are moved by a chart
//! isometry (x-translation, resp. rotation) so the base point sits at a
//! normalised position before mapping, which keeps far-apart points from
//! overflowing.

use num_complex::Complex64 as C;

use super::ModelId;

const I: C = C::new(0.0, 1.0);

/// Complex division without intermediate overflow or underflow.
pub fn cdiv(a: C, b: C) -> C {
    if b.re.abs() >= b.im.abs() {
        let r = b.im / b.re;
        let den = b.re + b.im * r;
        C::new((a.re + a.im * r) / den, (a.im - a.re * r) / den)
    } else {
        let r = b.re / b.im;
        let den = b.re * r + b.im;
        C::new((a.re * r + a.im) / den, (a.im * r - a.re) / den)
    }
}

/// Half-plane distance.
pub fn uhp_dist(p: C, q: C) -> f64 {
    let num = (p - q).norm();
    2.0 * (num / (2.0 * p.im.sqrt() * q.im.sqrt())).asinh()
}

/// Half-plane exponential map; `v` is the Euclidean velocity at `z`.
pub fn uhp_exp(z: C, v: C) -> C {
    let t = v.norm() / z.im;
    if t == 0.0 {
        return z;
    }
    let theta = v.arg() - std::f64::consts::FRAC_PI_2;
    let (s, c) = (0.5 * theta).sin_cos();
    let et = (-t).exp();
    let num = C::new(s * et, c);
    let den = C::new(c * et, -s);
    C::new(z.re, 0.0) + z.im * cdiv(num, den)
}

/// Half-plane logarithm: Euclidean velocity at `z` of the geodesic hitting `q` at time 1.
pub fn uhp_log(z: C, q: C) -> C {
    let w = (q - z.re) / z.im;
    if w == I {
        return C::new(0.0, 0.0);
    }
    let d = 2.0 * ((w - I).norm() / (2.0 * w.im.sqrt())).asinh();
    let m = w.norm().max(1.0);
    let (u, v) = (w.re / m, w.im / m);
    let dir = C::new(2.0 * u / m, u * u + v * v - 1.0 / (m * m));
    let n = dir.norm();
    if n == 0.0 {
        return C::new(0.0, 0.0);
    }
    dir * (z.im * d / n)
}

/// Disk distance.
pub fn disk_dist(p: C, q: C) -> f64 {
    let a = (1.0 - p.norm()) * (1.0 + p.norm());
    let b = (1.0 - q.norm()) * (1.0 + q.norm());
    2.0 * ((p - q).norm() / (a.sqrt() * b.sqrt())).asinh()
}

/// Disk isometry `w ↦ (w + p)/(1 + p̄ w)` taking 0 to `p`.
pub fn disk_translate(p: C, w: C) -> C {
    (w + p) / (1.0 + p.conj() * w)
}

pub fn disk_exp(p: C, v: C) -> C {
    let s = (1.0 - p.norm()) * (1.0 + p.norm());
    let u = v / s;
    let n = u.norm();
    if n == 0.0 {
        return p;
    }
    disk_translate(p, u * (n.tanh() / n))
}

pub fn disk_log(p: C, q: C) -> C {
    let w = disk_translate(-p, q);
    let n = w.norm();
    if n == 0.0 {
        return C::new(0.0, 0.0);
    }
    let s = (1.0 - p.norm()) * (1.0 + p.norm());
    w * (n.atanh() / n * s)
}

/// Cayley transform from the half-plane to the disk.
pub fn cayley(z: C) -> C {
    (z - I) / (z + I)
}

pub fn cayley_inv(w: C) -> C {
    I * (1.0 + w) / (1.0 - w)
}

/// Fermi point `(x, r)` in the half-plane: `e^x (tanh r + i sech r)`.
pub fn fermi_to_uhp(x: f64, r: f64) -> C {
    C::new(r.tanh(), 1.0 / r.cosh()) * x.exp()
}

pub fn uhp_to_fermi(z: C) -> (f64, f64) {
    (z.norm().ln(), (z.re / z.im).asinh())
}

/// Polar point `(r, θ)` seen from the rotated frame where the base has
/// angle 0, scaled by `e^{-shift}`. The polar centre maps to `i e^{-shift}`.
fn polar_to_uhp_rel(r: f64, dtheta: f64, shift: f64) -> C {
    let t = (0.5 * r).tanh();
    let om = 2.0 / (r.exp() + 1.0);
    let (sd, cd) = dtheta.sin_cos();
    let hs = (0.5 * dtheta).sin();
    let den = C::new(om + 2.0 * t * hs * hs, -t * sd);
    let num = C::new(1.0 + t * cd, t * sd);
    I * num / den * (-shift).exp()
}

/// Inverse of [`polar_to_uhp_rel`]; returns `(r, Δθ)`.
fn uhp_rel_to_polar(z: C, shift: f64) -> (f64, f64) {
    let es = (-shift).exp();
    let r = uhp_dist(z, C::new(0.0, es));
    let theta = (-2.0 * z.re * es).atan2(z.norm_sqr() - es * es);
    (r, theta)
}

/// Reduces an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut b = a.rem_euclid(TAU);
    if b > PI {
        b -= TAU;
    }
    b
}

fn ln_cosh(r: f64) -> f64 {
    let a = r.abs();
    a + (0.5 * (1.0 + (-2.0 * a).exp())).ln()
}

/// `ln sinh|u|`, `−∞` at 0.
fn ln_sinh_abs(u: f64) -> f64 {
    let a = u.abs();
    if a < 1.0 {
        a.sinh().ln()
    } else {
        a + (0.5 * (1.0 - (-2.0 * a).exp())).ln()
    }
}

/// `2 asinh √(e^{la} + e^{lb})`, evaluated in the log domain when large.
fn dist_from_log_terms(la: f64, lb: f64) -> f64 {
    let hi = la.max(lb);
    if hi == f64::NEG_INFINITY {
        return 0.0;
    }
    let ln_s = hi + (1.0 + (la.min(lb) - hi).exp()).ln();
    if ln_s > 60.0 {
        4f64.ln() + ln_s
    } else {
        2.0 * (0.5 * ln_s).exp().asinh()
    }
}

/// Distance in any hyperbolic chart.
pub fn distance(model: ModelId, p: (f64, f64), q: (f64, f64)) -> f64 {
    match model {
        ModelId::UpperHalfPlane => uhp_dist(C::new(p.0, p.1), C::new(q.0, q.1)),
        ModelId::PoincareDisk => disk_dist(C::new(p.0, p.1), C::new(q.0, q.1)),
        ModelId::FermiStrip => {
            let la = ln_cosh(p.1) + ln_cosh(q.1) + 2.0 * ln_sinh_abs(0.5 * (q.0 - p.0));
            let lb = 2.0 * ln_sinh_abs(0.5 * (q.1 - p.1));
            dist_from_log_terms(la, lb)
        }
        ModelId::HyperbolicPolar => {
            let (r1, r2) = (p.0, q.0);
            let h = (0.5 * wrap_angle(q.1 - p.1)).sin().abs();
            let la = 2.0 * ln_sinh_abs(0.5 * (r1 - r2));
            let lb = ln_sinh_abs(r1) + ln_sinh_abs(r2) + 2.0 * h.ln();
            dist_from_log_terms(la, lb)
        }
        _ => unreachable!("not a hyperbolic chart"),
    }
}

/// `exp_p(v)` in any hyperbolic chart; `v` in chart components.
pub fn exp(model: ModelId, p: (f64, f64), v: [f64; 2]) -> (f64, f64) {
    match model {
        ModelId::UpperHalfPlane => {
            let z = uhp_exp(C::new(p.0, p.1), C::new(v[0], v[1]));
            (z.re, z.im)
        }
        ModelId::PoincareDisk => {
            let z = disk_exp(C::new(p.0, p.1), C::new(v[0], v[1]));
            (z.re, z.im)
        }
        ModelId::FermiStrip => {
            let (r, vx, vr) = (p.1, v[0], v[1]);
            let base = fermi_to_uhp(0.0, r);
            let (th, se) = (r.tanh(), 1.0 / r.cosh());
            let dz = base * vx + C::new(se * se, -se * th) * vr;
            let (x, r1) = uhp_to_fermi(uhp_exp(base, dz));
            (x + p.0, r1)
        }
        ModelId::HyperbolicPolar => {
            let (r, th) = p;
            let dz = C::new(-r.sinh() * v[1], v[0]);
            let z = uhp_exp(I, dz);
            let (r1, dth) = uhp_rel_to_polar(z, r);
            (r1, th + dth)
        }
        _ => unreachable!("not a hyperbolic chart"),
    }
}

/// `log_p(q)` in any hyperbolic chart, as chart components at `p`.
pub fn log(model: ModelId, p: (f64, f64), q: (f64, f64)) -> [f64; 2] {
    match model {
        ModelId::UpperHalfPlane => {
            let v = uhp_log(C::new(p.0, p.1), C::new(q.0, q.1));
            [v.re, v.im]
        }
        ModelId::PoincareDisk => {
            let v = disk_log(C::new(p.0, p.1), C::new(q.0, q.1));
            [v.re, v.im]
        }
        ModelId::FermiStrip => {
            let r = p.1;
            let base = fermi_to_uhp(0.0, r);
            let dz = uhp_log(base, fermi_to_uhp(q.0 - p.0, q.1));
            // invert [[th, se²], [se, −se·th]]
            let (th, se) = (r.tanh(), 1.0 / r.cosh());
            let det = -se * th * th - se * se * se;
            let vx = (-se * th * dz.re - se * se * dz.im) / det;
            let vr = (-se * dz.re + th * dz.im) / det;
            [vx, vr]
        }
        ModelId::HyperbolicPolar => {
            let target = polar_to_uhp_rel(q.0, wrap_angle(q.1 - p.1), p.0);
            let dz = uhp_log(I, target);
            [dz.im, -dz.re / p.0.sinh()]
        }
        _ => unreachable!("not a hyperbolic chart"),
    }
}

/// Chart point mapped into the half-plane.
pub fn to_uhp(model: ModelId, p: (f64, f64)) -> C {
    match model {
        ModelId::UpperHalfPlane => C::new(p.0, p.1),
        ModelId::PoincareDisk => cayley_inv(C::new(p.0, p.1)),
        ModelId::FermiStrip => fermi_to_uhp(p.0, p.1),
        ModelId::HyperbolicPolar => cayley_inv(C::from_polar((0.5 * p.0).tanh(), p.1)),
        _ => unreachable!("not a hyperbolic chart"),
    }
}

/// Half-plane point mapped back into a chart. Polar angles are chosen
/// closest to `theta_hint`.
pub fn from_uhp(model: ModelId, z: C, theta_hint: f64) -> (f64, f64) {
    match model {
        ModelId::UpperHalfPlane => (z.re, z.im),
        ModelId::PoincareDisk => {
            let w = cayley(z);
            (w.re, w.im)
        }
        ModelId::FermiStrip => uhp_to_fermi(z),
        ModelId::HyperbolicPolar => {
            let (r, th) = uhp_rel_to_polar(z, 0.0);
            (r, theta_hint + wrap_angle(th - theta_hint))
        }
        _ => unreachable!("not a hyperbolic chart"),
    }
}

/// `ln(e^a + e^b)`.
fn log_add(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (a.min(b) - hi).exp().ln_1p()
}

/// Point at arclength `s ∈ [0, d(p, q)]` on the segment between two Fermi
/// points.
///
/// Uses the hyperboloid combination `(sinh(d−s) P + sinh(s) Q) / sinh d`
/// in coordinates adapted to the axis, where every coordinate is a sum of
/// terms of one sign. The error stays at rounding level even when the
/// points are hundreds of units apart; `exp` of a rounded direction does
/// not, since a direction error δ grows to `δ sinh s`.
pub fn fermi_interpolate(p: (f64, f64), q: (f64, f64), s: f64) -> (f64, f64) {
    let d = distance(ModelId::FermiStrip, p, q);
    if d == 0.0 || s <= 0.0 {
        return p;
    }
    if s >= d {
        return q;
    }
    let la = ln_sinh_abs(d - s) - ln_sinh_abs(d);
    let lb = ln_sinh_abs(s) - ln_sinh_abs(d);
    let r = (la.exp() * p.1.sinh() + lb.exp() * q.1.sinh()).asinh();
    // e^{±x} cosh r as a sum of positive terms, relative to x_p
    let dx = q.0 - p.0;
    let sign = if dx >= 0.0 { 1.0 } else { -1.0 };
    let ln_e = log_add(la + ln_cosh(p.1), lb + ln_cosh(q.1) + sign * dx);
    (p.0 + sign * (ln_e - ln_cosh(r)), r)
}

/// [`fermi_interpolate`] in any hyperbolic chart, through Fermi coordinates
/// about the imaginary axis of the half-plane.
pub fn interpolate(model: ModelId, p: (f64, f64), q: (f64, f64), s: f64) -> (f64, f64) {
    if model == ModelId::FermiStrip {
        return fermi_interpolate(p, q, s);
    }
    let fp = uhp_to_fermi(to_uhp(model, p));
    let fq = uhp_to_fermi(to_uhp(model, q));
    let (x, r) = fermi_interpolate(fp, fq, s);
    let hint = if model == ModelId::HyperbolicPolar { p.1 } else { 0.0 };
    from_uhp(model, fermi_to_uhp(x, r), hint)
}

/// Jacobian of [`to_uhp`] at `p`, columns are images of the chart basis.
pub fn jacobian_to_uhp(model: ModelId, p: (f64, f64)) -> [C; 2] {
    match model {
        ModelId::UpperHalfPlane => [C::new(1.0, 0.0), I],
        ModelId::PoincareDisk => {
            let w = C::new(p.0, p.1);
            let d = 2.0 * I / ((1.0 - w) * (1.0 - w));
            [d, d * I]
        }
        ModelId::FermiStrip => {
            let (x, r) = p;
            let (th, se) = (r.tanh(), 1.0 / r.cosh());
            [fermi_to_uhp(x, r), C::new(se * se, -se * th) * x.exp()]
        }
        ModelId::HyperbolicPolar => {
            let (r, th) = p;
            let w = C::from_polar((0.5 * r).tanh(), th);
            let d = 2.0 * I / ((1.0 - w) * (1.0 - w));
            let sech = 1.0 / (0.5 * r).cosh();
            let dr = C::from_polar(0.5 * sech * sech, th);
            [d * dr, d * I * w]
        }
        _ => unreachable!("not a hyperbolic chart"),
    }
}

/// Pushes chart components at `p` to a half-plane vector.
pub fn push_to_uhp(model: ModelId, p: (f64, f64), v: [f64; 2]) -> C {
    let j = jacobian_to_uhp(model, p);
    j[0] * v[0] + j[1] * v[1]
}

/// Pulls a half-plane vector back to chart components at `p`.
pub fn pull_from_uhp(model: ModelId, p: (f64, f64), dz: C) -> [f64; 2] {
    let j = jacobian_to_uhp(model, p);
    let s = j[0].norm().max(j[1].norm());
    let (j, dz) = ([j[0] / s, j[1] / s], dz / s);
    let det = j[0].re * j[1].im - j[1].re * j[0].im;
    [
        (j[1].im * dz.re - j[1].re * dz.im) / det,
        (-j[0].im * dz.re + j[0].re * dz.im) / det,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHARTS: [ModelId; 4] = [
        ModelId::UpperHalfPlane,
        ModelId::PoincareDisk,
        ModelId::FermiStrip,
        ModelId::HyperbolicPolar,
    ];

    fn sample(model: ModelId, k: usize) -> (f64, f64) {
        let a = (k as f64 * 0.7548776662).fract() * 2.0 - 1.0;
        let b = (k as f64 * 0.5698402910).fract();
        match model {
            ModelId::UpperHalfPlane => (3.0 * a, 0.05 + 3.0 * b),
            ModelId::PoincareDisk => (0.6 * a, 0.6 * (2.0 * b - 1.0)),
            ModelId::FermiStrip => (3.0 * a, 3.0 * (2.0 * b - 1.0)),
            _ => (0.05 + 3.0 * b, 3.0 * a),
        }
    }

    #[test]
    fn charts_agree_with_half_plane_distance() {
        for m in CHARTS {
            for k in 1..200 {
                let (p, q) = (sample(m, k), sample(m, k + 37));
                let d = distance(m, p, q);
                let dh = uhp_dist(to_uhp(m, p), to_uhp(m, q));
                assert!((d - dh).abs() < 1e-9 * (1.0 + d), "{m} {p:?} {q:?} {d} {dh}");
            }
        }
    }

    #[test]
    fn exp_log_round_trip_in_every_chart() {
        for m in CHARTS {
            for k in 1..200 {
                let (p, q) = (sample(m, k), sample(m, k + 11));
                let v = log(m, p, q);
                let r = exp(m, p, v);
                let back = distance(m, r, q);
                assert!(back < 1e-9, "{m} {p:?} {q:?} {r:?}");
                let norm = super::super::norm_at(
                    &super::super::ModelPoint::planar(m, p.0, p.1).unwrap(),
                    &v,
                );
                assert!((norm - distance(m, p, q)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn push_pull_are_inverse() {
        for m in CHARTS {
            let p = sample(m, 5);
            let v = [0.3, -0.8];
            let w = pull_from_uhp(m, p, push_to_uhp(m, p, v));
            assert!((w[0] - v[0]).abs() < 1e-12 && (w[1] - v[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn fermi_map_reverses_orientation() {
        let j = jacobian_to_uhp(ModelId::FermiStrip, (0.2, 0.4));
        assert!(j[0].re * j[1].im - j[1].re * j[0].im < 0.0);
        let j = jacobian_to_uhp(ModelId::HyperbolicPolar, (0.7, 1.0));
        assert!(j[0].re * j[1].im - j[1].re * j[0].im > 0.0);
    }

    #[test]
    fn far_points_stay_finite() {
        let z = C::new(0.0, 4f64.powi(500));
        let d = uhp_dist(I, z);
        assert!((d - 1000.0 * 2f64.ln()).abs() < 1e-9);
        let d = distance(ModelId::FermiStrip, (0.0, 0.0), (900.0, 0.0));
        assert!((d - 900.0).abs() < 1e-9);
        let d = distance(ModelId::HyperbolicPolar, (400.0, 0.0), (400.0, std::f64::consts::PI));
        assert!((d - 800.0).abs() < 1e-9);
    }
}
