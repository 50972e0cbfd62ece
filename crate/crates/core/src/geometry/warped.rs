//! Geodesics of the warped plane `(1+e^{-y})² dx² + dy²`.
//!
//! Geodesics are integrated as the Hamiltonian system in `(x, y, p1, p2)`
//! with `p1 = w² x'` conserved. The logarithm is found by damped Newton
//! shooting on the initial velocity, with continuation along the chord as
//! a fallback.

use crate::error::{Error, Result};
use crate::ode::{Dopri5, Tolerance};

/// Integration tolerance for shooting and exponential maps.
pub const TOL: Tolerance = Tolerance::new(1e-11, 1e-12);

#[inline]
pub fn warp(y: f64) -> f64 {
    1.0 + (-y).exp()
}

/// Right-hand side of the Hamiltonian system in `(x, y, p1, p2)`.
#[inline]
pub fn rhs(s: &[f64; 4]) -> [f64; 4] {
    let q = (-s[1]).exp();
    let w = 1.0 + q;
    let w2 = w * w;
    [s[2] / w2, s[3], 0.0, -q * s[2] * s[2] / (w2 * w)]
}

fn rhs_var(s: &[f64; 12]) -> [f64; 12] {
    let (y, p1, p2) = (s[1], s[2], s[3]);
    let q = (-y).exp();
    let w = 1.0 + q;
    let w2 = w * w;
    let w3 = w2 * w;
    let dxdy = 2.0 * p1 * q / w3;
    let dxdp1 = 1.0 / w2;
    let dp2dy = p1 * p1 * (q / w3 - 3.0 * q * q / (w3 * w));
    let dp2dp1 = -2.0 * q * p1 / w3;
    let mut out = [0.0; 12];
    out[0] = p1 / w2;
    out[1] = p2;
    out[3] = -q * p1 * p1 / w3;
    for j in 0..2 {
        let o = 4 + 4 * j;
        let (dy, dp1, dp2) = (s[o + 1], s[o + 2], s[o + 3]);
        out[o] = dxdy * dy + dxdp1 * dp1;
        out[o + 1] = dp2;
        out[o + 3] = dp2dy * dy + dp2dp1 * dp1;
    }
    out
}

/// Riemannian norm of `v` at height `y`.
pub fn norm(y: f64, v: [f64; 2]) -> f64 {
    (warp(y) * v[0]).hypot(v[1])
}

/// Position and velocity at time `t` along the geodesic with initial velocity `v`.
pub fn exp_with_velocity(p: (f64, f64), v: [f64; 2], t: f64) -> Result<((f64, f64), [f64; 2])> {
    let w0 = warp(p.1);
    let s0 = [p.0, p.1, w0 * w0 * v[0], v[1]];
    if t == 0.0 || (v[0] == 0.0 && v[1] == 0.0) {
        return Ok((p, v));
    }
    let e0 = (w0 * v[0]).powi(2) + v[1] * v[1];
    let mut solver = Dopri5::new(0.0, s0, TOL);
    solver.advance_to(
        t,
        &mut |_, s: &[f64; 4]| rhs(s),
        &mut |_, s: &mut [f64; 4]| {
            let w = warp(s[1]);
            let kin = (s[2] / w).powi(2);
            if s[3] * s[3] > 0.1 * e0 {
                s[3] = s[3].signum() * (e0 - kin).max(0.0).sqrt();
            }
            true
        },
    )?;
    let s = solver.y;
    let w = warp(s[1]);
    Ok(((s[0], s[1]), [s[2] / (w * w), s[3]]))
}

pub fn exp(p: (f64, f64), v: [f64; 2], t: f64) -> Result<(f64, f64)> {
    exp_with_velocity(p, v, t).map(|r| r.0)
}

/// Looser tolerance for Newton iterates that are still far from the target.
const COARSE: Tolerance = Tolerance::new(1e-7, 1e-8);

/// Endpoint at time 1 and its Jacobian with respect to the initial velocity.
fn shoot(p: (f64, f64), v: [f64; 2], tol: Tolerance) -> Result<((f64, f64), [[f64; 2]; 2])> {
    let w0 = warp(p.1);
    let mut s0 = [0.0; 12];
    s0[0] = p.0;
    s0[1] = p.1;
    s0[2] = w0 * w0 * v[0];
    s0[3] = v[1];
    s0[4 + 2] = w0 * w0;
    s0[8 + 3] = 1.0;
    let mut solver = Dopri5::new(0.0, s0, tol);
    solver.advance_to(1.0, &mut |_, s: &[f64; 12]| rhs_var(s), &mut |_, _| true)?;
    let s = solver.y;
    Ok(((s[0], s[1]), [[s[4], s[8]], [s[5], s[9]]]))
}

/// Damped Newton on the endpoint map.
///
/// Iterates use the coarse tolerance until the residual is small enough that
/// the coarse integration error would dominate, then switch to [`TOL`].
fn newton(p: (f64, f64), q: (f64, f64), mut v: [f64; 2], max_iter: usize) -> Result<[f64; 2]> {
    let scale = 1.0 + q.0.abs().max(q.1.abs()) + (q.0 - p.0).abs() + (q.1 - p.1).abs();
    let goal = 1e-11 * scale;
    let switch = 1e-5 * scale;
    let mut tol = COARSE;
    let mut fine = false;
    let (mut end, mut jac) = shoot(p, v, tol)?;
    let mut res = (end.0 - q.0).hypot(end.1 - q.1);
    for _ in 0..max_iter {
        if !fine && res <= switch {
            fine = true;
            tol = TOL;
            (end, jac) = shoot(p, v, tol)?;
            res = (end.0 - q.0).hypot(end.1 - q.1);
        }
        if fine && res <= goal {
            return Ok(v);
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let (r0, r1) = (end.0 - q.0, end.1 - q.1);
        let dv = [-(jac[1][1] * r0 - jac[0][1] * r1) / det, -(-jac[1][0] * r0 + jac[0][0] * r1) / det];
        // near the integration noise floor a failed full step means we are done
        let floor = if fine && res <= goal * 100.0 { 0.75 } else { 1e-2 };
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > floor {
            let cand = [v[0] + lambda * dv[0], v[1] + lambda * dv[1]];
            if let Ok((e, j)) = shoot(p, cand, tol) {
                let r = (e.0 - q.0).hypot(e.1 - q.1);
                if r.is_finite() && r < res * (1.0 - 1e-4 * lambda) {
                    v = cand;
                    end = e;
                    jac = j;
                    res = r;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if fine && res <= goal * 100.0 {
        Ok(v)
    } else {
        Err(Error::numeric("warped shooting did not converge", res))
    }
}

/// Initial velocity of the geodesic from `p` reaching `q` at time 1.
pub fn log(p: (f64, f64), q: (f64, f64)) -> Result<[f64; 2]> {
    if p == q {
        return Ok([0.0, 0.0]);
    }
    let chord = [q.0 - p.0, q.1 - p.1];
    if let Ok(v) = newton(p, q, chord, 12) {
        return Ok(v);
    }
    // continuation along the chord towards q
    let mut s = 0.0f64;
    let mut ds = 0.1;
    let mut v = [0.0, 0.0];
    let mut last_err = f64::NAN;
    while s < 1.0 {
        let s1 = (s + ds).min(1.0);
        let target = (p.0 + s1 * chord[0], p.1 + s1 * chord[1]);
        let guess = if s == 0.0 {
            [s1 * chord[0], s1 * chord[1]]
        } else {
            [v[0] * s1 / s, v[1] * s1 / s]
        };
        match newton(p, target, guess, 10) {
            Ok(nv) => {
                v = nv;
                s = s1;
                ds = (ds * 1.5).min(0.25);
            }
            Err(e) => {
                if let Error::Numeric { residual, .. } = &e {
                    last_err = *residual;
                }
                ds *= 0.5;
                if ds < 1e-6 {
                    return Err(Error::numeric(
                        "warped shooting continuation stalled",
                        last_err,
                    ));
                }
            }
        }
    }
    Ok(v)
}

/// [`log`] warm-started from `guess`.
pub fn log_near(p: (f64, f64), q: (f64, f64), guess: [f64; 2]) -> Result<[f64; 2]> {
    if p == q {
        return Ok([0.0, 0.0]);
    }
    newton(p, q, guess, 40).or_else(|_| log(p, q))
}

pub fn distance(p: (f64, f64), q: (f64, f64)) -> Result<f64> {
    if p == q {
        return Ok(0.0);
    }
    let v = log(p, q)?;
    Ok(norm(p.1, v))
}
