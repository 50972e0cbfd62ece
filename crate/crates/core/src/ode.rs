//! Explicit Runge–Kutta integrators for the geodesic and flow equations.
//!
//! [`Dopri5`] is the Dormand–Prince 5(4) embedded pair with PI-free step
//! control; it is restartable, so a trajectory can be advanced through a
//! list of output times while keeping the last accepted step size. A hook
//! runs after every accepted step and may modify the state in place, which
//! is how integrators renormalise conserved speeds.

use crate::error::{Error, Result};

/// Error control for [`Dopri5`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Tolerance {
    pub const fn new(rtol: f64, atol: f64) -> Self {
        Tolerance {
            rtol,
            atol,
            max_steps: 2_000_000,
        }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::new(1e-11, 1e-12)
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        let hc = h * c;
        for i in 0..N {
            out[i] += hc * k[i];
        }
    }
    out
}

/// Restartable Dormand–Prince 5(4) integrator over a fixed-size state.
#[derive(Debug, Clone)]
pub struct Dopri5<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    h: f64,
    tol: Tolerance,
    steps: usize,
}

impl<const N: usize> Dopri5<N> {
    pub fn new(t0: f64, y0: [f64; N], tol: Tolerance) -> Self {
        Dopri5 {
            t: t0,
            y: y0,
            h: 0.0,
            tol,
            steps: 0,
        }
    }

    /// Accepted steps so far.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Advances the state to `t1` (either direction). `hook` runs after
    /// each accepted step; returning `false` stops the integration early
    /// and the method returns `Ok(false)`.
    pub fn advance_to<F, H>(&mut self, t1: f64, f: &mut F, hook: &mut H) -> Result<bool>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
        H: FnMut(f64, &mut [f64; N]) -> bool,
    {
        let span = t1 - self.t;
        if span == 0.0 {
            return Ok(true);
        }
        let dir = span.signum();
        if self.h == 0.0 || self.h.signum() != dir {
            self.h = dir * (span.abs() * 0.01).clamp(1e-6, 0.05);
        }
        let mut k1 = f(self.t, &self.y);
        loop {
            let remaining = t1 - self.t;
            if remaining * dir <= 0.0 {
                return Ok(true);
            }
            let last = self.h.abs() >= remaining.abs();
            let h = if last { remaining } else { self.h };
            let t = self.t;
            let y = &self.y;
            let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, &k1)]));
            let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(
                t + C4 * h,
                &axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            );
            let k5 = f(
                t + C5 * h,
                &axpy(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = f(
                t + h,
                &axpy(
                    y,
                    h,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                ),
            );
            let y_new = axpy(
                y,
                h,
                &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
            );
            let k7 = f(t + h, &y_new);
            let mut err = 0.0f64;
            for i in 0..N {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.tol.atol + self.tol.rtol * y[i].abs().max(y_new[i].abs());
                err = err.max((e / sc).abs());
            }
            if !err.is_finite() {
                self.h *= 0.25;
                if self.h.abs() < 1e-14 * (1.0 + t.abs()) {
                    return Err(Error::numeric("integrator produced non-finite state", f64::NAN));
                }
                continue;
            }
            if err <= 1.0 {
                self.t = if last { t1 } else { t + h };
                self.y = y_new;
                self.steps += 1;
                let keep_going = hook(self.t, &mut self.y);
                k1 = if keep_going && self.y == y_new {
                    k7
                } else {
                    f(self.t, &self.y)
                };
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                if !last {
                    self.h = h * fac;
                } else {
                    self.h = self.h.abs().max(h.abs() * fac) * dir;
                }
                if !keep_going {
                    return Ok(false);
                }
            } else {
                self.h = h * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                if self.h.abs() < 1e-14 * (1.0 + t.abs()) {
                    return Err(Error::numeric("step size underflow", err));
                }
            }
            if self.steps > self.tol.max_steps {
                return Err(Error::numeric("too many integration steps", err));
            }
        }
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` without a hook.
pub fn integrate<const N: usize, F>(f: F, t0: f64, y0: [f64; N], t1: f64, tol: Tolerance) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut f = f;
    let mut solver = Dopri5::new(t0, y0, tol);
    solver.advance_to(t1, &mut f, &mut |_, _| true)?;
    Ok(solver.y)
}

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], h: f64) -> [f64; N]
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &axpy(y, h, &[(0.5, &k1)]));
    let k3 = f(t + 0.5 * h, &axpy(y, h, &[(0.5, &k2)]));
    let k4 = f(t + h, &axpy(y, h, &[(1.0, &k3)]));
    axpy(
        y,
        h,
        &[(1.0 / 6.0, &k1), (1.0 / 3.0, &k2), (1.0 / 3.0, &k3), (1.0 / 6.0, &k4)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_returns_after_one_period() {
        let y = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            std::f64::consts::TAU,
            Tolerance::default(),
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9 && y[1].abs() < 1e-9);
    }

    #[test]
    fn backward_integration_inverts_forward() {
        let f = |_: f64, y: &[f64; 1]| [y[0]];
        let fwd = integrate(f, 0.0, [1.0], 2.0, Tolerance::default()).unwrap();
        let back = integrate(f, 2.0, fwd, 0.0, Tolerance::default()).unwrap();
        assert!((fwd[0] - 2f64.exp()).abs() < 1e-9);
        assert!((back[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let mut f = |_: f64, y: &[f64; 1]| [y[0]];
        let run = |n: usize, f: &mut dyn FnMut(f64, &[f64; 1]) -> [f64; 1]| {
            let mut y = [1.0];
            let h = 1.0 / n as f64;
            for i in 0..n {
                let mut g = |t: f64, y: &[f64; 1]| f(t, y);
                y = rk4_step(&mut g, i as f64 * h, &y, h);
            }
            (y[0] - 1f64.exp()).abs()
        };
        let e1 = run(10, &mut f);
        let e2 = run(20, &mut f);
        assert!(e1 / e2 > 14.0);
    }
}
