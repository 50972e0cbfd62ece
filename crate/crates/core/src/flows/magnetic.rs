//! The magnetic flow `D/dt α′ = iα′` of the area form on hyperbolic charts.
//!
//! On the hyperbolic plane the flow is a one-parameter group of isometries
//! acting on unit vectors, so a trajectory is propagated exactly: a Möbius
//! frame sends the circle centre to `i`, the horocycle centre to ∞ or the
//! hypercycle axis to the imaginary axis, where the motion is a rotation, a
//! horizontal translation or a dilation. An RK4 integrator of the same
//! equation is kept for cross-checks.

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use super::{FlowState, Trajectory};
use crate::boundary::{busemann, moebius_to_axis, signed_distance_to_geodesic, snap_endpoint, uhp_endpoint};
use crate::error::{Error, Result};
use crate::escort::PointSequence;
use crate::geometry::deck::Moebius;
use crate::geometry::hyperbolic::{cayley, cayley_inv, from_uhp, pull_from_uhp, push_to_uhp, to_uhp, uhp_exp, uhp_log};
use crate::geometry::{distance, exp_map, norm_at, planar_metric, ModelId, ModelPoint, ModelVector};
use crate::ode::rk4_step;
use crate::rotation::LiftedFlow;

const I: C = C::new(0.0, 1.0);

/// Qualitative regime of a magnetic trajectory of speed `v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MagneticRegime {
    Subcritical,
    Horocyclic,
    Supercritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagneticClass {
    pub regime: MagneticRegime,
    /// Circle radius (subcritical) or distance to the axis (supercritical);
    /// `None` for horocycles.
    pub radius_or_distance: Option<f64>,
    pub escape_rate: f64,
}

/// Closed-form regime of speed `v`.
pub fn classify_magnetic(v: f64) -> Result<MagneticClass> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::domain(format!("magnetic speed must be positive, got {v}")));
    }
    Ok(if (v - 1.0).abs() <= 1e-12 {
        MagneticClass { regime: MagneticRegime::Horocyclic, radius_or_distance: None, escape_rate: 0.0 }
    } else if v < 1.0 {
        MagneticClass { regime: MagneticRegime::Subcritical, radius_or_distance: Some(v.atanh()), escape_rate: 0.0 }
    } else {
        MagneticClass {
            regime: MagneticRegime::Supercritical,
            radius_or_distance: Some((1.0 / v).atanh()),
            escape_rate: (v * v - 1.0).sqrt(),
        }
    })
}

/// Largest admissible integration step for speed `v`.
pub fn max_step(v: f64) -> f64 {
    0.01 / v.max(1.0)
}

fn rhs(model: ModelId, s: &[f64; 4]) -> [f64; 4] {
    let m = planar_metric(model, s[0], s[1]);
    let v = [s[2], s[3]];
    let g = m.geodesic_accel(v);
    let j = m.rotate(v, model.orientation());
    [v[0], v[1], g[0] + j[0], g[1] + j[1]]
}

fn state_of(model: ModelId, s: &[f64; 4], speed: f64) -> Result<FlowState> {
    let p = ModelPoint::planar(model, s[0], s[1])?;
    let v = ModelVector::new(p, vec![s[2], s[3]])?;
    Ok(FlowState { position: v.base.clone(), velocity: v, speed })
}

fn raw(s: &FlowState) -> [f64; 4] {
    [s.position.coords[0], s.position.coords[1], s.velocity.components[0], s.velocity.components[1]]
}

/// Chart membership with a margin where the disk chart runs out of precision.
fn numerically_inside(model: ModelId, c: &[f64]) -> bool {
    c.iter().all(|x| x.is_finite())
        && match model {
            ModelId::PoincareDisk => 1.0 - c[0] * c[0] - c[1] * c[1] > 1e-10,
            m => m.contains(c),
        }
}

fn check_start(start: &FlowState) -> Result<()> {
    let model = start.position.model;
    if !model.is_hyperbolic() {
        return Err(Error::UnsupportedModel { op: "magnetic_trajectory", model: model.to_string() });
    }
    if start.velocity.components.len() != 2 || !(start.speed > 0.0) {
        return Err(Error::domain("magnetic flow needs a nonzero planar velocity"));
    }
    Ok(())
}

fn check_step(start: &FlowState, horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || dt > max_step(start.speed) * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "step {dt} exceeds 0.01/max(1, v) = {}",
            max_step(start.speed)
        )));
    }
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(Error::domain("horizon must be finite and nonnegative"));
    }
    Ok((horizon / dt).round() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum NormalForm {
    /// Disk rotation `q ↦ e^{iωt} q` about the centre sent to `i`.
    Rotation { q0: C, omega: f64 },
    /// `w ↦ w + s t` with the horocycle centre at ∞.
    Translation { w0: C, s: f64 },
    /// `w ↦ e^{σt} w` with the axis on the imaginary axis.
    Dilation { w0: C, sigma: f64 },
}

/// Exact magnetic motion from a start state.
#[derive(Debug, Clone, PartialEq)]
pub struct MagneticMotion {
    pub model: ModelId,
    pub speed: f64,
    pub class: MagneticClass,
    /// Half-plane picture to normal frame.
    frame: Moebius,
    form: NormalForm,
    theta0: f64,
}

impl MagneticMotion {
    pub fn new(start: &FlowState) -> Result<Self> {
        check_start(start)?;
        let model = start.position.model;
        let v = start.speed;
        let class = classify_magnetic(v)?;
        let z0 = to_uhp(model, start.position.xy());
        let u = push_to_uhp(model, start.position.xy(), [start.velocity.components[0], start.velocity.components[1]]);
        let n = I * u / v;
        let scale = z0.norm();
        let (frame, form) = match class.regime {
            MagneticRegime::Subcritical => {
                let c = uhp_exp(z0, n * class.radius_or_distance.unwrap_or(0.0));
                let frame = Moebius::new(1.0, -c.re, 0.0, c.im)?;
                let w0 = frame.apply(z0);
                let q0 = cayley(w0);
                let dq = 2.0 * I / ((w0 + I) * (w0 + I)) * frame.derivative(z0) * u;
                let r = q0.norm();
                let omega = v * (1.0 - r * r) / (2.0 * r) * (dq * q0.conj()).im.signum();
                (frame, NormalForm::Rotation { q0, omega })
            }
            MagneticRegime::Horocyclic => {
                let frame = match snap_endpoint(uhp_endpoint(z0, n), scale) {
                    None => Moebius::IDENTITY,
                    Some(xi) => Moebius { a: 0.0, b: -1.0, c: 1.0, d: -xi },
                };
                let w0 = frame.apply(z0);
                let dw = frame.derivative(z0) * u;
                (frame, NormalForm::Translation { w0, s: v * w0.im * dw.re.signum() })
            }
            MagneticRegime::Supercritical => {
                let rho = class.radius_or_distance.unwrap_or(0.0);
                let foot = uhp_exp(z0, n * rho);
                let back = uhp_log(foot, z0);
                let e1 = snap_endpoint(uhp_endpoint(foot, I * back), scale);
                let e2 = snap_endpoint(uhp_endpoint(foot, -I * back), scale);
                let frame = moebius_to_axis(e1, e2)?;
                let w0 = frame.apply(z0);
                let dw = frame.derivative(z0) * u;
                let sigma = v * w0.im / w0.norm() * (dw * w0.conj()).re.signum();
                (frame, NormalForm::Dilation { w0, sigma })
            }
        };
        let theta0 = if model == ModelId::HyperbolicPolar { start.position.coords[1] } else { 0.0 };
        Ok(MagneticMotion { model, speed: v, class, frame, form, theta0 })
    }

    /// Half-plane position and Euclidean velocity at time `t`.
    pub fn uhp_state(&self, t: f64) -> (C, C) {
        let (w, dw) = match self.form {
            NormalForm::Rotation { q0, omega } => {
                let q = q0 * C::from_polar(1.0, omega * t);
                let dq = I * omega * q;
                (cayley_inv(q), 2.0 * I / ((1.0 - q) * (1.0 - q)) * dq)
            }
            NormalForm::Translation { w0, s } => (w0 + s * t, C::new(s, 0.0)),
            NormalForm::Dilation { w0, sigma } => {
                let w = w0 * (sigma * t).exp();
                (w, sigma * w)
            }
        };
        let inv = self.frame.inverse();
        (inv.apply(w), inv.derivative(w) * dw)
    }

    /// State at time `t` in the chart of the start.
    pub fn state_at(&self, t: f64, theta_hint: f64) -> Result<[f64; 4]> {
        let (z, dz) = self.uhp_state(t);
        if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::numeric("position left the half-plane", t));
        }
        let p = from_uhp(self.model, z, theta_hint);
        let v = pull_from_uhp(self.model, p, dz);
        let s = [p.0, p.1, v[0], v[1]];
        if !numerically_inside(self.model, &s[..2]) || !s[2..].iter().all(|c| c.is_finite()) {
            return Err(Error::numeric("position left the chart", t));
        }
        Ok(s)
    }

    /// Samples at `t_k = k·dt`, `k = 0..=steps`, optionally reversed in time.
    fn sample(&self, start: &FlowState, steps: usize, dt: f64, sign: f64) -> Result<Trajectory> {
        let mut times = vec![0.0];
        let mut states = vec![start.clone()];
        let mut last = raw(start);
        let mut hint = self.theta0;
        for k in 1..=steps {
            let t = k as f64 * dt;
            let s = match self.state_at(sign * t, hint) {
                Ok(s) => s,
                Err(_) => return Err(Error::DomainExit { time: times[times.len() - 1], state: last.to_vec() }),
            };
            let s = if sign < 0.0 { [s[0], s[1], -s[2], -s[3]] } else { s };
            if self.model == ModelId::HyperbolicPolar {
                hint = s[1];
            }
            times.push(t);
            states.push(state_of(self.model, &s, self.speed)?);
            last = s;
        }
        Ok(Trajectory { model: self.model, times, states })
    }
}

/// Solves `D/dt α′ = iα′` from `start`, sampled every `dt` up to `horizon`.
pub fn magnetic_trajectory(start: &FlowState, horizon: f64, dt: f64) -> Result<Trajectory> {
    let steps = check_step(start, horizon, dt)?;
    MagneticMotion::new(start)?.sample(start, steps, dt, 1.0)
}

/// The same equation integrated by RK4 with speed renormalisation.
pub fn magnetic_trajectory_rk4(start: &FlowState, horizon: f64, dt: f64) -> Result<Trajectory> {
    check_start(start)?;
    let steps = check_step(start, horizon, dt)?;
    let model = start.position.model;
    let speed = start.speed;
    let mut s = raw(start);
    let mut times = vec![0.0];
    let mut states = vec![start.clone()];
    let mut f = |_: f64, y: &[f64; 4]| rhs(model, y);
    for k in 1..=steps {
        let t = (k - 1) as f64 * dt;
        let mut next = rk4_step(&mut f, t, &s, dt);
        if !next.iter().all(|c| c.is_finite()) || !numerically_inside(model, &next[..2]) {
            return Err(Error::DomainExit { time: t, state: s.to_vec() });
        }
        let base = ModelPoint { model, coords: vec![next[0], next[1]] };
        let n = norm_at(&base, &next[2..]);
        if n > 0.0 {
            next[2] *= speed / n;
            next[3] *= speed / n;
        }
        s = next;
        times.push(k as f64 * dt);
        states.push(state_of(model, &s, speed)?);
    }
    Ok(Trajectory { model, times, states })
}

/// The magnetic flow from a fixed initial state, as a lifted flow.
#[derive(Debug, Clone, PartialEq)]
pub struct MagneticFlow {
    pub start: FlowState,
    /// `+1` for the flow, `−1` for `t ↦ α(−t)`.
    pub direction: f64,
}

impl MagneticFlow {
    pub fn new(start: FlowState) -> Self {
        MagneticFlow { start, direction: 1.0 }
    }

    pub fn reversed(&self) -> Self {
        MagneticFlow { start: self.start.clone(), direction: -self.direction }
    }

    /// Samples every `dt` up to `horizon`.
    pub fn states(&self, horizon: f64, dt: f64) -> Result<Trajectory> {
        if !(dt > 0.0) || !(horizon >= 0.0) {
            return Err(Error::domain("horizon and step must be positive"));
        }
        let steps = (horizon / dt).round() as usize;
        MagneticMotion::new(&self.start)?.sample(&self.start, steps, dt, self.direction.signum())
    }
}

impl LiftedFlow for MagneticFlow {
    fn model(&self) -> ModelId {
        self.start.position.model
    }

    fn trajectory(&self, horizon: f64, dt: f64) -> Result<PointSequence> {
        self.states(horizon, dt)?.positions()
    }
}

/// Centre of the circle (`v < 1`) traced from `start`.
pub fn circle_center(start: &FlowState) -> Result<ModelPoint> {
    let class = classify_magnetic(start.speed)?;
    let r = match (class.regime, class.radius_or_distance) {
        (MagneticRegime::Subcritical, Some(r)) => r,
        _ => return Err(Error::domain("only subcritical trajectories are circles")),
    };
    exp_map(&left_normal(start)?, r)
}

/// Unit normal `iα′/|α′|` at the start.
pub fn left_normal(start: &FlowState) -> Result<ModelVector> {
    let p = &start.position;
    let m = planar_metric(p.model, p.coords[0], p.coords[1]);
    let u = start.velocity.unit();
    let j = m.rotate([u.components[0], u.components[1]], p.model.orientation());
    ModelVector::new(p.clone(), j.to_vec())
}

/// Start of a supercritical trajectory in the Fermi chart whose axis is the
/// chart axis `r = 0`: the trajectory keeps `r` constant and `x` grows
/// linearly, so long horizons stay well conditioned.
pub fn axis_adapted_start(v: f64) -> Result<FlowState> {
    let class = classify_magnetic(v)?;
    let rho = match (class.regime, class.radius_or_distance) {
        (MagneticRegime::Supercritical, Some(r)) => r,
        _ => return Err(Error::domain("only supercritical trajectories follow a geodesic")),
    };
    for side in [1.0, -1.0] {
        let p = ModelPoint::planar(ModelId::FermiStrip, 0.0, side * rho)?;
        let st = FlowState::new(ModelVector::from_orthonormal(p, &[v, 0.0])?);
        if left_normal(&st)?.components[1] * side < 0.0 {
            return Ok(st);
        }
    }
    unreachable!("one side has the axis on its left")
}

/// Half-plane endpoints `(plus, minus)` of the axis a supercritical
/// trajectory follows, `plus` ahead.
pub fn hypercycle_axis(start: &FlowState) -> Result<(Option<f64>, Option<f64>)> {
    let motion = MagneticMotion::new(start)?;
    match motion.form {
        NormalForm::Dilation { sigma, .. } => {
            let inv = motion.frame.inverse();
            let (inf, zero) = (inv.apply_boundary(None), inv.apply_boundary(Some(0.0)));
            Ok(if sigma > 0.0 { (inf, zero) } else { (zero, inf) })
        }
        _ => Err(Error::domain("only supercritical trajectories follow a geodesic")),
    }
}

/// Signed distances from the samples to the axis of a supercritical trajectory.
pub fn axis_distances(traj: &Trajectory) -> Result<Vec<f64>> {
    let (plus, minus) = hypercycle_axis(&traj.states[0])?;
    traj.states
        .iter()
        .map(|s| signed_distance_to_geodesic(&s.position, plus, minus))
        .collect()
}

/// `max |d(c, α(t)) − r|` over the samples.
pub fn circle_deviation(traj: &Trajectory, center: &ModelPoint, radius: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for s in &traj.states {
        worst = worst.max((distance(center, &s.position)? - radius).abs());
    }
    Ok(worst)
}

/// Busemann values of the horocycle centre (the endpoint of `iα′(0)`) along the samples.
pub fn horocycle_levels(traj: &Trajectory) -> Result<Vec<f64>> {
    let n = left_normal(&traj.states[0])?;
    let x0 = &traj.states[0].position;
    traj.states.iter().map(|s| busemann(&n, x0, &s.position)).collect()
}

/// First return of a subcritical trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodEstimate {
    pub period: f64,
    /// Phase-space distance between the start and the state after one period.
    pub return_error: f64,
}

fn phase_distance(a: &FlowState, b: &FlowState) -> Result<f64> {
    let d = distance(&a.position, &b.position)?;
    let ua = a.velocity.orthonormal();
    let ub = b.velocity.orthonormal();
    let dv = ua.iter().zip(&ub).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    Ok(d + dv)
}

/// First return within `1e−3` of the start in phase space, refined to a
/// local minimum of the phase distance by golden-section search.
pub fn detect_period(start: &FlowState, max_time: f64) -> Result<PeriodEstimate> {
    let h = max_step(start.speed);
    let traj = magnetic_trajectory(start, max_time, h)?;
    let pd: Vec<f64> = traj.states.iter().map(|s| phase_distance(start, s)).collect::<Result<_>>()?;
    let left = pd.iter().position(|&d| d > 1e-2).ok_or_else(|| {
        Error::numeric("trajectory never left the neighbourhood of its start", 0.0)
    })?;
    // a sample can miss the return by up to half a step in phase space
    let slack = 1e-3 + h * (start.speed + 1.0);
    let k = (left + 1..pd.len() - 1)
        .find(|&k| pd[k] < slack && pd[k] <= pd[k - 1] && pd[k] <= pd[k + 1])
        .ok_or_else(|| Error::numeric("no return within the time limit", pd[pd.len() - 1]))?;
    let motion = MagneticMotion::new(start)?;
    let model = start.position.model;
    let eval = |t: f64| -> Result<f64> {
        let s = motion.state_at(t, motion.theta0)?;
        phase_distance(start, &state_of(model, &s, start.speed)?)
    };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (traj.times[k - 1], traj.times[k + 1]);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (eval(c)?, eval(d)?);
    while b - a > 1e-13 * (1.0 + b) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = eval(d)?;
        }
    }
    let period = 0.5 * (a + b);
    let return_error = eval(period)?;
    if return_error > 1e-3 {
        return Err(Error::numeric("closest approach does not return to the start", return_error));
    }
    Ok(PeriodEstimate { period, return_error })
}
