//! Flows on covers: magnetic and warped geodesic integrators, simple model
//! flows, rotation vectors through a map and the semi-conjugacy cocycle.

pub mod magnetic;
pub mod semiconjugacy;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::escort::{AlignmentOptions, PointSequence};
use crate::geometry::deck::DeckTransformation;
use crate::geometry::{exp_map, warped, ModelId, ModelPoint, ModelVector};
use crate::ode::Dopri5;
use crate::rotation::{estimate_sequence, CoveredSystem, LiftedFlow, RotationEstimate};

pub use magnetic::{classify_magnetic, magnetic_trajectory, MagneticClass, MagneticFlow, MagneticRegime};
pub use semiconjugacy::{build_semiconjugacy, SemiConjugacyData};

/// A position with its velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub position: ModelPoint,
    pub velocity: ModelVector,
    pub speed: f64,
}

impl FlowState {
    pub fn new(velocity: ModelVector) -> Self {
        FlowState { position: velocity.base.clone(), speed: velocity.norm, velocity }
    }
}

/// Sampled states of an integrated flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub model: ModelId,
    pub times: Vec<f64>,
    pub states: Vec<FlowState>,
}

impl Trajectory {
    pub fn positions(&self) -> Result<PointSequence> {
        PointSequence::new(self.model, self.states.iter().map(|s| s.position.clone()).collect(), self.times.clone())
    }

    /// `max |‖α′‖ − v|` over the samples.
    pub fn speed_drift(&self) -> f64 {
        let v = self.states[0].speed;
        self.states.iter().map(|s| (s.velocity.norm - v).abs()).fold(0.0, f64::max)
    }
}

/// Asymptotic type of a warped geodesic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WarpedClass {
    /// `E > p₁²`: `y` strictly monotone with `|y′|` bounded below.
    TypeI,
    /// `E = p₁²`.
    TypeII,
    /// `E < p₁²`: `y` bounded above.
    TypeIII,
}

/// Compares `E` with `p₁²` using a `1e−9` band around equality.
pub fn classify_warped(e: f64, p1: f64) -> WarpedClass {
    let gap = e - p1 * p1;
    let band = 1e-9 * e.abs().max(1.0);
    if gap > band {
        WarpedClass::TypeI
    } else if gap < -band {
        WarpedClass::TypeIII
    } else {
        WarpedClass::TypeII
    }
}

/// A warped geodesic with its conserved quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpedTrajectory {
    pub trajectory: Trajectory,
    /// `E = (1+e^{−y})²x′² + y′²`.
    pub energy: f64,
    /// `p₁ = (1+e^{−y})²x′`.
    pub p1: f64,
    pub energy_drift: f64,
    pub p1_drift: f64,
    pub class: WarpedClass,
}

/// Integrates the Hamiltonian geodesic system of the warped plane, sampled every `dt`.
pub fn warped_geodesic(start: &FlowState, horizon: f64, dt: f64) -> Result<WarpedTrajectory> {
    let model = start.position.model;
    if model != ModelId::WarpedXy {
        return Err(Error::UnsupportedModel { op: "warped_geodesic", model: model.to_string() });
    }
    if !(dt > 0.0) || !(horizon >= 0.0) {
        return Err(Error::domain("step and horizon must be positive"));
    }
    let (x, y) = start.position.xy();
    let w = warped::warp(y);
    let v = &start.velocity.components;
    let s0 = [x, y, w * w * v[0], v[1]];
    let invariants = |s: &[f64; 4]| {
        let w = warped::warp(s[1]);
        ((s[2] / w).powi(2) + s[3] * s[3], s[2])
    };
    let (e0, p10) = invariants(&s0);
    let mut solver = Dopri5::new(0.0, s0, warped::TOL);
    let steps = (horizon / dt).round() as usize;
    let mut times = vec![0.0];
    let mut states = vec![start.clone()];
    let (mut de, mut dp) = (0.0f64, 0.0f64);
    for k in 1..=steps {
        let t = k as f64 * dt;
        solver.advance_to(t, &mut |_, s: &[f64; 4]| warped::rhs(s), &mut |_, _| true)?;
        let s = solver.y;
        if !s.iter().all(|c| c.is_finite()) {
            return Err(Error::numeric("warped geodesic integration failed", f64::NAN));
        }
        let (e, p1) = invariants(&s);
        de = de.max((e - e0).abs());
        dp = dp.max((p1 - p10).abs());
        let w = warped::warp(s[1]);
        let p = ModelPoint::planar(model, s[0], s[1])?;
        let vel = ModelVector::new(p.clone(), vec![s[2] / (w * w), s[3]])?;
        times.push(t);
        states.push(FlowState { position: p, speed: vel.norm, velocity: vel });
    }
    Ok(WarpedTrajectory {
        trajectory: Trajectory { model, times, states },
        energy: e0,
        p1: p10,
        energy_drift: de,
        p1_drift: dp,
        class: classify_warped(e0, p10),
    })
}

fn sample_times(horizon: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(horizon > 0.0) {
        return Err(Error::domain("step and horizon must be positive"));
    }
    let n = (horizon / dt).round() as usize;
    Ok((0..=n).map(|k| k as f64 * dt).collect())
}

/// The geodesic flow started at a vector.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicFlow {
    pub start: ModelVector,
}

impl LiftedFlow for GeodesicFlow {
    fn model(&self) -> ModelId {
        self.start.base.model
    }

    fn trajectory(&self, horizon: f64, dt: f64) -> Result<PointSequence> {
        let times = sample_times(horizon, dt)?;
        let points = times.iter().map(|&t| exp_map(&self.start, t)).collect::<Result<Vec<_>>>()?;
        PointSequence::new(self.model(), points, times)
    }
}

/// `t ↦ (x + ct, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftFlow {
    pub start: ModelPoint,
    pub speed: f64,
}

impl LiftedFlow for ShiftFlow {
    fn model(&self) -> ModelId {
        self.start.model
    }

    fn trajectory(&self, horizon: f64, dt: f64) -> Result<PointSequence> {
        let times = sample_times(horizon, dt)?;
        let points = times
            .iter()
            .map(|&t| DeckTransformation::x_shift(self.speed * t, self.model())?.apply(&self.start))
            .collect::<Result<Vec<_>>>()?;
        PointSequence::new(self.model(), points, times)
    }
}

/// Suspension of a map of a flat cover with constant return time: between
/// returns the lifted point moves on the chord from `F^k x` to `F^{k+1} x`.
#[derive(Debug, Clone)]
pub struct SuspensionFlow {
    pub system: CoveredSystem,
    pub start: ModelPoint,
    pub return_time: f64,
}

impl LiftedFlow for SuspensionFlow {
    fn model(&self) -> ModelId {
        self.system.model
    }

    fn trajectory(&self, horizon: f64, dt: f64) -> Result<PointSequence> {
        if !self.system.model.is_flat() {
            return Err(Error::UnsupportedModel { op: "suspension", model: self.system.model.to_string() });
        }
        if !(self.return_time > 0.0) {
            return Err(Error::domain("return time must be positive"));
        }
        let times = sample_times(horizon, dt)?;
        let mut cur = self.start.clone();
        let mut next = self.system.lift(&cur)?;
        let mut k = 0usize;
        let mut points = Vec::with_capacity(times.len());
        for &t in &times {
            let s = t / self.return_time;
            while (k + 1) as f64 <= s {
                cur = next;
                next = self.system.lift(&cur)?;
                k += 1;
            }
            let a = s - k as f64;
            let coords = cur.coords.iter().zip(&next.coords).map(|(p, q)| p + a * (q - p)).collect();
            points.push(ModelPoint::new(self.model(), coords)?);
        }
        PointSequence::new(self.model(), points, times)
    }
}

/// Rotation vector of `t ↦ h(f^t x)` from samples `(t, state)` of a flow on
/// a total space.
pub fn rotation_vector_through_map<S, H>(samples: &[(f64, S)], h: H, opts: &AlignmentOptions) -> Result<RotationEstimate>
where
    H: Fn(&S) -> Result<ModelPoint>,
{
    if samples.is_empty() {
        return Err(Error::domain("no samples"));
    }
    let points = samples.iter().map(|(_, s)| h(s)).collect::<Result<Vec<_>>>()?;
    let model = points[0].model;
    let seq = PointSequence::new(model, points, samples.iter().map(|(t, _)| *t).collect())?;
    estimate_sequence(&seq, &seq, opts)
}

/// `(t, state)` pairs of a trajectory, for [`rotation_vector_through_map`].
pub fn timed_states(traj: &Trajectory) -> Vec<(f64, FlowState)> {
    traj.times.iter().cloned().zip(traj.states.iter().cloned()).collect()
}
