//! The time cocycle comparing a flow with the geodesic flow.
//!
//! `φ(f^t x)` is the horosphere projection of the pair of boundary points
//! reached by the forward and backward rotation vectors, and `b(x, t)` is the
//! geodesic-flow time from `φ(x)` to `φ(f^t x)`. The correction `r` is the
//! running deficit that makes `a = b + r∘f^t − r` strictly increasing.

use serde::{Deserialize, Serialize};

use crate::boundary::{busemann_to, endpoint_in_uhp, project_to_axis, snap_endpoint};
use crate::geometry::hyperbolic::to_uhp;
use crate::error::{Error, Result};
use crate::escort::PointSequence;
use crate::geometry::{distance, ModelVector};
use crate::rotation::RotationEstimate;

/// Smallest slope allowed for `a` between grid points.
pub const MIN_SLOPE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiConjugacyData {
    /// Rescaled sample times `R·t`.
    pub times: Vec<f64>,
    pub phi_samples: Vec<(f64, ModelVector)>,
    pub b_cocycle: Vec<f64>,
    pub r_correction: Vec<f64>,
    pub a_cocycle: Vec<f64>,
    /// Linear time change `R`.
    pub rate: f64,
    /// Largest sampled speed of the base trajectory in rescaled time.
    pub lipschitz: f64,
    /// Half-plane boundary points of the forward and backward estimates.
    pub plus: Option<f64>,
    pub minus: Option<f64>,
}

/// One JSON-lines row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CocycleRow {
    pub t: f64,
    pub b: f64,
    pub r: f64,
    pub a: f64,
}

impl SemiConjugacyData {
    pub fn rows(&self) -> Vec<CocycleRow> {
        (0..self.times.len())
            .map(|k| CocycleRow {
                t: self.times[k],
                b: self.b_cocycle[k],
                r: self.r_correction[k],
                a: self.a_cocycle[k],
            })
            .collect()
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.a_cocycle.windows(2).all(|w| w[1] > w[0])
    }

    /// `a(x, T)/T` at the last sample.
    pub fn final_slope(&self) -> f64 {
        let n = self.times.len() - 1;
        self.a_cocycle[n] / self.times[n]
    }

    /// Range of `a(x, t)/t` over samples with `t ≥ fraction·T`.
    pub fn slope_window(&self, fraction: f64) -> (f64, f64) {
        let t_end = self.times[self.times.len() - 1];
        self.times
            .iter()
            .zip(&self.a_cocycle)
            .filter(|(t, _)| **t > 0.0 && **t >= fraction * t_end)
            .map(|(t, a)| a / t)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s), hi.max(s)))
    }

    /// `a(f^{t_i} x, t_j − t_i)` computed from `φ(f^{t_i} x)` directly.
    pub fn a_between(&self, i: usize, j: usize) -> Result<f64> {
        let (pi, pj) = (&self.phi_samples[i].1, &self.phi_samples[j].1);
        let b = busemann_to(self.plus, &pi.base, &pj.base)?;
        Ok(b + self.r_correction[j] - self.r_correction[i])
    }

    /// Largest `|a(x, s+t) − a(x, s) − a(f^s x, t)|` over grid pairs taken `stride` apart.
    pub fn cocycle_defect(&self, stride: usize) -> Result<f64> {
        let n = self.times.len();
        let stride = stride.max(1);
        let mut worst = 0.0f64;
        for i in (1..n).step_by(stride) {
            for j in (i + 1..n).step_by(stride) {
                let lhs = self.a_cocycle[j];
                let rhs = self.a_cocycle[i] + self.a_between(i, j)?;
                worst = worst.max((lhs - rhs).abs());
            }
        }
        Ok(worst)
    }
}

/// Builds `φ`, `b`, `r` and `a` along a sampled base trajectory.
///
/// The forward and backward estimates fix the two boundary points; the time
/// change is `t ↦ R t` with `R` the forward norm.
pub fn build_semiconjugacy(
    positions: &PointSequence,
    forward: &RotationEstimate,
    backward: &RotationEstimate,
) -> Result<SemiConjugacyData> {
    let model = positions.model;
    if !(forward.direction_defined && backward.direction_defined) || forward.norm <= 0.0 || backward.norm <= 0.0 {
        return Err(Error::Precondition("forward and backward rotation vectors must be nonzero".into()));
    }
    if !model.is_hyperbolic() {
        return Err(Error::Visibility(format!(
            "{model} is not a visibility manifold: no geodesic is guaranteed to join the forward and backward directions"
        )));
    }
    let scale = to_uhp(model, forward.vector.base.xy()).norm();
    let plus = snap_endpoint(endpoint_in_uhp(&forward.vector)?, scale);
    let minus = snap_endpoint(endpoint_in_uhp(&backward.vector)?, scale);
    let rate = forward.norm;
    let t0 = positions.times[0];
    let times: Vec<f64> = positions.times.iter().map(|t| rate * (t - t0)).collect();

    let mut phi_samples = Vec::with_capacity(times.len());
    for (t, p) in times.iter().zip(&positions.points) {
        let phi = project_to_axis(p, plus, minus)?;
        phi_samples.push((*t, phi));
    }
    let phi0 = &phi_samples[0].1;
    let b_cocycle: Vec<f64> = phi_samples
        .iter()
        .map(|(_, phi)| busemann_to(plus, &phi0.base, &phi.base))
        .collect::<Result<_>>()?;

    let mut a_cocycle = vec![b_cocycle[0]];
    for k in 1..b_cocycle.len() {
        let floor = a_cocycle[k - 1] + MIN_SLOPE * (times[k] - times[k - 1]);
        a_cocycle.push(b_cocycle[k].max(floor));
    }
    let r_correction: Vec<f64> = a_cocycle.iter().zip(&b_cocycle).map(|(a, b)| a - b).collect();

    let mut lipschitz = 0.0f64;
    for k in 1..times.len() {
        let d = distance(&positions.points[k - 1], &positions.points[k])?;
        lipschitz = lipschitz.max(d / (times[k] - times[k - 1]));
    }
    for k in 0..times.len() {
        let allowed = lipschitz * times[k] + 1e-9 * (1.0 + b_cocycle[k].abs());
        if b_cocycle[k].abs() > allowed {
            return Err(Error::numeric(
                format!("|b| exceeds the Lipschitz bound at t = {}", times[k]),
                b_cocycle[k].abs() - allowed,
            ));
        }
    }
    Ok(SemiConjugacyData { times, phi_samples, b_cocycle, r_correction, a_cocycle, rate, lipschitz, plus, minus })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::escort::AlignmentOptions;
    use crate::flows::GeodesicFlow;
    use crate::geometry::{ModelId, ModelPoint};
    use crate::rotation::{rotation_vector_flow, LiftedFlow};

    #[test]
    fn geodesic_flow_gives_identity_time() {
        let p = ModelPoint::planar(ModelId::FermiStrip, 0.2, 0.0).unwrap();
        let u = ModelVector::from_orthonormal(p, &[1.0, 0.0]).unwrap();
        let opts = AlignmentOptions::default();
        let fwd = rotation_vector_flow(&GeodesicFlow { start: u.clone() }, 400.0, 1.0, &opts).unwrap();
        let bwd = rotation_vector_flow(&GeodesicFlow { start: u.scaled(-1.0) }, 400.0, 1.0, &opts).unwrap();
        let traj = GeodesicFlow { start: u }.trajectory(50.0, 0.5).unwrap();
        let data = build_semiconjugacy(&traj, &fwd, &bwd).unwrap();
        for (t, a) in data.times.iter().zip(&data.a_cocycle) {
            assert!((a - t).abs() < 1e-6, "{t} {a}");
        }
        assert!(data.r_correction.iter().all(|r| *r == 0.0));
        assert!(data.is_strictly_increasing());
        assert!(data.cocycle_defect(7).unwrap() < 1e-6);
    }
}
