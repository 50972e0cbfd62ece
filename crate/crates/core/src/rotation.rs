//! Rotation vectors of covered systems, translation lengths of deck
//! elements and past/future comparison.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::busemann;
use crate::error::{Error, Result};
use crate::escort::{alignment_statistic, fit_escort_with, AlignmentOptions, OrbitMetric, PointSequence, MAX_RESIDUALS};
use crate::geometry::deck::DeckTransformation;
use crate::geometry::hyperbolic::uhp_dist;
use crate::geometry::{distance, exp_map, log_map, sample_point, warped, ModelId, ModelPoint, ModelVector};

/// A map of the cover.
pub type LiftFn = Arc<dyn Fn(&ModelPoint) -> Result<ModelPoint> + Send + Sync>;

/// Allowed commutation defect `|F(g p) − g(F p)|`, relative to the coordinates.
pub const COMMUTATION_TOL: f64 = 1e-9;

/// A lift `F` of a map of the quotient, with the deck generators it commutes with.
#[derive(Clone)]
pub struct CoveredSystem {
    pub model: ModelId,
    pub deck: Vec<DeckTransformation>,
    pub description: String,
    lift: LiftFn,
    inverse: Option<LiftFn>,
    isometry: Option<DeckTransformation>,
    isometric: bool,
}

impl fmt::Debug for CoveredSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoveredSystem")
            .field("model", &self.model)
            .field("deck", &self.deck)
            .field("description", &self.description)
            .field("isometry", &self.isometry)
            .finish()
    }
}

fn coord_defect(a: &ModelPoint, b: &ModelPoint) -> f64 {
    a.coords
        .iter()
        .zip(&b.coords)
        .map(|(x, y)| (x - y).abs() / (1.0 + x.abs().max(y.abs())))
        .fold(0.0, f64::max)
}

impl CoveredSystem {
    /// A general lift; commutation with the deck generators is checked on samples.
    pub fn new(
        model: ModelId,
        deck: Vec<DeckTransformation>,
        lift: LiftFn,
        inverse: Option<LiftFn>,
        description: impl Into<String>,
    ) -> Result<Self> {
        if deck.iter().any(|g| g.model != model) {
            return Err(Error::domain("deck generators must act on the system's model"));
        }
        let sys = CoveredSystem { model, deck, description: description.into(), lift, inverse, isometry: None, isometric: false };
        let defect = sys.commutation_defect(16, 0)?;
        if defect > COMMUTATION_TOL {
            return Err(Error::Precondition(format!(
                "lift does not commute with the deck group (defect {defect:.3e})"
            )));
        }
        Ok(sys)
    }

    /// `F = g` for an isometry `g` of the cover.
    pub fn isometry(g: DeckTransformation, deck: Vec<DeckTransformation>, description: impl Into<String>) -> Result<Self> {
        let (f, b) = (g.clone(), g.inverse());
        let mut sys = CoveredSystem::new(
            g.model,
            deck,
            Arc::new(move |p| f.apply(p)),
            Some(Arc::new(move |p| b.apply(p))),
            description,
        )?;
        sys.isometry = Some(g);
        sys.isometric = true;
        Ok(sys)
    }

    /// Translation by `v` on the cover of a flat torus.
    pub fn torus_translation(v: Vec<f64>) -> Result<Self> {
        let d = v.len();
        let model = ModelId::FlatTorusCover(d);
        let deck = (0..d)
            .map(|i| {
                let mut e = vec![0; d];
                e[i] = 1;
                DeckTransformation::lattice(e, model)
            })
            .collect::<Result<Vec<_>>>()?;
        let (f, b) = (v.clone(), v.clone());
        let mut sys = CoveredSystem::new(
            model,
            deck,
            Arc::new(move |p| ModelPoint::new(model, p.coords.iter().zip(&f).map(|(x, a)| x + a).collect())),
            Some(Arc::new(move |p| ModelPoint::new(model, p.coords.iter().zip(&b).map(|(x, a)| x - a).collect()))),
            format!("translation by {v:?}"),
        )?;
        sys.isometric = true;
        Ok(sys)
    }

    pub fn lift(&self, p: &ModelPoint) -> Result<ModelPoint> {
        let q = (self.lift)(p)?;
        q.validate()?;
        Ok(q)
    }

    /// The isometry `F`, when the system was built from one.
    pub fn as_isometry(&self) -> Option<&DeckTransformation> {
        self.isometry.as_ref()
    }

    /// Whether `F` is an isometry of the cover.
    pub fn is_isometric(&self) -> bool {
        self.isometric
    }

    /// The system of `F⁻¹`.
    pub fn inverse_system(&self) -> Result<CoveredSystem> {
        let inv = self
            .inverse
            .clone()
            .ok_or_else(|| Error::Precondition("system has no implemented inverse".into()))?;
        Ok(CoveredSystem {
            model: self.model,
            deck: self.deck.clone(),
            description: format!("inverse of {}", self.description),
            lift: inv,
            inverse: Some(self.lift.clone()),
            isometry: self.isometry.as_ref().map(DeckTransformation::inverse),
            isometric: self.isometric,
        })
    }

    /// Largest `|F(g p) − g(F p)|` over random points and generators.
    pub fn commutation_defect(&self, samples: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let p = sample_point(self.model, &mut rng, 2.0);
            for g in &self.deck {
                let a = self.lift(&g.apply(&p)?)?;
                let b = g.apply(&self.lift(&p)?)?;
                worst = worst.max(coord_defect(&a, &b));
            }
        }
        Ok(worst)
    }

    /// `x, F^s x, F^{2s} x, …` up to `F^n x`, stamped with the iterate count.
    pub fn orbit(&self, x: &ModelPoint, n: usize, stride: usize) -> Result<PointSequence> {
        if x.model != self.model {
            return Err(Error::domain("start point is not on the system's cover"));
        }
        let stride = stride.max(1);
        let mut points = vec![x.clone()];
        let mut times = vec![0.0];
        let mut p = x.clone();
        for k in 1..=n {
            p = self.lift(&p).map_err(|e| match e {
                Error::Domain(m) => Error::numeric(format!("orbit left the chart at step {k}: {m}"), f64::NAN),
                e => e,
            })?;
            if k % stride == 0 {
                points.push(p.clone());
                times.push(k as f64);
            }
        }
        PointSequence::new(self.model, points, times)
    }
}

/// Orbit of an isometry sampled at equally spaced iterates, where
/// `d(x_i, x_j)` only depends on `|i − j|`.
#[derive(Debug, Clone)]
pub struct IsometryOrbit {
    times: Vec<f64>,
    gaps: Vec<f64>,
    logs: Vec<Option<ModelVector>>,
}

impl IsometryOrbit {
    /// Distances from the start of an equally spaced isometry orbit.
    pub fn new(seq: &PointSequence) -> Result<Self> {
        let x0 = seq.start();
        let n = seq.points.len();
        let mut gaps = vec![0.0; n];
        let mut logs = vec![None; n];
        if seq.model == ModelId::WarpedXy {
            let p = x0.xy();
            let mut prev = [0.0, 0.0];
            for j in 1..n {
                let q = seq.points[j].xy();
                let guess = if j == 1 {
                    [q.0 - p.0, q.1 - p.1]
                } else {
                    let s = j as f64 / (j - 1) as f64;
                    [prev[0] * s, prev[1] * s]
                };
                let v = warped::log_near(p, q, guess)?;
                prev = v;
                gaps[j] = warped::norm(p.1, v);
                logs[j] = Some(ModelVector::new(x0.clone(), v.to_vec())?);
            }
        } else {
            for j in 1..n {
                gaps[j] = distance(x0, &seq.points[j])?;
            }
        }
        Ok(IsometryOrbit { times: seq.times.clone(), gaps, logs })
    }
}

impl OrbitMetric for IsometryOrbit {
    fn len(&self) -> usize {
        self.times.len()
    }

    fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    fn dist(&self, i: usize, j: usize) -> Result<f64> {
        Ok(self.gaps[i.abs_diff(j)])
    }

    fn dists_from_start(&self) -> Result<Vec<f64>> {
        Ok(self.gaps.clone())
    }

    fn log_from_start(&self, n: usize) -> Option<ModelVector> {
        self.logs[n].clone()
    }
}

/// Horizon and sampling for orbit-based estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationOptions {
    pub horizon: usize,
    /// Keep every `stride`-th iterate.
    pub stride: usize,
    pub alignment: AlignmentOptions,
}

impl Default for RotationOptions {
    fn default() -> Self {
        RotationOptions { horizon: 2000, stride: 1, alignment: AlignmentOptions::default() }
    }
}

impl RotationOptions {
    pub fn with_horizon(horizon: usize) -> Self {
        RotationOptions { horizon, ..Default::default() }
    }
}

/// Drops K thresholds that do not fit in `horizon`.
fn fit_k_grid(opts: &AlignmentOptions, horizon: f64) -> Result<AlignmentOptions> {
    let ks: Vec<f64> = opts.k_grid.iter().cloned().filter(|k| k + 1.0 <= horizon).collect();
    if ks.is_empty() {
        return Err(Error::domain(format!("horizon {horizon} is below the escort grid minimum")));
    }
    Ok(AlignmentOptions { k_grid: ks, ..opts.clone() })
}

/// Fit diagnostics attached to a [`RotationEstimate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationDiagnostics {
    pub r_hat: f64,
    pub l_hat: f64,
    pub epsilon: Option<f64>,
    pub k: Option<f64>,
    pub admissible: usize,
    pub final_residual: Option<f64>,
    /// Norm from integer-time subsampling (flows only).
    pub subsample_norm: Option<f64>,
    /// Largest displacement within one time unit (flows only).
    pub displacement_bound: Option<f64>,
}

/// Estimated rotation vector at a point of the cover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationEstimate {
    pub base: ModelPoint,
    /// `norm · direction`; zero when the direction is undefined.
    pub vector: ModelVector,
    pub norm: f64,
    pub direction_gap: f64,
    pub horizon: f64,
    /// False when `R̂ > 0` but no admissible time was found.
    pub direction_defined: bool,
    pub diagnostics: RotationDiagnostics,
}

/// Escort pipeline on a sampled lifted orbit, with `metric` supplying distances.
pub fn estimate_sequence<M: OrbitMetric + ?Sized>(
    seq: &PointSequence,
    metric: &M,
    opts: &AlignmentOptions,
) -> Result<RotationEstimate> {
    let horizon = seq.times[seq.times.len() - 1] - seq.times[0];
    let opts = fit_k_grid(opts, horizon)?;
    let report = alignment_statistic(metric, &opts)?;
    let mut diagnostics = RotationDiagnostics {
        r_hat: report.r_hat,
        l_hat: report.l_hat,
        epsilon: report.epsilon,
        k: report.k,
        admissible: report.admissible_times.len(),
        final_residual: None,
        subsample_norm: None,
        displacement_bound: None,
    };
    let base = seq.start().clone();
    if report.r_hat > 0.0 && report.admissible_times.is_empty() {
        return Ok(RotationEstimate {
            vector: ModelVector::zero(base.clone()),
            base,
            norm: report.r_hat,
            direction_gap: f64::NAN,
            horizon,
            direction_defined: false,
            diagnostics,
        });
    }
    let fit = fit_escort_with(seq, metric, &report, MAX_RESIDUALS)?;
    diagnostics.final_residual = fit.final_residual();
    Ok(RotationEstimate {
        vector: fit.vector(),
        base,
        norm: fit.speed,
        direction_gap: fit.cauchy_gap,
        horizon,
        direction_defined: true,
        diagnostics,
    })
}

/// Rotation vector of `sys` at `x` from the lifted orbit `{F^k x}`.
pub fn rotation_vector_map(sys: &CoveredSystem, x: &ModelPoint, opts: &RotationOptions) -> Result<RotationEstimate> {
    let seq = sys.orbit(x, opts.horizon, opts.stride)?;
    if sys.is_isometric() {
        let metric = IsometryOrbit::new(&seq)?;
        estimate_sequence(&seq, &metric, &opts.alignment)
    } else {
        estimate_sequence(&seq, &seq, &opts.alignment)
    }
}

/// A flow on a cover, started at a fixed initial condition.
pub trait LiftedFlow: Sync {
    fn model(&self) -> ModelId;

    /// Positions on the cover at `0, dt, 2dt, …` up to `horizon`.
    fn trajectory(&self, horizon: f64, dt: f64) -> Result<PointSequence>;
}

/// Rotation vector of a flow from its sampled lifted trajectory.
///
/// The estimate is repeated on the integer-time samples; the two norms must
/// agree within twice the one-unit displacement bound over the horizon.
pub fn rotation_vector_flow<F: LiftedFlow + ?Sized>(
    flow: &F,
    horizon: f64,
    dt: f64,
    opts: &AlignmentOptions,
) -> Result<RotationEstimate> {
    if !(dt > 0.0 && dt <= 1.0) {
        return Err(Error::domain(format!("sampling step {dt} must lie in (0, 1]")));
    }
    let seq = flow.trajectory(horizon, dt)?;
    let mut est = estimate_sequence(&seq, &seq, opts)?;
    let t0 = seq.times[0];
    let integer: Vec<usize> = (0..seq.times.len())
        .filter(|&i| {
            let t = seq.times[i] - t0;
            (t - t.round()).abs() <= 1e-9 * (1.0 + t)
        })
        .collect();
    let mut bound = 0.0f64;
    for w in integer.windows(2) {
        for i in w[0] + 1..=w[1] {
            bound = bound.max(distance(&seq.points[w[0]], &seq.points[i])?);
        }
    }
    est.diagnostics.displacement_bound = Some(bound);
    if integer.len() >= 2 && integer.len() < seq.points.len() {
        let sub = PointSequence::new(
            seq.model,
            integer.iter().map(|&i| seq.points[i].clone()).collect(),
            integer.iter().map(|&i| seq.times[i]).collect(),
        )?;
        let sub_est = estimate_sequence(&sub, &sub, opts)?;
        est.diagnostics.subsample_norm = Some(sub_est.norm);
        let allowed = 2.0 * bound / est.horizon + 1e-12;
        if (sub_est.norm - est.norm).abs() > allowed {
            return Err(Error::numeric(
                "integer-time subsampling disagrees with full sampling",
                (sub_est.norm - est.norm).abs(),
            ));
        }
    }
    Ok(est)
}

/// Where and how [`translation_length`] searches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    /// Centre of the search ball; the chart's reference point when absent.
    pub center: Option<ModelPoint>,
    pub radius: f64,
    /// Grid points per axis.
    pub grid: usize,
    /// Final pattern-search step.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SearchBox {
    fn default() -> Self {
        SearchBox { center: None, radius: 20.0, grid: 17, tol: 1e-10, max_iter: 20_000 }
    }
}

/// Result of [`translation_length_detailed`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationLength {
    pub value: f64,
    pub minimizer: ModelPoint,
    /// True when the best point lies on the edge of the search ball, so the
    /// infimum may only be approached at infinity.
    pub at_boundary: bool,
    /// `|l(ρ²) − 2 l(ρ)|` for Möbius elements.
    pub doubling_gap: Option<f64>,
}

fn reference_point(model: ModelId) -> ModelPoint {
    let coords = match model {
        ModelId::UpperHalfPlane => vec![0.0, 1.0],
        ModelId::HyperbolicPolar => vec![1.0, 0.0],
        m => vec![0.0; m.dim()],
    };
    ModelPoint { model, coords }
}

fn minimize_displacement(rho: &DeckTransformation, search: &SearchBox) -> Result<TranslationLength> {
    let (model, disp): (ModelId, Box<dyn Fn(&ModelPoint) -> Result<f64>>) = match rho.as_moebius() {
        Some(m) => (
            ModelId::UpperHalfPlane,
            Box::new(move |p: &ModelPoint| {
                let (x, y) = p.xy();
                let z = num_complex::Complex64::new(x, y);
                Ok(uhp_dist(z, m.apply(z)))
            }),
        ),
        None => {
            let r = rho.clone();
            (rho.model, Box::new(move |p: &ModelPoint| distance(p, &r.apply(p)?)))
        }
    };
    let center = match (&search.center, rho.as_moebius()) {
        (Some(c), Some(_)) if c.model != ModelId::UpperHalfPlane => {
            let z = crate::geometry::hyperbolic::to_uhp(c.model, c.xy());
            ModelPoint::planar(ModelId::UpperHalfPlane, z.re, z.im)?
        }
        (Some(c), _) => c.clone(),
        (None, _) => reference_point(model),
    };
    let dim = model.dim();
    let point_at = |u: &[f64]| -> Result<ModelPoint> {
        if u.iter().all(|c| *c == 0.0) {
            return Ok(center.clone());
        }
        exp_map(&ModelVector::from_orthonormal(center.clone(), u)?, 1.0)
    };
    let radius = search.radius;
    let norm = |u: &[f64]| u.iter().map(|c| c * c).sum::<f64>().sqrt();

    let mut best_u = vec![0.0; dim];
    let mut best = disp(&center)?;
    let g = search.grid.max(2);
    let h0 = 2.0 * radius / (g - 1) as f64;
    let candidates: Vec<Vec<f64>> = if dim == 2 {
        (0..g)
            .flat_map(|i| (0..g).map(move |j| (i, j)))
            .map(|(i, j)| vec![-radius + i as f64 * h0, -radius + j as f64 * h0])
            .filter(|u| norm(u) <= radius)
            .collect()
    } else {
        (0..dim)
            .flat_map(|k| {
                [-radius, radius].into_iter().map(move |s| {
                    let mut u = vec![0.0; dim];
                    u[k] = s;
                    u
                })
            })
            .collect()
    };
    for u in candidates {
        if let Ok(p) = point_at(&u) {
            if let Ok(v) = disp(&p) {
                if v < best {
                    best = v;
                    best_u = u;
                }
            }
        }
    }
    let mut step = h0;
    let mut iter = 0;
    while step > search.tol {
        iter += 1;
        if iter > search.max_iter {
            return Err(Error::numeric(
                format!("displacement descent did not converge; best value {best}"),
                step,
            ));
        }
        let mut improved = false;
        for k in 0..dim {
            for s in [-1.0, 1.0] {
                let mut u = best_u.clone();
                u[k] += s * step;
                if norm(&u) > radius {
                    continue;
                }
                let Ok(p) = point_at(&u) else { continue };
                let Ok(v) = disp(&p) else { continue };
                if v < best - 1e-15 * best.abs() {
                    best = v;
                    best_u = u;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    let minimizer = point_at(&best_u)?;
    let minimizer = if model != rho.model {
        let (a, b) = crate::geometry::hyperbolic::from_uhp(
            rho.model,
            num_complex::Complex64::new(minimizer.coords[0], minimizer.coords[1]),
            0.0,
        );
        ModelPoint::planar(rho.model, a, b)?
    } else {
        minimizer
    };
    Ok(TranslationLength {
        value: best,
        minimizer,
        at_boundary: norm(&best_u) > radius - 2.0 * h0,
        doubling_gap: None,
    })
}

/// `inf_x d(x, ρx)` with the minimizer and diagnostics.
pub fn translation_length_detailed(rho: &DeckTransformation, search: &SearchBox) -> Result<TranslationLength> {
    let mut out = minimize_displacement(rho, search)?;
    if rho.as_moebius().is_some() {
        let sq = rho.compose(rho)?;
        let r2 = minimize_displacement(&sq, search)?.value;
        let gap = (r2 - 2.0 * out.value).abs();
        out.doubling_gap = Some(gap);
        if gap > 1e-6 {
            return Err(Error::numeric(
                format!("doubling check failed: l(ρ²) = {r2}, l(ρ) = {}", out.value),
                gap,
            ));
        }
    }
    Ok(out)
}

/// Numerical infimum of `x ↦ d(x, ρx)` over the cover.
pub fn translation_length(rho: &DeckTransformation, search: &SearchBox) -> Result<f64> {
    translation_length_detailed(rho, search).map(|t| t.value)
}

/// A periodic point: `ρ(x̃) = F^p(x̃)` for a deck element `ρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicOrbitSpec {
    pub point: ModelPoint,
    pub period: usize,
    pub rho: DeckTransformation,
}

impl PeriodicOrbitSpec {
    pub fn new(sys: &CoveredSystem, point: ModelPoint, period: usize, rho: DeckTransformation) -> Result<Self> {
        if period == 0 {
            return Err(Error::domain("period must be positive"));
        }
        let mut q = point.clone();
        for _ in 0..period {
            q = sys.lift(&q)?;
        }
        let r = rho.apply(&point)?;
        let defect = coord_defect(&q, &r);
        if defect > 1e-8 {
            return Err(Error::Precondition(format!(
                "ρ(x) and F^p(x) differ by {defect:.3e}"
            )));
        }
        Ok(PeriodicOrbitSpec { point, period, rho })
    }
}

/// `l(ρ)/p`.
pub fn periodic_norm(spec: &PeriodicOrbitSpec, search: &SearchBox) -> Result<f64> {
    Ok(translation_length(&spec.rho, search)? / spec.period as f64)
}

/// `B_v(x̃, F x̃)`.
pub fn busemann_increment(sys: &CoveredSystem, x: &ModelPoint, v: &ModelVector) -> Result<f64> {
    if v.base != *x {
        return Err(Error::domain("v must be based at x"));
    }
    busemann(&v.unit(), x, &sys.lift(x)?)
}

/// Forward and backward rotation vectors at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PastFuture {
    pub forward: RotationEstimate,
    pub backward: RotationEstimate,
    /// Angle between the forward vector and the negated backward vector;
    /// NaN when a direction is undefined or zero.
    pub angle: f64,
}

impl PastFuture {
    pub fn norm_gap(&self) -> f64 {
        (self.forward.norm - self.backward.norm).abs()
    }
}

/// Runs [`rotation_vector_map`] on `F` and `F⁻¹`.
pub fn past_future_compare(sys: &CoveredSystem, x: &ModelPoint, opts: &RotationOptions) -> Result<PastFuture> {
    let inv = sys.inverse_system()?;
    let (fwd, bwd) = rayon::join(|| rotation_vector_map(sys, x, opts), || rotation_vector_map(&inv, x, opts));
    let (forward, backward) = (fwd?, bwd?);
    let angle = if forward.direction_defined
        && backward.direction_defined
        && forward.vector.norm > 0.0
        && backward.vector.norm > 0.0
    {
        forward.vector.angle_to(&backward.vector.scaled(-1.0))
    } else {
        f64::NAN
    };
    Ok(PastFuture { forward, backward, angle })
}

/// Unit vector at `x` pointing to `y`.
pub fn direction_to(x: &ModelPoint, y: &ModelPoint) -> Result<ModelVector> {
    Ok(log_map(x, y)?.unit())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::deck::Moebius;

    fn uhp_dilation(l: f64) -> DeckTransformation {
        DeckTransformation::moebius(Moebius::dilation(l).unwrap(), ModelId::UpperHalfPlane).unwrap()
    }

    fn i() -> ModelPoint {
        ModelPoint::planar(ModelId::UpperHalfPlane, 0.0, 1.0).unwrap()
    }

    #[test]
    fn torus_translation_recovers_vector() {
        let sys = CoveredSystem::torus_translation(vec![0.3, 0.1]).unwrap();
        let x = ModelPoint::new(ModelId::FlatTorusCover(2), vec![0.0, 0.0]).unwrap();
        let est = rotation_vector_map(&sys, &x, &RotationOptions::with_horizon(1000)).unwrap();
        assert!((est.vector.components[0] - 0.3).abs() < 1e-12);
        assert!((est.vector.components[1] - 0.1).abs() < 1e-12);
        assert!((est.vector.norm - est.norm).abs() < 1e-9);
    }

    #[test]
    fn dilation_orbit() {
        let g = uhp_dilation(4.0);
        let sys = CoveredSystem::isometry(g.clone(), vec![g], "z -> 4z").unwrap();
        let est = rotation_vector_map(&sys, &i(), &RotationOptions::with_horizon(400)).unwrap();
        assert!((est.norm - 4f64.ln()).abs() < 1e-9);
        assert!(est.vector.components[0].abs() < 1e-9 && est.vector.components[1] > 0.0);
    }

    #[test]
    fn translation_lengths() {
        let e2 = ModelId::Euclidean(2);
        let l = translation_length(&DeckTransformation::lattice(vec![3, 4], e2).unwrap(), &SearchBox::default()).unwrap();
        assert!((l - 5.0).abs() < 1e-12);
        let t = translation_length_detailed(&uhp_dilation(4.0), &SearchBox::default()).unwrap();
        assert!((t.value - 4f64.ln()).abs() < 1e-9);
        assert!(t.minimizer.coords[0].abs() < 1e-6);
        assert!(t.doubling_gap.unwrap() < 1e-6);
    }

    #[test]
    fn warped_shift_infimum_at_infinity() {
        let g = DeckTransformation::x_shift(1.0, ModelId::WarpedXy).unwrap();
        let t = translation_length_detailed(&g, &SearchBox { grid: 9, ..Default::default() }).unwrap();
        assert!(t.value >= 1.0 - 1e-9 && t.value < 1.0 + 1e-6, "{t:?}");
        assert!(t.at_boundary);
    }

    #[test]
    fn periodic_norms() {
        for p in 1..=2 {
            let f = uhp_dilation(4f64.powf(1.0 / p as f64));
            let sys = CoveredSystem::isometry(f, vec![uhp_dilation(4.0)], "root of z -> 4z").unwrap();
            let spec = PeriodicOrbitSpec::new(&sys, i(), p, uhp_dilation(4.0)).unwrap();
            let n = periodic_norm(&spec, &SearchBox::default()).unwrap();
            assert!((n - 4f64.ln() / p as f64).abs() < 1e-6);
        }
        let t = ModelId::FlatTorusCover(2);
        let sys = CoveredSystem::torus_translation(vec![1.0 / 3.0, 0.0]).unwrap();
        let spec = PeriodicOrbitSpec::new(&sys, ModelPoint::new(t, vec![0.0, 0.0]).unwrap(), 3, DeckTransformation::lattice(vec![1, 0], t).unwrap()).unwrap();
        assert!((periodic_norm(&spec, &SearchBox::default()).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn busemann_increments() {
        let g = uhp_dilation(4.0);
        let sys = CoveredSystem::isometry(g.clone(), vec![g], "z -> 4z").unwrap();
        let up = ModelVector::new(i(), vec![0.0, 1.0]).unwrap();
        assert!((busemann_increment(&sys, &i(), &up).unwrap() - 4f64.ln()).abs() < 1e-12);
        let shift = DeckTransformation::x_shift(1.0, ModelId::UpperHalfPlane).unwrap();
        let sys = CoveredSystem::isometry(shift.clone(), vec![shift], "z -> z+1").unwrap();
        assert!(busemann_increment(&sys, &i(), &up).unwrap().abs() < 1e-12);
    }

    #[test]
    fn past_future_of_translation_and_dilation() {
        let sys = CoveredSystem::torus_translation(vec![0.3, 0.1]).unwrap();
        let x = ModelPoint::new(ModelId::FlatTorusCover(2), vec![0.0, 0.0]).unwrap();
        let pf = past_future_compare(&sys, &x, &RotationOptions::with_horizon(500)).unwrap();
        assert!(pf.norm_gap() < 1e-12 && pf.angle < 1e-9, "{} {}", pf.norm_gap(), pf.angle);

        let g = uhp_dilation(4.0);
        let sys = CoveredSystem::isometry(g.clone(), vec![g], "z -> 4z").unwrap();
        let pf = past_future_compare(&sys, &i(), &RotationOptions::with_horizon(400)).unwrap();
        assert!(pf.norm_gap() < 1e-9 && pf.angle < 1e-9);
        assert!(pf.forward.vector.components[1] > 0.0 && pf.backward.vector.components[1] < 0.0);
    }

    #[test]
    fn commutation_is_checked() {
        let t = ModelId::FlatTorusCover(2);
        let deck = vec![DeckTransformation::lattice(vec![1, 0], t).unwrap()];
        let bad: LiftFn = Arc::new(move |p: &ModelPoint| ModelPoint::new(t, vec![2.0 * p.coords[0], p.coords[1]]));
        assert!(matches!(CoveredSystem::new(t, deck, bad, None, "doubling"), Err(Error::Precondition(_))));
    }
}
