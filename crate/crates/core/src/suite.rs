//! Randomised property suites for the model geometry and Busemann functions.
//!
//! Each check draws independent instances from a seeded stream (instance `i`
//! uses stream `i`, so results do not depend on scheduling), evaluates a
//! violation amount and counts instances where it exceeds the tolerance.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{asymptotic_test, busemann, endpoint_in_uhp, horosphere_project, vector_towards};
use crate::error::{Error, Result};
use crate::escort::{cone_chord_gap, cone_contains};
use crate::geometry::deck::{DeckTransformation, Moebius};
use crate::geometry::{
    distance, exp_map, geodesic_point, log_map, sample_point, sample_unit, GeodesicSegment, ModelId,
    ModelPoint, ModelVector,
};

/// Every chart with a closed-form or shooting geometry.
pub const ALL_MODELS: [ModelId; 8] = [
    ModelId::Euclidean(2),
    ModelId::Euclidean(3),
    ModelId::FlatTorusCover(2),
    ModelId::PoincareDisk,
    ModelId::UpperHalfPlane,
    ModelId::FermiStrip,
    ModelId::HyperbolicPolar,
    ModelId::WarpedXy,
];

/// Charts with closed-form Busemann functions.
pub const BUSEMANN_MODELS: [ModelId; 5] = [
    ModelId::Euclidean(2),
    ModelId::PoincareDisk,
    ModelId::UpperHalfPlane,
    ModelId::FermiStrip,
    ModelId::HyperbolicPolar,
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteOptions {
    /// Instances per model for the semi-parallelogram, convexity, round-trip,
    /// arclength and deck checks.
    pub instances: usize,
    pub cone_triples: usize,
    pub busemann_triples: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { instances: 10_000, cone_triples: 1000, busemann_triples: 1000, tolerance: 1e-7, seed: 0 }
    }
}

/// Outcome of one check on one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: String,
    pub model: ModelId,
    pub instances: usize,
    pub failures: usize,
    /// Largest violation amount seen; a check fails where it exceeds `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
    /// First evaluation error, if any instance raised one.
    pub error: Option<String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed())
    }

    /// Checks whose name is `check`.
    pub fn named<'a>(&'a self, check: &'a str) -> impl Iterator<Item = &'a CheckResult> {
        self.checks.iter().filter(move |c| c.check == check)
    }
}

fn stream(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

fn run_check<F>(check: &str, model: ModelId, n: usize, tol: f64, seed: u64, f: F) -> CheckResult
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    let outcomes: Vec<std::result::Result<f64, String>> = (0..n)
        .into_par_iter()
        .map(|i| f(&mut stream(seed, i)).map_err(|e| e.to_string()))
        .collect();
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    let mut error = None;
    for o in outcomes {
        match o {
            Ok(v) => {
                worst = worst.max(v);
                if !(v <= tol) {
                    failures += 1;
                }
            }
            Err(e) => {
                failures += 1;
                worst = f64::INFINITY;
                error.get_or_insert(e);
            }
        }
    }
    CheckResult { check: check.to_string(), model, instances: n, failures, worst, tolerance: tol, error }
}

fn spread(model: ModelId) -> f64 {
    match model {
        ModelId::Euclidean(_) | ModelId::FlatTorusCover(_) => 5.0,
        ModelId::WarpedXy => 2.0,
        _ => 3.0,
    }
}

/// Absolute accuracy of computed distances: shooting on the warped chart,
/// closed forms elsewhere.
fn distance_accuracy(model: ModelId) -> f64 {
    if model == ModelId::WarpedXy {
        1e-7
    } else {
        1e-9
    }
}

fn point(model: ModelId, rng: &mut ChaCha8Rng) -> ModelPoint {
    sample_point(model, rng, spread(model))
}

/// A random isometry of the chart.
fn random_isometry(model: ModelId, rng: &mut ChaCha8Rng) -> Result<DeckTransformation> {
    match model {
        ModelId::FlatTorusCover(d) => DeckTransformation::lattice((0..d).map(|_| rng.gen_range(-3..=3)).collect(), model),
        ModelId::Euclidean(_) | ModelId::WarpedXy => DeckTransformation::x_shift(rng.gen_range(-3.0..3.0), model),
        _ => {
            let (s, c) = rng.gen_range(-1.5f64..1.5).sin_cos();
            let rot = Moebius { a: c, b: s, c: -s, d: c };
            let lam = rng.gen_range(-1.0f64..1.0).exp().sqrt();
            let shift = Moebius { a: lam, b: rng.gen_range(-1.0..1.0) * lam, c: 0.0, d: 1.0 / lam };
            DeckTransformation::moebius(shift.compose(&rot), model)
        }
    }
}

/// `d(x,y)` and the midpoint of `[x, y]` from one logarithm.
fn length_and_midpoint(x: &ModelPoint, y: &ModelPoint) -> Result<(f64, ModelPoint)> {
    let v = log_map(x, y)?;
    if v.norm == 0.0 {
        return Ok((0.0, x.clone()));
    }
    Ok((v.norm, exp_map(&v, 0.5)?))
}

fn parallelogram_defect(model: ModelId, rng: &mut ChaCha8Rng) -> Result<f64> {
    let (x, y, z) = (point(model, rng), point(model, rng), point(model, rng));
    let (dxy, m) = length_and_midpoint(&x, &y)?;
    let (dmz, dxz, dzy) = (distance(&m, &z)?, distance(&x, &z)?, distance(&z, &y)?);
    Ok(dxy * dxy + 4.0 * dmz * dmz - 2.0 * dxz * dxz - 2.0 * dzy * dzy)
}

fn semi_parallelogram(model: ModelId, rng: &mut ChaCha8Rng) -> Result<f64> {
    parallelogram_defect(model, rng)
}

fn parallelogram_equality(model: ModelId, rng: &mut ChaCha8Rng) -> Result<f64> {
    parallelogram_defect(model, rng).map(f64::abs)
}

/// `2 f(m) − f(s) − f(t)` for `f(u) = d(α(u), β(u))` at random `s, t` and their mean `m`.
fn convexity(model: ModelId, rng: &mut ChaCha8Rng) -> Result<f64> {
    let a = GeodesicSegment::new(&point(model, rng), &point(model, rng))?;
    let b = GeodesicSegment::new(&point(model, rng), &point(model, rng))?;
    let (s, t) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
    let f = |u: f64| distance(&a.at(u * a.length)?, &b.at(u * b.length)?);
    Ok(2.0 * f(0.5 * (s + t))? - f(s)? - f(t)?)
}

fn round_trip(model: ModelId, rng: &mut ChaCha8Rng) -> Result<f64> {
    let (p, q) = (point(model, rng), point(model, rng));
    let v = log_map(&p, &q)?;
    let back = exp_map(&v, 1.0)?;
    let e1 = distance(&back, &q)?;
    let u = sample_unit(p.clone(), rng).scaled(rng.gen_range(0.0..2.0));
    let w = log_map(&p, &exp_map(&u, 1.0)?)?;
    let diff: Vec<f64> = w.components.iter().zip(&u.components).map(|(a, b)| a - b).collect();
    let e2 = crate::geometry::norm_at(&p, &diff);
    Ok(e1.max(e2))
}

fn arclength(model: ModelId, rng: &mut ChaCha8Rng) -> Result<f64> {
    let p = point(model, rng);
    let len = rng.gen_range(0.1..3.0);
    let v = sample_unit(p, rng).scaled(len);
    let (s, t) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
    let d = distance(&exp_map(&v, s)?, &exp_map(&v, t)?)?;
    Ok((d - (t - s).abs() * len).abs())
}

fn deck_invariance(model: ModelId, rng: &mut ChaCha8Rng) -> Result<f64> {
    let (p, q) = (point(model, rng), point(model, rng));
    let g = random_isometry(model, rng)?;
    let d = distance(&p, &q)?;
    Ok((distance(&g.apply(&p)?, &g.apply(&q)?)? - d).abs())
}

/// An admissible `(x, y, z, ε)`: `z` is drawn near the segment until it lies in the cone.
fn cone_chord(model: ModelId, rng: &mut ChaCha8Rng) -> Result<f64> {
    for _ in 0..1000 {
        let (x, y) = (point(model, rng), point(model, rng));
        let eps = rng.gen_range(0.02..0.5);
        let dxy = distance(&x, &y)?;
        if dxy < 1e-3 {
            continue;
        }
        let on = geodesic_point(&x, &y, rng.gen_range(0.0..1.0) * dxy)?;
        let off = sample_unit(on, rng).scaled(rng.gen_range(0.0..1.0) * eps * dxy);
        let z = exp_map(&off, 1.0)?;
        if cone_contains(&x, &y, &z, eps)? {
            let (lhs, rhs) = cone_chord_gap(&x, &y, &z, eps)?;
            return Ok(lhs - rhs);
        }
    }
    Err(Error::numeric("no admissible cone triple found", 0.0))
}

/// Semi-parallelogram, convexity, round-trip, arclength, deck-invariance and
/// cone-chord checks on each model.
pub fn geometry_suite(models: &[ModelId], opts: &SuiteOptions) -> SuiteReport {
    type Check = fn(ModelId, &mut ChaCha8Rng) -> Result<f64>;
    let mut checks = Vec::new();
    for (k, &model) in models.iter().enumerate() {
        let seed = opts.seed.wrapping_add(1000 * k as u64);
        let list: [(&str, Check, usize, f64); 6] = [
            ("semi-parallelogram", semi_parallelogram, opts.instances, opts.tolerance),
            ("convexity", convexity, opts.instances, opts.tolerance),
            ("exp-log-round-trip", round_trip, opts.instances, 1e-6),
            ("arclength", arclength, opts.instances, 1e-8),
            ("deck-invariance", deck_invariance, opts.instances, distance_accuracy(model)),
            ("cone-chord", cone_chord, opts.cone_triples, opts.tolerance),
        ];
        for (j, (name, f, n, tol)) in list.into_iter().enumerate() {
            checks.push(run_check(name, model, n, tol, seed + j as u64, move |rng| f(model, rng)));
        }
        if matches!(model, ModelId::Euclidean(_)) {
            checks.push(run_check("parallelogram-equality", model, opts.instances, 1e-9, seed + 7, move |rng| {
                parallelogram_equality(model, rng)
            }));
        }
    }
    SuiteReport { checks }
}

/// A unit vector at `q` asymptotic to `v`.
fn asymptotic_partner(v: &ModelVector, q: &ModelPoint) -> Result<ModelVector> {
    if v.base.model.is_hyperbolic() {
        vector_towards(q, endpoint_in_uhp(v)?)
    } else {
        Ok(ModelVector::new(q.clone(), v.unit().components)?)
    }
}

fn busemann_bound(model: ModelId, rng: &mut ChaCha8Rng) -> Result<f64> {
    let v = sample_unit(point(model, rng), rng);
    let (x, y) = (point(model, rng), point(model, rng));
    Ok(busemann(&v, &x, &y)?.abs() - distance(&x, &y)?)
}

fn busemann_cocycle(model: ModelId, rng: &mut ChaCha8Rng) -> Result<f64> {
    let v = sample_unit(point(model, rng), rng);
    let (x, y, z) = (point(model, rng), point(model, rng), point(model, rng));
    Ok((busemann(&v, &x, &z)? - busemann(&v, &x, &y)? - busemann(&v, &y, &z)?).abs())
}

fn busemann_asymptotic(model: ModelId, rng: &mut ChaCha8Rng) -> Result<f64> {
    let v = sample_unit(point(model, rng), rng);
    let w = asymptotic_partner(&v, &point(model, rng))?;
    let (x, y) = (point(model, rng), point(model, rng));
    Ok((busemann(&v, &x, &y)? - busemann(&w, &x, &y)?).abs())
}

fn projection_pair(model: ModelId, rng: &mut ChaCha8Rng) -> (ModelVector, ModelVector) {
    let p = point(model, rng);
    loop {
        let a = sample_unit(p.clone(), rng);
        let b = sample_unit(p.clone(), rng);
        if a.angle_to(&b) > 0.3 {
            return (a, b);
        }
    }
}

fn horosphere_asymptotic(model: ModelId, rng: &mut ChaCha8Rng) -> Result<f64> {
    let (vp, vm) = projection_pair(model, rng);
    let phi = horosphere_project(&vp, &vm)?;
    let fwd = asymptotic_test(&phi, &vp, 50.0)?.asymptotic;
    let bwd = asymptotic_test(&phi.scaled(-1.0), &vm, 50.0)?.asymptotic;
    Ok(if fwd && bwd { 0.0 } else { 1.0 })
}

fn horosphere_level(model: ModelId, rng: &mut ChaCha8Rng) -> Result<f64> {
    let (vp, vm) = projection_pair(model, rng);
    let phi = horosphere_project(&vp, &vm)?;
    Ok(busemann(&vp, &vp.base, &phi.base)?.abs())
}

fn horosphere_equivariance(model: ModelId, rng: &mut ChaCha8Rng) -> Result<f64> {
    let (vp, vm) = projection_pair(model, rng);
    let g = random_isometry(model, rng)?;
    let moved = horosphere_project(&g.push(&vp)?, &g.push(&vm)?)?;
    let image = g.push(&horosphere_project(&vp, &vm)?)?;
    let dv: f64 = moved
        .orthonormal()
        .iter()
        .zip(image.orthonormal())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(distance(&moved.base, &image.base)? + dv)
}

/// Busemann bound, cocycle and asymptotic-invariance checks, plus the
/// horosphere projection checks on hyperbolic charts.
pub fn busemann_suite(models: &[ModelId], opts: &SuiteOptions) -> SuiteReport {
    type Check = fn(ModelId, &mut ChaCha8Rng) -> Result<f64>;
    let n = opts.busemann_triples;
    let mut checks = Vec::new();
    for (k, &model) in models.iter().enumerate() {
        let seed = opts.seed.wrapping_add(5000 + 1000 * k as u64);
        let mut list: Vec<(&str, Check, f64)> = vec![
            ("busemann-bound", busemann_bound, opts.tolerance),
            ("busemann-cocycle", busemann_cocycle, opts.tolerance),
            ("busemann-asymptotic", busemann_asymptotic, 1e-6),
        ];
        if model.is_hyperbolic() {
            list.push(("horosphere-asymptotic", horosphere_asymptotic, 0.0));
            list.push(("horosphere-level", horosphere_level, 1e-8));
            list.push(("horosphere-equivariance", horosphere_equivariance, 1e-8));
        }
        for (j, (name, f, tol)) in list.into_iter().enumerate() {
            checks.push(run_check(name, model, n, tol, seed + j as u64, move |rng| f(model, rng)));
        }
    }
    SuiteReport { checks }
}
