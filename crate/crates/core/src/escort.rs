//! ε-cones, rate of escape, alignment statistics and geodesic escorts.
//!
//! The statistics only need pairwise distances and time stamps, so they are
//! written against [`OrbitMetric`]. [`PointSequence`] is the coordinate
//! implementation; long random products use their own exact-distance
//! implementation (see `ergodic`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance, exp_map, log_map, ray_point, ModelId, ModelPoint, ModelVector};

/// Default ε grid, ascending.
pub const EPSILON_GRID: [f64; 5] = [0.02, 0.05, 0.1, 0.2, 0.5];
/// Default K grid (thresholds on elapsed time).
pub const K_GRID: [f64; 4] = [10.0, 30.0, 100.0, 300.0];

/// `f(ε) = 2√(1−e^{−2ε})`.
pub fn cone_f(eps: f64) -> f64 {
    2.0 * (1.0 - (-2.0 * eps).exp()).sqrt()
}

/// Pairwise distances and time stamps of a finite orbit.
pub trait OrbitMetric: Sync {
    fn len(&self) -> usize;

    fn time(&self, i: usize) -> f64;

    fn dist(&self, i: usize, j: usize) -> Result<f64>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `d(x_0, x_n)` for every `n`.
    fn dists_from_start(&self) -> Result<Vec<f64>> {
        (0..self.len()).map(|n| self.dist(0, n)).collect()
    }

    /// `d(x_k, x_n)` for `k` in `lo..=n`.
    fn dists_to(&self, n: usize, lo: usize) -> Result<Vec<f64>> {
        (lo..=n).map(|k| self.dist(k, n)).collect()
    }

    /// A cached `log(x_0, x_n)`, when the implementation keeps one.
    fn log_from_start(&self, _n: usize) -> Option<ModelVector> {
        None
    }
}

/// A finite lifted orbit with time stamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSequence {
    pub model: ModelId,
    pub points: Vec<ModelPoint>,
    pub times: Vec<f64>,
}

impl PointSequence {
    pub fn new(model: ModelId, points: Vec<ModelPoint>, times: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("point sequence must be nonempty"));
        }
        if points.len() != times.len() {
            return Err(Error::domain("points and times differ in length"));
        }
        for p in &points {
            if p.model != model {
                return Err(Error::domain("all points must share the sequence model"));
            }
            p.validate()?;
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("times must be strictly increasing"));
        }
        Ok(PointSequence { model, points, times })
    }

    /// Sequence stamped `0, 1, 2, ...`.
    pub fn from_points(model: ModelId, points: Vec<ModelPoint>) -> Result<Self> {
        let times = (0..points.len()).map(|k| k as f64).collect();
        PointSequence::new(model, points, times)
    }

    pub fn from_coords(model: ModelId, coords: Vec<Vec<f64>>, times: Vec<f64>) -> Result<Self> {
        let points = coords
            .into_iter()
            .map(|c| ModelPoint::new(model, c))
            .collect::<Result<Vec<_>>>()?;
        PointSequence::new(model, points, times)
    }

    pub fn start(&self) -> &ModelPoint {
        &self.points[0]
    }

    /// Applies an isometry to every point.
    pub fn map_points<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&ModelPoint) -> Result<ModelPoint>,
    {
        let points = self.points.iter().map(f).collect::<Result<Vec<_>>>()?;
        PointSequence::new(self.model, points, self.times.clone())
    }
}

impl OrbitMetric for PointSequence {
    fn len(&self) -> usize {
        self.points.len()
    }

    fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    fn dist(&self, i: usize, j: usize) -> Result<f64> {
        distance(&self.points[i], &self.points[j])
    }
}

/// `d(x,y) − e^{−ε}d(x,z) − d(z,y)`; nonnegative exactly on the cone.
pub fn cone_slack(x: &ModelPoint, y: &ModelPoint, z: &ModelPoint, eps: f64) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::domain(format!("cone parameter must be nonnegative, got {eps}")));
    }
    let dxy = distance(x, y)?;
    let dxz = distance(x, z)?;
    let dzy = distance(z, y)?;
    Ok(dxy - (-eps).exp() * dxz - dzy)
}

fn cone_allowance(dxy: f64) -> f64 {
    1e-12 * (1.0 + dxy)
}

/// Whether `z ∈ [x, y]_ε`, allowing round-off of order `1e−12·d(x,y)`.
pub fn cone_contains(x: &ModelPoint, y: &ModelPoint, z: &ModelPoint, eps: f64) -> Result<bool> {
    let s = cone_slack(x, y, z, eps)?;
    Ok(s >= -cone_allowance(distance(x, y)?))
}

/// Returns `(d(z,w)², 4(1−e^{−2ε})d(x,z)²)` where `w` is the point at
/// distance `d(x,z)` from `x` on the geodesic through `y`.
pub fn cone_chord_gap(x: &ModelPoint, y: &ModelPoint, z: &ModelPoint, eps: f64) -> Result<(f64, f64)> {
    if !cone_contains(x, y, z, eps)? {
        return Err(Error::Precondition("z is not in the cone [x, y]_eps".into()));
    }
    let dxz = distance(x, z)?;
    let rhs = 4.0 * (1.0 - (-2.0 * eps).exp()) * dxz * dxz;
    let dir = log_map(x, y)?;
    if dir.norm == 0.0 {
        return Ok((0.0, rhs));
    }
    let w = exp_map(&dir.unit(), dxz)?;
    let dzw = distance(z, &w)?;
    Ok((dzw * dzw, rhs))
}

/// `(R̂, curve)` with `curve[n-1] = d(x_0,x_n)/(t_n − t_0)`.
pub fn rate_of_escape<M: OrbitMetric + ?Sized>(seq: &M) -> Result<(f64, Vec<f64>)> {
    if seq.len() < 2 {
        return Err(Error::domain("rate of escape needs at least two points"));
    }
    let d0 = seq.dists_from_start()?;
    Ok(rate_from(seq, &d0))
}

fn rate_from<M: OrbitMetric + ?Sized>(seq: &M, d0: &[f64]) -> (f64, Vec<f64>) {
    let t0 = seq.time(0);
    let curve: Vec<f64> = (1..seq.len()).map(|n| d0[n] / (seq.time(n) - t0)).collect();
    (*curve.last().expect("len ≥ 2"), curve)
}

/// Grids and limits for [`alignment_statistic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentOptions {
    pub epsilon_grid: Vec<f64>,
    pub k_grid: Vec<f64>,
    /// The limsup over `n` is taken over `n` with elapsed time at least
    /// this fraction of the horizon.
    pub tail_fraction: f64,
    /// Most admissible times kept (the largest ones).
    pub max_admissible: usize,
}

impl Default for AlignmentOptions {
    fn default() -> Self {
        AlignmentOptions {
            epsilon_grid: EPSILON_GRID.to_vec(),
            k_grid: K_GRID.to_vec(),
            tail_fraction: 0.5,
            max_admissible: 32,
        }
    }
}

impl AlignmentOptions {
    pub fn with_k_grid(k_grid: Vec<f64>) -> Self {
        AlignmentOptions { k_grid, ..Default::default() }
    }
}

/// Result of [`alignment_statistic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub r_hat: f64,
    pub l_hat: f64,
    /// `(K, L_K)` for each usable K.
    pub l_by_k: Vec<(f64, f64)>,
    /// Indices `n` with `x_k ∈ [x_0, x_n]_ε` for all `k` past `K`.
    pub admissible_times: Vec<usize>,
    /// Smallest grid ε with a nonempty admissible set.
    pub epsilon: Option<f64>,
    /// K used for that ε.
    pub k: Option<f64>,
    pub epsilon_grid: Vec<f64>,
    pub k_grid: Vec<f64>,
}

impl AlignmentReport {
    /// `L̂ ≥ (1−δ) R̂`.
    pub fn is_aligned(&self, delta: f64) -> bool {
        self.l_hat >= (1.0 - delta) * self.r_hat
    }
}

/// L̂, R̂ and admissible times of a finite orbit.
pub fn alignment_statistic<M: OrbitMetric + ?Sized>(seq: &M, opts: &AlignmentOptions) -> Result<AlignmentReport> {
    let len = seq.len();
    if opts.k_grid.is_empty() || opts.epsilon_grid.is_empty() {
        return Err(Error::domain("empty alignment grid"));
    }
    if opts.epsilon_grid.iter().any(|e| !(*e > 0.0)) || opts.k_grid.iter().any(|k| !(*k > 0.0)) {
        return Err(Error::domain("alignment grids must be positive"));
    }
    let t0 = seq.time(0);
    let elapsed = |i: usize| seq.time(i) - t0;
    let k_max = opts.k_grid.iter().cloned().fold(f64::MIN, f64::max);
    let k_min = opts.k_grid.iter().cloned().fold(f64::MAX, f64::min);
    if len < 2 || elapsed(len - 1) < k_max + 1.0 {
        return Err(Error::domain(format!(
            "sequence too short for K grid up to {k_max}: horizon {}",
            if len == 0 { 0.0 } else { elapsed(len - 1) }
        )));
    }
    let d0 = seq.dists_from_start()?;
    let (r_hat, _) = rate_from(seq, &d0);
    let first_at = |k: f64| (0..len).find(|&i| elapsed(i) >= k).unwrap_or(len);
    let lo = first_at(k_min);
    let horizon = elapsed(len - 1);
    let n_start = (0..len)
        .find(|&i| elapsed(i) >= opts.tail_fraction * horizon)
        .unwrap_or(len - 1);

    let mut ks: Vec<f64> = opts.k_grid.clone();
    ks.sort_by(f64::total_cmp);
    let k_first: Vec<usize> = ks.iter().map(|&k| first_at(k)).collect();
    let mut l_k = vec![f64::NEG_INFINITY; ks.len()];
    for n in n_start.max(lo)..len {
        let dn = seq.dists_to(n, lo)?;
        let mut running = f64::INFINITY;
        let mut kix = k_first.iter().filter(|&&i| i <= n).count();
        for k in (lo..=n).rev() {
            let v = (d0[n] - dn[k - lo]) / elapsed(k);
            running = running.min(v);
            while kix > 0 && k == k_first[kix - 1] {
                kix -= 1;
                if n > k_first[kix] {
                    l_k[kix] = l_k[kix].max(running);
                }
            }
        }
    }
    let l_by_k: Vec<(f64, f64)> = ks
        .iter()
        .zip(&l_k)
        .filter(|(_, l)| l.is_finite())
        .map(|(k, l)| (*k, l.max(0.0)))
        .collect();
    let l_hat = l_by_k.iter().map(|(_, l)| *l).fold(0.0, f64::max);

    let mut eps_grid = opts.epsilon_grid.clone();
    eps_grid.sort_by(f64::total_cmp);
    let mut report = AlignmentReport {
        r_hat,
        l_hat,
        l_by_k,
        admissible_times: vec![],
        epsilon: None,
        k: None,
        epsilon_grid: opts.epsilon_grid.clone(),
        k_grid: opts.k_grid.clone(),
    };
    if r_hat <= 0.0 {
        return Ok(report);
    }
    for &eps in &eps_grid {
        let upper = (0.5 * eps).exp() * r_hat;
        let k_star = ks.iter().zip(&k_first).find(|(_, &i)| {
            i < len && (i..len).all(|k| d0[k] <= upper * elapsed(k))
        });
        let (k_val, k_ix) = match k_star {
            Some((k, i)) => (*k, *i),
            None => continue,
        };
        let lower = (-0.5 * eps).exp() * r_hat;
        let mut records = Vec::new();
        let mut best = f64::NEG_INFINITY;
        for n in 0..len {
            let v = d0[n] - lower * elapsed(n);
            if v > best {
                best = v;
                if n > k_ix {
                    records.push(n);
                }
            }
        }
        let mut found = Vec::new();
        for &n in records.iter().rev().take(8 * opts.max_admissible) {
            let dn = seq.dists_to(n, k_ix)?;
            let shrink = (-eps).exp();
            let ok = (k_ix..=n).all(|k| {
                d0[n] - shrink * d0[k] - dn[k - k_ix] >= -cone_allowance(d0[n])
            });
            if ok {
                found.push(n);
                if found.len() >= opts.max_admissible {
                    break;
                }
            }
        }
        if !found.is_empty() {
            found.reverse();
            report.admissible_times = found;
            report.epsilon = Some(eps);
            report.k = Some(k_val);
            break;
        }
    }
    Ok(report)
}

/// A fitted geodesic escort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscortFit {
    /// Unit vector at the first point (zero when `speed = 0`).
    pub direction: ModelVector,
    pub speed: f64,
    /// `(k, d(x_k, α(d_k))/d_k)`.
    pub residuals: Vec<(usize, f64)>,
    pub cauchy_gap: f64,
    pub epsilon: Option<f64>,
    pub admissible_times: Vec<usize>,
}

impl EscortFit {
    /// Rotation-vector estimate `speed · direction`.
    pub fn vector(&self) -> ModelVector {
        self.direction.scaled(self.speed)
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.residuals.last().map(|r| r.1)
    }
}

/// Most residual samples recorded by [`fit_escort`].
pub const MAX_RESIDUALS: usize = 64;

/// Fits the escort through the farthest admissible point.
pub fn fit_escort(seq: &PointSequence, report: &AlignmentReport) -> Result<EscortFit> {
    fit_escort_with(seq, seq, report, MAX_RESIDUALS)
}

/// [`fit_escort`] reading `d(x_0, x_k)` from `metric`, with residuals at
/// no more than `max_residuals` evenly spaced indices.
pub fn fit_escort_with<M: OrbitMetric + ?Sized>(
    seq: &PointSequence,
    metric: &M,
    report: &AlignmentReport,
    max_residuals: usize,
) -> Result<EscortFit> {
    if metric.len() != seq.points.len() {
        return Err(Error::domain("metric and point sequence differ in length"));
    }
    let x0 = seq.start();
    if report.r_hat <= 0.0 {
        return Ok(EscortFit {
            direction: ModelVector::zero(x0.clone()),
            speed: 0.0,
            residuals: vec![],
            cauchy_gap: 0.0,
            epsilon: report.epsilon,
            admissible_times: vec![],
        });
    }
    let adm = &report.admissible_times;
    let n_star = *adm.last().ok_or_else(|| {
        Error::Fit("no admissible times; use a longer orbit or a coarser epsilon grid".into())
    })?;
    let units: Vec<ModelVector> = adm
        .iter()
        .map(|&n| match metric.log_from_start(n) {
            Some(v) => Ok(v.unit()),
            None => log_map(x0, &seq.points[n]).map(|v| v.unit()),
        })
        .collect::<Result<_>>()?;
    let direction = units.last().expect("nonempty").clone();
    let tips: Vec<ModelPoint> = units.iter().map(|u| exp_map(u, 1.0)).collect::<Result<_>>()?;
    let mut cauchy_gap = 0.0f64;
    for i in 0..tips.len() {
        for j in i + 1..tips.len() {
            cauchy_gap = cauchy_gap.max(distance(&tips[i], &tips[j])?);
        }
    }
    let mut residuals = Vec::new();
    let first = adm[0] + 1;
    let count = seq.points.len().saturating_sub(first);
    let stride = count.div_ceil(max_residuals.max(1)).max(1);
    let mut ks: Vec<usize> = (first..seq.points.len()).step_by(stride).collect();
    if count > 0 && ks.last() != Some(&(seq.points.len() - 1)) {
        ks.push(seq.points.len() - 1);
    }
    for k in ks {
        let dk = metric.dist(0, k)?;
        if dk == 0.0 {
            continue;
        }
        // on hyperbolic charts the rounded direction is useless far out
        let a = if seq.model.is_hyperbolic() {
            ray_point(x0, &seq.points[n_star], dk)?
        } else {
            exp_map(&direction, dk)?
        };
        residuals.push((k, distance(&seq.points[k], &a)? / dk));
    }
    debug_assert!(n_star < seq.points.len());
    Ok(EscortFit {
        direction,
        speed: report.r_hat,
        residuals,
        cauchy_gap,
        epsilon: report.epsilon,
        admissible_times: adm.clone(),
    })
}

/// Outcome of [`semicontraction_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemicontractionReport {
    pub pass: bool,
    /// Largest `d(x_{m+k},x_{n+k}) − d(x_m,x_n)` seen (may be negative).
    pub worst_violation: f64,
    /// `(k, m, n)` attaining it.
    pub worst: (usize, usize, usize),
    pub checked: usize,
}

/// Checks `d(x_{m+k}, x_{n+k}) ≤ d(x_m, x_n)` on sampled triples. Short
/// sequences are checked exhaustively.
pub fn semicontraction_check<M: OrbitMetric + ?Sized>(
    seq: &M,
    samples: usize,
    rng_seed: u64,
) -> Result<SemicontractionReport> {
    let len = seq.len();
    if len < 3 {
        return Err(Error::domain("semicontraction check needs at least 3 points"));
    }
    let mut worst = (f64::NEG_INFINITY, (0, 0, 0));
    let mut checked = 0;
    let mut visit = |k: usize, m: usize, n: usize| -> Result<()> {
        let v = seq.dist(m + k, n + k)? - seq.dist(m, n)?;
        checked += 1;
        if v > worst.0 {
            worst = (v, (k, m, n));
        }
        Ok(())
    };
    if len.pow(3) / 6 <= samples.max(1) {
        for k in 1..len {
            for n in 1..len - k {
                for m in 0..n {
                    visit(k, m, n)?;
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        for _ in 0..samples {
            let k = rng.gen_range(1..len - 1);
            let n = rng.gen_range(1..len - k);
            let m = rng.gen_range(0..n);
            visit(k, m, n)?;
        }
    }
    let (m, n) = (worst.1 .1, worst.1 .2);
    let scale = 1.0 + seq.dist(m, n)?;
    Ok(SemicontractionReport {
        pass: worst.0 <= 1e-9 * scale,
        worst_violation: worst.0,
        worst: worst.1,
        checked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uhp_orbit(n: usize) -> PointSequence {
        let h = ModelId::UpperHalfPlane;
        let pts = (0..=n)
            .map(|k| ModelPoint::planar(h, 0.0, 4f64.powi(k as i32)).unwrap())
            .collect();
        PointSequence::from_points(h, pts).unwrap()
    }

    #[test]
    fn cone_examples() {
        let e = ModelId::Euclidean(2);
        let p = |a, b| ModelPoint::planar(e, a, b).unwrap();
        assert!(cone_contains(&p(0.0, 0.0), &p(3.0, 1.0), &p(0.0, 0.0), 0.3).unwrap());
        assert!(cone_contains(&p(0.0, 0.0), &p(3.0, 1.0), &p(1.2, 0.4), 0.0).unwrap());
        assert!(!cone_contains(&p(0.0, 0.0), &p(3.0, 1.0), &p(1.2, 0.5), 0.0).unwrap());
        assert!(cone_contains(&p(0.0, 0.0), &p(1.0, 0.0), &p(0.5, 0.0), -1.0).is_err());
        let (l, r) = cone_chord_gap(&p(0.0, 0.0), &p(2.0, 0.0), &p(1.0, 0.0), 0.0).unwrap();
        assert!(l < 1e-24 && r == 0.0);
        assert!(matches!(
            cone_chord_gap(&p(0.0, 0.0), &p(2.0, 0.0), &p(1.0, 1.0), 0.01),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn isometry_orbit_rate_and_alignment() {
        let seq = uhp_orbit(500);
        let (r, curve) = rate_of_escape(&seq).unwrap();
        assert!((r - 4f64.ln()).abs() < 1e-9);
        assert_eq!(curve.len(), 500);
        let rep = alignment_statistic(&seq, &AlignmentOptions::default()).unwrap();
        assert!(rep.l_hat >= 0.95 * rep.r_hat);
        assert_eq!(rep.epsilon, Some(0.02));
        let fit = fit_escort(&seq, &rep).unwrap();
        assert!((fit.speed - 4f64.ln()).abs() < 1e-9);
        let on = fit.direction.orthonormal();
        assert!(on[0].abs() < 1e-12 && (on[1] - 1.0).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|r| r.1 < 1e-9));
    }

    #[test]
    fn constant_sequence_is_trivial() {
        let e = ModelId::Euclidean(2);
        let pts = vec![ModelPoint::planar(e, 1.0, 2.0).unwrap(); 400];
        let seq = PointSequence::from_points(e, pts).unwrap();
        let rep = alignment_statistic(&seq, &AlignmentOptions::default()).unwrap();
        assert_eq!((rep.r_hat, rep.l_hat), (0.0, 0.0));
        let fit = fit_escort(&seq, &rep).unwrap();
        assert_eq!(fit.speed, 0.0);
        assert_eq!(fit.direction.norm, 0.0);
    }

    #[test]
    fn short_sequences_are_rejected() {
        assert!(alignment_statistic(&uhp_orbit(100), &AlignmentOptions::default()).is_err());
    }

    #[test]
    fn semicontraction_examples() {
        let seq = uhp_orbit(40);
        let rep = semicontraction_check(&seq, 2000, 1).unwrap();
        assert!(rep.pass && rep.worst_violation <= 1e-9);

        let e = ModelId::Euclidean(2);
        let mut z = (3.0f64, -1.0f64);
        let mut pts = vec![];
        for _ in 0..30 {
            pts.push(ModelPoint::planar(e, z.0, z.1).unwrap());
            z = (z.0 / 2.0 + 0.1, z.1 / 2.0);
        }
        let seq = PointSequence::from_points(e, pts.clone()).unwrap();
        assert!(semicontraction_check(&seq, 5000, 2).unwrap().pass);

        pts[12] = ModelPoint::planar(e, 50.0, 50.0).unwrap();
        let seq = PointSequence::from_points(e, pts).unwrap();
        let rep = semicontraction_check(&seq, 5000, 2).unwrap();
        assert!(!rep.pass && rep.worst_violation > 0.0);
    }
}
