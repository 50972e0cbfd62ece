//! Birkhoff and subadditive averaging over orbit ensembles.
//!
//! An ensemble is an [`OrbitGenerator`]: a deterministic step on some state
//! space, an embedding into a model, and a finite list of seeds. Random
//! products of Möbius maps are skew products whose state carries the
//! position in a counter-based random stream, so every orbit is
//! reproducible from `rng_seed` alone.

use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::escort::{alignment_statistic, AlignmentOptions, AlignmentReport, OrbitMetric, PointSequence};
use crate::geometry::deck::Moebius;
use crate::geometry::hyperbolic::cdiv;
use crate::geometry::{ModelId, ModelPoint};

/// A deterministic dynamical system with an embedding and seed states.
pub trait OrbitGenerator: Sync {
    type State: Clone + Send + Sync;

    fn model(&self) -> ModelId;

    fn step(&self, s: &Self::State) -> Result<Self::State>;

    fn embed(&self, s: &Self::State) -> Result<ModelPoint>;

    fn seeds(&self) -> Vec<Self::State>;

    /// States `s, f(s), …, f^n(s)`.
    fn orbit(&self, s: &Self::State, n: usize) -> Result<Vec<Self::State>> {
        let mut out = Vec::with_capacity(n + 1);
        out.push(s.clone());
        for k in 0..n {
            let next = self.step(&out[k]).map_err(|e| Error::Evaluation {
                index: k + 1,
                message: e.to_string(),
            })?;
            out.push(next);
        }
        Ok(out)
    }

    /// Distances along the embedded orbit of length `n + 1`.
    fn orbit_metric(&self, s: &Self::State, n: usize) -> Result<Box<dyn OrbitMetric + Send>> {
        let states = self.orbit(s, n)?;
        let points = states.iter().map(|s| self.embed(s)).collect::<Result<Vec<_>>>()?;
        Ok(Box::new(PointSequence::from_points(self.model(), points)?))
    }
}

type PointMapFn = dyn Fn(&ModelPoint) -> Result<ModelPoint> + Send + Sync;

/// A map of a model iterated from a list of seed points.
#[derive(Clone)]
pub struct PointMapGenerator {
    pub model: ModelId,
    map: Arc<PointMapFn>,
    pub seeds: Vec<ModelPoint>,
}

impl PointMapGenerator {
    pub fn new<F>(model: ModelId, map: F, seeds: Vec<ModelPoint>) -> Self
    where
        F: Fn(&ModelPoint) -> Result<ModelPoint> + Send + Sync + 'static,
    {
        PointMapGenerator { model, map: Arc::new(map), seeds }
    }

    /// Seeds drawn by `sampler` from a ChaCha stream seeded with `rng_seed`.
    pub fn with_random_seeds<F, S>(model: ModelId, map: F, count: usize, rng_seed: u64, mut sampler: S) -> Result<Self>
    where
        F: Fn(&ModelPoint) -> Result<ModelPoint> + Send + Sync + 'static,
        S: FnMut(&mut ChaCha8Rng) -> Vec<f64>,
    {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let seeds = (0..count)
            .map(|_| ModelPoint::new(model, sampler(&mut rng)))
            .collect::<Result<Vec<_>>>()?;
        Ok(PointMapGenerator::new(model, map, seeds))
    }
}

impl OrbitGenerator for PointMapGenerator {
    type State = ModelPoint;

    fn model(&self) -> ModelId {
        self.model
    }

    fn step(&self, s: &ModelPoint) -> Result<ModelPoint> {
        (self.map)(s)
    }

    fn embed(&self, s: &ModelPoint) -> Result<ModelPoint> {
        Ok(s.clone())
    }

    fn seeds(&self) -> Vec<ModelPoint> {
        self.seeds.clone()
    }
}

/// A 2×2 matrix kept at unit Frobenius norm with its log scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledMatrix {
    pub m: [f64; 4],
    pub log_scale: f64,
}

impl ScaledMatrix {
    pub fn identity() -> Self {
        ScaledMatrix::from_moebius(&Moebius::IDENTITY)
    }

    pub fn from_moebius(g: &Moebius) -> Self {
        ScaledMatrix { m: [g.a, g.b, g.c, g.d], log_scale: 0.0 }.normalised()
    }

    fn normalised(mut self) -> Self {
        let n = self.m.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in self.m.iter_mut() {
            *x /= n;
        }
        self.log_scale += n.ln();
        self
    }

    fn mul(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
        [
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ]
    }

    /// `self · g`.
    pub fn right_mul(&self, g: &ScaledMatrix) -> Self {
        ScaledMatrix { m: Self::mul(&self.m, &g.m), log_scale: self.log_scale + g.log_scale }.normalised()
    }

    /// `g · self`.
    pub fn left_mul(&self, g: &ScaledMatrix) -> Self {
        ScaledMatrix { m: Self::mul(&g.m, &self.m), log_scale: self.log_scale + g.log_scale }.normalised()
    }

    /// `d(i, M·i)` for the determinant-one matrix this represents.
    pub fn displacement_of_i(&self) -> f64 {
        // cosh d = ‖M‖²_F / 2
        let ln_y = 2.0 * self.log_scale - 2f64.ln();
        if ln_y > 20.0 {
            ln_y + (1.0 + (1.0 - (-2.0 * ln_y).exp()).sqrt()).ln()
        } else {
            ln_y.exp().max(1.0).acosh()
        }
    }

    /// `M·z` for `z` in the half-plane.
    pub fn apply(&self, z: num_complex::Complex64) -> num_complex::Complex64 {
        let [a, b, c, d] = self.m;
        cdiv(a * z + b, c * z + d)
    }
}

/// Products `x_n = A·h_1⋯h_n·i` of Möbius maps chosen uniformly from a
/// finite list, one random stream per seed. With a single map this is the
/// orbit of an isometry started at `A·i`.
#[derive(Debug, Clone)]
pub struct MoebiusWalk {
    pub maps: Vec<Moebius>,
    /// Start matrix `A` of each seed, so `x_0 = A·i`.
    pub starts: Vec<Moebius>,
    pub rng_seed: u64,
}

/// State of a [`MoebiusWalk`]: seed, steps taken, and `g_1⋯g_n` in scaled form.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    pub seed: usize,
    pub n: u64,
    pub product: ScaledMatrix,
}

impl MoebiusWalk {
    /// All seeds start at `i`.
    pub fn new(maps: Vec<Moebius>, seeds: usize, rng_seed: u64) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::domain("a Möbius walk needs at least one map"));
        }
        Ok(MoebiusWalk { maps, starts: vec![Moebius::IDENTITY; seeds], rng_seed })
    }

    /// Seeds start at random points `a + i b` with `|a| ≤ spread`, `b ∈ [e^{−spread}, e^{spread}]`.
    pub fn with_random_starts(maps: Vec<Moebius>, seeds: usize, rng_seed: u64, spread: f64) -> Result<Self> {
        let mut w = MoebiusWalk::new(maps, seeds, rng_seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ 0x5eed_5eed);
        w.starts = (0..seeds)
            .map(|_| {
                let a = rng.gen_range(-spread..=spread);
                let b = rng.gen_range(-spread..=spread).exp();
                // z ↦ b z + a sends i to a + i b
                Moebius::new(b, a, 0.0, 1.0)
            })
            .collect::<Result<_>>()?;
        Ok(w)
    }

    fn stream(&self, seed: usize, offset: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(seed as u64);
        rng.set_word_pos(2 * offset as u128);
        rng
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        let u = rng.next_u64();
        if self.maps.len() == 1 {
            0
        } else {
            (u % self.maps.len() as u64) as usize
        }
    }

    /// Indices of the maps `g_{offset+1}, …, g_{offset+n}` of a seed.
    pub fn letters(&self, seed: usize, offset: u64, n: usize) -> Vec<usize> {
        let mut rng = self.stream(seed, offset);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }

    fn conjugated(&self, seed: usize) -> Vec<ScaledMatrix> {
        let a = self.starts[seed];
        self.maps
            .iter()
            .map(|g| ScaledMatrix::from_moebius(&a.inverse().compose(g).compose(&a)))
            .collect()
    }
}

impl OrbitGenerator for MoebiusWalk {
    type State = WalkState;

    fn model(&self) -> ModelId {
        ModelId::UpperHalfPlane
    }

    fn step(&self, s: &WalkState) -> Result<WalkState> {
        let mut rng = self.stream(s.seed, s.n);
        let g = ScaledMatrix::from_moebius(&self.maps[self.draw(&mut rng)]);
        Ok(WalkState { seed: s.seed, n: s.n + 1, product: s.product.right_mul(&g) })
    }

    fn embed(&self, s: &WalkState) -> Result<ModelPoint> {
        let a = ScaledMatrix::from_moebius(&self.starts[s.seed]);
        let z = s.product.right_mul(&a).apply(num_complex::Complex64::new(0.0, 1.0));
        ModelPoint::planar(ModelId::UpperHalfPlane, z.re, z.im)
            .map_err(|_| Error::numeric("walk position left floating-point range", f64::NAN))
    }

    fn seeds(&self) -> Vec<WalkState> {
        (0..self.starts.len())
            .map(|seed| WalkState { seed, n: 0, product: ScaledMatrix::identity() })
            .collect()
    }

    fn orbit_metric(&self, s: &WalkState, n: usize) -> Result<Box<dyn OrbitMetric + Send>> {
        let maps = self.conjugated(s.seed);
        let steps: Vec<ScaledMatrix> = self.letters(s.seed, s.n, n).into_iter().map(|l| maps[l]).collect();
        Ok(Box::new(ProductMetric { steps }))
    }
}

/// Exact distances along `x_n = h_1⋯h_n·i` computed from partial products.
#[derive(Debug, Clone)]
pub struct ProductMetric {
    /// `h_1, …, h_n`.
    pub steps: Vec<ScaledMatrix>,
}

impl OrbitMetric for ProductMetric {
    fn len(&self) -> usize {
        self.steps.len() + 1
    }

    fn time(&self, i: usize) -> f64 {
        i as f64
    }

    fn dist(&self, i: usize, j: usize) -> Result<f64> {
        let (i, j) = (i.min(j), i.max(j));
        let mut p = ScaledMatrix::identity();
        for h in &self.steps[i..j] {
            p = p.right_mul(h);
        }
        Ok(p.displacement_of_i())
    }

    fn dists_from_start(&self) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.len());
        let mut p = ScaledMatrix::identity();
        out.push(0.0);
        for h in &self.steps {
            p = p.right_mul(h);
            out.push(p.displacement_of_i());
        }
        Ok(out)
    }

    fn dists_to(&self, n: usize, lo: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; n - lo + 1];
        let mut p = ScaledMatrix::identity();
        for k in (lo..n).rev() {
            p = p.left_mul(&self.steps[k]);
            out[k - lo] = p.displacement_of_i();
        }
        Ok(out)
    }
}

/// Partial means `(1/n) Σ_{k<n} g(f^k s)` for `n = 1..=n`, one curve per seed.
pub fn birkhoff_average<G, O>(gen: &G, observable: O, n: usize) -> Result<Vec<Vec<f64>>>
where
    G: OrbitGenerator,
    O: Fn(&G::State) -> Result<f64> + Sync,
{
    if n == 0 {
        return Err(Error::domain("birkhoff average needs n ≥ 1"));
    }
    gen.seeds()
        .par_iter()
        .map(|seed| {
            let states = gen.orbit(seed, n - 1)?;
            let mut sum = 0.0;
            let mut curve = Vec::with_capacity(n);
            for (k, s) in states.iter().enumerate() {
                let v = observable(s).map_err(|e| Error::Evaluation { index: k, message: e.to_string() })?;
                if !v.is_finite() {
                    return Err(Error::Evaluation { index: k, message: "observable is not finite".into() });
                }
                sum += v;
                curve.push(sum / (k + 1) as f64);
            }
            Ok(curve)
        })
        .collect()
}

/// Output of [`kingman_rate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KingmanEstimate {
    /// `d(x_0, x_n)/n` per seed.
    pub per_seed_r: Vec<f64>,
    /// Least-squares slope of `d(x_0, x_k)` over the last half of each orbit.
    pub tail_slopes: Vec<f64>,
    pub ensemble_mean: f64,
    /// `(1/n)·mean_seeds d(x_0, x_n)` for `n = 1..`.
    pub cesaro_curve: Vec<f64>,
    pub max_subadditivity_violation: f64,
    pub max_stationarity_violation: f64,
    pub warnings: Vec<String>,
}

fn tail_slope(d0: &[f64]) -> f64 {
    let n = d0.len() - 1;
    let lo = n / 2;
    let pts: Vec<(f64, f64)> = (lo..=n).map(|k| (k as f64, d0[k])).collect();
    if pts.len() < 2 {
        return d0[n] / n.max(1) as f64;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Subadditive rate estimates with advisory hypothesis checks.
pub fn kingman_rate<G: OrbitGenerator>(gen: &G, n: usize) -> Result<KingmanEstimate> {
    if n < 2 {
        return Err(Error::domain("kingman_rate needs n ≥ 2"));
    }
    const CHECKS: usize = 64;
    let seeds = gen.seeds();
    if seeds.is_empty() {
        return Err(Error::domain("ensemble has no seeds"));
    }
    struct PerSeed {
        d0: Vec<f64>,
        sub: f64,
        stat: f64,
    }
    let per: Vec<PerSeed> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, seed)| -> Result<PerSeed> {
            let metric = gen.orbit_metric(seed, n)?;
            let d0 = metric.dists_from_start()?;
            let mut rng = ChaCha8Rng::seed_from_u64(0x4b1d ^ i as u64);
            let mut sub = f64::NEG_INFINITY;
            for _ in 0..CHECKS {
                let mut t = [rng.gen_range(0..=n), rng.gen_range(0..=n), rng.gen_range(0..=n)];
                t.sort_unstable();
                let v = metric.dist(t[0], t[2])? - metric.dist(t[0], t[1])? - metric.dist(t[1], t[2])?;
                sub = sub.max(v);
            }
            let shifted = gen.orbit_metric(&gen.step(seed)?, n - 1)?;
            let mut stat = 0.0f64;
            for _ in 0..CHECKS {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                let v = (metric.dist(a + 1, b + 1)? - shifted.dist(a, b)?).abs();
                stat = stat.max(v / (1.0 + metric.dist(a + 1, b + 1)?));
            }
            Ok(PerSeed { d0, sub, stat })
        })
        .collect::<Result<_>>()?;
    let per_seed_r: Vec<f64> = per.iter().map(|p| p.d0[n] / n as f64).collect();
    let tail_slopes = per.iter().map(|p| tail_slope(&p.d0)).collect();
    let m = per.len() as f64;
    let cesaro_curve = (1..=n)
        .map(|k| per.iter().map(|p| p.d0[k]).sum::<f64>() / m / k as f64)
        .collect();
    let max_sub = per.iter().map(|p| p.sub).fold(f64::NEG_INFINITY, f64::max);
    let max_stat = per.iter().map(|p| p.stat).fold(0.0, f64::max);
    let mut warnings = Vec::new();
    if max_sub > 1e-9 {
        warnings.push(format!("subadditivity violated by {max_sub:e}"));
    }
    if max_stat > 1e-9 {
        warnings.push(format!("stationarity violated by {max_stat:e} (relative)"));
    }
    Ok(KingmanEstimate {
        ensemble_mean: per_seed_r.iter().sum::<f64>() / m,
        per_seed_r,
        tail_slopes,
        cesaro_curve,
        max_subadditivity_violation: max_sub.max(0.0),
        max_stationarity_violation: max_stat,
        warnings,
    })
}

/// Output of [`alignment_ensemble_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleAlignment {
    /// Aligned fraction among linearly escaping seeds (1 when there are none).
    pub fraction: f64,
    pub escaping: usize,
    pub aligned: usize,
    pub delta: f64,
    pub reports: Vec<AlignmentReport>,
}

/// Seeds with `R̂` at or below this are treated as not escaping.
pub const ESCAPE_THRESHOLD: f64 = 1e-9;

/// Fraction of linearly escaping seeds with `L̂ ≥ (1−δ)R̂`.
pub fn alignment_ensemble_check<G: OrbitGenerator>(
    gen: &G,
    n: usize,
    delta: f64,
    opts: &AlignmentOptions,
) -> Result<EnsembleAlignment> {
    let reports: Vec<AlignmentReport> = gen
        .seeds()
        .par_iter()
        .map(|seed| {
            let metric = gen.orbit_metric(seed, n)?;
            alignment_statistic(metric.as_ref(), opts)
        })
        .collect::<Result<_>>()?;
    let escaping = reports.iter().filter(|r| r.r_hat > ESCAPE_THRESHOLD).count();
    let aligned = reports
        .iter()
        .filter(|r| r.r_hat > ESCAPE_THRESHOLD && r.is_aligned(delta))
        .count();
    let fraction = if escaping == 0 { 1.0 } else { aligned as f64 / escaping as f64 };
    Ok(EnsembleAlignment { fraction, escaping, aligned, delta, reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::escort::rate_of_escape;

    fn dilation_gen(seeds: usize) -> MoebiusWalk {
        MoebiusWalk::new(vec![Moebius::dilation(4.0).unwrap()], seeds, 7).unwrap()
    }

    #[test]
    fn product_metric_matches_coordinates() {
        let maps = vec![
            Moebius::new(2.0, 0.0, 0.0, 0.5).unwrap(),
            Moebius::new(1.5, 1.0, 1.0, 1.4).unwrap(),
        ];
        let walk = MoebiusWalk::with_random_starts(maps, 3, 11, 1.0).unwrap();
        for seed in walk.seeds() {
            let states = walk.orbit(&seed, 12).unwrap();
            let pts: Vec<ModelPoint> = states.iter().map(|s| walk.embed(s).unwrap()).collect();
            let metric = walk.orbit_metric(&seed, 12).unwrap();
            for (i, j) in [(0, 12), (3, 9), (5, 6), (2, 2)] {
                let a = metric.dist(i, j).unwrap();
                let b = crate::geometry::distance(&pts[i], &pts[j]).unwrap();
                assert!((a - b).abs() < 1e-7 * (1.0 + b), "{i} {j} {a} {b}");
            }
            let to = metric.dists_to(9, 2).unwrap();
            for k in 2..=9 {
                assert!((to[k - 2] - metric.dist(k, 9).unwrap()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn dilation_orbits_escape_at_ln4() {
        let est = kingman_rate(&dilation_gen(4), 300).unwrap();
        for r in &est.per_seed_r {
            assert!((r - 4f64.ln()).abs() < 1e-9);
        }
        assert!(est.max_subadditivity_violation <= 1e-9);
    }

    #[test]
    fn identity_map_has_zero_rate() {
        let walk = MoebiusWalk::new(vec![Moebius::IDENTITY], 3, 1).unwrap();
        let est = kingman_rate(&walk, 50).unwrap();
        assert!(est.per_seed_r.iter().all(|r| r.abs() < 1e-7));
    }

    #[test]
    fn birkhoff_examples() {
        let e = ModelId::FlatTorusCover(2);
        let gen = PointMapGenerator::new(
            e,
            |p: &ModelPoint| ModelPoint::planar(p.model, p.coords[0] + 0.3, p.coords[1] + 0.1),
            vec![ModelPoint::planar(e, 0.2, 0.5).unwrap()],
        );
        let c = birkhoff_average(&gen, |_| Ok(2.5), 10).unwrap();
        assert!(c[0].iter().all(|v| *v == 2.5));
        let g2 = gen.clone();
        let disp = birkhoff_average(&gen, move |s| Ok(g2.step(s)?.coords[0] - s.coords[0]), 100).unwrap();
        assert!(disp[0].iter().all(|v| (v - 0.3).abs() < 1e-12));
        let bad = birkhoff_average(&gen, |s| {
            if s.coords[0] > 1.0 {
                Err(Error::domain("x too large"))
            } else {
                Ok(0.0)
            }
        }, 10);
        assert!(matches!(bad, Err(Error::Evaluation { index: 3, .. })));
    }

    #[test]
    fn per_seed_rate_matches_rate_of_escape() {
        let gen = PointMapGenerator::new(
            ModelId::UpperHalfPlane,
            |p: &ModelPoint| ModelPoint::planar(p.model, 2.0 * p.coords[0] + 0.3, 2.0 * p.coords[1]),
            vec![ModelPoint::planar(ModelId::UpperHalfPlane, 0.1, 1.0).unwrap()],
        );
        let est = kingman_rate(&gen, 200).unwrap();
        let seq = gen.orbit_metric(&gen.seeds()[0], 200).unwrap();
        let (r, _) = rate_of_escape(seq.as_ref()).unwrap();
        assert!((r - est.per_seed_r[0]).abs() < 1e-12);
    }

    #[test]
    fn constant_ensemble_is_vacuously_aligned() {
        let walk = MoebiusWalk::new(vec![Moebius::IDENTITY], 4, 1).unwrap();
        let res = alignment_ensemble_check(&walk, 400, 0.1, &AlignmentOptions::default()).unwrap();
        assert_eq!(res.escaping, 0);
        assert_eq!(res.fraction, 1.0);
    }
}
