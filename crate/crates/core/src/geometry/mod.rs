//! Model geometries: charts, metric tensors, distances and geodesics.
//!
//! Every chart in this crate has a diagonal metric tensor. The hyperbolic
//! charts (disk, half-plane, Fermi strip, polar) use closed forms; the warped
//! plane is handled by the Hamiltonian shooting code in [`warped`].

pub mod deck;
pub mod hyperbolic;
pub mod warped;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used by closed-form geometry checks.
pub const CLOSED_FORM_TOL: f64 = 1e-9;
/// Tolerance used by integrated geometry checks.
pub const INTEGRATED_TOL: f64 = 1e-6;

/// A named model chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelId {
    Euclidean(usize),
    FlatTorusCover(usize),
    PoincareDisk,
    UpperHalfPlane,
    WarpedXy,
    FermiStrip,
    HyperbolicPolar,
}

impl ModelId {
    pub fn dim(self) -> usize {
        match self {
            ModelId::Euclidean(d) | ModelId::FlatTorusCover(d) => d,
            _ => 2,
        }
    }

    /// True for the flat models.
    pub fn is_flat(self) -> bool {
        matches!(self, ModelId::Euclidean(_) | ModelId::FlatTorusCover(_))
    }

    /// True for the charts of the hyperbolic plane.
    pub fn is_hyperbolic(self) -> bool {
        matches!(
            self,
            ModelId::PoincareDisk
                | ModelId::UpperHalfPlane
                | ModelId::FermiStrip
                | ModelId::HyperbolicPolar
        )
    }

    /// +1 if the chart is orientation-compatible with the half-plane, −1 otherwise.
    pub fn orientation(self) -> f64 {
        match self {
            ModelId::FermiStrip => -1.0,
            _ => 1.0,
        }
    }

    /// Whether `coords` lie in the chart's domain.
    pub fn contains(self, coords: &[f64]) -> bool {
        if coords.len() != self.dim() || coords.iter().any(|c| !c.is_finite()) {
            return false;
        }
        match self {
            ModelId::PoincareDisk => coords[0].hypot(coords[1]) < 1.0,
            ModelId::UpperHalfPlane => coords[1] > 0.0,
            ModelId::HyperbolicPolar => coords[0] > 0.0,
            _ => true,
        }
    }

    pub fn check(self, coords: &[f64]) -> Result<()> {
        if self.contains(coords) {
            Ok(())
        } else {
            Err(Error::domain(format!("{coords:?} is outside the domain of {self}")))
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelId::Euclidean(d) => write!(f, "euclidean:{d}"),
            ModelId::FlatTorusCover(d) => write!(f, "flat-torus-cover:{d}"),
            ModelId::PoincareDisk => f.write_str("poincare-disk"),
            ModelId::UpperHalfPlane => f.write_str("upper-half-plane"),
            ModelId::WarpedXy => f.write_str("warped-xy"),
            ModelId::FermiStrip => f.write_str("fermi-strip"),
            ModelId::HyperbolicPolar => f.write_str("hyperbolic-polar"),
        }
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse_dim = |d: &str| -> Result<usize> {
            match d.parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(Error::Parse(format!("bad dimension in model `{s}`"))),
            }
        };
        if let Some(d) = s.strip_prefix("euclidean:") {
            return Ok(ModelId::Euclidean(parse_dim(d)?));
        }
        if let Some(d) = s.strip_prefix("flat-torus-cover:") {
            return Ok(ModelId::FlatTorusCover(parse_dim(d)?));
        }
        match s {
            "euclidean" => Ok(ModelId::Euclidean(2)),
            "flat-torus-cover" => Ok(ModelId::FlatTorusCover(2)),
            "poincare-disk" | "disk" => Ok(ModelId::PoincareDisk),
            "upper-half-plane" | "half-plane" => Ok(ModelId::UpperHalfPlane),
            "warped-xy" => Ok(ModelId::WarpedXy),
            "fermi-strip" => Ok(ModelId::FermiStrip),
            "hyperbolic-polar" => Ok(ModelId::HyperbolicPolar),
            _ => Err(Error::Parse(format!("unknown model `{s}`"))),
        }
    }
}

impl Serialize for ModelId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ModelId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A point given by its coordinates in a model chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPoint {
    pub model: ModelId,
    pub coords: Vec<f64>,
}

impl ModelPoint {
    pub fn new(model: ModelId, coords: Vec<f64>) -> Result<Self> {
        model.check(&coords)?;
        Ok(ModelPoint { model, coords })
    }

    pub fn planar(model: ModelId, a: f64, b: f64) -> Result<Self> {
        ModelPoint::new(model, vec![a, b])
    }

    /// First two coordinates; panics on 1-dimensional models.
    pub fn xy(&self) -> (f64, f64) {
        (self.coords[0], self.coords[1])
    }

    pub fn validate(&self) -> Result<()> {
        self.model.check(&self.coords)
    }
}

/// A tangent vector with its metric norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelVector {
    pub base: ModelPoint,
    pub components: Vec<f64>,
    pub norm: f64,
}

impl ModelVector {
    pub fn new(base: ModelPoint, components: Vec<f64>) -> Result<Self> {
        base.validate()?;
        if components.len() != base.model.dim() || components.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain(format!(
                "vector components {components:?} do not fit {}",
                base.model
            )));
        }
        let norm = norm_at(&base, &components);
        Ok(ModelVector {
            base,
            components,
            norm,
        })
    }

    pub fn zero(base: ModelPoint) -> Self {
        let n = base.model.dim();
        ModelVector {
            base,
            components: vec![0.0; n],
            norm: 0.0,
        }
    }

    /// Builds a vector from components in the orthonormal frame `e_i/√g_ii`.
    pub fn from_orthonormal(base: ModelPoint, on: &[f64]) -> Result<Self> {
        let g = metric_diag(base.model, &base.coords);
        let comps = on.iter().zip(&g).map(|(c, gi)| c / gi.sqrt()).collect();
        ModelVector::new(base, comps)
    }

    /// Components in the orthonormal frame `e_i/√g_ii`.
    pub fn orthonormal(&self) -> Vec<f64> {
        let g = metric_diag(self.base.model, &self.base.coords);
        self.components
            .iter()
            .zip(&g)
            .map(|(c, gi)| c * gi.sqrt())
            .collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        ModelVector {
            base: self.base.clone(),
            components: self.components.iter().map(|c| c * s).collect(),
            norm: self.norm * s.abs(),
        }
    }

    /// Unit vector in the same direction; zero stays zero.
    pub fn unit(&self) -> Self {
        if self.norm == 0.0 {
            self.clone()
        } else {
            self.scaled(1.0 / self.norm)
        }
    }

    pub fn inner(&self, other: &ModelVector) -> f64 {
        inner_at(&self.base, &self.components, &other.components)
    }

    /// Riemannian angle to `other` in radians; zero vectors give 0.
    pub fn angle_to(&self, other: &ModelVector) -> f64 {
        if self.norm == 0.0 || other.norm == 0.0 {
            return 0.0;
        }
        let a = self.orthonormal();
        let b = other.orthonormal();
        let (mut diff, mut sum) = (0.0, 0.0);
        for (x, y) in a.iter().zip(&b) {
            let (u, v) = (x / self.norm, y / other.norm);
            diff += (u - v) * (u - v);
            sum += (u + v) * (u + v);
        }
        2.0 * diff.sqrt().atan2(sum.sqrt())
    }
}

/// A random point within roughly `spread` of the chart's reference point.
pub fn sample_point<R: rand::Rng + ?Sized>(model: ModelId, rng: &mut R, spread: f64) -> ModelPoint {
    let coords = match model {
        ModelId::Euclidean(d) | ModelId::FlatTorusCover(d) => {
            (0..d).map(|_| rng.gen_range(-spread..=spread)).collect()
        }
        ModelId::PoincareDisk | ModelId::UpperHalfPlane => {
            let rho = spread * rng.gen::<f64>().sqrt();
            let w = num_complex::Complex64::from_polar((0.5 * rho).tanh(), rng.gen_range(-PI..PI));
            if model == ModelId::PoincareDisk {
                vec![w.re, w.im]
            } else {
                let z = hyperbolic::cayley_inv(w);
                vec![z.re, z.im]
            }
        }
        ModelId::FermiStrip => vec![rng.gen_range(-spread..=spread), rng.gen_range(-spread..=spread)],
        ModelId::HyperbolicPolar => vec![rng.gen_range(0.05..=spread.max(0.1)), rng.gen_range(-PI..PI)],
        ModelId::WarpedXy => vec![rng.gen_range(-spread..=spread), rng.gen_range(-spread.min(2.0)..=spread)],
    };
    ModelPoint { model, coords }
}

/// A random unit vector at `base`.
pub fn sample_unit<R: rand::Rng + ?Sized>(base: ModelPoint, rng: &mut R) -> ModelVector {
    let d = base.model.dim();
    loop {
        let on: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let n2: f64 = on.iter().map(|c| c * c).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            let v = ModelVector::from_orthonormal(base, &on).expect("finite components");
            return v.unit();
        }
    }
}

/// Diagonal of the metric tensor at `coords`.
pub fn metric_diag(model: ModelId, coords: &[f64]) -> Vec<f64> {
    match model {
        ModelId::Euclidean(d) | ModelId::FlatTorusCover(d) => vec![1.0; d],
        _ => {
            let m = planar_metric(model, coords[0], coords[1]);
            vec![m.e, m.g]
        }
    }
}

/// `g(u, v)` at `base`.
pub fn inner_at(base: &ModelPoint, u: &[f64], v: &[f64]) -> f64 {
    metric_diag(base.model, &base.coords)
        .iter()
        .zip(u.iter().zip(v))
        .map(|(g, (a, b))| g * a * b)
        .sum()
}

pub fn norm_at(base: &ModelPoint, v: &[f64]) -> f64 {
    inner_at(base, v, v).max(0.0).sqrt()
}

/// Diagonal metric `E dx² + G dy²` with first partial derivatives.
#[derive(Debug, Clone, Copy)]
pub struct PlanarMetric {
    pub e: f64,
    pub g: f64,
    pub e_x: f64,
    pub e_y: f64,
    pub g_x: f64,
    pub g_y: f64,
}

pub fn planar_metric(model: ModelId, x: f64, y: f64) -> PlanarMetric {
    match model {
        ModelId::UpperHalfPlane => {
            let e = 1.0 / (y * y);
            let d = -2.0 / (y * y * y);
            PlanarMetric { e, g: e, e_x: 0.0, e_y: d, g_x: 0.0, g_y: d }
        }
        ModelId::PoincareDisk => {
            let s = 1.0 - x * x - y * y;
            let e = 4.0 / (s * s);
            let c = 16.0 / (s * s * s);
            PlanarMetric { e, g: e, e_x: c * x, e_y: c * y, g_x: c * x, g_y: c * y }
        }
        ModelId::WarpedXy => {
            let q = (-y).exp();
            let w = 1.0 + q;
            PlanarMetric { e: w * w, g: 1.0, e_x: 0.0, e_y: -2.0 * w * q, g_x: 0.0, g_y: 0.0 }
        }
        ModelId::FermiStrip => {
            let (s, c) = (y.sinh(), y.cosh());
            PlanarMetric { e: c * c, g: 1.0, e_x: 0.0, e_y: 2.0 * s * c, g_x: 0.0, g_y: 0.0 }
        }
        ModelId::HyperbolicPolar => {
            let (s, c) = (x.sinh(), x.cosh());
            PlanarMetric { e: 1.0, g: s * s, e_x: 0.0, e_y: 0.0, g_x: 2.0 * s * c, g_y: 0.0 }
        }
        ModelId::Euclidean(_) | ModelId::FlatTorusCover(_) => {
            PlanarMetric { e: 1.0, g: 1.0, e_x: 0.0, e_y: 0.0, g_x: 0.0, g_y: 0.0 }
        }
    }
}

impl PlanarMetric {
    /// `Γ^k_ij` indexed as `[k][i][j]`.
    pub fn christoffel(&self) -> [[[f64; 2]; 2]; 2] {
        let (e, g) = (self.e, self.g);
        [
            [
                [self.e_x / (2.0 * e), self.e_y / (2.0 * e)],
                [self.e_y / (2.0 * e), -self.g_x / (2.0 * e)],
            ],
            [
                [-self.e_y / (2.0 * g), self.g_x / (2.0 * g)],
                [self.g_x / (2.0 * g), self.g_y / (2.0 * g)],
            ],
        ]
    }

    /// `−Γ^k_ij v^i v^j`, the geodesic acceleration.
    pub fn geodesic_accel(&self, v: [f64; 2]) -> [f64; 2] {
        let c = self.christoffel();
        let mut out = [0.0; 2];
        for (k, o) in out.iter_mut().enumerate() {
            *o = -(c[k][0][0] * v[0] * v[0]
                + 2.0 * c[k][0][1] * v[0] * v[1]
                + c[k][1][1] * v[1] * v[1]);
        }
        out
    }

    /// Rotation by +90° in the chart's orientation, as coordinate components.
    pub fn rotate(&self, v: [f64; 2], orientation: f64) -> [f64; 2] {
        let r = (self.g / self.e).sqrt();
        [-orientation * v[1] * r, orientation * v[0] / r]
    }
}

/// Christoffel symbols `Γ^k_ij` of a planar chart at `(x, y)`.
pub fn christoffel(model: ModelId, x: f64, y: f64) -> [[[f64; 2]; 2]; 2] {
    planar_metric(model, x, y).christoffel()
}

fn same_model(p: &ModelPoint, q: &ModelPoint) -> Result<ModelId> {
    if p.model != q.model {
        return Err(Error::domain(format!(
            "points live in different models ({} and {})",
            p.model, q.model
        )));
    }
    p.validate()?;
    q.validate()?;
    Ok(p.model)
}

fn euclid_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut scale = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        scale = scale.max((x - y).abs());
    }
    if scale == 0.0 {
        return 0.0;
    }
    scale
        * a.iter()
            .zip(b)
            .map(|(x, y)| ((x - y) / scale).powi(2))
            .sum::<f64>()
            .sqrt()
}

/// Riemannian distance between two points of the same model.
pub fn distance(p: &ModelPoint, q: &ModelPoint) -> Result<f64> {
    let model = same_model(p, q)?;
    match model {
        ModelId::Euclidean(_) | ModelId::FlatTorusCover(_) => Ok(euclid_dist(&p.coords, &q.coords)),
        ModelId::WarpedXy => warped::distance(p.xy(), q.xy()),
        _ => Ok(hyperbolic::distance(model, p.xy(), q.xy())),
    }
}

/// `exp_base(t·v)`.
pub fn exp_map(v: &ModelVector, t: f64) -> Result<ModelPoint> {
    v.base.validate()?;
    let model = v.base.model;
    let coords = match model {
        ModelId::Euclidean(_) | ModelId::FlatTorusCover(_) => v
            .base
            .coords
            .iter()
            .zip(&v.components)
            .map(|(x, c)| x + t * c)
            .collect(),
        ModelId::WarpedXy => {
            let (x, y) = warped::exp(
                v.base.xy(),
                [v.components[0], v.components[1]],
                t,
            )?;
            vec![x, y]
        }
        _ => {
            let (a, b) = hyperbolic::exp(
                model,
                v.base.xy(),
                [v.components[0] * t, v.components[1] * t],
            );
            vec![a, b]
        }
    };
    ModelPoint::new(model, coords).map_err(|_| Error::numeric("exp_map left the model domain", f64::NAN))
}

/// Initial velocity of the geodesic from `p` reaching `q` at time 1.
pub fn log_map(p: &ModelPoint, q: &ModelPoint) -> Result<ModelVector> {
    let model = same_model(p, q)?;
    if p.coords == q.coords {
        return Ok(ModelVector::zero(p.clone()));
    }
    let comps = match model {
        ModelId::Euclidean(_) | ModelId::FlatTorusCover(_) => {
            q.coords.iter().zip(&p.coords).map(|(b, a)| b - a).collect()
        }
        ModelId::WarpedXy => warped::log(p.xy(), q.xy())?.to_vec(),
        _ => hyperbolic::log(model, p.xy(), q.xy()).to_vec(),
    };
    ModelVector::new(p.clone(), comps)
}

/// Point at arclength `s` from `p` on the segment `[p, q]`.
pub fn geodesic_point(p: &ModelPoint, q: &ModelPoint, s: f64) -> Result<ModelPoint> {
    let model = same_model(p, q)?;
    let (len, v) = if model.is_hyperbolic() {
        (hyperbolic::distance(model, p.xy(), q.xy()), None)
    } else {
        let v = log_map(p, q)?;
        (v.norm, Some(v))
    };
    let slack = CLOSED_FORM_TOL * (1.0 + len);
    if !(s >= -slack && s <= len + slack) {
        return Err(Error::domain(format!(
            "arclength {s} outside [0, {len}]"
        )));
    }
    if len == 0.0 {
        return Ok(p.clone());
    }
    if s >= len {
        return Ok(q.clone());
    }
    match v {
        Some(v) => exp_map(&v, s.max(0.0) / len),
        None => {
            let (a, b) = hyperbolic::interpolate(model, p.xy(), q.xy(), s);
            ModelPoint::new(model, vec![a, b])
        }
    }
}

/// Point at arclength `s ≥ 0` on the ray from `p` through `q`. Inside the
/// segment this is [`geodesic_point`]; beyond `q` the ray is continued
/// from `q`, so the error does not grow with `d(p, q)`.
pub fn ray_point(p: &ModelPoint, q: &ModelPoint, s: f64) -> Result<ModelPoint> {
    let len = distance(p, q)?;
    if s <= len || len == 0.0 {
        return geodesic_point(p, q, s.min(len));
    }
    let back = log_map(q, p)?;
    exp_map(&back, -(s - len) / len)
}

/// Midpoint of the segment `[p, q]`.
pub fn midpoint(p: &ModelPoint, q: &ModelPoint) -> Result<ModelPoint> {
    if p.model.is_hyperbolic() {
        let d = distance(p, q)?;
        return geodesic_point(p, q, 0.5 * d);
    }
    let v = log_map(p, q)?;
    if v.norm == 0.0 {
        return Ok(p.clone());
    }
    exp_map(&v, 0.5)
}

/// A geodesic segment with its length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicSegment {
    pub model: ModelId,
    pub p: ModelPoint,
    pub q: ModelPoint,
    pub length: f64,
    #[serde(skip)]
    velocity: Option<ModelVector>,
}

impl GeodesicSegment {
    pub fn new(p: &ModelPoint, q: &ModelPoint) -> Result<Self> {
        let v = log_map(p, q)?;
        Ok(GeodesicSegment {
            model: p.model,
            p: p.clone(),
            q: q.clone(),
            length: v.norm,
            velocity: Some(v),
        })
    }

    /// Unit-speed parametrisation; `s` may lie outside `[0, length]`.
    pub fn at(&self, s: f64) -> Result<ModelPoint> {
        if self.length == 0.0 {
            return Ok(self.p.clone());
        }
        let v = match &self.velocity {
            Some(v) => v.clone(),
            None => log_map(&self.p, &self.q)?,
        };
        exp_map(&v, s / self.length)
    }
}

/// Covariant acceleration `D/dt α'` at the interior samples of a uniformly
/// sampled planar curve. `stencil` is 3 or 5; the result pairs each interior
/// sample index with its acceleration vector.
pub fn covariant_acceleration(
    model: ModelId,
    samples: &[Vec<f64>],
    dt: f64,
    stencil: usize,
) -> Result<Vec<(usize, ModelVector)>> {
    if samples.len() < 5 {
        return Err(Error::domain("covariant acceleration needs at least 5 samples"));
    }
    if stencil != 3 && stencil != 5 {
        return Err(Error::domain(format!("unsupported stencil width {stencil}")));
    }
    if model.dim() != 2 && !model.is_flat() {
        return Err(Error::domain("covariant acceleration needs a planar chart"));
    }
    if !(dt > 0.0) {
        return Err(Error::domain("sample spacing must be positive"));
    }
    let n = model.dim();
    let half = stencil / 2;
    let mut out = Vec::with_capacity(samples.len() - 2 * half);
    for i in half..samples.len() - half {
        let c = |k: isize, j: usize| samples[(i as isize + k) as usize][j];
        let mut vel = vec![0.0; n];
        let mut acc = vec![0.0; n];
        for j in 0..n {
            if stencil == 3 {
                vel[j] = (c(1, j) - c(-1, j)) / (2.0 * dt);
                acc[j] = (c(1, j) - 2.0 * c(0, j) + c(-1, j)) / (dt * dt);
            } else {
                vel[j] = (-c(2, j) + 8.0 * c(1, j) - 8.0 * c(-1, j) + c(-2, j)) / (12.0 * dt);
                acc[j] = (-c(2, j) + 16.0 * c(1, j) - 30.0 * c(0, j) + 16.0 * c(-1, j) - c(-2, j))
                    / (12.0 * dt * dt);
            }
        }
        if !model.is_flat() {
            let m = planar_metric(model, samples[i][0], samples[i][1]);
            let g = m.geodesic_accel([vel[0], vel[1]]);
            acc[0] -= g[0];
            acc[1] -= g[1];
        }
        let base = ModelPoint::new(model, samples[i].clone())?;
        out.push((i, ModelVector::new(base, acc)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(m: ModelId, a: f64, b: f64) -> ModelPoint {
        ModelPoint::planar(m, a, b).unwrap()
    }

    #[test]
    fn model_ids_round_trip_through_strings() {
        for m in [
            ModelId::Euclidean(3),
            ModelId::FlatTorusCover(2),
            ModelId::PoincareDisk,
            ModelId::UpperHalfPlane,
            ModelId::WarpedXy,
            ModelId::FermiStrip,
            ModelId::HyperbolicPolar,
        ] {
            assert_eq!(m.to_string().parse::<ModelId>().unwrap(), m);
        }
        assert!("sphere".parse::<ModelId>().is_err());
    }

    #[test]
    fn domain_checks() {
        assert!(ModelPoint::planar(ModelId::PoincareDisk, 1.0, 0.0).is_err());
        assert!(ModelPoint::planar(ModelId::UpperHalfPlane, 0.0, -1.0).is_err());
        assert!(ModelPoint::planar(ModelId::HyperbolicPolar, 0.0, 1.0).is_err());
        assert!(ModelPoint::planar(ModelId::WarpedXy, -50.0, -3.0).is_ok());
    }

    #[test]
    fn basic_distances() {
        let h = ModelId::UpperHalfPlane;
        assert!((distance(&pt(h, 0.0, 1.0), &pt(h, 0.0, 3.0)).unwrap() - 3f64.ln()).abs() < 1e-12);
        let d = ModelId::PoincareDisk;
        assert!((distance(&pt(d, 0.0, 0.0), &pt(d, 0.5, 0.0)).unwrap() - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn exp_examples() {
        let e = ModelId::Euclidean(2);
        let v = ModelVector::new(pt(e, 0.0, 0.0), vec![1.0, 0.0]).unwrap();
        assert_eq!(exp_map(&v, 2.0).unwrap().coords, vec![2.0, 0.0]);
        let h = ModelId::UpperHalfPlane;
        let v = ModelVector::new(pt(h, 0.0, 1.0), vec![0.0, 1.0]).unwrap();
        let q = exp_map(&v, 3f64.ln()).unwrap();
        assert!(q.coords[0].abs() < 1e-12 && (q.coords[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn log_examples() {
        let d = ModelId::PoincareDisk;
        let v = log_map(&pt(d, 0.0, 0.0), &pt(d, 0.5, 0.0)).unwrap();
        assert!((v.norm - 3f64.ln()).abs() < 1e-12);
        assert!(v.components[0] > 0.0 && v.components[1].abs() < 1e-15);
        let p = pt(ModelId::UpperHalfPlane, 0.3, 2.0);
        assert_eq!(log_map(&p, &p).unwrap().norm, 0.0);
    }

    #[test]
    fn midpoints() {
        let e = ModelId::Euclidean(2);
        let m = geodesic_point(&pt(e, 0.0, 0.0), &pt(e, 2.0, 0.0), 1.0).unwrap();
        assert_eq!(m.coords, vec![1.0, 0.0]);
        let h = ModelId::UpperHalfPlane;
        let m = midpoint(&pt(h, 0.0, 1.0), &pt(h, 0.0, 9.0)).unwrap();
        assert!(m.coords[0].abs() < 1e-12 && (m.coords[1] - 3.0).abs() < 1e-12);
        let d = ModelId::PoincareDisk;
        let (p, q) = (pt(d, -0.5, 0.0), pt(d, 0.5, 0.0));
        let half = distance(&p, &q).unwrap() / 2.0;
        let m = geodesic_point(&p, &q, half).unwrap();
        assert!(m.coords[0].abs() < 1e-12 && m.coords[1].abs() < 1e-12);
        assert!(geodesic_point(&p, &q, 3.0 * half).is_err());
    }

    #[test]
    fn covariant_acceleration_examples() {
        let dt = 1e-2;
        let r: f64 = 1.0;
        let polar: Vec<Vec<f64>> = (0..50).map(|k| vec![r, k as f64 * dt / r.cosh()]).collect();
        for (_, a) in covariant_acceleration(ModelId::HyperbolicPolar, &polar, dt, 5).unwrap() {
            assert!((a.components[0] + r.tanh()).abs() < 1e-4 && a.components[1].abs() < 1e-4);
        }
        let line: Vec<Vec<f64>> = (0..50).map(|k| vec![k as f64 * dt, 1.0]).collect();
        for (_, a) in covariant_acceleration(ModelId::UpperHalfPlane, &line, dt, 5).unwrap() {
            assert!(a.components[0].abs() < 1e-4 && (a.components[1] - 1.0).abs() < 1e-4);
        }
        let fermi: Vec<Vec<f64>> = (0..50).map(|k| vec![k as f64 * dt / r.sinh(), r]).collect();
        for (_, a) in covariant_acceleration(ModelId::FermiStrip, &fermi, dt, 3).unwrap() {
            assert!(a.components[0].abs() < 1e-4 && (a.components[1] + 1.0 / r.tanh()).abs() < 1e-4);
        }
        assert!(covariant_acceleration(ModelId::FermiStrip, &fermi[..4], dt, 3).is_err());
    }

    #[test]
    fn vector_norm_matches_metric() {
        let p = pt(ModelId::PoincareDisk, 0.3, -0.4);
        let v = ModelVector::new(p, vec![0.2, 0.7]).unwrap();
        let lam = 2.0 / (1.0 - 0.25);
        assert!((v.norm - lam * (0.04f64 + 0.49).sqrt()).abs() < 1e-12);
        let on = v.orthonormal();
        assert!((on[0].hypot(on[1]) - v.norm).abs() < 1e-12);
    }
}
