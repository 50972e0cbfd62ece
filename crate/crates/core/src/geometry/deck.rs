//! Deck transformations of the covers and path-continuation lifting.

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

use super::hyperbolic::{from_uhp, pull_from_uhp, push_to_uhp, to_uhp};
use super::{distance, ModelId, ModelPoint, ModelVector};
use crate::error::{Error, Result};
use crate::escort::PointSequence;

/// A real 2×2 matrix of determinant 1 acting by `z ↦ (az+b)/(cz+d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moebius {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Moebius {
    pub const IDENTITY: Moebius = Moebius { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    /// Normalises a matrix of positive determinant to determinant 1.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::domain(format!(
                "Möbius matrix [[{a}, {b}], [{c}, {d}]] must have positive determinant"
            )));
        }
        let s = det.sqrt();
        Ok(Moebius { a: a / s, b: b / s, c: c / s, d: d / s })
    }

    /// `z ↦ λ z` for `λ > 0`.
    pub fn dilation(lambda: f64) -> Result<Self> {
        Moebius::new(lambda, 0.0, 0.0, 1.0)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// Hyperbolic translation length `2 acosh(|tr|/2)`, zero if not hyperbolic.
    pub fn translation_length(&self) -> f64 {
        let t = self.trace().abs() / 2.0;
        if t <= 1.0 {
            0.0
        } else {
            2.0 * t.acosh()
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, o: &Moebius) -> Moebius {
        Moebius {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn inverse(&self) -> Moebius {
        Moebius { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn apply(&self, z: C) -> C {
        // real and imaginary parts separately, so a tiny Im z keeps its relative precision
        let den = self.c * z + self.d;
        let q = den.norm_sqr();
        let re = (self.a * z.re + self.b) * (self.c * z.re + self.d) + self.a * self.c * z.im * z.im;
        let im = (self.a * self.d - self.b * self.c) * z.im;
        C::new(re / q, im / q)
    }

    /// Complex derivative at `z`.
    pub fn derivative(&self, z: C) -> C {
        let den = self.c * z + self.d;
        1.0 / (den * den)
    }

    /// Image of a boundary point of the half-plane; `None` stands for ∞.
    pub fn apply_boundary(&self, x: Option<f64>) -> Option<f64> {
        match x {
            None => {
                if self.c == 0.0 {
                    None
                } else {
                    Some(self.a / self.c)
                }
            }
            Some(x) => {
                let den = self.c * x + self.d;
                if den == 0.0 {
                    None
                } else {
                    Some((self.a * x + self.b) / den)
                }
            }
        }
    }
}

/// The group element underlying a deck transformation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum DeckKind {
    LatticeTranslation(Vec<i64>),
    Moebius(Moebius),
    XShift(f64),
}

/// An isometry of a covering model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeckTransformation {
    pub kind: DeckKind,
    pub model: ModelId,
}

impl DeckTransformation {
    pub fn new(kind: DeckKind, model: ModelId) -> Result<Self> {
        let ok = match &kind {
            DeckKind::LatticeTranslation(v) => model.is_flat() && v.len() == model.dim(),
            DeckKind::Moebius(m) => model.is_hyperbolic() && (m.det() - 1.0).abs() < 1e-9,
            DeckKind::XShift(t) => {
                t.is_finite()
                    && matches!(
                        model,
                        ModelId::Euclidean(_)
                            | ModelId::FlatTorusCover(_)
                            | ModelId::UpperHalfPlane
                            | ModelId::WarpedXy
                            | ModelId::FermiStrip
                    )
            }
        };
        if ok {
            Ok(DeckTransformation { kind, model })
        } else {
            Err(Error::domain(format!("{kind:?} is not a deck transformation of {model}")))
        }
    }

    pub fn lattice(v: Vec<i64>, model: ModelId) -> Result<Self> {
        DeckTransformation::new(DeckKind::LatticeTranslation(v), model)
    }

    pub fn moebius(m: Moebius, model: ModelId) -> Result<Self> {
        DeckTransformation::new(DeckKind::Moebius(m), model)
    }

    pub fn x_shift(t: f64, model: ModelId) -> Result<Self> {
        DeckTransformation::new(DeckKind::XShift(t), model)
    }

    pub fn identity(model: ModelId) -> Self {
        let kind = if model.is_flat() {
            DeckKind::LatticeTranslation(vec![0; model.dim()])
        } else if model.is_hyperbolic() {
            DeckKind::Moebius(Moebius::IDENTITY)
        } else {
            DeckKind::XShift(0.0)
        };
        DeckTransformation { kind, model }
    }

    pub fn is_identity(&self) -> bool {
        match &self.kind {
            DeckKind::LatticeTranslation(v) => v.iter().all(|&c| c == 0),
            DeckKind::Moebius(m) => {
                let s = m.a.signum();
                *m == Moebius::IDENTITY
                    || (m.b == 0.0 && m.c == 0.0 && m.a == s && m.d == s)
            }
            DeckKind::XShift(t) => *t == 0.0,
        }
    }

    /// The transformation as a Möbius map of the half-plane, when it is one.
    pub fn as_moebius(&self) -> Option<Moebius> {
        match (&self.kind, self.model) {
            (DeckKind::Moebius(m), _) => Some(*m),
            (DeckKind::XShift(t), ModelId::UpperHalfPlane) => {
                Some(Moebius { a: 1.0, b: *t, c: 0.0, d: 1.0 })
            }
            (DeckKind::XShift(t), ModelId::FermiStrip) => {
                let h = (0.5 * t).exp();
                Some(Moebius { a: h, b: 0.0, c: 0.0, d: 1.0 / h })
            }
            _ => None,
        }
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &DeckTransformation) -> Result<Self> {
        if self.model != other.model {
            return Err(Error::domain("cannot compose deck transformations of different models"));
        }
        let kind = match (&self.kind, &other.kind) {
            (DeckKind::LatticeTranslation(a), DeckKind::LatticeTranslation(b)) => {
                DeckKind::LatticeTranslation(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (DeckKind::XShift(a), DeckKind::XShift(b)) => DeckKind::XShift(a + b),
            _ => match (self.as_moebius(), other.as_moebius()) {
                (Some(a), Some(b)) => DeckKind::Moebius(a.compose(&b)),
                _ => {
                    return Err(Error::domain(format!(
                        "cannot compose {:?} with {:?}",
                        self.kind, other.kind
                    )))
                }
            },
        };
        Ok(DeckTransformation { kind, model: self.model })
    }

    pub fn inverse(&self) -> Self {
        let kind = match &self.kind {
            DeckKind::LatticeTranslation(v) => DeckKind::LatticeTranslation(v.iter().map(|c| -c).collect()),
            DeckKind::Moebius(m) => DeckKind::Moebius(m.inverse()),
            DeckKind::XShift(t) => DeckKind::XShift(-t),
        };
        DeckTransformation { kind, model: self.model }
    }

    /// `self^n` for any integer `n`.
    pub fn power(&self, n: i64) -> Self {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        match &base.kind {
            DeckKind::LatticeTranslation(v) => DeckTransformation {
                kind: DeckKind::LatticeTranslation(v.iter().map(|c| c * n.abs()).collect()),
                model: self.model,
            },
            DeckKind::XShift(t) => DeckTransformation {
                kind: DeckKind::XShift(t * n.abs() as f64),
                model: self.model,
            },
            DeckKind::Moebius(_) => {
                let mut acc = DeckTransformation::identity(self.model);
                for _ in 0..n.abs() {
                    acc = acc.compose(&base).expect("same kind");
                }
                acc
            }
        }
    }

    /// Image of a point.
    pub fn apply(&self, p: &ModelPoint) -> Result<ModelPoint> {
        if p.model != self.model {
            return Err(Error::domain(format!(
                "deck transformation of {} applied to a point of {}",
                self.model, p.model
            )));
        }
        p.validate()?;
        let mut coords = p.coords.clone();
        match &self.kind {
            DeckKind::LatticeTranslation(v) => {
                for (c, k) in coords.iter_mut().zip(v) {
                    *c += *k as f64;
                }
            }
            DeckKind::XShift(t) => coords[0] += t,
            DeckKind::Moebius(m) => {
                let hint = if p.model == ModelId::HyperbolicPolar { coords[1] } else { 0.0 };
                let z = m.apply(to_uhp(p.model, p.xy()));
                let (a, b) = from_uhp(p.model, z, hint);
                coords = vec![a, b];
            }
        }
        ModelPoint::new(self.model, coords)
    }

    /// Differential applied to a tangent vector.
    pub fn push(&self, v: &ModelVector) -> Result<ModelVector> {
        let base = self.apply(&v.base)?;
        match &self.kind {
            DeckKind::Moebius(m) => {
                let model = v.base.model;
                let z = to_uhp(model, v.base.xy());
                let dz = push_to_uhp(model, v.base.xy(), [v.components[0], v.components[1]]);
                let w = pull_from_uhp(model, base.xy(), m.derivative(z) * dz);
                ModelVector::new(base, w.to_vec())
            }
            _ => ModelVector::new(base, v.components.clone()),
        }
    }
}

/// `deck_apply(g, p)`.
pub fn deck_apply(g: &DeckTransformation, p: &ModelPoint) -> Result<ModelPoint> {
    g.apply(p)
}

/// A free-reduced word in the generators: letter `k+1` is generator `k`,
/// letter `-(k+1)` its inverse.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeckWord(pub Vec<i32>);

impl DeckWord {
    pub fn push(&mut self, letter: i32) {
        if self.0.last() == Some(&-letter) {
            self.0.pop();
        } else {
            self.0.push(letter);
        }
    }

    pub fn extend(&mut self, letters: &[i32]) {
        for &l in letters {
            self.push(l);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Net exponent of each generator (the abelianised word).
    pub fn exponents(&self, generators: usize) -> Vec<i64> {
        let mut e = vec![0i64; generators];
        for &l in &self.0 {
            e[(l.unsigned_abs() - 1) as usize] += l.signum() as i64;
        }
        e
    }

    /// Evaluates the word as a composition, leftmost letter outermost.
    pub fn evaluate(&self, model: ModelId, generators: &[DeckTransformation]) -> Result<DeckTransformation> {
        let mut acc = DeckTransformation::identity(model);
        for &l in &self.0 {
            let g = &generators[(l.unsigned_abs() - 1) as usize];
            let g = if l > 0 { g.clone() } else { g.inverse() };
            acc = acc.compose(&g)?;
        }
        Ok(acc)
    }
}

/// A cover given by its model and deck generators.
#[derive(Debug, Clone)]
pub struct Cover {
    pub model: ModelId,
    pub generators: Vec<DeckTransformation>,
}

/// Options for [`lift_orbit`].
#[derive(Debug, Clone, Copy)]
pub struct LiftOptions {
    /// Upper bound on the distance between consecutive lifted points.
    pub step_bound: f64,
    /// Longest generator word tried at each step.
    pub max_word: usize,
}

impl Default for LiftOptions {
    fn default() -> Self {
        LiftOptions { step_bound: 0.5, max_word: 2 }
    }
}

/// Result of [`lift_orbit`].
#[derive(Debug, Clone)]
pub struct LiftedOrbit {
    pub sequence: PointSequence,
    pub word: DeckWord,
    pub deck: DeckTransformation,
}

fn words_up_to(generators: usize, max_len: usize) -> Vec<Vec<i32>> {
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for g in 1..=generators as i32 {
                for l in [g, -g] {
                    if (w as &Vec<i32>).last() == Some(&-l) {
                        continue;
                    }
                    let mut nw = w.clone();
                    nw.push(l);
                    next.push(nw);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Lifts a base orbit by path continuation. Base points are given as
/// representatives in the cover; each is replaced by the translate
/// `W·g·b_k` closest to the previous lift, where `g` ranges over short
/// generator words and `W` is the accumulated deck transformation.
pub fn lift_orbit(
    cover: &Cover,
    base_orbit: &[ModelPoint],
    times: Option<&[f64]>,
    opts: LiftOptions,
) -> Result<LiftedOrbit> {
    if base_orbit.is_empty() {
        return Err(Error::domain("cannot lift an empty orbit"));
    }
    for g in &cover.generators {
        if g.model != cover.model {
            return Err(Error::domain("generator model does not match the cover"));
        }
    }
    let words = words_up_to(cover.generators.len(), opts.max_word);
    let word_maps: Vec<DeckTransformation> = words
        .iter()
        .map(|w| DeckWord(w.clone()).evaluate(cover.model, &cover.generators))
        .collect::<Result<_>>()?;
    let mut acc = DeckTransformation::identity(cover.model);
    let mut word = DeckWord::default();
    let mut points = Vec::with_capacity(base_orbit.len());
    points.push(base_orbit[0].clone());
    for (k, b) in base_orbit.iter().enumerate().skip(1) {
        if b.model != cover.model {
            return Err(Error::domain("base point model does not match the cover"));
        }
        let prev = points.last().expect("nonempty");
        let mut best: Option<(f64, usize, ModelPoint)> = None;
        for (i, g) in word_maps.iter().enumerate() {
            let cand = acc.compose(g)?.apply(b)?;
            let d = distance(prev, &cand)?;
            if best.as_ref().is_none_or(|(bd, _, _)| d < *bd) {
                best = Some((d, i, cand));
            }
        }
        let (d, i, cand) = best.expect("identity word is always a candidate");
        if d >= opts.step_bound {
            return Err(Error::Lift {
                index: k,
                message: format!("nearest translate is {d} away, bound is {}", opts.step_bound),
            });
        }
        acc = acc.compose(&word_maps[i])?;
        word.extend(&words[i]);
        points.push(cand);
    }
    let times = match times {
        Some(t) => t.to_vec(),
        None => (0..base_orbit.len()).map(|k| k as f64).collect(),
    };
    Ok(LiftedOrbit {
        sequence: PointSequence::new(cover.model, points, times)?,
        word,
        deck: acc,
    })
}
