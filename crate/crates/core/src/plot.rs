//! Deterministic SVG figures of planar trajectories.
//!
//! The canvas size, palette and number formatting are fixed, so the same
//! input always produces the same bytes.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::hyperbolic::{cayley, to_uhp};
use crate::geometry::ModelPoint;

pub const CANVAS: f64 = 640.0;
const MARGIN: f64 = 32.0;
const PALETTE: [&str; 6] = ["#1f5fa8", "#c0392b", "#2e8b57", "#8e44ad", "#d35400", "#555555"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotStyle {
    /// Poincaré disk with its boundary circle.
    Disk,
    /// Upper half-plane with the real axis as boundary.
    HalfPlane,
    /// Raw chart coordinates.
    Xy,
}

impl FromStr for PlotStyle {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disk" => Ok(PlotStyle::Disk),
            "half-plane" => Ok(PlotStyle::HalfPlane),
            "xy" => Ok(PlotStyle::Xy),
            _ => Err(Error::Parse(format!("unknown plot style `{s}` (disk, half-plane, xy)"))),
        }
    }
}

/// A polyline in figure coordinates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Curve {
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub style: PlotStyle,
    pub title: Option<String>,
    pub curves: Vec<Curve>,
}

impl Figure {
    pub fn new(style: PlotStyle) -> Self {
        Figure { style, title: None, curves: Vec::new() }
    }

    pub fn with_curve(mut self, curve: Curve) -> Self {
        self.curves.push(curve);
        self
    }
}

/// Position of `p` in the coordinates of `style`.
///
/// Hyperbolic charts can be drawn in any style; flat and warped charts only as `xy`.
pub fn figure_coords(p: &ModelPoint, style: PlotStyle) -> Result<(f64, f64)> {
    let model = p.model;
    match style {
        PlotStyle::Xy => Ok((p.coords[0], p.coords.get(1).copied().unwrap_or(0.0))),
        _ if !model.is_hyperbolic() => {
            Err(Error::UnsupportedModel { op: "plot in a hyperbolic style", model: model.to_string() })
        }
        PlotStyle::HalfPlane => {
            let z = to_uhp(model, p.xy());
            Ok((z.re, z.im))
        }
        PlotStyle::Disk => {
            let w = cayley(to_uhp(model, p.xy()));
            Ok((w.re, w.im))
        }
    }
}

/// Boundary of the ε-cone `[x, y]_ε` in the Euclidean plane.
///
/// In polar coordinates about `x`, measured from the direction of `y`, the
/// boundary is `r(θ) = 2L(cos θ − e^{−ε}) / (1 − e^{−2ε})` for `cos θ ≥ e^{−ε}`.
pub fn euclidean_cone_outline(x: (f64, f64), y: (f64, f64), eps: f64, samples: usize) -> Curve {
    let (dx, dy) = (y.0 - x.0, y.1 - x.1);
    let len = dx.hypot(dy);
    if eps <= 0.0 || len == 0.0 {
        return Curve { points: vec![x, y], closed: false };
    }
    let base = dy.atan2(dx);
    let k = (-eps).exp();
    let half = k.acos();
    let n = samples.max(4);
    let points = (0..=n)
        .map(|i| {
            let th = -half + 2.0 * half * i as f64 / n as f64;
            let r = (2.0 * len * (th.cos() - k) / (1.0 - k * k)).max(0.0);
            let a = base + th;
            (x.0 + r * a.cos(), x.1 + r * a.sin())
        })
        .collect();
    Curve { points, closed: true }
}

struct View {
    x0: f64,
    y0: f64,
    side: f64,
}

impl View {
    fn px(&self, p: (f64, f64)) -> (f64, f64) {
        let s = (CANVAS - 2.0 * MARGIN) / self.side;
        (MARGIN + (p.0 - self.x0) * s, CANVAS - MARGIN - (p.1 - self.y0) * s)
    }

    fn contains_x(&self, x: f64) -> bool {
        x >= self.x0 && x <= self.x0 + self.side
    }

    fn contains_y(&self, y: f64) -> bool {
        y >= self.y0 && y <= self.y0 + self.side
    }
}

fn view_for(fig: &Figure) -> View {
    if fig.style == PlotStyle::Disk {
        return View { x0: -1.05, y0: -1.05, side: 2.1 };
    }
    let pts = fig.curves.iter().flat_map(|c| c.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut lo, mut hi) = ((f64::INFINITY, f64::INFINITY), (f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in pts {
        lo = (lo.0.min(p.0), lo.1.min(p.1));
        hi = (hi.0.max(p.0), hi.1.max(p.1));
    }
    if !lo.0.is_finite() {
        lo = (-1.0, -1.0);
        hi = (1.0, 1.0);
    }
    if fig.style == PlotStyle::HalfPlane {
        lo.1 = 0.0;
        hi.1 = hi.1.max(1e-9);
    }
    let side = (hi.0 - lo.0).max(hi.1 - lo.1).max(1e-9) * 1.1;
    let cx = 0.5 * (lo.0 + hi.0);
    let y0 = if fig.style == PlotStyle::HalfPlane { -0.05 * side / 1.1 } else { 0.5 * (lo.1 + hi.1) - 0.5 * side };
    View { x0: cx - 0.5 * side, y0, side }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn line(out: &mut String, a: (f64, f64), b: (f64, f64), stroke: &str, width: f64) {
    let _ = writeln!(
        out,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{stroke}" stroke-width="{width:.2}"/>"#,
        a.0, a.1, b.0, b.1
    );
}

/// Splits at non-finite points so a chart exit does not draw a spurious segment.
fn finite_runs(points: &[(f64, f64)]) -> Vec<&[(f64, f64)]> {
    points.split(|p| !(p.0.is_finite() && p.1.is_finite())).filter(|r| !r.is_empty()).collect()
}

pub fn render_svg(fig: &Figure) -> String {
    let view = view_for(fig);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{c}" height="{c}" viewBox="0 0 {c} {c}">"#,
        c = CANVAS
    );
    if let Some(t) = &fig.title {
        let _ = writeln!(out, "<title>{}</title>", escape(t));
    }
    let _ = writeln!(out, r#"<rect width="{c}" height="{c}" fill="white"/>"#, c = CANVAS);

    let (xa, xb) = (view.x0, view.x0 + view.side);
    let (ya, yb) = (view.y0, view.y0 + view.side);
    if view.contains_y(0.0) {
        let width = if fig.style == PlotStyle::HalfPlane { 1.5 } else { 0.75 };
        let stroke = if fig.style == PlotStyle::HalfPlane { "black" } else { "#999999" };
        line(&mut out, view.px((xa, 0.0)), view.px((xb, 0.0)), stroke, width);
    }
    if view.contains_x(0.0) {
        line(&mut out, view.px((0.0, ya)), view.px((0.0, yb)), "#999999", 0.75);
    }
    if fig.style == PlotStyle::Disk {
        let c = view.px((0.0, 0.0));
        let r = view.px((1.0, 0.0)).0 - c.0;
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{r:.2}" fill="none" stroke="black" stroke-width="1.50"/>"#,
            c.0, c.1
        );
    }

    for (k, curve) in fig.curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let runs = finite_runs(&curve.points);
        let closed = curve.closed && runs.len() == 1;
        for run in runs {
            let mut pts = String::new();
            for (i, p) in run.iter().enumerate() {
                let q = view.px(*p);
                if i > 0 {
                    pts.push(' ');
                }
                let _ = write!(pts, "{:.2},{:.2}", q.0, q.1);
            }
            let tag = if closed { "polygon" } else { "polyline" };
            let _ = writeln!(out, r#"<{tag} points="{pts}" fill="none" stroke="{color}" stroke-width="1.25"/>"#);
        }
    }
    out.push_str("</svg>\n");
    out
}
