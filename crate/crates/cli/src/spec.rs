//! Turns configuration entries into systems, flows and points.

use std::f64::consts::TAU;
use std::sync::Arc;

use escortlab::flows::magnetic::axis_adapted_start;
use escortlab::flows::{FlowState, GeodesicFlow, MagneticFlow, ShiftFlow, SuspensionFlow};
use escortlab::rotation::{CoveredSystem, LiftedFlow};
use escortlab::{DeckTransformation, ModelId, ModelPoint, ModelVector, Moebius};

use crate::config::{DeckSpec, FlowSpec, MapSpec, Params};
use crate::CliError;

/// A convenient start point of each chart.
pub fn chart_origin(model: ModelId) -> Result<ModelPoint, CliError> {
    let coords = match model {
        ModelId::UpperHalfPlane => vec![0.0, 1.0],
        ModelId::HyperbolicPolar => vec![1.0, 0.0],
        m => vec![0.0; m.dim()],
    };
    Ok(ModelPoint::new(model, coords)?)
}

fn hyperbolic(model: Option<ModelId>) -> Result<ModelId, CliError> {
    let m = model.unwrap_or(ModelId::UpperHalfPlane);
    if !m.is_hyperbolic() {
        return Err(CliError::Config(format!("Möbius maps act on hyperbolic charts, not {m}")));
    }
    Ok(m)
}

fn moebius(m: [f64; 4]) -> Result<Moebius, CliError> {
    Moebius::new(m[0], m[1], m[2], m[3]).map_err(|e| CliError::Config(e.to_string()))
}

pub fn build_deck(spec: &DeckSpec) -> Result<DeckTransformation, CliError> {
    let g = match spec {
        DeckSpec::Moebius { matrix, model } => DeckTransformation::moebius(moebius(*matrix)?, hyperbolic(*model)?),
        DeckSpec::Dilation { factor } => {
            Moebius::dilation(*factor).and_then(|g| DeckTransformation::moebius(g, ModelId::UpperHalfPlane))
        }
        DeckSpec::Lattice { vector, model } => {
            let m = model.unwrap_or(ModelId::FlatTorusCover(vector.len()));
            DeckTransformation::lattice(vector.clone(), m)
        }
        DeckSpec::XShift { shift, model } => DeckTransformation::x_shift(*shift, model.unwrap_or(ModelId::WarpedXy)),
    };
    g.map_err(|e| CliError::Config(e.to_string()))
}

/// The system of `params.map`, with `params.rho` (if given) as deck generator.
pub fn build_map(params: &Params) -> Result<CoveredSystem, CliError> {
    let spec = params.map.as_ref().ok_or_else(|| CliError::Config("missing `params.map`".into()))?;
    let rho = params.rho.as_ref().map(build_deck).transpose()?;
    let isometry = |g: DeckTransformation, name: String| {
        let deck = vec![rho.clone().unwrap_or_else(|| g.clone())];
        CoveredSystem::isometry(g, deck, name)
    };
    let sys = match spec {
        MapSpec::TorusTranslation { vector } => CoveredSystem::torus_translation(vector.clone()),
        MapSpec::PerturbedTorus { vector, amplitude } => {
            let t = ModelId::FlatTorusCover(2);
            let (v, a) = (*vector, *amplitude);
            let lift = Arc::new(move |p: &ModelPoint| {
                let c = &p.coords;
                ModelPoint::new(t, vec![c[0] + v[0] + a * (TAU * c[1]).sin(), c[1] + v[1] + a * (TAU * c[0]).cos()])
            });
            let deck: Result<Vec<_>, _> = [vec![1, 0], vec![0, 1]].into_iter().map(|e| DeckTransformation::lattice(e, t)).collect();
            deck.and_then(|deck| CoveredSystem::new(t, deck, lift, None, "perturbed translation"))
        }
        MapSpec::Moebius { matrix, model } => {
            DeckTransformation::moebius(moebius(*matrix)?, hyperbolic(*model)?)
                .and_then(|g| isometry(g, format!("möbius {matrix:?}")))
        }
        MapSpec::Dilation { factor } => {
            Moebius::dilation(*factor)
                .and_then(|g| DeckTransformation::moebius(g, ModelId::UpperHalfPlane))
                .and_then(|g| isometry(g, format!("z -> {factor} z")))
        }
        MapSpec::XShift { shift, model } => {
            DeckTransformation::x_shift(*shift, model.unwrap_or(ModelId::WarpedXy))
                .and_then(|g| isometry(g, format!("x-shift by {shift}")))
        }
    };
    sys.map_err(|e| CliError::Config(e.to_string()))
}

/// `params.point` in the chart of `model`, or the chart origin.
pub fn start_point(params: &Params, model: ModelId) -> Result<ModelPoint, CliError> {
    match &params.point {
        Some(c) => ModelPoint::new(model, c.clone()).map_err(|e| CliError::Config(e.to_string())),
        None => chart_origin(model),
    }
}

/// Start of a magnetic trajectory of speed `v`.
///
/// Without an explicit point, supercritical speeds start in the Fermi chart
/// of their axis (well conditioned for long horizons) and the others at the
/// disk origin.
pub fn magnetic_start(params: &Params, model: Option<ModelId>, v: f64) -> Result<FlowState, CliError> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(CliError::Config(format!("magnetic speed must be positive, got {v}")));
    }
    if params.point.is_none() && model.is_none() && v > 1.0 {
        return Ok(axis_adapted_start(v)?);
    }
    let model = model.unwrap_or(ModelId::PoincareDisk);
    if !model.is_hyperbolic() {
        return Err(CliError::Config(format!("the magnetic flow lives on hyperbolic charts, not {model}")));
    }
    let p = start_point(params, model)?;
    let dir = params.direction.clone().unwrap_or_else(|| vec![1.0, 0.0]);
    let len = dir.iter().map(|c| c * c).sum::<f64>().sqrt();
    if dir.len() != 2 || !(len > 0.0) {
        return Err(CliError::Config("direction must be a nonzero pair".into()));
    }
    let u: Vec<f64> = dir.iter().map(|c| c * v / len).collect();
    Ok(FlowState::new(ModelVector::from_orthonormal(p, &u)?))
}

/// The flow of `params.flow` and its time reversal, where one is available.
pub fn build_flow(
    params: &Params,
    model: Option<ModelId>,
) -> Result<(Box<dyn LiftedFlow>, Option<Box<dyn LiftedFlow>>), CliError> {
    let spec = params.flow.as_ref().ok_or_else(|| CliError::Config("missing `params.flow`".into()))?;
    Ok(match spec {
        FlowSpec::Magnetic { speed } => {
            let f = MagneticFlow::new(magnetic_start(params, model, *speed)?);
            let back = f.reversed();
            (Box::new(f), Some(Box::new(back)))
        }
        FlowSpec::Geodesic { point, direction, model: m } => {
            let p = ModelPoint::planar(m.unwrap_or(ModelId::UpperHalfPlane), point[0], point[1])
                .map_err(|e| CliError::Config(e.to_string()))?;
            let u = ModelVector::from_orthonormal(p, direction)?;
            let back = GeodesicFlow { start: u.scaled(-1.0) };
            (Box::new(GeodesicFlow { start: u }), Some(Box::new(back)))
        }
        FlowSpec::WarpedShift { speed } => {
            let o = chart_origin(ModelId::WarpedXy)?;
            let back = ShiftFlow { start: o.clone(), speed: -speed };
            (Box::new(ShiftFlow { start: o, speed: *speed }), Some(Box::new(back)))
        }
        FlowSpec::Suspension { vector, return_time } => {
            let system = CoveredSystem::torus_translation(vector.clone()).map_err(|e| CliError::Config(e.to_string()))?;
            let start = chart_origin(system.model)?;
            (Box::new(SuspensionFlow { system, start, return_time: *return_time }), None)
        }
    })
}
