//! One function per subcommand. Each returns the files to write and the
//! list of failed checks; it writes nothing itself.

use std::f64::consts::PI;
use std::path::Path;

use escortlab::boundary::orbit_boundary_limits;
use escortlab::ergodic::{alignment_ensemble_check, MoebiusWalk};
use escortlab::escort::AlignmentOptions;
use escortlab::flows::magnetic::{detect_period, max_step};
use escortlab::flows::semiconjugacy::build_semiconjugacy;
use escortlab::flows::{classify_magnetic, magnetic_trajectory, MagneticRegime, Trajectory};
use escortlab::geometry::{distance, warped};
use escortlab::io::{write_jsonl, write_sequence_csv, write_trajectory_csv, Sidecar};
use escortlab::plot::{euclidean_cone_outline, figure_coords, render_svg, Curve, Figure, PlotStyle};
use escortlab::rotation::{
    past_future_compare, periodic_norm, rotation_vector_flow, rotation_vector_map, translation_length,
    PeriodicOrbitSpec, RotationOptions, SearchBox,
};
use escortlab::suite::{busemann_suite, geometry_suite, SuiteOptions, ALL_MODELS, BUSEMANN_MODELS};
use escortlab::{ModelId, ModelPoint, Moebius, PointSequence};
use serde::Serialize;
use serde_json::json;

use crate::config::{Command, ExperimentConfig, FlowSpec, Format};
use crate::spec::{build_deck, build_flow, build_map, magnetic_start, start_point};
use crate::CliError;

/// A file to be written under the output directory.
pub struct Output {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Default)]
pub struct Outcome {
    pub outputs: Vec<Output>,
    /// Checks that did not hold; any entry makes the run exit with status 2.
    pub failures: Vec<String>,
}

impl Outcome {
    fn push(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.outputs.push(Output { name: name.into(), bytes });
    }

    fn record<T: Serialize>(&mut self, name: &str, records: &[T]) -> Result<(), CliError> {
        let mut buf = Vec::new();
        write_jsonl(records, &mut buf)?;
        self.push(format!("{name}.jsonl"), buf);
        Ok(())
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(msg());
        }
    }

    fn sidecar(&mut self, name: &str, model: ModelId, rows: usize) -> Result<(), CliError> {
        let text = toml::to_string(&Sidecar { model, rows }).map_err(|e| CliError::Io(e.to_string()))?;
        self.push(format!("{name}.meta.toml"), text.into_bytes());
        Ok(())
    }

    /// A point sequence as CSV with its sidecar, or as JSON lines.
    fn sequence(&mut self, name: &str, seq: &PointSequence, format: Format) -> Result<(), CliError> {
        match format {
            Format::Csv => {
                let mut buf = Vec::new();
                write_sequence_csv(seq, &mut buf)?;
                self.push(format!("{name}.csv"), buf);
                self.sidecar(name, seq.model, seq.points.len())
            }
            Format::Jsonl => {
                let rows: Vec<_> = seq.times.iter().zip(&seq.points).map(|(t, p)| json!({"t": t, "coords": p.coords})).collect();
                self.record(name, &rows)
            }
        }
    }

    fn trajectory(&mut self, name: &str, traj: &Trajectory, format: Format) -> Result<(), CliError> {
        match format {
            Format::Csv => {
                let mut buf = Vec::new();
                write_trajectory_csv(traj, &mut buf)?;
                self.push(format!("{name}.csv"), buf);
                self.sidecar(name, traj.model, traj.states.len())
            }
            Format::Jsonl => {
                let rows: Vec<_> = traj
                    .times
                    .iter()
                    .zip(&traj.states)
                    .map(|(t, s)| json!({"t": t, "coords": s.position.coords, "velocity": s.velocity.components}))
                    .collect();
                self.record(name, &rows)
            }
        }
    }

    /// Rows of any serializable struct as CSV (header from field names) or JSON lines.
    fn table<T: Serialize>(&mut self, name: &str, rows: &[T], format: Format) -> Result<(), CliError> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                for r in rows {
                    w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
                }
                let buf = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
                self.push(format!("{name}.csv"), buf);
                Ok(())
            }
            Format::Jsonl => self.record(name, rows),
        }
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        Command::RotationMap => rotation_map(cfg),
        Command::RotationFlow => rotation_flow(cfg),
        Command::PeriodicNorm => periodic(cfg),
        Command::PastFuture => past_future(cfg),
        Command::AlignmentEnsemble => alignment(cfg),
        Command::Magnetic => magnetic(cfg),
        Command::WarpedDemo => warped_demo(cfg),
        Command::Semiconj => semiconj(cfg),
        Command::GeometrySuite => suite(cfg),
        Command::Plot => plot(cfg),
    }
}

fn map_options(cfg: &ExperimentConfig, default: usize) -> Result<RotationOptions, CliError> {
    let stride = cfg.params.stride.unwrap_or(1);
    if stride == 0 {
        return Err(CliError::Config("stride must be positive".into()));
    }
    Ok(RotationOptions { horizon: cfg.iterations(default)?, stride, ..Default::default() })
}

fn rotation_map(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let sys = build_map(&cfg.params)?;
    let x = start_point(&cfg.params, sys.model)?;
    let opts = map_options(cfg, 1000)?;
    let est = rotation_vector_map(&sys, &x, &opts)?;
    let mut out = Outcome::default();
    // far-out isometry orbits can leave the range of the chart even though the
    // estimate itself does not need them
    let orbit = sys.orbit(&x, opts.horizon, opts.stride);
    let orbit_note = match &orbit {
        Ok(_) => None,
        Err(e) => Some(format!("orbit not written: {e}")),
    };
    out.record(
        "rotation",
        &[json!({
            "system": sys.description,
            "model": sys.model,
            "vector": est.vector.components,
            "norm": est.norm,
            "direction_defined": est.direction_defined,
            "estimate": est,
            "note": orbit_note,
        })],
    )?;
    if let Ok(seq) = orbit {
        out.sequence("orbit", &seq, cfg.format)?;
    }
    Ok(out)
}

fn rotation_flow(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let (flow, _) = build_flow(&cfg.params, cfg.model)?;
    let horizon = cfg.time(200.0);
    let dt = cfg.params.dt.unwrap_or(1.0);
    let est = rotation_vector_flow(flow.as_ref(), horizon, dt, &AlignmentOptions::default())?;
    let mut out = Outcome::default();
    out.record(
        "rotation",
        &[json!({
            "flow": cfg.params.flow,
            "model": flow.model(),
            "vector": est.vector.components,
            "norm": est.norm,
            "direction_defined": est.direction_defined,
            "estimate": est,
        })],
    )?;
    Ok(out)
}

fn periodic(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let sys = build_map(&cfg.params)?;
    let rho = build_deck(cfg.params.rho.as_ref().ok_or_else(|| CliError::Config("missing `params.rho`".into()))?)?;
    let period = cfg.params.period.unwrap_or(1);
    let x = start_point(&cfg.params, sys.model)?;
    let spec = PeriodicOrbitSpec::new(&sys, x.clone(), period, rho.clone())?;
    let search = SearchBox::default();
    let norm = periodic_norm(&spec, &search)?;
    let rho_length = translation_length(&rho, &search)?;
    let orbit = rotation_vector_map(&sys, &x, &map_options(cfg, 400)?)?;
    let rel = if norm > 0.0 { (orbit.norm - norm).abs() / norm } else { orbit.norm };
    let mut out = Outcome::default();
    out.check(rel < 0.01, || format!("orbit norm {} differs from the periodic norm {norm} by {rel:.2e}", orbit.norm));
    out.record(
        "periodic",
        &[json!({
            "system": sys.description,
            "period": period,
            "periodic_norm": norm,
            "translation_length": rho_length,
            "orbit_norm": orbit.norm,
            "relative_gap": rel,
        })],
    )?;
    Ok(out)
}

fn past_future(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let sys = build_map(&cfg.params)?;
    let x = start_point(&cfg.params, sys.model)?;
    let opts = map_options(cfg, 1000)?;
    let pf = past_future_compare(&sys, &x, &opts)?;
    let boundary = if sys.model.is_hyperbolic() {
        let limits = sys.orbit(&x, opts.horizon, opts.stride).and_then(|fwd| {
            let bwd = sys.inverse_system()?.orbit(&x, opts.horizon, opts.stride)?;
            orbit_boundary_limits(&fwd, &bwd, 5)
        });
        match limits {
            Ok(l) => json!(l),
            Err(e) => json!({"error": e.to_string()}),
        }
    } else {
        serde_json::Value::Null
    };
    let top = pf.forward.norm.max(pf.backward.norm);
    let rel = if top > 0.0 { pf.norm_gap() / top } else { 0.0 };
    let mut out = Outcome::default();
    out.check(rel < 0.02, || format!("forward and backward norms differ by {rel:.2e}"));
    out.record(
        "past_future",
        &[json!({
            "system": sys.description,
            "forward": pf.forward.vector.components,
            "backward": pf.backward.vector.components,
            "forward_norm": pf.forward.norm,
            "backward_norm": pf.backward.norm,
            "relative_gap": rel,
            "angle": pf.angle,
            "boundary": boundary,
        })],
    )?;
    Ok(out)
}

/// Two translations of length 1 whose axes cross perpendicularly at `i`.
fn perpendicular_pair() -> Vec<[f64; 4]> {
    let (e, f) = (0.5f64.exp(), (-0.5f64).exp());
    let (s, c) = (PI / 4.0).sin_cos();
    // r a r⁻¹ with r the rotation by π/4 about i
    let r = [c, s, -s, c];
    let a = [e, 0.0, 0.0, f];
    let mul = |p: [f64; 4], q: [f64; 4]| [p[0] * q[0] + p[1] * q[2], p[0] * q[1] + p[1] * q[3], p[2] * q[0] + p[3] * q[2], p[2] * q[1] + p[3] * q[3]];
    let r_inv = [c, -s, s, c];
    vec![a, mul(mul(r, a), r_inv)]
}

#[derive(Serialize)]
struct SeedRow {
    seed: usize,
    r_hat: f64,
    l_hat: f64,
    escaping: bool,
    aligned: bool,
}

fn alignment(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = &cfg.params;
    let rows = p.maps.clone().unwrap_or_else(perpendicular_pair);
    let maps = rows
        .iter()
        .map(|m| Moebius::new(m[0], m[1], m[2], m[3]))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let walk = MoebiusWalk::with_random_starts(maps, p.seeds.unwrap_or(64), cfg.seed, p.spread.unwrap_or(1.0))
        .map_err(|e| CliError::Config(e.to_string()))?;
    let n = cfg.iterations(2000)?;
    let delta = p.delta.unwrap_or(0.1);
    let min_fraction = p.min_fraction.unwrap_or(0.9);
    let res = alignment_ensemble_check(&walk, n, delta, &AlignmentOptions::default())?;
    let seeds: Vec<SeedRow> = res
        .reports
        .iter()
        .enumerate()
        .map(|(i, r)| SeedRow {
            seed: i,
            r_hat: r.r_hat,
            l_hat: r.l_hat,
            escaping: r.r_hat > escortlab::ergodic::ESCAPE_THRESHOLD,
            aligned: r.r_hat > escortlab::ergodic::ESCAPE_THRESHOLD && r.is_aligned(delta),
        })
        .collect();
    let mut out = Outcome::default();
    out.check(res.fraction >= min_fraction, || {
        format!("{}/{} escaping seeds aligned, below {min_fraction}", res.aligned, res.escaping)
    });
    out.table("seeds", &seeds, cfg.format)?;
    out.record(
        "alignment",
        &[json!({
            "n": n,
            "delta": delta,
            "fraction": res.fraction,
            "escaping": res.escaping,
            "aligned": res.aligned,
            "seeds": seeds.len(),
        })],
    )?;
    Ok(out)
}

fn magnetic(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let v = match (&cfg.params.flow, cfg.params.speed) {
        (Some(FlowSpec::Magnetic { speed }), _) => *speed,
        (_, Some(s)) => s,
        _ => 2.0,
    };
    let start = magnetic_start(&cfg.params, cfg.model, v)?;
    let class = classify_magnetic(v)?;
    let horizon = cfg.time(200.0);
    let dt = cfg.params.dt.unwrap_or_else(|| max_step(v));
    if !(dt > 0.0) || dt > max_step(v) {
        return Err(CliError::Config(format!("dt must lie in (0, {}] for speed {v}", max_step(v))));
    }
    let traj = magnetic_trajectory(&start, horizon, dt)?;
    let last = &traj.states[traj.states.len() - 1].position;
    let rate = distance(&start.position, last)? / horizon;
    let drift = traj.speed_drift();
    let period = if class.regime == MagneticRegime::Subcritical {
        let r = class.radius_or_distance.unwrap_or(0.0);
        Some(detect_period(&start, 1.5 * 2.0 * PI * r.cosh() + 1.0)?)
    } else {
        None
    };
    let tol = cfg.tolerance.unwrap_or(1e-6);
    let mut out = Outcome::default();
    out.check(drift <= tol * (1.0 + horizon), || format!("speed drift {drift:.2e} exceeds {tol:e}·(1 + T)"));

    let steps = traj.states.len() - 1;
    let stride = cfg.params.stride.unwrap_or((steps / 2000).max(1)).max(1);
    let keep: Vec<usize> = (0..=steps).step_by(stride).collect();
    let thinned = Trajectory {
        model: traj.model,
        times: keep.iter().map(|&k| traj.times[k]).collect(),
        states: keep.iter().map(|&k| traj.states[k].clone()).collect(),
    };
    out.trajectory("trajectory", &thinned, cfg.format)?;
    out.record(
        "magnetic",
        &[json!({
            "speed": v,
            "model": traj.model,
            "classification": class,
            "escape_rate": class.escape_rate,
            "measured_rate": rate,
            "horizon": horizon,
            "dt": dt,
            "speed_drift": drift,
            "period": period,
        })],
    )?;
    Ok(out)
}

#[derive(Serialize)]
struct DistanceRow {
    n: f64,
    distance: f64,
    lower: f64,
    upper: f64,
}

fn warped_demo(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let n = cfg.iterations(1000)?;
    let mut sizes: Vec<usize> = std::iter::successors(Some(10usize), |k| k.checked_mul(10)).take_while(|&k| k < n).collect();
    sizes.push(n);
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    for k in sizes {
        let k = k as f64;
        let d = warped::distance((0.0, 0.0), (k, 0.0))?;
        let row = DistanceRow { n: k, distance: d, lower: k, upper: k + 2.0 * k.ln() + 1.0 };
        out.check(d >= row.lower && d <= row.upper, || format!("d((0,0),({k},0)) = {d} outside [{}, {}]", row.lower, row.upper));
        rows.push(row);
    }
    out.table("distances", &rows, cfg.format)?;

    let w = ModelId::WarpedXy;
    let g = escortlab::DeckTransformation::x_shift(1.0, w)?;
    let sys = escortlab::rotation::CoveredSystem::isometry(g.clone(), vec![g], "x-shift on the warped plane")?;
    let stride = cfg.params.stride.unwrap_or((n / 200).max(1));
    let opts = RotationOptions { horizon: n, stride, ..Default::default() };
    let pf = past_future_compare(&sys, &ModelPoint::planar(w, 0.0, 0.0)?, &opts)?;
    out.record(
        "warped",
        &[json!({
            "n": n,
            "forward_norm": pf.forward.norm,
            "backward_norm": pf.backward.norm,
            "forward_direction": pf.forward.vector.unit().orthonormal(),
            "backward_direction": pf.backward.vector.unit().orthonormal(),
        })],
    )?;
    Ok(out)
}

fn semiconj(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut params = cfg.params.clone();
    if params.flow.is_none() {
        params.flow = Some(FlowSpec::Magnetic { speed: params.speed.unwrap_or(2.0) });
    }
    let (flow, back) = build_flow(&params, cfg.model)?;
    let back = back.ok_or_else(|| CliError::Config("this flow has no time reversal".into()))?;
    let horizon = cfg.time(200.0);
    let opts = AlignmentOptions::default();
    let fwd = rotation_vector_flow(flow.as_ref(), horizon, 1.0, &opts)?;
    let bwd = rotation_vector_flow(back.as_ref(), horizon, 1.0, &opts)?;
    let positions = flow.trajectory(horizon / fwd.norm.max(1e-12), params.dt.unwrap_or(0.05))?;
    let data = build_semiconjugacy(&positions, &fwd, &bwd)?;
    let defect = data.cocycle_defect(10)?;
    let tol = cfg.tolerance.unwrap_or(1e-6);
    let mut out = Outcome::default();
    out.check(data.is_strictly_increasing(), || "a(x, ·) is not strictly increasing".into());
    out.check(defect < tol, || format!("cocycle defect {defect:.2e} exceeds {tol:e}"));
    out.table("cocycle", &data.rows(), cfg.format)?;
    out.record(
        "semiconj",
        &[json!({
            "rate": data.rate,
            "final_slope": data.final_slope(),
            "strictly_increasing": data.is_strictly_increasing(),
            "cocycle_defect": defect,
            "lipschitz": data.lipschitz,
            "plus": data.plus,
            "minus": data.minus,
        })],
    )?;
    Ok(out)
}

fn suite(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let instances = cfg.params.instances.unwrap_or(10_000);
    if instances == 0 {
        return Err(CliError::Config("instances must be positive".into()));
    }
    let opts = SuiteOptions {
        instances,
        cone_triples: instances.min(1000),
        busemann_triples: instances.min(1000),
        tolerance: cfg.tolerance.unwrap_or(1e-7),
        seed: cfg.seed,
    };
    let mut checks = geometry_suite(&ALL_MODELS, &opts).checks;
    checks.extend(busemann_suite(&BUSEMANN_MODELS, &opts).checks);
    let mut out = Outcome::default();
    for c in checks.iter().filter(|c| !c.passed()) {
        out.failures.push(format!("{} on {}: {} of {} failed, worst {:e}", c.check, c.model, c.failures, c.instances, c.worst));
    }
    out.table("suite", &checks, cfg.format)?;
    out.record(
        "summary",
        &[json!({"checks": checks.len(), "failed": out.failures.len(), "instances": instances, "tolerance": opts.tolerance})],
    )?;
    Ok(out)
}

/// `(c1, c2)` of every row of a `t,c1,c2,...` CSV.
fn read_positions(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let bad = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    if cols.len() < 3 || cols[0] != "t" || cols[1] != "c1" || cols[2] != "c2" {
        return Err(bad(format!("expected a `t,c1,c2,...` header, found `{}`", cols.join(","))));
    }
    let dim = cols.iter().skip(1).take_while(|c| c.starts_with('c')).count();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let vals = rec
            .iter()
            .skip(1)
            .take(dim)
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad(format!("row {}: `{s}` is not a number", i + 1))))
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(vals);
    }
    Ok(rows)
}

fn plot(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    if let Some(c) = &cfg.params.cone {
        let outline = euclidean_cone_outline((c.x[0], c.x[1]), (c.y[0], c.y[1]), c.eps, 400);
        let mut fig = Figure::new(PlotStyle::Xy).with_curve(outline);
        fig.title = Some(format!("cone [{:?}, {:?}] at ε = {}", c.x, c.y, c.eps));
        out.push("plot.svg", render_svg(&fig).into_bytes());
        return Ok(out);
    }
    let input = cfg.input.as_ref().ok_or_else(|| CliError::Config("plot needs an input file".into()))?;
    let side = escortlab::io::sidecar_path(input);
    let model = if side.is_file() {
        let text = std::fs::read_to_string(&side).map_err(|e| CliError::Config(format!("{}: {e}", side.display())))?;
        let meta: Sidecar = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", side.display())))?;
        meta.model
    } else {
        cfg.model.ok_or_else(|| CliError::Config(format!("no sidecar next to {}; give the model", input.display())))?
    };
    let style = cfg.params.style.unwrap_or(if model.is_hyperbolic() { PlotStyle::Disk } else { PlotStyle::Xy });
    let mut curve = Curve::default();
    for (i, coords) in read_positions(input)?.into_iter().enumerate() {
        let p = ModelPoint::new(model, coords.into_iter().take(model.dim()).collect())
            .map_err(|e| CliError::Config(format!("row {}: {e}", i + 1)))?;
        curve.points.push(figure_coords(&p, style).map_err(|e| CliError::Config(e.to_string()))?);
    }
    let mut fig = Figure::new(style);
    if !curve.points.is_empty() {
        fig = fig.with_curve(curve);
    }
    fig.title = input.file_name().map(|n| n.to_string_lossy().into_owned());
    out.push("plot.svg", render_svg(&fig).into_bytes());
    Ok(out)
}
