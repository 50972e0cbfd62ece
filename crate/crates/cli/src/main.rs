//! `escortlab`: runs one experiment per invocation and records what it did.
//!
//! Exit status: 0 success, 2 a checked property failed, 3 numeric or
//! evaluation error, 4 bad configuration or input.

mod commands;
mod config;
mod spec;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use config::{Command, ExperimentConfig, Format, Overrides};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(escortlab::Error),
    Io(String),
}

impl From<escortlab::Error> for CliError {
    fn from(e: escortlab::Error) -> Self {
        CliError::Numeric(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Numeric(_) => 3,
            CliError::Config(_) | CliError::Io(_) => 4,
        }
    }
}

#[derive(Parser)]
#[command(name = "escortlab", version, about = "Rotation vectors, escorts and Busemann functions on model spaces")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Iterations for maps, time for flows.
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Encoding of tabular outputs.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Input file (for `plot`).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Parameter override `key=value`; dotted keys reach nested tables.
    #[arg(long = "param", short = 'p')]
    params: Vec<String>,
}

#[derive(Subcommand)]
enum Sub {
    /// Rotation vector of a lifted map.
    RotationMap(Common),
    /// Rotation vector of a lifted flow.
    RotationFlow(Common),
    /// Norm of a periodic orbit against its deck translation length.
    PeriodicNorm(Common),
    /// Forward and backward rotation vectors at one point.
    PastFuture(Common),
    /// Alignment statistic over an ensemble of random Möbius products.
    AlignmentEnsemble(Common),
    /// Magnetic trajectory with its classification.
    Magnetic(Common),
    /// Distances and escorts of the x-shift on the warped plane.
    WarpedDemo(Common),
    /// Time cocycle of a flow against the geodesic flow.
    Semiconj(Common),
    /// Property suites for every model.
    GeometrySuite(Common),
    /// SVG figure of a trajectory file or a Euclidean cone.
    Plot(Common),
    /// Runs again from a `run.json` record.
    Rerun {
        record: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct OutputEntry {
    path: String,
    bytes: usize,
    sha256: String,
}

/// Written to `run.json` beside the outputs.
#[derive(Debug, Serialize, Deserialize)]
struct RunRecord {
    tool: String,
    version: String,
    command: Command,
    config: ExperimentConfig,
    config_digest: String,
    wall_time_s: f64,
    exit_code: u8,
    status: String,
    failures: Vec<String>,
    outputs: Vec<OutputEntry>,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    escortlab::io::write_atomic(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn set_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("ESCORTLAB_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Config(format!("ESCORTLAB_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn resolve(sub: Sub) -> Result<ExperimentConfig, CliError> {
    let (command, common) = match sub {
        Sub::Rerun { record, out } => {
            let text = std::fs::read_to_string(&record).map_err(|e| CliError::Config(format!("{}: {e}", record.display())))?;
            let rec: RunRecord =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", record.display())))?;
            let mut cfg = rec.config;
            if out.is_some() {
                cfg.out = out;
            }
            cfg.validate()?;
            return Ok(cfg);
        }
        Sub::RotationMap(c) => (Command::RotationMap, c),
        Sub::RotationFlow(c) => (Command::RotationFlow, c),
        Sub::PeriodicNorm(c) => (Command::PeriodicNorm, c),
        Sub::PastFuture(c) => (Command::PastFuture, c),
        Sub::AlignmentEnsemble(c) => (Command::AlignmentEnsemble, c),
        Sub::Magnetic(c) => (Command::Magnetic, c),
        Sub::WarpedDemo(c) => (Command::WarpedDemo, c),
        Sub::Semiconj(c) => (Command::Semiconj, c),
        Sub::GeometrySuite(c) => (Command::GeometrySuite, c),
        Sub::Plot(c) => (Command::Plot, c),
    };
    let ov = Overrides {
        out: common.out,
        seed: common.seed,
        horizon: common.horizon,
        tolerance: common.tolerance,
        format: common.format,
        input: common.input,
        params: common.params,
    };
    ExperimentConfig::resolve(command, common.config.as_deref(), &ov)
}

fn execute(cfg: &ExperimentConfig, started: Instant) -> Result<u8, CliError> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let (outcome, code, status) = match commands::run(cfg) {
        Ok(o) if o.failures.is_empty() => (o, 0, "ok".to_string()),
        Ok(o) => (o, 2, "checks failed".to_string()),
        Err(e) => {
            let code = e.code();
            (commands::Outcome::default(), code, e.to_string())
        }
    };
    let mut outputs = Vec::new();
    for o in &outcome.outputs {
        write_file(&dir.join(&o.name), &o.bytes)?;
        outputs.push(OutputEntry { path: o.name.clone(), bytes: o.bytes.len(), sha256: hex::encode(Sha256::digest(&o.bytes)) });
    }
    let record = RunRecord {
        tool: "escortlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cfg.command,
        config: cfg.clone(),
        config_digest: cfg.digest(),
        wall_time_s: started.elapsed().as_secs_f64(),
        exit_code: code,
        status: status.clone(),
        failures: outcome.failures.clone(),
        outputs,
    };
    let mut text = serde_json::to_string_pretty(&serde_json::to_value(&record).map_err(|e| CliError::Io(e.to_string()))?)
        .map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_file(&dir.join("run.json"), text.as_bytes())?;
    for f in &outcome.failures {
        eprintln!("check failed: {f}");
    }
    if code != 0 && code != 2 {
        eprintln!("escortlab: {status}");
    }
    Ok(code)
}

fn main() -> ExitCode {
    let started = Instant::now();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 4 } else { 0 });
        }
    };
    let result = set_threads().and_then(|_| resolve(cli.command)).and_then(|cfg| execute(&cfg, started));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("escortlab: {e}");
            ExitCode::from(e.code())
        }
    }
}
