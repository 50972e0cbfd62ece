//! Experiment configuration: a TOML file, overridden by command-line flags.
//!
//! Unknown keys are rejected at every level. The digest is taken over the
//! resolved configuration serialized as sorted-key JSON, so reordering keys
//! in the file does not change it.

use std::path::{Path, PathBuf};

use escortlab::plot::PlotStyle;
use escortlab::ModelId;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    RotationMap,
    RotationFlow,
    PeriodicNorm,
    PastFuture,
    AlignmentEnsemble,
    Magnetic,
    WarpedDemo,
    Semiconj,
    GeometrySuite,
    Plot,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::RotationMap => "rotation-map",
            Command::RotationFlow => "rotation-flow",
            Command::PeriodicNorm => "periodic-norm",
            Command::PastFuture => "past-future",
            Command::AlignmentEnsemble => "alignment-ensemble",
            Command::Magnetic => "magnetic",
            Command::WarpedDemo => "warped-demo",
            Command::Semiconj => "semiconj",
            Command::GeometrySuite => "geometry-suite",
            Command::Plot => "plot",
        }
    }
}

/// Encoding of tabular outputs. Summary records are always JSON lines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

/// A map of the cover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapSpec {
    /// `x ↦ x + v` on the torus cover.
    TorusTranslation { vector: Vec<f64> },
    /// `(x, y) ↦ (x + v₁ + a sin 2πy, y + v₂ + a cos 2πx)` on the 2-torus cover.
    PerturbedTorus { vector: [f64; 2], amplitude: f64 },
    /// `z ↦ (az + b)/(cz + d)` acting on a hyperbolic chart.
    Moebius {
        matrix: [f64; 4],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<ModelId>,
    },
    /// `z ↦ λz` on the half-plane.
    Dilation { factor: f64 },
    /// `(x, y) ↦ (x + t, y)`.
    XShift {
        shift: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<ModelId>,
    },
}

/// A deck transformation, for quotients and periodic orbits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DeckSpec {
    Moebius {
        matrix: [f64; 4],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<ModelId>,
    },
    Dilation { factor: f64 },
    Lattice {
        vector: Vec<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<ModelId>,
    },
    XShift {
        shift: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<ModelId>,
    },
}

/// A flow on a cover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FlowSpec {
    Magnetic { speed: f64 },
    Geodesic {
        point: [f64; 2],
        direction: [f64; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<ModelId>,
    },
    /// `(x, y) ↦ (x + st, y)` on the warped plane.
    WarpedShift { speed: f64 },
    /// Suspension of a torus translation with constant return time.
    Suspension { vector: Vec<f64>, return_time: f64 },
}

/// The ε-cone of two points in the Euclidean plane, for `plot`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub eps: f64,
}

/// Command parameters. Each command reads the keys it needs and ignores the rest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowSpec>,
    /// Deck generator, replacing the map itself as generator of the quotient.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<DeckSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    /// Orthonormal-frame components of the initial direction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
    /// Generators of a random product, as `[a, b, c, d]` rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maps: Option<Vec<[f64; 4]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spread: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instances: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub style: Option<PlotStyle>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cone: Option<ConeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelId>,
    /// Iterations for maps, time for flows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub params: Params,
}

/// Flag values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub horizon: Option<f64>,
    pub tolerance: Option<f64>,
    pub format: Option<Format>,
    pub input: Option<PathBuf>,
    /// `key=value` pairs; dotted keys address nested tables under `params`.
    pub params: Vec<String>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// A TOML value from flag text: anything that parses as a TOML value is
/// taken as one, everything else as a bare string.
fn parse_value(text: &str) -> toml::Value {
    match format!("v = {text}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(text.to_string())),
        Err(_) => toml::Value::String(text.to_string()),
    }
}

fn set_param(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| config_err(format!("parameter `{assignment}` is not of the form key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("bad parameter key `{key}`")));
    }
    let mut cur = table
        .entry("params")
        .or_insert_with(|| toml::Value::Table(toml::Table::new()))
        .as_table_mut()
        .ok_or_else(|| config_err("`params` must be a table"))?;
    for p in &path[..path.len() - 1] {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| config_err(format!("`{p}` in `{key}` is not a table")))?;
    }
    cur.insert(path[path.len() - 1].to_string(), parse_value(value.trim()));
    Ok(())
}

impl ExperimentConfig {
    /// Reads `path` (if any), applies the overrides and checks the result.
    pub fn resolve(command: Command, path: Option<&Path>, ov: &Overrides) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text =
                    std::fs::read_to_string(p).map_err(|e| config_err(format!("{}: {e}", p.display())))?;
                text.parse::<toml::Table>().map_err(|e| config_err(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        let name = toml::Value::String(command.name().to_string());
        match table.get("command") {
            Some(c) if c != &name => {
                return Err(config_err(format!("config is for {c}, but `{}` was requested", command.name())));
            }
            _ => {
                table.insert("command".into(), name);
            }
        }
        for a in &ov.params {
            set_param(&mut table, a)?;
        }
        let mut cfg: ExperimentConfig = table.try_into().map_err(|e: toml::de::Error| config_err(e.to_string()))?;
        if ov.out.is_some() {
            cfg.out = ov.out.clone();
        }
        if let Some(s) = ov.seed {
            cfg.seed = s;
        }
        if ov.horizon.is_some() {
            cfg.horizon = ov.horizon;
        }
        if ov.tolerance.is_some() {
            cfg.tolerance = ov.tolerance;
        }
        if let Some(f) = ov.format {
            cfg.format = f;
        }
        if ov.input.is_some() {
            cfg.input = ov.input.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(h) = self.horizon {
            if !(h > 0.0) || !h.is_finite() {
                return Err(config_err(format!("horizon must be positive, got {h}")));
            }
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0) || !t.is_finite() {
                return Err(config_err(format!("tolerance must be positive, got {t}")));
            }
        }
        if let Some(p) = &self.input {
            if !p.is_file() {
                return Err(config_err(format!("input file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// Sorted-key JSON of the resolved configuration.
    pub fn canonical_json(&self) -> serde_json::Value {
        // serde_json maps are ordered by key, so the value is canonical
        serde_json::to_value(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical JSON without `out`: where results go is not
    /// part of the experiment.
    pub fn digest(&self) -> String {
        let mut v = self.canonical_json();
        if let Some(m) = v.as_object_mut() {
            m.remove("out");
        }
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }

    /// Horizon as an iteration count.
    pub fn iterations(&self, default: usize) -> Result<usize, CliError> {
        match self.horizon {
            None => Ok(default),
            Some(h) if h.fract() == 0.0 && h >= 1.0 => Ok(h as usize),
            Some(h) => Err(config_err(format!("{} needs an integer horizon, got {h}", self.command.name()))),
        }
    }

    pub fn time(&self, default: f64) -> f64 {
        self.horizon.unwrap_or(default)
    }
}
