//! Configuration files and flag overrides.
//!
//! A file holds one table per subcommand (`[simulate]`, `[plan]`, `[bench]`,
//! `[validate]`). Flags are written into the same table before it is
//! deserialized, so a flag and a file key are interchangeable and unknown
//! keys are rejected either way.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;
use toml::{Table, Value};

use crate::error::{CliError, Result};

const SECTIONS: [&str; 4] = ["simulate", "plan", "bench", "validate"];

/// One subcommand's table plus the directory of the file it came from.
#[derive(Debug, Clone, Default)]
pub struct Section {
    pub table: Table,
    pub base_dir: Option<PathBuf>,
}

impl Section {
    pub fn load(path: Option<&Path>, name: &str) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, name, path.parent().map(Path::to_path_buf))
    }

    pub fn parse(text: &str, name: &str, base_dir: Option<PathBuf>) -> Result<Self> {
        let mut doc: Table = toml::from_str(text).map_err(CliError::config)?;
        if let Some(k) = doc.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
            return Err(CliError::Config(format!(
                "unknown section [{k}] (expected one of {})",
                SECTIONS.join(", ")
            )));
        }
        let table = match doc.remove(name) {
            None => Table::new(),
            Some(Value::Table(t)) => t,
            Some(_) => return Err(CliError::Config(format!("[{name}] must be a table"))),
        };
        Ok(Self { table, base_dir })
    }

    pub fn set(&mut self, key: &str, value: Option<impl Into<Value>>) {
        if let Some(v) = value {
            self.table.insert(key.to_string(), v.into());
        }
    }

    /// Replaces component `i` of a two-element float array, keeping the
    /// other from the table or `default`.
    pub fn set_component(
        &mut self,
        key: &str,
        i: usize,
        value: Option<f64>,
        default: [f64; 2],
    ) -> Result<()> {
        let Some(v) = value else { return Ok(()) };
        let mut pair = match self.table.get(key) {
            Some(existing) => existing
                .clone()
                .try_into::<[f64; 2]>()
                .map_err(|e| CliError::Config(format!("{key}: {e}")))?,
            None => default,
        };
        pair[i] = v;
        self.table.insert(key.into(), Value::Array(pair.iter().map(|&x| Value::Float(x)).collect()));
        Ok(())
    }

    /// Resolves a path key relative to the config file, if it came from one.
    pub fn resolve_path(&mut self, key: &str) {
        if let (Some(Value::String(p)), Some(dir)) = (self.table.get(key), &self.base_dir) {
            let path = Path::new(p);
            if path.is_relative() {
                let joined = dir.join(path).to_string_lossy().into_owned();
                self.table.insert(key.into(), Value::String(joined));
            }
        }
    }

    pub fn into_typed<T: DeserializeOwned>(self, name: &str) -> Result<T> {
        Value::Table(self.table).try_into().map_err(|e| CliError::Config(format!("[{name}] {e}")))
    }
}

fn default_vs() -> String {
    "D2Q37".into()
}
fn default_tiling() -> String {
    "1d:1".into()
}
fn default_schedule() -> String {
    "overlapped".into()
}
fn default_steps() -> u64 {
    100
}
fn default_preset() -> String {
    "rayleigh-taylor".into()
}
fn default_boundary() -> String {
    "walls".into()
}
fn default_layout() -> String {
    "soa".into()
}
fn default_output() -> PathBuf {
    PathBuf::from("tlbm-out")
}
fn default_formats() -> Vec<String> {
    vec!["pgm".into()]
}
fn default_timeout() -> f64 {
    30.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub lx: usize,
    pub ly: usize,
    #[serde(default = "default_vs")]
    pub velocity_set: String,
    /// `1d:<np>` or `2d:<nx>x<ny>`.
    #[serde(default = "default_tiling")]
    pub tiling: String,
    #[serde(default = "default_schedule")]
    pub schedule: String,
    #[serde(default = "default_steps")]
    pub steps: u64,
    #[serde(default = "default_preset")]
    pub preset: String,
    #[serde(default = "default_boundary")]
    pub boundary: String,
    #[serde(default = "default_layout")]
    pub layout: String,
    pub tau: Option<f64>,
    /// Body force; `(0, -1e-4)` when absent.
    pub g: Option<[f64; 2]>,
    pub t_top: Option<f64>,
    pub t_bot: Option<f64>,
    pub eq_order: Option<usize>,
    pub seed: Option<u64>,
    pub amplitude: Option<f64>,
    pub rho0: Option<f64>,
    pub t0: Option<f64>,
    /// `[Hx, Hy]`; the stencil reach when absent.
    pub halo: Option<[usize; 2]>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    pub snapshot_every: Option<u64>,
    /// Any of `pgm`, `csv`.
    #[serde(default = "default_formats")]
    pub snapshot_format: Vec<String>,
    /// Enables the energy-per-site estimate.
    pub tdp_watts: Option<f64>,
    #[serde(default)]
    pub dry_run: bool,
    #[serde(default)]
    pub poison_halos: bool,
    #[serde(default = "default_timeout")]
    pub comm_timeout_s: f64,
}

fn default_plan_output() -> PathBuf {
    PathBuf::from("tlbm-plan")
}

/// `[plan]` keys besides the planner's own.
pub const PLAN_OUTPUT_KEY: &str = "output_dir";

pub fn plan_output_dir(section: &mut Section) -> Result<PathBuf> {
    match section.table.remove(PLAN_OUTPUT_KEY) {
        None => Ok(default_plan_output()),
        Some(Value::String(s)) => Ok(PathBuf::from(s)),
        Some(_) => Err(CliError::Config(format!("[plan] {PLAN_OUTPUT_KEY} must be a string"))),
    }
}

fn default_bench_output() -> PathBuf {
    PathBuf::from("tlbm-bench")
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    /// Benchmarks to run; all when empty.
    #[serde(default)]
    pub names: Vec<String>,
    pub reps: Option<usize>,
    pub warmup: Option<usize>,
    pub velocity_set: Option<String>,
    pub lattice: Option<[usize; 2]>,
    pub workers: Option<usize>,
    pub copy_bytes: Option<usize>,
    pub offsets: Option<Vec<usize>>,
    pub tile_edges: Option<Vec<usize>>,
    #[serde(default = "default_bench_output")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    pub suite: String,
}
