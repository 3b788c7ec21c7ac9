//! The `tlbm` command: simulate, plan, bench and validate.

pub mod bench;
pub mod config;
pub mod error;
pub mod plan;
pub mod simulate;
pub mod validate;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use toml::Value;

use config::{BenchConfig, Section, SimulateConfig, ValidateConfig};
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "tlbm", version, about = "Thermal lattice Boltzmann solver and scaling planner")]
pub struct Cli {
    /// TOML file with [simulate], [plan], [bench] and [validate] tables.
    /// Flags override its values.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a simulation.
    Simulate(SimulateArgs),
    /// Predict execution time per step for 1D and 2D tilings.
    Plan(PlanArgs),
    /// Run micro-benchmarks.
    Bench(BenchArgs),
    /// Run a named validation suite.
    Validate(ValidateArgs),
}

#[derive(Debug, Args, Default)]
pub struct SimulateArgs {
    #[arg(long)]
    pub lx: Option<usize>,
    #[arg(long)]
    pub ly: Option<usize>,
    /// D2Q37 or D2Q9.
    #[arg(long)]
    pub velocity_set: Option<String>,
    /// `1d:<np>` or `2d:<nx>x<ny>`.
    #[arg(long)]
    pub tiling: Option<String>,
    /// staged or overlapped.
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long)]
    pub steps: Option<u64>,
    /// rayleigh-taylor, taylor-green, uniform or random.
    #[arg(long)]
    pub preset: Option<String>,
    /// walls or periodic.
    #[arg(long)]
    pub boundary: Option<String>,
    /// soa or aos.
    #[arg(long)]
    pub layout: Option<String>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gx: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gy: Option<f64>,
    #[arg(long)]
    pub t_top: Option<f64>,
    #[arg(long)]
    pub t_bot: Option<f64>,
    #[arg(long)]
    pub eq_order: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub snapshot_every: Option<u64>,
    /// Comma-separated: pgm, csv.
    #[arg(long, value_delimiter = ',')]
    pub snapshot_format: Option<Vec<String>>,
    /// Package power for the energy-per-site estimate.
    #[arg(long)]
    pub tdp_watts: Option<f64>,
    /// Check the configuration and print the plan without running.
    #[arg(long)]
    pub dry_run: bool,
    /// Fill halos with NaN each step and fail if one reaches a site.
    #[arg(long)]
    pub poison_halos: bool,
}

#[derive(Debug, Args, Default)]
pub struct PlanArgs {
    #[arg(long)]
    pub lx: Option<f64>,
    #[arg(long)]
    pub ly: Option<f64>,
    /// Seconds per site update.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Bytes per site in a halo message.
    #[arg(long)]
    pub s: Option<f64>,
    /// Largest processor count; the curve covers `1..=np_max`.
    #[arg(long)]
    pub np_max: Option<usize>,
    /// Explicit processor counts, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub np: Option<Vec<usize>>,
    /// Non-contiguous (row) halo bandwidth in B/s.
    #[arg(long)]
    pub bx: Option<f64>,
    /// Contiguous (column) halo bandwidth in B/s.
    #[arg(long)]
    pub by: Option<f64>,
    /// CSV written by `tlbm bench halo`.
    #[arg(long)]
    pub bandwidth_table: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct BenchArgs {
    /// layout, misalignment, halo; all when omitted.
    pub names: Vec<String>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub velocity_set: Option<String>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Tile edges for the halo benchmark, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub tile_edges: Option<Vec<usize>>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct ValidateArgs {
    /// conservation, rank-invariance, moments, planner-oracle, taylor-green.
    pub suite: Option<String>,
}

fn int(v: Option<impl TryInto<i64>>) -> Result<Option<Value>> {
    v.map(|v| {
        v.try_into().map(Value::Integer).map_err(|_| CliError::Config("integer flag out of range".into()))
    })
    .transpose()
}

fn path(v: &Option<PathBuf>) -> Option<Value> {
    v.as_ref().map(|p| Value::String(p.to_string_lossy().into_owned()))
}

fn strings(v: &Option<Vec<String>>) -> Option<Value> {
    v.as_ref().map(|v| Value::Array(v.iter().cloned().map(Value::String).collect()))
}

fn ints(v: &Option<Vec<usize>>) -> Result<Option<Value>> {
    v.as_ref()
        .map(|v| {
            v.iter()
                .map(|&n| int(Some(n)).map(|x| x.expect("some")))
                .collect::<Result<Vec<_>>>()
                .map(Value::Array)
        })
        .transpose()
}

pub fn simulate_config(section: Section, a: &SimulateArgs) -> Result<SimulateConfig> {
    let mut s = section;
    s.resolve_path("output_dir");
    s.set("lx", int(a.lx)?);
    s.set("ly", int(a.ly)?);
    s.set("velocity_set", a.velocity_set.clone());
    s.set("tiling", a.tiling.clone());
    s.set("schedule", a.schedule.clone());
    s.set("steps", int(a.steps)?);
    s.set("preset", a.preset.clone());
    s.set("boundary", a.boundary.clone());
    s.set("layout", a.layout.clone());
    s.set("tau", a.tau);
    s.set_component("g", 0, a.gx, [0.0, -1e-4])?;
    s.set_component("g", 1, a.gy, [0.0, -1e-4])?;
    s.set("t_top", a.t_top);
    s.set("t_bot", a.t_bot);
    s.set("eq_order", int(a.eq_order)?);
    s.set("seed", int(a.seed)?);
    s.set("amplitude", a.amplitude);
    s.set("output_dir", path(&a.output_dir));
    s.set("snapshot_every", int(a.snapshot_every)?);
    s.set("snapshot_format", strings(&a.snapshot_format));
    s.set("tdp_watts", a.tdp_watts);
    if a.dry_run {
        s.set("dry_run", Some(true));
    }
    if a.poison_halos {
        s.set("poison_halos", Some(true));
    }
    for key in ["lx", "ly"] {
        if !s.table.contains_key(key) {
            return Err(CliError::Config(format!("[simulate] {key} is required (flag --{key})")));
        }
    }
    s.into_typed("simulate")
}

pub fn plan_section(section: Section, a: &PlanArgs) -> Result<Section> {
    let mut s = section;
    s.resolve_path("output_dir");
    s.set("lx", a.lx);
    s.set("ly", a.ly);
    s.set("beta", a.beta);
    s.set("s", a.s);
    s.set("np_max", int(a.np_max)?);
    s.set("np", ints(&a.np)?);
    s.set("bx", a.bx);
    s.set("by", a.by);
    s.set("output_dir", path(&a.output_dir));
    if let Some(p) = &a.bandwidth_table {
        // a flag path is relative to the working directory
        s.table.insert("bandwidth_table".into(), path(&Some(std::path::absolute(p)?)).expect("some"));
    }
    // a flag list replaces a file range and the other way round
    if a.np.is_some() {
        s.table.remove("np_max");
    } else if a.np_max.is_some() {
        s.table.remove("np");
    }
    Ok(s)
}

pub fn bench_config(section: Section, a: &BenchArgs) -> Result<BenchConfig> {
    let mut s = section;
    s.resolve_path("output_dir");
    if !a.names.is_empty() {
        s.set("names", Some(a.names.clone()));
    }
    s.set("reps", int(a.reps)?);
    s.set("warmup", int(a.warmup)?);
    s.set("velocity_set", a.velocity_set.clone());
    s.set("workers", int(a.workers)?);
    s.set("tile_edges", ints(&a.tile_edges)?);
    s.set("output_dir", path(&a.output_dir));
    s.into_typed("bench")
}

pub fn validate_config(section: Section, a: &ValidateArgs) -> Result<ValidateConfig> {
    let mut s = section;
    s.set("suite", a.suite.clone());
    if !s.table.contains_key("suite") {
        return Err(CliError::Config(format!(
            "name a suite: {}",
            validate::SuiteRegistry::builtin().names().join(", ")
        )));
    }
    s.into_typed("validate")
}

/// Runs one parsed command line. Logs go to `log`, validation reports to
/// `out`.
pub fn dispatch(cli: &Cli, out: &mut dyn Write, log: &mut dyn Write) -> Result<()> {
    let path = cli.config.as_deref();
    match &cli.command {
        Command::Simulate(a) => {
            let c = simulate_config(Section::load(path, "simulate")?, a)?;
            simulate::simulate(&c, log).map(|_| ())
        }
        Command::Plan(a) => {
            let s = plan_section(Section::load(path, "plan")?, a)?;
            plan::plan(s, log).map(|_| ())
        }
        Command::Bench(a) => {
            let c = bench_config(Section::load(path, "bench")?, a)?;
            let summary = bench::bench(&c, log)?;
            match summary.gate_passed {
                Some(false) => Err(CliError::Validation("halo bandwidth gate failed".into())),
                _ => Ok(()),
            }
        }
        Command::Validate(a) => {
            let c = validate_config(Section::load(path, "validate")?, a)?;
            validate::validate(&c.suite, out).map(|_| ())
        }
    }
}
