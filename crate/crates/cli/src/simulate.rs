//! `tlbm simulate`: run the engine, write metrics and snapshots.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use tlbm_core::runtime::{decompose, validate_config, RunMetrics};
use tlbm_core::{
    build_velocity_set, run_observed, GlobalState, InitialCondition, Layout, PhysicsParams, PresetOptions,
    PresetRegistry, SimConfig, VelocitySet,
};

use crate::config::SimulateConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotFormat {
    Pgm,
    Csv,
}

fn formats(names: &[String]) -> Result<Vec<SnapshotFormat>> {
    names
        .iter()
        .map(|n| match n.to_ascii_lowercase().as_str() {
            "pgm" => Ok(SnapshotFormat::Pgm),
            "csv" => Ok(SnapshotFormat::Csv),
            other => Err(CliError::Config(format!("unknown snapshot format '{other}' (pgm | csv)"))),
        })
        .collect()
}

/// Engine configuration and initial condition for `c`.
pub fn build(c: &SimulateConfig) -> Result<(SimConfig, Arc<dyn InitialCondition>)> {
    let vs = build_velocity_set(&c.velocity_set)?;
    let mut params = PhysicsParams::defaults_for(&vs);
    if let Some(tau) = c.tau {
        params.tau = tau;
    }
    if let Some(g) = c.g {
        params.g = g;
    }
    if let Some(t) = c.t_top {
        params.t_top = t;
    }
    if let Some(t) = c.t_bot {
        params.t_bot = t;
    }
    if let Some(o) = c.eq_order {
        params.eq_order = o;
    }
    if !(c.comm_timeout_s > 0.0 && c.comm_timeout_s.is_finite()) {
        return Err(CliError::Config(format!("comm_timeout_s = {} must be positive", c.comm_timeout_s)));
    }
    if c.snapshot_every == Some(0) {
        return Err(CliError::Config("snapshot_every must be at least 1".into()));
    }
    if let Some(tdp) = c.tdp_watts {
        if !(tdp > 0.0 && tdp.is_finite()) {
            return Err(CliError::Config(format!("tdp_watts = {tdp} must be positive")));
        }
    }
    let mut cfg = SimConfig::new(c.lx, c.ly, &c.velocity_set)?;
    cfg.tiling = c.tiling.parse()?;
    cfg.schedule = c.schedule.clone();
    cfg.steps = c.steps;
    cfg.params = params;
    cfg.boundary = c.boundary.parse()?;
    cfg.layout = c.layout.parse::<Layout>()?;
    cfg.halo = c.halo.map(|[hx, hy]| (hx, hy));
    cfg.poison_halos = c.poison_halos;
    cfg.snapshot_every = c.snapshot_every;
    cfg.comm_timeout = Duration::from_secs_f64(c.comm_timeout_s);
    validate_config(&cfg)?;
    let defaults = PresetOptions::default();
    let opts = PresetOptions {
        seed: c.seed.unwrap_or(defaults.seed),
        amplitude: c.amplitude,
        rho0: c.rho0.unwrap_or(defaults.rho0),
        t0: c.t0,
    };
    let init = PresetRegistry::builtin().build(&c.preset, &opts)?;
    Ok((cfg, init))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSummary {
    pub metrics: RunMetrics,
    /// `TDP / (sites/s)` in microjoules, when a TDP was given.
    pub energy_uj_per_site: Option<f64>,
    pub files: Vec<PathBuf>,
}

pub fn energy_uj_per_site(tdp_watts: f64, sites_per_second: f64) -> f64 {
    tdp_watts / sites_per_second / 1e-6
}

fn snapshot(
    dir: &Path,
    step: u64,
    state: &GlobalState,
    vs: &VelocitySet,
    formats: &[SnapshotFormat],
    files: &mut Vec<PathBuf>,
) -> tlbm_core::Result<()> {
    let m = state.macro_fields(vs)?;
    for f in formats {
        let path = match f {
            SnapshotFormat::Pgm => dir.join(format!("temperature_{step:08}.pgm")),
            SnapshotFormat::Csv => dir.join(format!("fields_{step:08}.csv")),
        };
        let mut w = BufWriter::new(File::create(&path)?);
        match f {
            SnapshotFormat::Pgm => m.write_temperature_pgm(&mut w)?,
            SnapshotFormat::Csv => m.write_csv(&mut w)?,
        }
        w.flush()?;
        files.push(path);
    }
    Ok(())
}

pub fn write_metrics_csv<W: Write>(m: &RunMetrics, mut w: W) -> std::io::Result<()> {
    writeln!(w, "step,rank,comm_nc [s],comm_c [s],bulk [s],border [s],negative_populations [1]")?;
    for r in &m.records {
        writeln!(
            w,
            "{},{},{:e},{:e},{:e},{:e},{}",
            r.step, r.rank, r.times.comm_nc, r.times.comm_c, r.times.bulk, r.times.border, r.negative
        )?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(m: &RunMetrics, energy: Option<f64>, mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "sites [1],ranks [1],steps [1],wall [s],mlups [Msite/s],site_rate [site/s],energy [uJ/site],negative_populations [1]"
    )?;
    writeln!(
        w,
        "{},{},{},{:e},{:e},{:e},{},{}",
        m.sites,
        m.ranks,
        m.steps,
        m.wall_seconds,
        m.mlups,
        m.sites_per_second(),
        energy.map(|e| format!("{e:e}")).unwrap_or_default(),
        m.negative_populations
    )
}

/// Runs the simulation described by `c`. Progress and the summary go to
/// `log`.
pub fn simulate(c: &SimulateConfig, log: &mut dyn Write) -> Result<SimulateSummary> {
    let fmts = formats(&c.snapshot_format)?;
    let (cfg, init) = build(c)?;
    if c.dry_run {
        let tiles = decompose(cfg.lx, cfg.ly, cfg.tiling, cfg.boundary)?;
        let vs = build_velocity_set(&cfg.velocity_set)?;
        let (tx, ty) = tiles[0].extent;
        let (hx, hy) = cfg.halo.unwrap_or((vs.max_hop(), vs.max_hop()));
        let per_rank = 2 * (tx + 2 * hx) * (ty + 2 * hy) * vs.q() * 8;
        writeln!(
            log,
            "dry run: {}x{} {} on {} ({} ranks, tiles {tx}x{ty}), {} steps, schedule {}, preset {}",
            cfg.lx,
            cfg.ly,
            vs.name(),
            cfg.tiling,
            tiles.len(),
            cfg.steps,
            cfg.schedule,
            init.name()
        )?;
        writeln!(log, "population storage: {per_rank} B per rank, {} B total", per_rank * tiles.len())?;
        return Ok(SimulateSummary {
            metrics: RunMetrics::default(),
            energy_uj_per_site: None,
            files: Vec::new(),
        });
    }

    std::fs::create_dir_all(&c.output_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", c.output_dir.display())))?;
    let vs = build_velocity_set(&cfg.velocity_set)?;
    let mut files = Vec::new();
    let outcome = run_observed(&cfg, init.as_ref(), &mut |step, state| {
        snapshot(&c.output_dir, step, state, &vs, &fmts, &mut files)
    })?;
    let m = outcome.metrics;
    let energy = match c.tdp_watts {
        Some(tdp) if m.steps > 0 => Some(energy_uj_per_site(tdp, m.sites_per_second())),
        _ => None,
    };

    let metrics_path = c.output_dir.join("metrics.csv");
    write_metrics_csv(&m, BufWriter::new(File::create(&metrics_path)?))?;
    let summary_path = c.output_dir.join("summary.csv");
    write_summary_csv(&m, energy, BufWriter::new(File::create(&summary_path)?))?;
    files.push(metrics_path);
    files.push(summary_path);

    writeln!(
        log,
        "{} steps on {}x{} over {} ranks in {:.3} s: {:.3} MLUPS",
        m.steps, cfg.lx, cfg.ly, m.ranks, m.wall_seconds, m.mlups
    )?;
    if let Some(e) = energy {
        writeln!(log, "energy estimate: {e:.4} uJ/site")?;
    }
    if m.negative_populations > 0 {
        writeln!(log, "warning: {} negative populations after collision", m.negative_populations)?;
    }
    Ok(SimulateSummary { metrics: m, energy_uj_per_site: energy, files })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Section;

    fn cfg(text: &str) -> SimulateConfig {
        Section::parse(text, "simulate", None).unwrap().into_typed("simulate").unwrap()
    }

    #[test]
    fn energy_convention() {
        // 100 W at 1e8 sites/s is 1 uJ per site
        assert!((energy_uj_per_site(100.0, 1e8) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_values_are_config_errors() {
        for extra in [
            "tiling = \"3d:2\"",
            "velocity_set = \"D3Q19\"",
            "schedule = \"eager\"",
            "preset = \"kelvin\"",
            "tau = 0.4",
            "snapshot_every = 0",
            "tdp_watts = -1.0",
            "snapshot_format = [\"png\"]",
        ] {
            let c = cfg(&format!("[simulate]\nlx = 48\nly = 48\ndry_run = true\n{extra}\n"));
            let e = simulate(&c, &mut Vec::new()).unwrap_err();
            assert!(matches!(e, CliError::Config(_)), "{extra}: {e}");
        }
    }

    #[test]
    fn dry_run_reports_storage() {
        let c = cfg("[simulate]\nlx = 1024\nly = 8192\ntiling = \"2d:2x4\"\nsteps = 2\ndry_run = true\n");
        let mut log = Vec::new();
        let s = simulate(&c, &mut log).unwrap();
        assert!(s.files.is_empty());
        let text = String::from_utf8(log).unwrap();
        assert!(text.contains("8 ranks, tiles 512x2048"), "{text}");
    }
}
