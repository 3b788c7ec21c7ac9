//! `tlbm plan`: scaling predictions as CSV.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use tlbm_planner::{
    find_crossover, model_curves, scaling_curve, write_curve_csv, write_model_csv, Crossover, CurveRow,
    ModelRow, PlannerConfig,
};

use crate::config::{plan_output_dir, Section};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PlanSummary {
    pub curve: Vec<CurveRow>,
    pub model: Vec<ModelRow>,
    pub crossover: Crossover,
    pub files: Vec<PathBuf>,
}

/// Writes `curve.csv` (every factorization of every `Np`) and `model.csv`
/// (the 1D/2D, plain/overlapped closed forms) into the output directory.
pub fn plan(mut section: Section, log: &mut dyn Write) -> Result<PlanSummary> {
    let out_dir = plan_output_dir(&mut section)?;
    section.resolve_path("bandwidth_table");
    let cfg: PlannerConfig = section.into_typed("plan")?;
    let input = cfg.input()?;
    let nps = cfg.np_list()?;
    let tables = cfg.tables()?;
    let curve = scaling_curve(&input, &nps, &tables)?;
    let model = model_curves(&input, &nps, &tables)?;
    let crossover = find_crossover(&curve);

    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    let curve_path = out_dir.join("curve.csv");
    let model_path = out_dir.join("model.csv");
    write_curve_csv(&curve, BufWriter::new(File::create(&curve_path)?)).map_err(CliError::runtime)?;
    write_model_csv(&model, BufWriter::new(File::create(&model_path)?)).map_err(CliError::runtime)?;

    writeln!(log, "{}x{} lattice, {} processor counts, {} tilings", cfg.lx, cfg.ly, nps.len(), curve.len())?;
    match crossover.crossover {
        Some(n) => writeln!(log, "2D tiling wins from Np = {n} on")?,
        None if crossover.grid_wins.is_empty() => writeln!(log, "1D tiling is never beaten")?,
        None => writeln!(log, "no single crossover; 2D wins at {:?}", crossover.grid_wins)?,
    }
    Ok(PlanSummary { curve, model, crossover, files: vec![curve_path, model_path] })
}
