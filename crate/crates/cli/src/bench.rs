//! `tlbm bench`: run benchmarks, write one CSV each.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use tlbm_bench::{contiguous_shortfalls, BenchOutput, BenchSettings, BenchmarkRegistry, Repeat};
use tlbm_planner::BandwidthTables;

use crate::config::BenchConfig;
use crate::error::{CliError, Result};

/// Contiguous halos may be this much slower than non-contiguous ones
/// before the gate fails.
pub const NOISE_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSummary {
    pub outputs: Vec<(String, BenchOutput)>,
    pub files: Vec<PathBuf>,
    /// Present when the halo benchmark ran.
    pub gate_passed: Option<bool>,
}

pub fn settings(c: &BenchConfig) -> BenchSettings {
    let d = BenchSettings::default();
    BenchSettings {
        repeat: Repeat { warmup: c.warmup.unwrap_or(d.repeat.warmup), reps: c.reps.unwrap_or(d.repeat.reps) },
        velocity_set: c.velocity_set.clone().unwrap_or(d.velocity_set),
        lattice: c.lattice.map(|[x, y]| (x, y)).unwrap_or(d.lattice),
        workers: c.workers.unwrap_or(d.workers),
        copy_bytes: c.copy_bytes.unwrap_or(d.copy_bytes),
        offsets: c.offsets.clone().unwrap_or(d.offsets),
        tile_edges: c.tile_edges.clone().unwrap_or(d.tile_edges),
    }
}

pub fn bench(c: &BenchConfig, log: &mut dyn Write) -> Result<BenchSummary> {
    let registry = BenchmarkRegistry::builtin();
    let names: Vec<String> = if c.names.is_empty() {
        registry.names().iter().map(|s| s.to_string()).collect()
    } else {
        c.names.clone()
    };
    let benches = names.iter().map(|n| registry.get(n)).collect::<std::result::Result<Vec<_>, _>>()?;
    let s = settings(c);
    s.repeat.validate()?;
    std::fs::create_dir_all(&c.output_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", c.output_dir.display())))?;

    let mut summary = BenchSummary { outputs: Vec::new(), files: Vec::new(), gate_passed: None };
    for b in benches {
        writeln!(log, "running {}: {}", b.name(), b.description())?;
        let out = b.run(&s)?;
        for w in &out.report.warnings {
            writeln!(log, "warning: {w}")?;
        }
        let path = c.output_dir.join(format!("{}.csv", b.name()));
        out.report.write_csv(BufWriter::new(File::create(&path)?))?;
        summary.files.push(path);
        if let Some(tables) = &out.tables {
            let path = c.output_dir.join("halo_bandwidth.csv");
            tables.save(&path).map_err(CliError::runtime)?;
            let reloaded = BandwidthTables::load(&path)
                .map_err(|e| CliError::Validation(format!("bandwidth table does not load back: {e}")))?;
            let round_trip = &reloaded == tables;
            let shortfalls = contiguous_shortfalls(&out.report, NOISE_MARGIN);
            for (edge, c, n) in &shortfalls {
                writeln!(log, "tile edge {edge}: contiguous {c:.3e} B/s < 0.9 x non-contiguous {n:.3e} B/s")?;
            }
            let passed = round_trip && shortfalls.is_empty();
            writeln!(
                log,
                "{} halo gate: contiguous >= {:.0}% of non-contiguous at every size, table round trip {}",
                if passed { "PASS" } else { "FAIL" },
                100.0 * (1.0 - NOISE_MARGIN),
                if round_trip { "ok" } else { "differs" }
            )?;
            summary.gate_passed = Some(passed);
            summary.files.push(path);
        }
        summary.outputs.push((b.name().to_string(), out));
    }
    Ok(summary)
}
