//! Named benchmarks behind one trait, so the harness can list and run them
//! without knowing their parameter types.

use std::sync::Arc;

use tlbm_planner::BandwidthTables;

use crate::error::{BenchError, Result};
use crate::halo::{bench_halo_exchange, HaloParams};
use crate::layout::{layout_report, LayoutParams};
use crate::misalign::{misalignment_report, MisalignParams};
use crate::timing::{BenchReport, Repeat};

/// Everything a harness may tune. Each benchmark reads the fields it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchSettings {
    pub repeat: Repeat,
    pub velocity_set: String,
    pub lattice: (usize, usize),
    pub workers: usize,
    pub copy_bytes: usize,
    pub offsets: Vec<usize>,
    pub tile_edges: Vec<usize>,
}

impl Default for BenchSettings {
    fn default() -> Self {
        let layout = LayoutParams::default();
        let misalign = MisalignParams::default();
        Self {
            repeat: Repeat::default(),
            velocity_set: layout.velocity_set,
            lattice: (layout.lx, layout.ly),
            workers: layout.workers,
            copy_bytes: misalign.bytes,
            offsets: misalign.offsets,
            tile_edges: HaloParams::default().edges,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutput {
    pub report: BenchReport,
    /// Set by benchmarks that measure what the planner consumes.
    pub tables: Option<BandwidthTables>,
}

pub trait Benchmark: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn run(&self, settings: &BenchSettings) -> Result<BenchOutput>;
}

struct LayoutBench;

impl Benchmark for LayoutBench {
    fn name(&self) -> &'static str {
        "layout"
    }

    fn description(&self) -> &'static str {
        "propagate and collide throughput, SoA vs AoS"
    }

    fn run(&self, s: &BenchSettings) -> Result<BenchOutput> {
        let p = LayoutParams {
            lx: s.lattice.0,
            ly: s.lattice.1,
            velocity_set: s.velocity_set.clone(),
            workers: s.workers,
            repeat: s.repeat,
            ..LayoutParams::default()
        };
        Ok(BenchOutput { report: layout_report(&p)?, tables: None })
    }
}

struct MisalignBench;

impl Benchmark for MisalignBench {
    fn name(&self) -> &'static str {
        "misalignment"
    }

    fn description(&self) -> &'static str {
        "streaming copy with misaligned reads (mraw) or writes (armw)"
    }

    fn run(&self, s: &BenchSettings) -> Result<BenchOutput> {
        let p = MisalignParams { bytes: s.copy_bytes, offsets: s.offsets.clone(), repeat: s.repeat };
        Ok(BenchOutput { report: misalignment_report(&p)?, tables: None })
    }
}

struct HaloBench;

impl Benchmark for HaloBench {
    fn name(&self) -> &'static str {
        "halo"
    }

    fn description(&self) -> &'static str {
        "contiguous and non-contiguous halo bandwidth vs tile edge"
    }

    fn run(&self, s: &BenchSettings) -> Result<BenchOutput> {
        let p = HaloParams {
            edges: s.tile_edges.clone(),
            velocity_set: s.velocity_set.clone(),
            repeat: s.repeat,
            ..HaloParams::default()
        };
        let r = bench_halo_exchange(&p)?;
        Ok(BenchOutput { report: r.report, tables: Some(r.tables) })
    }
}

pub struct BenchmarkRegistry {
    entries: Vec<Arc<dyn Benchmark>>,
}

impl BenchmarkRegistry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(LayoutBench));
        r.register(Arc::new(MisalignBench));
        r.register(Arc::new(HaloBench));
        r
    }

    /// Adds `b`, replacing any benchmark of the same name.
    pub fn register(&mut self, b: Arc<dyn Benchmark>) {
        self.entries.retain(|e| e.name() != b.name());
        self.entries.push(b);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Benchmark>> {
        self.entries.iter().find(|e| e.name().eq_ignore_ascii_case(name)).cloned().ok_or_else(|| {
            BenchError::Params(format!("unknown benchmark '{name}' (known: {})", self.names().join(", ")))
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<dyn Benchmark>> {
        self.entries.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fake;

    impl Benchmark for Fake {
        fn name(&self) -> &'static str {
            "layout"
        }

        fn description(&self) -> &'static str {
            "stand-in"
        }

        fn run(&self, _: &BenchSettings) -> Result<BenchOutput> {
            Err(BenchError::Params("fake".into()))
        }
    }

    #[test]
    fn builtin_names() {
        assert_eq!(BenchmarkRegistry::builtin().names(), ["layout", "misalignment", "halo"]);
    }

    #[test]
    fn lookup_and_replace() {
        let mut r = BenchmarkRegistry::builtin();
        assert_eq!(r.get("HALO").unwrap().name(), "halo");
        assert!(matches!(r.get("cache"), Err(BenchError::Params(m)) if m.contains("misalignment")));
        r.register(Arc::new(Fake));
        assert_eq!(r.names().len(), 3);
        assert_eq!(r.get("layout").unwrap().description(), "stand-in");
    }
}
