//! TOML description of a planning run.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::bandwidth::{BandwidthTable, BandwidthTables};
use crate::error::{PlanError, Result};
use crate::model::{CostModelInput, DEFAULT_S};

/// ```toml
/// lx = 3600
/// ly = 3600
/// beta = 2.5e-8        # seconds per site update
/// s = 208              # bytes per boundary site
/// np = [1, 2, 4, 8]    # or np_max = 32
/// bx = 1.0e9           # scalar bandwidths, or
/// bandwidth_table = "halo.csv"
/// ```
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerConfig {
    pub lx: f64,
    pub ly: f64,
    pub beta: f64,
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default)]
    pub np: Vec<usize>,
    pub np_max: Option<usize>,
    pub bx: Option<f64>,
    pub by: Option<f64>,
    /// Path relative to the config file.
    pub bandwidth_table: Option<PathBuf>,
    #[serde(default)]
    pub contiguous: Vec<(f64, f64)>,
    #[serde(default)]
    pub non_contiguous: Vec<(f64, f64)>,
}

fn default_s() -> f64 {
    DEFAULT_S
}

impl PlannerConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| PlanError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        if let (Some(table), Some(dir)) = (&cfg.bandwidth_table, path.parent()) {
            if table.is_relative() {
                cfg.bandwidth_table = Some(dir.join(table));
            }
        }
        Ok(cfg)
    }

    /// Processor counts: the explicit list, else `1..=np_max`.
    pub fn np_list(&self) -> Result<Vec<usize>> {
        match (self.np.is_empty(), self.np_max) {
            (false, None) => Ok(self.np.clone()),
            (true, Some(max)) => Ok((1..=max).collect()),
            (true, None) => Err(PlanError::Config("set either np or np_max".into())),
            (false, Some(_)) => Err(PlanError::Config("np and np_max are exclusive".into())),
        }
    }

    /// Model input at `Np = 1`; the curve functions vary `Np`.
    pub fn input(&self) -> Result<CostModelInput> {
        let tables = self.tables()?;
        CostModelInput::new(
            self.lx,
            self.ly,
            1,
            tables.non_contiguous.at(0.0),
            tables.contiguous.at(0.0),
            self.beta,
            self.s,
        )
    }

    /// Bandwidth tables from, in order of preference, the table file, the
    /// inline points, or the scalar bandwidths.
    pub fn tables(&self) -> Result<BandwidthTables> {
        if let Some(path) = &self.bandwidth_table {
            return BandwidthTables::load(path);
        }
        if !self.contiguous.is_empty() || !self.non_contiguous.is_empty() {
            return Ok(BandwidthTables {
                contiguous: BandwidthTable::new(self.contiguous.clone())?,
                non_contiguous: BandwidthTable::new(self.non_contiguous.clone())?,
            });
        }
        match (self.bx, self.by) {
            (Some(bx), Some(by)) => BandwidthTables::constant(bx, by),
            _ => Err(PlanError::Config(
                "give bx and by, inline contiguous/non_contiguous points, or bandwidth_table".into(),
            )),
        }
    }
}
