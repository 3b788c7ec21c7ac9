//! Measured bandwidth as a function of message size.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{PlanError, Result};
use crate::model::CostModelInput;

/// Piecewise-linear map from message bytes to bytes/s, clamped at both
/// ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthTable {
    points: Vec<(f64, f64)>,
}

impl BandwidthTable {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(PlanError::Table("no points".into()));
        }
        for &(bytes, bw) in &points {
            if !(bytes >= 0.0 && bytes.is_finite()) || !(bw > 0.0 && !bw.is_nan()) {
                return Err(PlanError::Table(format!(
                    "point ({bytes}, {bw}) needs finite bytes >= 0 and bandwidth > 0"
                )));
            }
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(PlanError::Table("duplicate message size".into()));
        }
        Ok(Self { points })
    }

    /// A table that returns `bw` for every size.
    pub fn constant(bw: f64) -> Result<Self> {
        Self::new(vec![(0.0, bw)])
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn at(&self, bytes: f64) -> f64 {
        let p = &self.points;
        if bytes <= p[0].0 {
            return p[0].1;
        }
        if bytes >= p[p.len() - 1].0 {
            return p[p.len() - 1].1;
        }
        let k = p.partition_point(|q| q.0 <= bytes);
        let (x0, y0) = p[k - 1];
        let (x1, y1) = p[k];
        y0 + (y1 - y0) * (bytes - x0) / (x1 - x0)
    }
}

/// Contiguous (column) and non-contiguous (row) halo bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthTables {
    pub contiguous: BandwidthTable,
    pub non_contiguous: BandwidthTable,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    direction: String,
    #[serde(rename = "message_bytes [B]")]
    bytes: f64,
    #[serde(rename = "bandwidth [B/s]")]
    bandwidth: f64,
}

const CONTIGUOUS: &str = "contiguous";
const NON_CONTIGUOUS: &str = "non-contiguous";

impl BandwidthTables {
    pub fn constant(bx: f64, by: f64) -> Result<Self> {
        Ok(Self { contiguous: BandwidthTable::constant(by)?, non_contiguous: BandwidthTable::constant(bx)? })
    }

    /// Fills `bx` and `by` of `input` for an `nx x ny` grid, looking up each
    /// direction at the size of one halo message.
    pub fn resolve(&self, input: &CostModelInput, nx: f64, ny: f64) -> CostModelInput {
        let col_bytes = input.s * input.ly / ny;
        let row_bytes = input.s * input.lx / nx;
        input.with_bandwidths(self.non_contiguous.at(row_bytes), self.contiguous.at(col_bytes))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for (name, table) in [(CONTIGUOUS, &self.contiguous), (NON_CONTIGUOUS, &self.non_contiguous)] {
            for &(bytes, bandwidth) in table.points() {
                out.serialize(Row { direction: name.into(), bytes, bandwidth })?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut contiguous = Vec::new();
        let mut non_contiguous = Vec::new();
        for row in csv::Reader::from_reader(r).deserialize() {
            let row: Row = row?;
            match row.direction.as_str() {
                CONTIGUOUS => contiguous.push((row.bytes, row.bandwidth)),
                NON_CONTIGUOUS => non_contiguous.push((row.bytes, row.bandwidth)),
                other => {
                    return Err(PlanError::Table(format!(
                        "unknown direction '{other}' ({CONTIGUOUS} | {NON_CONTIGUOUS})"
                    )))
                }
            }
        }
        Ok(Self {
            contiguous: BandwidthTable::new(contiguous)?,
            non_contiguous: BandwidthTable::new(non_contiguous)?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}
