//! Strong-scaling curves over processor counts and tilings.

use std::io::Write;

use crate::bandwidth::BandwidthTables;
use crate::error::Result;
use crate::model::{
    factor_pairs, optimal_grid_real, predict_1d, predict_1d_overlap, predict_2d, predict_2d_overlap,
    predict_tiling, CostModelInput,
};

/// How a grid splits the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TilingKind {
    /// `Np x 1`: slabs along X.
    Slabs,
    /// `1 x Np`: slabs along Y.
    SlabsY,
    /// Both factors above one.
    Grid,
}

impl TilingKind {
    pub fn of(nx: usize, ny: usize) -> Self {
        match (nx, ny) {
            (_, 1) => TilingKind::Slabs,
            (1, _) => TilingKind::SlabsY,
            _ => TilingKind::Grid,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TilingKind::Slabs => "1d",
            TilingKind::SlabsY => "1d-y",
            TilingKind::Grid => "2d",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub np: usize,
    pub nx: usize,
    pub ny: usize,
    pub kind: TilingKind,
    pub t_total: f64,
    /// `Np * T(Np)`.
    pub np_t: f64,
    pub scale_violation: f64,
}

/// One row per factor pair of every `Np` in `np_list`, no overlap.
/// Bandwidths are looked up at each grid's message sizes.
pub fn scaling_curve(
    input: &CostModelInput,
    np_list: &[usize],
    tables: &BandwidthTables,
) -> Result<Vec<CurveRow>> {
    let mut rows = Vec::new();
    for &np in np_list {
        let base = input.with_np(np);
        base.validate()?;
        for (nx, ny) in factor_pairs(np) {
            let resolved = tables.resolve(&base, nx as f64, ny as f64);
            let p = predict_tiling(&resolved, nx, ny)?;
            rows.push(CurveRow {
                np,
                nx,
                ny,
                kind: TilingKind::of(nx, ny),
                t_total: p.t_total,
                np_t: np as f64 * p.t_total,
                scale_violation: p.scale_violation,
            });
        }
    }
    Ok(rows)
}

pub fn write_curve_csv<W: Write>(rows: &[CurveRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["Np", "nx", "ny", "tiling", "T_total [s]", "Np*T [s]", "scale_violation [1]"])?;
    for r in rows {
        out.write_record([
            r.np.to_string(),
            r.nx.to_string(),
            r.ny.to_string(),
            r.kind.label().to_string(),
            format!("{:e}", r.t_total),
            format!("{:e}", r.np_t),
            format!("{:e}", r.scale_violation),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Scale violation of the four model variants at one processor count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelRow {
    pub np: usize,
    pub one_d: f64,
    pub one_d_overlap: f64,
    pub two_d: f64,
    /// Absent for non-square lattices.
    pub two_d_overlap: Option<f64>,
}

/// The four closed-form curves: 1D and 2D, with and without overlap.
pub fn model_curves(
    input: &CostModelInput,
    np_list: &[usize],
    tables: &BandwidthTables,
) -> Result<Vec<ModelRow>> {
    let mut rows = Vec::new();
    for &np in np_list {
        let base = input.with_np(np);
        base.validate()?;
        let slabs = tables.resolve(&base, np as f64, 1.0);
        let (gx, gy) = optimal_grid_real(&base);
        let grid = tables.resolve(&base, gx, gy);
        let root = (np as f64).sqrt();
        let square = tables.resolve(&base, root, root);
        rows.push(ModelRow {
            np,
            one_d: predict_1d(&slabs).scale_violation,
            one_d_overlap: predict_1d_overlap(&slabs).scale_violation,
            two_d: predict_2d(&grid).scale_violation,
            two_d_overlap: predict_2d_overlap(&square).ok().map(|p| p.scale_violation),
        });
    }
    Ok(rows)
}

pub fn write_model_csv<W: Write>(rows: &[ModelRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["Np", "1d [1]", "1d_overlap [1]", "2d [1]", "2d_overlap [1]"])?;
    for r in rows {
        out.write_record([
            r.np.to_string(),
            format!("{:e}", r.one_d),
            format!("{:e}", r.one_d_overlap),
            format!("{:e}", r.two_d),
            r.two_d_overlap.map(|v| format!("{v:e}")).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Where proper 2D grids start beating slabs along X.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossover {
    /// Counts (above one) at which the best slab tiling is no slower than
    /// the best proper grid.
    pub slabs_win: Vec<usize>,
    pub grid_wins: Vec<usize>,
    /// Smallest count from which the grid wins at every count that admits
    /// one, provided slabs won somewhere below it.
    pub crossover: Option<usize>,
}

/// Compares, per processor count, the `Np x 1` row with the best row whose
/// factors both exceed one. Counts without such a grid (primes) are
/// skipped.
pub fn find_crossover(rows: &[CurveRow]) -> Crossover {
    let mut nps: Vec<usize> = rows.iter().map(|r| r.np).collect();
    nps.sort_unstable();
    nps.dedup();
    let mut verdicts = Vec::new();
    for np in nps.into_iter().filter(|&n| n > 1) {
        let slab = rows.iter().find(|r| r.np == np && r.kind == TilingKind::Slabs).map(|r| r.np_t);
        let grid = rows
            .iter()
            .filter(|r| r.np == np && r.kind == TilingKind::Grid)
            .map(|r| r.np_t)
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))));
        if let (Some(s), Some(g)) = (slab, grid) {
            verdicts.push((np, s <= g));
        }
    }
    let slabs_win: Vec<usize> = verdicts.iter().filter(|v| v.1).map(|v| v.0).collect();
    let grid_wins: Vec<usize> = verdicts.iter().filter(|v| !v.1).map(|v| v.0).collect();
    let tail_start = verdicts.iter().rposition(|v| v.1).map_or(0, |i| i + 1);
    let crossover = verdicts.get(tail_start).filter(|_| tail_start > 0).map(|v| v.0);
    Crossover { slabs_win, grid_wins, crossover }
}
