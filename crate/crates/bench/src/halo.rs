//! Halo-exchange bandwidth against tile size.
//!
//! A fully periodic `nx x ny` grid of `edge x edge` tiles exchanges halos
//! through the same rank code the simulation uses. The Y phase moves rows
//! (strided gathers), the X phase moves whole columns (contiguous in SoA).
//! Bandwidth is bi-directional per rank: bytes sent plus bytes received,
//! over the phase time.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Barrier};
use std::time::{Duration, Instant};

use tlbm_core::runtime::{build_mesh, decompose, Boundary, Face, Rank, Tiling};
use tlbm_core::{build_velocity_set, LatticeGeometry, Layout, PhysicsParams, VelocitySet};
use tlbm_planner::{BandwidthTable, BandwidthTables};

use crate::error::{BenchError, Result};
use crate::timing::{BenchReport, BenchResult, Repeat, Timing};

pub const CONTIGUOUS: &str = "contiguous";
pub const NON_CONTIGUOUS: &str = "non-contiguous";

#[derive(Debug, Clone, PartialEq)]
pub struct HaloParams {
    /// Tile edge lengths in sites.
    pub edges: Vec<usize>,
    pub grid: (usize, usize),
    pub velocity_set: String,
    pub layout: Layout,
    /// Each timed sample repeats the exchange until about this many bytes
    /// have moved through one rank.
    pub bytes_per_sample: usize,
    pub repeat: Repeat,
}

impl Default for HaloParams {
    fn default() -> Self {
        Self {
            edges: vec![16, 32, 64, 128, 256],
            grid: (2, 2),
            velocity_set: "D2Q37".into(),
            layout: Layout::Soa,
            bytes_per_sample: 8 << 20,
            repeat: Repeat::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HaloReport {
    pub report: BenchReport,
    /// Bytes of one halo message, by tile edge, in the same order as
    /// `report.results` pairs.
    pub message_bytes: Vec<(usize, f64, f64)>,
    pub tables: BandwidthTables,
}

impl HaloReport {
    pub fn contiguous_shortfalls(&self, margin: f64) -> Vec<(f64, f64, f64)> {
        contiguous_shortfalls(&self.report, margin)
    }
}

/// Tile edges where contiguous bandwidth falls below `(1 - margin)` times
/// the non-contiguous one, as `(edge, contiguous, non-contiguous)`.
pub fn contiguous_shortfalls(report: &BenchReport, margin: f64) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for c in report.results.iter().filter(|r| r.name == CONTIGUOUS) {
        if let Some(n) = report.find(NON_CONTIGUOUS, c.parameter) {
            if c.metric < (1.0 - margin) * n.metric {
                out.push((c.parameter, c.metric, n.metric));
            }
        }
    }
    out
}

#[derive(Clone, Copy)]
enum Phase {
    Y,
    X,
}

fn tag(lx: usize, ly: usize, l: usize, gx: usize, gy: usize) -> f64 {
    ((l * lx + gx) * ly + gy) as f64
}

fn fill_tagged(rank: &mut Rank, lx: usize, ly: usize) {
    let (ox, oy) = rank.tile().origin;
    let field = rank.buffers_mut().prv_mut();
    let g = *field.geometry();
    field.fill_halo(f64::NAN);
    for l in 0..g.q {
        for x in 0..g.lx {
            for y in 0..g.ly {
                field.set_phys(l, x, y, tag(lx, ly, l, ox + x, oy + y));
            }
        }
    }
}

// Every halo value present must be the wrapped neighbor's tag, and every
// value a pull from a physical site reads must be present.
fn check_halo(rank: &Rank, vs: &VelocitySet, lx: usize, ly: usize) -> Result<()> {
    let (ox, oy) = rank.tile().origin;
    let field = rank.buffers().prv();
    let g = *field.geometry();
    let wrong = |l: usize, ax: usize, ay: usize, v: f64, want: f64| {
        BenchError::Check(format!("rank {} halo ({l}, {ax}, {ay}) holds {v}, expected {want}", rank.id()))
    };
    for l in 0..g.q {
        for ax in 0..g.nx() {
            for ay in 0..g.ny() {
                let v = field.get(l, ax, ay);
                if v.is_nan() {
                    continue;
                }
                let gx = (ox as isize + ax as isize - g.hx as isize).rem_euclid(lx as isize) as usize;
                let gy = (oy as isize + ay as isize - g.hy as isize).rem_euclid(ly as isize) as usize;
                let want = tag(lx, ly, l, gx, gy);
                if v != want {
                    return Err(wrong(l, ax, ay, v, want));
                }
            }
        }
        let [cx, cy] = vs.c()[l];
        for x in 0..g.lx {
            for y in 0..g.ly {
                let ax = (x + g.hx) as isize - cx as isize;
                let ay = (y + g.hy) as isize - cy as isize;
                let v = field.get(l, ax as usize, ay as usize);
                if v.is_nan() {
                    return Err(wrong(l, ax as usize, ay as usize, v, f64::NAN));
                }
            }
        }
    }
    Ok(())
}

fn message_len(rank: &Rank, face: Face) -> usize {
    rank.halo_capacity(face)
}

fn exchange(rank: &mut Rank, phase: Phase, step: u64) -> Result<()> {
    match phase {
        Phase::Y => rank.y_phase(step)?,
        Phase::X => {
            rank.x_post(step)?;
            rank.x_complete(step)?;
        }
    }
    Ok(())
}

struct EdgeTimings {
    y: Timing,
    x: Timing,
    y_msg: usize,
    x_msg: usize,
}

fn time_edge(p: &HaloParams, vs: &Arc<VelocitySet>, edge: usize) -> Result<EdgeTimings> {
    let (nx, ny) = p.grid;
    let (lx, ly) = (edge * nx, edge * ny);
    let tiles = decompose(lx, ly, Tiling::TwoD { nx, ny }, Boundary::Periodic)?;
    let links = build_mesh(&tiles, Arc::new(AtomicBool::new(false)), Duration::from_secs(30));
    let params = PhysicsParams::defaults_for(vs);
    let mut ranks = Vec::with_capacity(tiles.len());
    for (tile, link) in tiles.into_iter().zip(links) {
        let geom = LatticeGeometry::new(edge, edge, vs, p.layout)?;
        ranks.push(Rank::new(tile, geom, vs.clone(), params, link)?);
    }
    let y_msg = message_len(&ranks[0], Face::Down);
    let x_msg = message_len(&ranks[0], Face::Left);
    // per rank and exchange: two messages out, two in
    let inner = |msg: usize| (p.bytes_per_sample / (4 * 8 * msg).max(1)).max(1);
    let (inner_y, inner_x) = (inner(y_msg), inner(x_msg));
    let rounds = p.repeat.warmup + p.repeat.reps;
    let barrier = Barrier::new(ranks.len() + 1);
    // Set by any rank that fails; everyone keeps meeting at the barriers so
    // nobody waits forever, but the exchanges stop.
    let bad = AtomicBool::new(false);

    let samples = std::thread::scope(|s| -> Result<(Vec<Duration>, Vec<Duration>)> {
        let handles: Vec<_> = ranks
            .iter_mut()
            .map(|rank| {
                let (barrier, bad) = (&barrier, &bad);
                s.spawn(move || -> Result<()> {
                    let fail = |rank: &Rank, e: BenchError| {
                        bad.store(true, Ordering::SeqCst);
                        rank.abort_all();
                        Err(e)
                    };
                    fill_tagged(rank, lx, ly);
                    let checked = exchange(rank, Phase::Y, 0)
                        .and_then(|_| exchange(rank, Phase::X, 0))
                        .and_then(|_| check_halo(rank, vs, lx, ly));
                    let mut result = match checked {
                        Ok(()) => Ok(()),
                        Err(e) => fail(rank, e),
                    };
                    barrier.wait();
                    if bad.load(Ordering::SeqCst) {
                        return result;
                    }
                    let mut step = 1;
                    for _ in 0..rounds {
                        for (phase, inner) in [(Phase::Y, inner_y), (Phase::X, inner_x)] {
                            barrier.wait();
                            if result.is_ok() && !bad.load(Ordering::SeqCst) {
                                for _ in 0..inner {
                                    if let Err(e) = exchange(rank, phase, step) {
                                        result = fail(rank, e);
                                        break;
                                    }
                                    step += 1;
                                }
                            }
                            barrier.wait();
                        }
                    }
                    result
                })
            })
            .collect();
        barrier.wait();
        let (mut ys, mut xs) = (Vec::new(), Vec::new());
        if !bad.load(Ordering::SeqCst) {
            for round in 0..rounds {
                for out in [&mut ys, &mut xs] {
                    barrier.wait();
                    let t0 = Instant::now();
                    barrier.wait();
                    if round >= p.repeat.warmup {
                        out.push(t0.elapsed());
                    }
                }
            }
        }
        let results: Vec<Result<()>> =
            handles.into_iter().map(|h| h.join().expect("halo bench rank panicked")).collect();
        // a rank that only saw another rank's abort is not the cause
        let first = results
            .iter()
            .position(
                |r| matches!(r, Err(e) if !matches!(e, BenchError::Core(tlbm_core::Error::Aborted { .. }))),
            )
            .or_else(|| results.iter().position(|r| r.is_err()));
        if let Some(i) = first {
            return Err(results.into_iter().nth(i).expect("index in range").unwrap_err());
        }
        Ok((ys, xs))
    })?;
    let (ys, xs) = samples;
    let per_exchange = |v: Vec<Duration>, inner: usize| -> Vec<Duration> {
        v.into_iter().map(|d| d / inner as u32).collect()
    };
    Ok(EdgeTimings {
        y: Timing::from_samples(&per_exchange(ys, inner_y))?,
        x: Timing::from_samples(&per_exchange(xs, inner_x))?,
        y_msg,
        x_msg,
    })
}

/// Contiguous and non-contiguous bandwidth for every tile edge, plus the
/// tables the planner reads.
pub fn bench_halo_exchange(p: &HaloParams) -> Result<HaloReport> {
    p.repeat.validate()?;
    if p.grid.0 < 2 || p.grid.1 < 2 {
        return Err(BenchError::Params(format!(
            "grid {}x{} needs at least two ranks along each axis",
            p.grid.0, p.grid.1
        )));
    }
    let mut edges = p.edges.clone();
    edges.sort_unstable();
    edges.dedup();
    if edges.is_empty() {
        return Err(BenchError::Params("no tile edges given".into()));
    }
    let vs = Arc::new(build_velocity_set(&p.velocity_set)?);
    let mut results = Vec::new();
    let mut message_bytes = Vec::new();
    let (mut contiguous, mut non_contiguous) = (Vec::new(), Vec::new());
    for &edge in &edges {
        let t = time_edge(p, &vs, edge)?;
        let (yb, xb) = ((t.y_msg * 8) as f64, (t.x_msg * 8) as f64);
        let bw = |msg_bytes: f64, timing: &Timing| 4.0 * msg_bytes / timing.median;
        let (bw_y, bw_x) = (bw(yb, &t.y), bw(xb, &t.x));
        results.push(BenchResult {
            name: NON_CONTIGUOUS.into(),
            parameter: edge as f64,
            timing: t.y,
            metric: bw_y,
        });
        results.push(BenchResult {
            name: CONTIGUOUS.into(),
            parameter: edge as f64,
            timing: t.x,
            metric: bw_x,
        });
        message_bytes.push((edge, xb, yb));
        contiguous.push((xb, bw_x));
        non_contiguous.push((yb, bw_y));
    }
    let mut warnings = Vec::new();
    for (name, points) in [(CONTIGUOUS, &contiguous), (NON_CONTIGUOUS, &non_contiguous)] {
        for w in points.windows(2) {
            if w[1].1 < 0.9 * w[0].1 {
                warnings.push(format!(
                    "{name} bandwidth drops from {:.3e} to {:.3e} B/s between {} and {} B messages",
                    w[0].1, w[1].1, w[0].0, w[1].0
                ));
            }
        }
    }
    let tables = BandwidthTables {
        contiguous: BandwidthTable::new(contiguous)?,
        non_contiguous: BandwidthTable::new(non_contiguous)?,
    };
    Ok(HaloReport {
        report: BenchReport {
            benchmark: "halo".into(),
            parameter: "tile_edge [site]".into(),
            metric: "bandwidth [B/s]".into(),
            results,
            warnings,
        },
        message_bytes,
        tables,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(edges: Vec<usize>) -> HaloParams {
        HaloParams {
            edges,
            bytes_per_sample: 1 << 16,
            repeat: Repeat { warmup: 1, reps: 5 },
            ..HaloParams::default()
        }
    }

    #[test]
    fn reports_both_directions_per_edge() {
        let r = bench_halo_exchange(&quick(vec![12, 8, 12])).unwrap();
        assert_eq!(r.report.results.len(), 4);
        assert_eq!(r.tables.contiguous.points().len(), 2);
        for res in &r.report.results {
            assert!(res.metric > 0.0 && res.metric.is_finite());
            assert!(res.timing.min <= res.timing.median && res.timing.median <= res.timing.max);
        }
    }

    #[test]
    fn message_sizes_follow_the_plans() {
        let r = bench_halo_exchange(&quick(vec![8])).unwrap();
        // 26 populations; rows span the tile, columns span tile plus halo
        assert_eq!(r.message_bytes, vec![(8, (26 * 14 * 8) as f64, (26 * 8 * 8) as f64)]);
    }

    #[test]
    fn d2q9_and_aos() {
        let p = HaloParams { velocity_set: "D2Q9".into(), layout: Layout::Aos, ..quick(vec![6]) };
        bench_halo_exchange(&p).unwrap();
    }

    #[test]
    fn rejects_degenerate_grids() {
        let p = HaloParams { grid: (1, 2), ..quick(vec![8]) };
        assert!(matches!(bench_halo_exchange(&p), Err(BenchError::Params(_))));
    }
}
