//! Spawns one thread per rank, drives the steps and gathers the result.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{channel, Sender};
use std::sync::{Arc, Barrier};
use std::time::{Duration, Instant};

use super::comm::{build_mesh, Links};
use super::decompose::{decompose, Boundary, TileAssignment, Tiling};
use super::rank::Rank;
use super::schedule::{PhaseTimes, Schedule, ScheduleRegistry};
use crate::error::{Error, Result};
use crate::fields::GlobalState;
use crate::kernels::PhysicsParams;
use crate::lattice::{LatticeGeometry, Layout};
use crate::presets::{InitContext, InitialCondition};
use crate::velocity::{build_velocity_set, VelocitySet};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub lx: usize,
    pub ly: usize,
    pub velocity_set: String,
    pub tiling: Tiling,
    pub schedule: String,
    pub steps: u64,
    pub params: PhysicsParams,
    pub boundary: Boundary,
    /// `(Hx, Hy)`; `None` uses the stencil reach.
    pub halo: Option<(usize, usize)>,
    pub layout: Layout,
    /// Fill every halo with NaN at the start of each step and fail if a NaN
    /// reaches a physical site. A checking aid, off for timed runs.
    pub poison_halos: bool,
    /// Gather the global state every this many steps (and at step 0).
    pub snapshot_every: Option<u64>,
    pub comm_timeout: Duration,
}

impl SimConfig {
    /// Single-rank overlapped run with the stencil's default physics.
    pub fn new(lx: usize, ly: usize, velocity_set: &str) -> Result<Self> {
        let vs = build_velocity_set(velocity_set)?;
        Ok(Self {
            lx,
            ly,
            velocity_set: vs.name().to_string(),
            tiling: Tiling::OneD { np: 1 },
            schedule: "overlapped".into(),
            steps: 0,
            params: PhysicsParams::defaults_for(&vs),
            boundary: Boundary::Walls,
            halo: None,
            layout: Layout::Soa,
            poison_halos: false,
            snapshot_every: None,
            comm_timeout: Duration::from_secs(30),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub rank: usize,
    pub times: PhaseTimes,
    /// Populations that left collision negative on this rank.
    pub negative: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMetrics {
    pub steps: u64,
    pub ranks: usize,
    pub sites: usize,
    pub wall_seconds: f64,
    pub mlups: f64,
    pub negative_populations: usize,
    pub records: Vec<StepRecord>,
}

impl RunMetrics {
    /// Lattice site updates per second.
    pub fn sites_per_second(&self) -> f64 {
        self.mlups * 1e6
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub state: GlobalState,
    pub metrics: RunMetrics,
}

/// Everything a run needs after validation.
struct Plan {
    vs: Arc<VelocitySet>,
    tiles: Vec<TileAssignment>,
    schedule: Arc<dyn Schedule>,
    halo: (usize, usize),
}

fn prepare(cfg: &SimConfig) -> Result<Plan> {
    let vs = Arc::new(build_velocity_set(&cfg.velocity_set)?);
    cfg.params.validate(&vs)?;
    let schedule = ScheduleRegistry::builtin().get(&cfg.schedule)?;
    let tiles = decompose(cfg.lx, cfg.ly, cfg.tiling, cfg.boundary)?;
    let halo = cfg.halo.unwrap_or((vs.max_hop(), vs.max_hop()));
    // validates the halo against the stencil and the allocation size
    LatticeGeometry::with_halo(tiles[0].extent.0, tiles[0].extent.1, halo.0, halo.1, &vs, cfg.layout)?;
    Ok(Plan { vs, tiles, schedule, halo })
}

/// Checks `cfg` without running anything.
pub fn validate_config(cfg: &SimConfig) -> Result<()> {
    prepare(cfg).map(|_| ())
}

struct Part {
    step: u64,
    origin: (usize, usize),
    extent: (usize, usize),
    values: Vec<f64>,
}

pub fn run(cfg: &SimConfig, init: &dyn InitialCondition) -> Result<RunOutcome> {
    run_observed(cfg, init, &mut |_, _| Ok(()))
}

/// Runs `cfg` and hands every gathered snapshot to `observer` as it
/// completes.
pub fn run_observed(
    cfg: &SimConfig,
    init: &dyn InitialCondition,
    observer: &mut dyn FnMut(u64, &GlobalState) -> Result<()>,
) -> Result<RunOutcome> {
    let plan = prepare(cfg)?;
    let n = plan.tiles.len();
    let abort = Arc::new(AtomicBool::new(false));
    let links = build_mesh(&plan.tiles, abort.clone(), cfg.comm_timeout);
    let barrier = Barrier::new(n + 1);
    let (part_tx, part_rx) = channel::<Part>();

    let mut results: Vec<Result<(Vec<f64>, Vec<StepRecord>)>> = Vec::with_capacity(n);
    let mut observer_err = None;
    let mut wall = 0.0;

    std::thread::scope(|scope| {
        let handles: Vec<_> = plan
            .tiles
            .iter()
            .cloned()
            .zip(links)
            .map(|(tile, links)| {
                let ctx = RankCtx {
                    cfg,
                    init,
                    vs: plan.vs.clone(),
                    schedule: plan.schedule.clone(),
                    halo: plan.halo,
                    barrier: &barrier,
                    abort: &abort,
                    parts: part_tx.clone(),
                };
                scope.spawn(move || ctx.run(tile, links))
            })
            .collect();
        drop(part_tx);

        barrier.wait();
        let start = Instant::now();

        let mut pending: BTreeMap<u64, (usize, GlobalState)> = BTreeMap::new();
        for part in part_rx {
            if observer_err.is_some() {
                continue;
            }
            let entry = pending
                .entry(part.step)
                .or_insert_with(|| (0, GlobalState::zeros(cfg.lx, cfg.ly, plan.vs.q())));
            if let Err(e) = entry.1.insert_tile(part.origin, part.extent, &part.values) {
                observer_err = Some(e);
                abort.store(true, Ordering::Relaxed);
                continue;
            }
            entry.0 += 1;
            if entry.0 == n {
                let (_, state) = pending.remove(&part.step).expect("entry just touched");
                if let Err(e) = observer(part.step, &state) {
                    observer_err = Some(e);
                    abort.store(true, Ordering::Relaxed);
                }
            }
        }

        for h in handles {
            results.push(h.join().unwrap_or_else(|_| {
                Err(Error::Aborted { rank: usize::MAX, reason: "rank thread panicked".into() })
            }));
        }
        wall = start.elapsed().as_secs_f64();
    });

    if let Some(e) = observer_err {
        return Err(e);
    }
    let mut first_err = None;
    for r in &mut results {
        if let Err(e) = r {
            let real = !matches!(e, Error::Aborted { .. });
            if first_err.is_none() || (real && matches!(first_err, Some(Error::Aborted { .. }))) {
                first_err = Some(std::mem::replace(e, Error::Config(String::new())));
            }
        }
    }
    if let Some(e) = first_err {
        return Err(e);
    }

    let mut state = GlobalState::zeros(cfg.lx, cfg.ly, plan.vs.q());
    let mut records = Vec::with_capacity(n * cfg.steps as usize);
    for (tile, r) in plan.tiles.iter().zip(results) {
        let (values, recs) = r.expect("errors handled above");
        state.insert_tile(tile.origin, tile.extent, &values)?;
        records.extend(recs);
    }
    records.sort_by_key(|r| (r.step, r.rank));

    let metrics = if cfg.steps == 0 {
        RunMetrics { ranks: n, sites: cfg.lx * cfg.ly, ..RunMetrics::default() }
    } else {
        let updates = (cfg.lx * cfg.ly) as f64 * cfg.steps as f64;
        RunMetrics {
            steps: cfg.steps,
            ranks: n,
            sites: cfg.lx * cfg.ly,
            wall_seconds: wall,
            mlups: updates / (wall * 1e6),
            negative_populations: records.iter().map(|r| r.negative).sum(),
            records,
        }
    };
    Ok(RunOutcome { state, metrics })
}

struct RankCtx<'a> {
    cfg: &'a SimConfig,
    init: &'a dyn InitialCondition,
    vs: Arc<VelocitySet>,
    schedule: Arc<dyn Schedule>,
    halo: (usize, usize),
    barrier: &'a Barrier,
    abort: &'a AtomicBool,
    parts: Sender<Part>,
}

impl RankCtx<'_> {
    fn run(self, tile: TileAssignment, links: Links) -> Result<(Vec<f64>, Vec<StepRecord>)> {
        let setup = self.setup(tile, links);
        if setup.is_err() {
            self.abort.store(true, Ordering::Relaxed);
        }
        self.barrier.wait();
        let mut rank = setup?;
        let id = rank.id();
        if self.abort.load(Ordering::Relaxed) {
            return Err(Error::Aborted { rank: id, reason: "another rank failed during setup".into() });
        }
        let out = self.steps(&mut rank);
        if out.is_err() {
            rank.abort_all();
        }
        out
    }

    fn setup(&self, tile: TileAssignment, links: Links) -> Result<Rank> {
        let (tx, ty) = tile.extent;
        let geom = LatticeGeometry::with_halo(tx, ty, self.halo.0, self.halo.1, &self.vs, self.cfg.layout)?;
        let mut rank = Rank::new(tile, geom, self.vs.clone(), self.cfg.params, links)?;
        let ctx = InitContext { lx: self.cfg.lx, ly: self.cfg.ly, vs: &self.vs, params: &self.cfg.params };
        let (ox, oy) = rank.tile().origin;
        let mut f = vec![0.0; self.vs.q()];
        let prv = rank.buffers_mut().prv_mut();
        for x in 0..tx {
            for y in 0..ty {
                self.init.site(&ctx, ox + x, oy + y, &mut f).map_err(|e| e.at_site(ox + x, oy + y))?;
                prv.write_site(x, y, &f);
            }
        }
        Ok(rank)
    }

    fn send_part(&self, rank: &Rank, step: u64) {
        let t = rank.tile();
        // the receiver only disappears when the run is being torn down
        let _ = self.parts.send(Part {
            step,
            origin: t.origin,
            extent: t.extent,
            values: rank.buffers().prv().physical_values(),
        });
    }

    fn steps(&self, rank: &mut Rank) -> Result<(Vec<f64>, Vec<StepRecord>)> {
        let every = self.cfg.snapshot_every.filter(|&k| k > 0);
        if every.is_some() {
            self.send_part(rank, 0);
        }
        let mut records = Vec::with_capacity(self.cfg.steps as usize);
        for step in 0..self.cfg.steps {
            if self.cfg.poison_halos {
                rank.buffers_mut().prv_mut().fill_halo(f64::NAN);
            }
            let mut times = PhaseTimes::default();
            let (ox, oy) = rank.tile().origin;
            let stats = self.schedule.step(rank, step, &mut times).map_err(|e| match e {
                Error::Site { x, y, source } => Error::Site { x: x + ox, y: y + oy, source },
                other => other,
            })?;
            if self.cfg.poison_halos {
                check_physical(rank, step)?;
            }
            rank.buffers_mut().swap();
            records.push(StepRecord { step: step + 1, rank: rank.id(), times, negative: stats.negative });
            if let Some(k) = every {
                if (step + 1) % k == 0 {
                    self.send_part(rank, step + 1);
                }
            }
        }
        Ok((rank.buffers().prv().physical_values(), records))
    }
}

fn check_physical(rank: &Rank, step: u64) -> Result<()> {
    let nxt = rank.buffers().nxt();
    let g = *nxt.geometry();
    for l in 0..g.q {
        for x in 0..g.lx {
            for y in 0..g.ly {
                if nxt.get_phys(l, x, y).is_nan() {
                    return Err(Error::Protocol {
                        rank: rank.id(),
                        detail: format!(
                            "halo poison reached population {l} at tile site ({x}, {y}) in step {step}"
                        ),
                    });
                }
            }
        }
    }
    Ok(())
}
