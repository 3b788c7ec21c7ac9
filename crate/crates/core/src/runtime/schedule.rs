//! Per-step orderings of communication and compute.

use std::sync::Arc;
use std::time::Instant;

use super::rank::Rank;
use crate::error::{Error, Result};
use crate::kernels::{bc, collide, propagate, propagate_collide_fused, KernelStats};

/// Seconds spent in each phase of one step on one rank.
#[derive(Debug, Default, Clone, Copy, PartialEq)]
pub struct PhaseTimes {
    /// Y-direction (strided, packed) halo update.
    pub comm_nc: f64,
    /// X-direction (contiguous) halo update, including the wait.
    pub comm_c: f64,
    pub bulk: f64,
    pub border: f64,
}

pub trait Schedule: Send + Sync {
    fn name(&self) -> &'static str;

    /// Advances `rank` by one step, leaving the result in `nxt`. The caller
    /// swaps buffers.
    fn step(&self, rank: &mut Rank, step: u64, times: &mut PhaseTimes) -> Result<KernelStats>;
}

fn lap(t: &mut Instant) -> f64 {
    let now = Instant::now();
    let s = now.duration_since(*t).as_secs_f64();
    *t = now;
    s
}

/// Every exchange first, then propagate, bc and collide over the whole tile.
#[derive(Debug, Default, Clone, Copy)]
pub struct Staged;

impl Schedule for Staged {
    fn name(&self) -> &'static str {
        "staged"
    }

    fn step(&self, rank: &mut Rank, step: u64, times: &mut PhaseTimes) -> Result<KernelStats> {
        let mut t = Instant::now();
        rank.y_phase(step)?;
        times.comm_nc += lap(&mut t);
        rank.x_post(step)?;
        rank.x_complete(step)?;
        times.comm_c += lap(&mut t);

        let walls = rank.wall_regions();
        let vs = rank.vs.clone();
        let params = rank.params;
        let whole = rank.buf.geometry().physical();
        let (prv, nxt) = rank.buf.split();
        propagate(prv, nxt, &vs, &whole)?;
        for (region, t_wall) in &walls {
            bc(nxt, &vs, &params, region, *t_wall)?;
        }
        let stats = collide(nxt, &vs, &params, &whole)?;
        times.bulk += lap(&mut t);
        Ok(stats)
    }
}

/// Fused bulk update while the X halos are in flight, then the borders.
#[derive(Debug, Default, Clone, Copy)]
pub struct Overlapped;

impl Schedule for Overlapped {
    fn name(&self) -> &'static str {
        "overlapped"
    }

    fn step(&self, rank: &mut Rank, step: u64, times: &mut PhaseTimes) -> Result<KernelStats> {
        let mut t = Instant::now();
        rank.y_phase(step)?;
        times.comm_nc += lap(&mut t);
        rank.x_post(step)?;
        times.comm_c += lap(&mut t);

        let vs = rank.vs.clone();
        let params = rank.params;
        let wall_rows = rank.wall_rows();
        let walls = rank.wall_regions();
        let regions = rank.regions.clone();
        let mut stats = KernelStats::default();
        {
            let (prv, nxt) = rank.buf.split();
            stats += propagate_collide_fused(prv, nxt, &vs, &params, &regions.bulk, &wall_rows)?;
        }
        times.bulk += lap(&mut t);

        rank.x_complete(step)?;
        times.comm_c += lap(&mut t);

        let (prv, nxt) = rank.buf.split();
        for side in [&regions.left, &regions.right] {
            stats += propagate_collide_fused(prv, nxt, &vs, &params, side, &wall_rows)?;
        }
        for edge in [&regions.bottom, &regions.top] {
            match walls.iter().find(|(r, _)| r == edge) {
                Some((region, t_wall)) => {
                    propagate(prv, nxt, &vs, region)?;
                    bc(nxt, &vs, &params, region, *t_wall)?;
                    stats += collide(nxt, &vs, &params, region)?;
                }
                None => {
                    stats += propagate_collide_fused(prv, nxt, &vs, &params, edge, &wall_rows)?;
                }
            }
        }
        times.border += lap(&mut t);
        Ok(stats)
    }
}

/// Named schedules selectable at run time.
pub struct ScheduleRegistry {
    entries: Vec<Arc<dyn Schedule>>,
}

impl ScheduleRegistry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(Staged));
        r.register(Arc::new(Overlapped));
        r
    }

    /// Adds `s`, replacing any schedule of the same name.
    pub fn register(&mut self, s: Arc<dyn Schedule>) {
        self.entries.retain(|e| e.name() != s.name());
        self.entries.push(s);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Schedule>> {
        self.entries.iter().find(|e| e.name().eq_ignore_ascii_case(name)).cloned().ok_or_else(|| {
            Error::config(format!("unknown schedule '{name}' (available: {})", self.names().join(", ")))
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_lookup() {
        let r = ScheduleRegistry::builtin();
        assert_eq!(r.get("OVERLAPPED").unwrap().name(), "overlapped");
        assert_eq!(r.names(), vec!["staged", "overlapped"]);
        assert!(matches!(r.get("eager").err(), Some(Error::Config(_))));
    }
}
