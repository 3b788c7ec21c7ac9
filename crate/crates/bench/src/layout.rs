//! Kernel throughput under the SoA and AoS layouts.

use std::fmt;
use std::str::FromStr;

use tlbm_core::kernels::{collide, propagate};
use tlbm_core::presets::{InitContext, InitialCondition, RandomNearEquilibrium};
use tlbm_core::{
    allocate_field, build_velocity_set, GlobalState, LatticeGeometry, Layout, PhysicsParams, PopulationField,
    VelocitySet,
};

use crate::error::{BenchError, Result};
use crate::timing::{measure, BenchReport, BenchResult, Repeat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Propagate,
    Collide,
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::Propagate => "propagate",
            Kernel::Collide => "collide",
        })
    }
}

impl FromStr for Kernel {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "propagate" => Ok(Kernel::Propagate),
            "collide" => Ok(Kernel::Collide),
            other => Err(BenchError::Params(format!("unknown kernel '{other}' (propagate | collide)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutParams {
    pub lx: usize,
    pub ly: usize,
    pub velocity_set: String,
    /// Each worker owns an `lx / workers` wide strip with its own buffers.
    pub workers: usize,
    pub seed: u64,
    pub repeat: Repeat,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self {
            lx: 256,
            ly: 256,
            velocity_set: "D2Q37".into(),
            workers: 1,
            seed: 7,
            repeat: Repeat::default(),
        }
    }
}

struct Strip {
    prv: PopulationField,
    nxt: PopulationField,
}

fn make_strips(p: &LayoutParams, vs: &VelocitySet, layout: Layout) -> Result<Vec<Strip>> {
    if p.workers == 0 || p.lx % p.workers != 0 {
        return Err(BenchError::Params(format!("Lx = {} does not split over {} workers", p.lx, p.workers)));
    }
    let width = p.lx / p.workers;
    let params = PhysicsParams::defaults_for(vs);
    let ctx = InitContext { lx: width, ly: p.ly, vs, params: &params };
    let mut strips = Vec::with_capacity(p.workers);
    for w in 0..p.workers {
        let init = RandomNearEquilibrium {
            seed: p.seed.wrapping_add(w as u64),
            amplitude: 0.01,
            rho0: 1.0,
            t0: None,
        };
        let mut state = GlobalState::zeros(width, p.ly, vs.q());
        let mut site = vec![0.0; vs.q()];
        for x in 0..width {
            for y in 0..p.ly {
                init.site(&ctx, x, y, &mut site)?;
                for (l, &v) in site.iter().enumerate() {
                    state.set(l, x, y, v);
                }
            }
        }
        let geom = LatticeGeometry::new(width, p.ly, vs, Layout::Soa)?;
        let (mut prv, _) = allocate_field(geom)?;
        state.store_into(&mut prv)?;
        // the halo holds a copy of the state's opposite edge; any finite
        // data would do for timing
        for l in 0..vs.q() {
            for x in 0..geom.nx() {
                for y in 0..geom.ny() {
                    let gx = (x as isize - geom.hx as isize).rem_euclid(width as isize);
                    let gy = (y as isize - geom.hy as isize).rem_euclid(p.ly as isize);
                    prv.set(l, x, y, state.get(l, gx as usize, gy as usize));
                }
            }
        }
        let prv = prv.to_layout(layout);
        let nxt = prv.clone();
        strips.push(Strip { prv, nxt });
    }
    Ok(strips)
}

fn apply(strip: &mut Strip, kernel: Kernel, vs: &VelocitySet, params: &PhysicsParams) -> Result<()> {
    let region = strip.prv.geometry().physical();
    match kernel {
        Kernel::Propagate => propagate(&strip.prv, &mut strip.nxt, vs, &region)?,
        Kernel::Collide => {
            collide(&mut strip.nxt, vs, params, &region)?;
        }
    }
    Ok(())
}

fn apply_all(strips: &mut [Strip], kernel: Kernel, vs: &VelocitySet, params: &PhysicsParams) -> Result<()> {
    if strips.len() == 1 {
        return apply(&mut strips[0], kernel, vs, params);
    }
    std::thread::scope(|s| {
        let handles: Vec<_> =
            strips.iter_mut().map(|strip| s.spawn(move || apply(strip, kernel, vs, params))).collect();
        handles.into_iter().try_for_each(|h| h.join().expect("layout worker panicked"))
    })
}

fn outputs(strips: &[Strip]) -> Vec<Vec<f64>> {
    strips.iter().map(|s| s.nxt.physical_values()).collect()
}

/// Times one kernel in one layout over the whole lattice. Reports sites/s.
pub fn bench_layout(p: &LayoutParams, kernel: Kernel, layout: Layout) -> Result<BenchResult> {
    let vs = build_velocity_set(&p.velocity_set)?;
    let params = PhysicsParams::defaults_for(&vs);
    let mut strips = make_strips(p, &vs, layout)?;
    let timing = measure(p.repeat, || apply_all(&mut strips, kernel, &vs, &params))?;
    Ok(BenchResult {
        name: format!("{layout}-{kernel}"),
        parameter: p.workers as f64,
        timing,
        metric: (p.lx * p.ly) as f64 / timing.median,
    })
}

/// Applies `kernel` once in both layouts from the same state and compares
/// the outputs bit for bit.
pub fn check_layouts_agree(p: &LayoutParams, kernel: Kernel) -> Result<()> {
    let vs = build_velocity_set(&p.velocity_set)?;
    let params = PhysicsParams::defaults_for(&vs);
    let mut soa = make_strips(p, &vs, Layout::Soa)?;
    let mut aos = make_strips(p, &vs, Layout::Aos)?;
    apply_all(&mut soa, kernel, &vs, &params)?;
    apply_all(&mut aos, kernel, &vs, &params)?;
    let (a, b) = (outputs(&soa), outputs(&aos));
    let same = a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| x.to_bits() == y.to_bits());
    if !same {
        return Err(BenchError::Check(format!("{kernel} differs between SoA and AoS")));
    }
    Ok(())
}

/// Both kernels in both layouts, side by side.
pub fn layout_report(p: &LayoutParams) -> Result<BenchReport> {
    let mut results = Vec::new();
    for kernel in [Kernel::Propagate, Kernel::Collide] {
        check_layouts_agree(p, kernel)?;
        for layout in [Layout::Soa, Layout::Aos] {
            results.push(bench_layout(p, kernel, layout)?);
        }
    }
    Ok(BenchReport {
        benchmark: "layout".into(),
        parameter: "workers [1]".into(),
        metric: "throughput [site/s]".into(),
        results,
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> LayoutParams {
        LayoutParams { lx: 24, ly: 16, repeat: Repeat { warmup: 1, reps: 5 }, ..LayoutParams::default() }
    }

    #[test]
    fn layouts_agree_for_both_kernels() {
        for vs in ["D2Q37", "D2Q9"] {
            let p = LayoutParams { velocity_set: vs.into(), workers: 2, ..small() };
            check_layouts_agree(&p, Kernel::Propagate).unwrap();
            check_layouts_agree(&p, Kernel::Collide).unwrap();
        }
    }

    #[test]
    fn throughput_is_positive_and_finite() {
        let r = bench_layout(&small(), Kernel::Collide, Layout::Aos).unwrap();
        assert!(r.metric > 0.0 && r.metric.is_finite());
        assert_eq!(r.name, "aos-collide");
    }

    #[test]
    fn uneven_split_rejected() {
        let p = LayoutParams { workers: 5, ..small() };
        assert!(matches!(bench_layout(&p, Kernel::Propagate, Layout::Soa), Err(BenchError::Params(_))));
    }
}
