//! `tlbm validate`: named property suites with a JSON-lines report.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use tlbm_core::kernels::{equilibrium, moments};
use tlbm_core::presets::{RandomNearEquilibrium, RayleighTaylor, TaylorGreen};
use tlbm_core::velocity::gaussian_moment;
use tlbm_core::{
    build_velocity_set, run, run_observed, Boundary, GlobalState, SimConfig, Tiling, VelocitySet,
};
use tlbm_planner::{optimal_grid, optimal_grid_real, CostModelInput, DEFAULT_S};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub suite: &'static str,
    pub property: String,
    pub passed: bool,
    /// Measured quantity compared against `tolerance`, when there is one.
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

impl PropertyResult {
    fn bound(suite: &'static str, property: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            suite,
            property: property.into(),
            passed: value <= tolerance,
            value: Some(value),
            tolerance: Some(tolerance),
            detail: String::new(),
        }
    }

    fn check(
        suite: &'static str,
        property: impl Into<String>,
        passed: bool,
        detail: impl Into<String>,
    ) -> Self {
        Self { suite, property: property.into(), passed, value: None, tolerance: None, detail: detail.into() }
    }
}

pub trait ValidationSuite: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn run(&self) -> Result<Vec<PropertyResult>>;
}

pub struct SuiteRegistry {
    suites: Vec<Arc<dyn ValidationSuite>>,
}

impl SuiteRegistry {
    pub fn empty() -> Self {
        Self { suites: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(Conservation));
        r.register(Arc::new(RankInvariance));
        r.register(Arc::new(MomentSuite));
        r.register(Arc::new(PlannerOracle));
        r.register(Arc::new(TaylorGreenDecay));
        r
    }

    pub fn register(&mut self, s: Arc<dyn ValidationSuite>) {
        self.suites.retain(|e| e.name() != s.name());
        self.suites.push(s);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn ValidationSuite>> {
        self.suites.iter().find(|s| s.name() == name).cloned().ok_or_else(|| {
            CliError::Config(format!("unknown suite '{name}' (available: {})", self.names().join(", ")))
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.suites.iter().map(|s| s.name()).collect()
    }
}

/// Runs `suite`, writes one JSON object per property and a final summary
/// line, and fails with a validation error if any property failed.
pub fn validate(suite: &str, out: &mut dyn Write) -> Result<Vec<PropertyResult>> {
    let s = SuiteRegistry::builtin().get(suite)?;
    let results = s.run()?;
    for r in &results {
        writeln!(out, "{}", serde_json::to_string(r).map_err(CliError::runtime)?)?;
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    let summary = serde_json::json!({
        "suite": s.name(),
        "properties": results.len(),
        "failed": failed,
        "passed": failed == 0,
    });
    writeln!(out, "{summary}")?;
    if failed > 0 {
        return Err(CliError::Validation(format!(
            "{failed} of {} properties in '{}' failed",
            results.len(),
            s.name()
        )));
    }
    Ok(results)
}

/// `Σ |c_{l,a}| f_l` over the lattice for `a = x, y`: the size of the
/// momentum flux carried by the populations, used to scale momentum drift.
pub fn momentum_scale(state: &GlobalState, vs: &VelocitySet) -> [f64; 2] {
    let per_l = state.lx() * state.ly();
    let mut s = [0.0; 2];
    for (l, chunk) in state.values().chunks_exact(per_l).enumerate() {
        let total: f64 = chunk.iter().map(|v| v.abs()).sum();
        let [cx, cy] = vs.c()[l];
        s[0] += cx.unsigned_abs() as f64 * total;
        s[1] += cy.unsigned_abs() as f64 * total;
    }
    s
}

struct Conservation;

impl ValidationSuite for Conservation {
    fn name(&self) -> &'static str {
        "conservation"
    }

    fn description(&self) -> &'static str {
        "mass and momentum on a periodic 32x32 D2Q37 lattice without force, 100 steps"
    }

    fn run(&self) -> Result<Vec<PropertyResult>> {
        const SUITE: &str = "conservation";
        let vs = build_velocity_set("D2Q37")?;
        let mut cfg = SimConfig::new(32, 32, "D2Q37")?;
        cfg.boundary = Boundary::Periodic;
        cfg.params.g = [0.0, 0.0];
        cfg.tiling = Tiling::TwoD { nx: 2, ny: 2 };
        cfg.steps = 100;
        cfg.snapshot_every = Some(cfg.steps);
        let init = RandomNearEquilibrium { seed: 1, amplitude: 0.01, rho0: 1.0, t0: None };
        let mut states = Vec::new();
        run_observed(&cfg, &init, &mut |_, s| {
            states.push(s.clone());
            Ok(())
        })?;
        let (a, b) = (&states[0], &states[states.len() - 1]);
        let mass = (b.total_mass() / a.total_mass() - 1.0).abs();
        let (pa, pb) = (a.total_momentum(&vs), b.total_momentum(&vs));
        let scale = momentum_scale(a, &vs);
        Ok(vec![
            PropertyResult::bound(SUITE, "mass relative drift", mass, 1e-12),
            PropertyResult::bound(
                SUITE,
                "x momentum drift / flux scale",
                (pb[0] - pa[0]).abs() / scale[0],
                1e-12,
            ),
            PropertyResult::bound(
                SUITE,
                "y momentum drift / flux scale",
                (pb[1] - pa[1]).abs() / scale[1],
                1e-12,
            ),
        ])
    }
}

struct RankInvariance;

impl ValidationSuite for RankInvariance {
    fn name(&self) -> &'static str {
        "rank-invariance"
    }

    fn description(&self) -> &'static str {
        "bit-identical state across tilings and schedules, 48x48 D2Q37 with walls and gravity"
    }

    fn run(&self) -> Result<Vec<PropertyResult>> {
        const SUITE: &str = "rank-invariance";
        let vs = build_velocity_set("D2Q37")?;
        let mut base = SimConfig::new(48, 48, "D2Q37")?;
        base.steps = 20;
        base.params.t_bot = 1.05 * vs.cs2();
        base.params.t_top = 0.95 * vs.cs2();
        base.schedule = "staged".into();
        let init = RayleighTaylor { rho0: 1.0, amplitude: 4.0, width: 2.0 };
        let reference = run(&base, &init)?.state;
        let mut out = Vec::new();
        for tiling in ["1d:1", "1d:4", "2d:2x2", "2d:2x4"] {
            for schedule in ["staged", "overlapped"] {
                let mut cfg = base.clone();
                cfg.tiling = tiling.parse()?;
                cfg.schedule = schedule.into();
                let state = run(&cfg, &init)?.state;
                let diff = reference
                    .values()
                    .iter()
                    .zip(state.values())
                    .filter(|(a, b)| a.to_bits() != b.to_bits())
                    .count();
                out.push(PropertyResult::check(
                    SUITE,
                    format!("{tiling} {schedule} matches 1d:1 staged"),
                    diff == 0,
                    format!("{diff} differing values"),
                ));
            }
        }
        Ok(out)
    }
}

struct MomentSuite;

impl ValidationSuite for MomentSuite {
    fn name(&self) -> &'static str {
        "moments"
    }

    fn description(&self) -> &'static str {
        "quadrature moments of the velocity sets and moments of the equilibrium"
    }

    fn run(&self) -> Result<Vec<PropertyResult>> {
        const SUITE: &str = "moments";
        let mut out = Vec::new();
        for (name, odd_order, even_order) in [("D2Q37", 5, 8), ("D2Q9", 3, 4)] {
            let vs = build_velocity_set(name)?;
            let sum: f64 = vs.w().iter().sum();
            out.push(PropertyResult::bound(
                SUITE,
                format!("{name} weights sum to 1"),
                (sum - 1.0).abs(),
                1e-12,
            ));
            let mut odd: f64 = 0.0;
            let mut even: f64 = 0.0;
            for n in 1..=even_order.max(odd_order) {
                for a in 0..=n {
                    let b = n - a;
                    let m = vs.moment(a, b);
                    if n % 2 == 1 && n <= odd_order {
                        odd = odd.max(m.abs());
                    }
                    if n % 2 == 0 && n <= even_order {
                        let g = gaussian_moment(a, b, vs.cs2());
                        even = even.max((m - g).abs() / g.abs().max(1.0));
                    }
                }
            }
            out.push(PropertyResult::bound(
                SUITE,
                format!("{name} odd moments through order {odd_order}"),
                odd,
                1e-12,
            ));
            out.push(PropertyResult::bound(
                SUITE,
                format!("{name} even moments match the Gaussian through order {even_order}"),
                even,
                1e-12,
            ));
            let mut worst: f64 = 0.0;
            for (rho, u, t) in [(1.0, [0.0, 0.0], 1.0), (0.9, [0.05, -0.02], 0.95), (1.2, [-0.1, 0.08], 1.1)]
            {
                let t = t * vs.cs2();
                let f = equilibrium(rho, u, t, &vs, vs.max_eq_order())?;
                let m = moments(&f, &vs)?;
                worst = worst
                    .max((m.rho - rho).abs())
                    .max((m.u[0] - u[0]).abs())
                    .max((m.u[1] - u[1]).abs())
                    .max(if name == "D2Q37" { (m.t - t).abs() } else { 0.0 });
            }
            out.push(PropertyResult::bound(
                SUITE,
                format!("{name} equilibrium reproduces its moments"),
                worst,
                1e-12,
            ));
        }
        Ok(out)
    }
}

struct PlannerOracle;

impl ValidationSuite for PlannerOracle {
    fn name(&self) -> &'static str {
        "planner-oracle"
    }

    fn description(&self) -> &'static str {
        "optimal grids against brute-force factor search, Np in 1..=64"
    }

    fn run(&self) -> Result<Vec<PropertyResult>> {
        const SUITE: &str = "planner-oracle";
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let (mut int_bad, mut real_err, mut cases) = (0usize, 0.0f64, 0usize);
        for _ in 0..20 {
            let lx = rng.gen_range(64.0..8192.0f64).round();
            let ly = rng.gen_range(64.0..8192.0f64).round();
            let bx = 10f64.powf(rng.gen_range(8.0..10.5));
            let by = 10f64.powf(rng.gen_range(8.0..10.5));
            let s = rng.gen_range(8.0..2.0 * DEFAULT_S);
            for np in 1..=64usize {
                let i = CostModelInput::new(lx, ly, np, bx, by, 1e-8, s)?;
                let tc = |nx: usize, ny: usize| s * ly / (by * ny as f64) + s * lx / (bx * nx as f64);
                let brute = (1..=np)
                    .filter(|d| np % d == 0)
                    .map(|d| (d, np / d))
                    .fold(None, |best: Option<(usize, usize)>, p| match best {
                        Some(b) if tc(b.0, b.1) <= tc(p.0, p.1) => Some(b),
                        _ => Some(p),
                    })
                    .expect("1 divides np");
                if optimal_grid(&i) != brute {
                    int_bad += 1;
                }
                let want = (np as f64 * lx * by / (ly * bx)).sqrt();
                let (nx, _) = optimal_grid_real(&i);
                real_err = real_err.max((nx - want).abs() / want);
                cases += 1;
            }
        }
        Ok(vec![
            PropertyResult::check(
                SUITE,
                "integer optimum equals exhaustive search",
                int_bad == 0,
                format!("{int_bad} of {cases} cases differ"),
            ),
            PropertyResult::bound(SUITE, "real optimum matches the closed form", real_err, 1e-10),
        ])
    }
}

struct TaylorGreenDecay;

/// Least-squares slope of `ln E` against step for a D2Q9 Taylor-Green run,
/// and the rate `2 nu |k|^2` it should match.
pub fn taylor_green_slope(n: usize, tau: f64, steps: u64, every: u64) -> Result<(f64, f64)> {
    let vs = build_velocity_set("D2Q9")?;
    let mut cfg = SimConfig::new(n, n, "D2Q9")?;
    cfg.boundary = Boundary::Periodic;
    cfg.params.g = [0.0, 0.0];
    cfg.params.tau = tau;
    cfg.steps = steps;
    cfg.snapshot_every = Some(every);
    let init = TaylorGreen { rho0: 1.0, u0: 0.01, t0: None };
    let mut pts = Vec::new();
    run_observed(&cfg, &init, &mut |step, state| {
        pts.push((step as f64, state.macro_fields(&vs)?.kinetic_energy().ln()));
        Ok(())
    })?;
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let k = 2.0 * std::f64::consts::PI / n as f64;
    let nu = vs.cs2() * (tau - 0.5);
    Ok((sxy / sxx, -2.0 * nu * 2.0 * k * k))
}

impl ValidationSuite for TaylorGreenDecay {
    fn name(&self) -> &'static str {
        "taylor-green"
    }

    fn description(&self) -> &'static str {
        "kinetic-energy decay of a D2Q9 Taylor-Green vortex, 64x64, 2000 steps"
    }

    fn run(&self) -> Result<Vec<PropertyResult>> {
        let (got, want) = taylor_green_slope(64, 0.8, 2000, 100)?;
        Ok(vec![PropertyResult::bound(
            "taylor-green",
            "energy decay rate relative error",
            (got / want - 1.0).abs(),
            0.02,
        )])
    }
}
