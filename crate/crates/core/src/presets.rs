//! Initial conditions, evaluated per global site so the result does not
//! depend on how the lattice is tiled.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernels::{equilibrium_into, PhysicsParams};
use crate::velocity::VelocitySet;

/// What an initial condition may look at besides the site coordinates.
#[derive(Debug, Clone, Copy)]
pub struct InitContext<'a> {
    pub lx: usize,
    pub ly: usize,
    pub vs: &'a VelocitySet,
    pub params: &'a PhysicsParams,
}

pub trait InitialCondition: Send + Sync {
    fn name(&self) -> &str;

    /// Populations of global site `(x, y)`.
    fn site(&self, ctx: &InitContext<'_>, x: usize, y: usize, out: &mut [f64]) -> Result<()>;
}

/// Knobs shared by the built-in presets; each reads what it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetOptions {
    pub seed: u64,
    /// Perturbation size. Each preset has its own default.
    pub amplitude: Option<f64>,
    pub rho0: f64,
    /// Reference temperature; `None` means the velocity set's `cs2`.
    pub t0: Option<f64>,
}

impl Default for PresetOptions {
    fn default() -> Self {
        Self { seed: 0x5eed, amplitude: None, rho0: 1.0, t0: None }
    }
}

/// Rest state at `(rho0, t0)`.
#[derive(Debug, Clone)]
pub struct Uniform {
    pub rho0: f64,
    pub t0: Option<f64>,
}

impl InitialCondition for Uniform {
    fn name(&self) -> &str {
        "uniform"
    }

    fn site(&self, ctx: &InitContext<'_>, _x: usize, _y: usize, out: &mut [f64]) -> Result<()> {
        let t = self.t0.unwrap_or(ctx.vs.cs2());
        equilibrium_into(self.rho0, [0.0, 0.0], t, ctx.vs, ctx.params.eq_order, out)
    }
}

/// Cold dense fluid over hot light fluid. The interface is a smoothed step
/// at mid height displaced by one cosine wave. Each column starts in
/// hydrostatic balance, `dp/dy = rho g_y` with `p = rho T`, so gravity does
/// not launch pressure waves. Hot and cold temperatures are taken from the
/// bottom and top walls.
#[derive(Debug, Clone)]
pub struct RayleighTaylor {
    pub rho0: f64,
    /// Interface displacement in sites.
    pub amplitude: f64,
    /// Interface half-width in sites.
    pub width: f64,
}

impl RayleighTaylor {
    pub fn temperature(&self, ctx: &InitContext<'_>, x: usize, y: usize) -> f64 {
        let (hot, cold) = (ctx.params.t_bot, ctx.params.t_top);
        let y0 = 0.5 * ctx.ly as f64 + self.amplitude * (2.0 * PI * (x as f64 + 0.5) / ctx.lx as f64).cos();
        let s = ((y as f64 + 0.5 - y0) / self.width).tanh();
        0.5 * (hot + cold) - 0.5 * (hot - cold) * s
    }

    /// Pressure at `(x, y)`, integrated upward from the mean pressure at the
    /// bottom row with the trapezoid rule on `ln p`.
    pub fn pressure(&self, ctx: &InitContext<'_>, x: usize, y: usize) -> f64 {
        let gy = ctx.params.g[1];
        let p0 = self.rho0 * 0.5 * (ctx.params.t_bot + ctx.params.t_top);
        let mut ln_p = p0.ln();
        let mut inv_prev = 1.0 / self.temperature(ctx, x, 0);
        for yy in 1..=y {
            let inv = 1.0 / self.temperature(ctx, x, yy);
            ln_p += 0.5 * gy * (inv_prev + inv);
            inv_prev = inv;
        }
        ln_p.exp()
    }
}

impl InitialCondition for RayleighTaylor {
    fn name(&self) -> &str {
        "rayleigh-taylor"
    }

    fn site(&self, ctx: &InitContext<'_>, x: usize, y: usize, out: &mut [f64]) -> Result<()> {
        let t = self.temperature(ctx, x, y);
        let p = self.pressure(ctx, x, y);
        equilibrium_into(p / t, [0.0, 0.0], t, ctx.vs, ctx.params.eq_order, out)
    }
}

/// Decaying shear vortex array with one wavelength per box side.
#[derive(Debug, Clone)]
pub struct TaylorGreen {
    pub rho0: f64,
    pub u0: f64,
    pub t0: Option<f64>,
}

impl TaylorGreen {
    pub fn velocity(&self, lx: usize, ly: usize, x: usize, y: usize) -> [f64; 2] {
        let kx = 2.0 * PI / lx as f64;
        let ky = 2.0 * PI / ly as f64;
        let (xf, yf) = (x as f64, y as f64);
        [
            -self.u0 * (ky / kx).sqrt() * (kx * xf).cos() * (ky * yf).sin(),
            self.u0 * (kx / ky).sqrt() * (kx * xf).sin() * (ky * yf).cos(),
        ]
    }
}

impl InitialCondition for TaylorGreen {
    fn name(&self) -> &str {
        "taylor-green"
    }

    fn site(&self, ctx: &InitContext<'_>, x: usize, y: usize, out: &mut [f64]) -> Result<()> {
        let t = self.t0.unwrap_or(ctx.vs.cs2());
        let u = self.velocity(ctx.lx, ctx.ly, x, y);
        let kx = 2.0 * PI / ctx.lx as f64;
        let ky = 2.0 * PI / ctx.ly as f64;
        // pressure balancing the vortex, p = rho T
        let dp = -0.25
            * self.rho0
            * self.u0
            * self.u0
            * ((ky / kx) * (2.0 * kx * x as f64).cos() + (kx / ky) * (2.0 * ky * y as f64).cos());
        let rho = self.rho0 + dp / t;
        equilibrium_into(rho, u, t, ctx.vs, ctx.params.eq_order, out)
    }
}

/// Equilibrium with small random density, velocity and temperature
/// fluctuations plus a random non-equilibrium part. Each site draws from
/// its own stream, so values depend only on `(seed, x, y)`.
#[derive(Debug, Clone)]
pub struct RandomNearEquilibrium {
    pub seed: u64,
    pub amplitude: f64,
    pub rho0: f64,
    pub t0: Option<f64>,
}

impl InitialCondition for RandomNearEquilibrium {
    fn name(&self) -> &str {
        "random"
    }

    fn site(&self, ctx: &InitContext<'_>, x: usize, y: usize, out: &mut [f64]) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((y * ctx.lx + x) as u64);
        let a = self.amplitude;
        let t0 = self.t0.unwrap_or(ctx.vs.cs2());
        let rho = self.rho0 * (1.0 + a * rng.gen_range(-1.0..1.0));
        let u = [a * rng.gen_range(-1.0..1.0), a * rng.gen_range(-1.0..1.0)];
        let t = t0 * (1.0 + a * rng.gen_range(-1.0..1.0));
        equilibrium_into(rho, u, t, ctx.vs, ctx.params.eq_order, out)?;
        for (v, w) in out.iter_mut().zip(ctx.vs.w()) {
            *v += 0.1 * a * rho * w * rng.gen_range(-1.0..1.0);
        }
        Ok(())
    }
}

type Factory = fn(&PresetOptions) -> Arc<dyn InitialCondition>;

/// Named initial conditions built from [`PresetOptions`].
pub struct PresetRegistry {
    entries: Vec<(&'static str, Factory)>,
}

impl PresetRegistry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("uniform", |o| Arc::new(Uniform { rho0: o.rho0, t0: o.t0 }));
        r.register("rayleigh-taylor", |o| {
            Arc::new(RayleighTaylor { rho0: o.rho0, amplitude: o.amplitude.unwrap_or(4.0), width: 2.0 })
        });
        r.register("taylor-green", |o| {
            Arc::new(TaylorGreen { rho0: o.rho0, u0: o.amplitude.unwrap_or(0.01), t0: o.t0 })
        });
        r.register("random", |o| {
            Arc::new(RandomNearEquilibrium {
                seed: o.seed,
                amplitude: o.amplitude.unwrap_or(0.01),
                rho0: o.rho0,
                t0: o.t0,
            })
        });
        r
    }

    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, factory));
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn build(&self, name: &str, opts: &PresetOptions) -> Result<Arc<dyn InitialCondition>> {
        self.entries.iter().find(|(n, _)| n.eq_ignore_ascii_case(name)).map(|(_, f)| f(opts)).ok_or_else(
            || {
                Error::config(format!(
                    "unknown initial condition '{name}' (available: {})",
                    self.names().join(", ")
                ))
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::moments;
    use crate::velocity::build_velocity_set;

    #[test]
    fn random_is_a_function_of_site_only() {
        let vs = build_velocity_set("D2Q9").unwrap();
        let params = PhysicsParams::defaults_for(&vs);
        let ctx = InitContext { lx: 8, ly: 8, vs: &vs, params: &params };
        let ic = PresetRegistry::builtin().build("random", &PresetOptions::default()).unwrap();
        let mut a = vec![0.0; 9];
        let mut b = vec![0.0; 9];
        let mut c = vec![0.0; 9];
        ic.site(&ctx, 3, 5, &mut a).unwrap();
        ic.site(&ctx, 0, 0, &mut c).unwrap();
        ic.site(&ctx, 3, 5, &mut b).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rayleigh_taylor_is_cold_on_top() {
        let vs = build_velocity_set("D2Q37").unwrap();
        let mut params = PhysicsParams::defaults_for(&vs);
        params.t_bot = 1.2 * vs.cs2();
        params.t_top = 0.8 * vs.cs2();
        let ctx = InitContext { lx: 32, ly: 64, vs: &vs, params: &params };
        let rt = RayleighTaylor { rho0: 1.0, amplitude: 2.0, width: 2.0 };
        let mut f = vec![0.0; vs.q()];
        rt.site(&ctx, 5, 63, &mut f).unwrap();
        let top = moments(&f, &vs).unwrap();
        rt.site(&ctx, 5, 0, &mut f).unwrap();
        let bottom = moments(&f, &vs).unwrap();
        assert!(top.t < bottom.t && top.rho > bottom.rho);
        // pressure falls with height under downward gravity
        assert!(top.rho * top.t < bottom.rho * bottom.t);
        params.g = [0.0, 0.0];
        let ctx = InitContext { lx: 32, ly: 64, vs: &vs, params: &params };
        assert!((rt.pressure(&ctx, 5, 63) - rt.pressure(&ctx, 5, 0)).abs() < 1e-15);
    }

    #[test]
    fn taylor_green_is_divergence_free_on_grid() {
        let tg = TaylorGreen { rho0: 1.0, u0: 0.01, t0: None };
        let n = 16;
        // centered differences of a pure Fourier mode vanish identically
        for x in 0..n {
            for y in 0..n {
                let dudx = tg.velocity(n, n, (x + 1) % n, y)[0] - tg.velocity(n, n, (x + n - 1) % n, y)[0];
                let dvdy = tg.velocity(n, n, x, (y + 1) % n)[1] - tg.velocity(n, n, x, (y + n - 1) % n)[1];
                assert!((dudx + dvdy).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn unknown_preset() {
        let err = PresetRegistry::builtin().build("vortex-street", &PresetOptions::default()).err().unwrap();
        assert!(err.to_string().contains("taylor-green"));
    }
}
