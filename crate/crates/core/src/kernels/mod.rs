//! Per-site physics and the lattice-wide kernels built on it.
//!
//! All quantities are in lattice units with `dt = 1` and `D = 2`. The
//! reference temperature of a velocity set is its `cs2`.

mod field;

pub use field::{bc, collide, propagate, propagate_collide_fused, KernelStats};

use crate::error::{Error, Result};
use crate::velocity::VelocitySet;

/// Spatial dimensionality.
pub const DIM: usize = 2;

/// Number of rows next to each wall rewritten by the boundary kernel.
pub const WALL_ROWS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsParams {
    pub tau: f64,
    pub g: [f64; 2],
    pub t_top: f64,
    pub t_bot: f64,
    /// Hermite truncation order of the equilibrium.
    pub eq_order: usize,
}

impl PhysicsParams {
    /// Defaults for `vs`: `tau = 1`, `g = (0, -1e-4)`, walls at `cs2`.
    pub fn defaults_for(vs: &VelocitySet) -> Self {
        Self { tau: 1.0, g: [0.0, -1e-4], t_top: vs.cs2(), t_bot: vs.cs2(), eq_order: vs.max_eq_order() }
    }

    pub fn validate(&self, vs: &VelocitySet) -> Result<()> {
        if !(self.tau > 0.5) || !self.tau.is_finite() {
            return Err(Error::config(format!("tau = {} must exceed dt/2 = 0.5", self.tau)));
        }
        if !(self.t_top > 0.0 && self.t_bot > 0.0) {
            return Err(Error::config("wall temperatures must be positive"));
        }
        if self.eq_order > vs.max_eq_order() {
            return Err(Error::config(format!(
                "equilibrium order {} exceeds what {} integrates exactly ({})",
                self.eq_order,
                vs.name(),
                vs.max_eq_order()
            )));
        }
        if !self.g.iter().all(|g| g.is_finite()) {
            return Err(Error::config("body force must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub rho: f64,
    pub u: [f64; 2],
    pub t: f64,
}

/// First-approximation hydrodynamic fields of one site.
pub fn moments(f: &[f64], vs: &VelocitySet) -> Result<Moments> {
    let c = vs.c();
    let mut rho = 0.0;
    let mut jx = 0.0;
    let mut jy = 0.0;
    let mut e = 0.0;
    for (fl, cl) in f.iter().zip(c) {
        let cx = cl[0] as f64;
        let cy = cl[1] as f64;
        rho += fl;
        jx += cx * fl;
        jy += cy * fl;
        e += (cx * cx + cy * cy) * fl;
    }
    if !(rho > 0.0) {
        return Err(Error::Degenerate(format!("density {rho} is not positive")));
    }
    let ux = jx / rho;
    let uy = jy / rho;
    // D rho T = sum |c - u|^2 f = sum c^2 f - rho u^2
    let t = (e / rho - (ux * ux + uy * uy)) / DIM as f64;
    Ok(Moments { rho, u: [ux, uy], t })
}

/// Velocity and temperature entering the equilibrium under a body force.
pub fn apply_shift(u: [f64; 2], t: f64, params: &PhysicsParams) -> Result<([f64; 2], f64)> {
    let [gx, gy] = params.g;
    let tau = params.tau;
    let u_bar = [u[0] + tau * gx, u[1] + tau * gy];
    let t_bar = t - tau * tau * (gx * gx + gy * gy) / DIM as f64;
    if !(t_bar > 0.0) {
        return Err(Error::Domain(format!("shifted temperature {t_bar} is not positive")));
    }
    Ok((u_bar, t_bar))
}

/// Discrete Hermite projection of the Maxwellian `(rho, u, t)` truncated at
/// `order`, written into `out`.
pub fn equilibrium_into(
    rho: f64,
    u: [f64; 2],
    t: f64,
    vs: &VelocitySet,
    order: usize,
    out: &mut [f64],
) -> Result<()> {
    if !(rho > 0.0) || !(t > 0.0) {
        return Err(Error::Domain(format!("equilibrium needs rho > 0 and T > 0 (rho = {rho}, T = {t})")));
    }
    let d = DIM as f64;
    let scale = vs.cs2().sqrt().recip();
    let ux = u[0] * scale;
    let uy = u[1] * scale;
    let uu = ux * ux + uy * uy;
    let th = t / vs.cs2() - 1.0;

    for (l, o) in out.iter_mut().enumerate().take(vs.q()) {
        let [xx, xy] = vs.xi()[l];
        let x2 = vs.xi2()[l];
        let cu = xx * ux + xy * uy;
        let cu2 = cu * cu;
        let mut s = 1.0;
        if order >= 1 {
            s += cu;
        }
        if order >= 2 {
            s += 0.5 * (cu2 - uu + th * (x2 - d));
        }
        if order >= 3 {
            s += cu * (cu2 - 3.0 * uu + 3.0 * th * (x2 - d - 2.0)) / 6.0;
        }
        if order >= 4 {
            s += (cu2 * cu2 - 6.0 * cu2 * uu
                + 3.0 * uu * uu
                + 6.0 * th * (cu2 * (x2 - d - 4.0) + uu * (d + 2.0 - x2))
                + 3.0 * th * th * (x2 * x2 - 2.0 * (d + 2.0) * x2 + d * (d + 2.0)))
                / 24.0;
        }
        *o = rho * vs.w()[l] * s;
    }
    Ok(())
}

/// Allocating wrapper around [`equilibrium_into`].
pub fn equilibrium(rho: f64, u: [f64; 2], t: f64, vs: &VelocitySet, order: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; vs.q()];
    equilibrium_into(rho, u, t, vs, order, &mut out)?;
    Ok(out)
}

/// BGK relaxation of one gathered site toward the shifted equilibrium, in
/// place. `scratch` must hold at least `Q` values.
#[inline]
pub fn collide_site(
    f: &mut [f64],
    params: &PhysicsParams,
    vs: &VelocitySet,
    scratch: &mut [f64],
) -> Result<()> {
    let m = moments(f, vs)?;
    let (u_bar, t_bar) = apply_shift(m.u, m.t, params)?;
    equilibrium_into(m.rho, u_bar, t_bar, vs, params.eq_order, scratch)?;
    let omega = 1.0 / params.tau;
    for (fl, feq) in f.iter_mut().zip(scratch.iter()) {
        *fl -= omega * (*fl - feq);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::velocity::{build_velocity_set, gaussian_moment};
    use proptest::prelude::*;

    fn sets() -> [VelocitySet; 2] {
        [build_velocity_set("D2Q37").unwrap(), build_velocity_set("D2Q9").unwrap()]
    }

    // E[(m + s Z)^n] for Z standard normal, by binomial expansion
    fn shifted_gaussian_moment(mean: f64, var: f64, n: u32) -> f64 {
        let mut acc = 0.0;
        let mut binom = 1.0;
        for k in 0..=n {
            if k > 0 {
                binom = binom * (n - k + 1) as f64 / k as f64;
            }
            acc += binom * mean.powi((n - k) as i32) * gaussian_moment(k, 0, var);
        }
        acc
    }

    #[test]
    fn rest_state_moments() {
        for vs in sets() {
            let m = moments(vs.w(), &vs).unwrap();
            assert!((m.rho - 1.0).abs() < 1e-14);
            assert!(m.u[0].abs() < 1e-15 && m.u[1].abs() < 1e-15);
            assert!((m.t - vs.cs2()).abs() < 1e-13, "{} T = {}", vs.name(), m.t);
        }
        let q9 = build_velocity_set("D2Q9").unwrap();
        assert!((moments(q9.w(), &q9).unwrap().t - 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn zero_populations_are_degenerate() {
        let vs = build_velocity_set("D2Q9").unwrap();
        assert!(matches!(moments(&[0.0; 9], &vs), Err(Error::Degenerate(_))));
    }

    #[test]
    fn equilibrium_at_reference_is_weights() {
        for vs in sets() {
            let feq = equilibrium(1.0, [0.0, 0.0], vs.cs2(), &vs, vs.max_eq_order()).unwrap();
            for (a, b) in feq.iter().zip(vs.w()) {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn equilibrium_rejects_nonpositive_inputs() {
        let vs = build_velocity_set("D2Q9").unwrap();
        assert!(equilibrium(0.0, [0.0; 2], 0.3, &vs, 2).is_err());
        assert!(equilibrium(1.0, [0.0; 2], -0.1, &vs, 2).is_err());
    }

    #[test]
    fn d2q9_momentum_exact() {
        let vs = build_velocity_set("D2Q9").unwrap();
        let feq = equilibrium(1.0, [0.05, 0.0], vs.cs2(), &vs, 2).unwrap();
        let m = moments(&feq, &vs).unwrap();
        assert!((m.u[0] - 0.05).abs() < 1e-12);
        assert!(m.u[1].abs() < 1e-15);
    }

    #[test]
    fn shift_examples() {
        let mut p = PhysicsParams::defaults_for(&build_velocity_set("D2Q9").unwrap());
        p.g = [0.0, 0.0];
        assert_eq!(apply_shift([0.1, 0.2], 0.3, &p).unwrap(), ([0.1, 0.2], 0.3));

        p.g = [0.0, -0.01];
        p.tau = 1.0;
        let (u, t) = apply_shift([0.0, 0.0], 0.5, &p).unwrap();
        assert_eq!(u, [0.0, -0.01]);
        assert!((t - (0.5 - 5e-5)).abs() < 1e-16);

        p.g = [0.0, -1.0];
        assert!(matches!(apply_shift([0.0; 2], 0.5, &p), Err(Error::Domain(_))));
    }

    #[test]
    fn collision_fixed_point() {
        let vs = build_velocity_set("D2Q37").unwrap();
        let mut p = PhysicsParams::defaults_for(&vs);
        p.g = [0.0, 0.0];
        p.tau = 0.8;
        let feq = equilibrium(1.1, [0.02, -0.01], 0.72, &vs, 4).unwrap();
        // moments of feq reproduce (rho, u, T), so feq maps to itself up to rounding
        let mut f = feq.clone();
        let mut scratch = vec![0.0; vs.q()];
        collide_site(&mut f, &p, &vs, &mut scratch).unwrap();
        for (a, b) in f.iter().zip(&feq) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn large_tau_leaves_populations() {
        let vs = build_velocity_set("D2Q9").unwrap();
        let mut p = PhysicsParams::defaults_for(&vs);
        p.tau = 1e12;
        p.g = [0.0, 0.0];
        let orig: Vec<f64> = vs.w().iter().enumerate().map(|(l, w)| w * (1.0 + 0.01 * l as f64)).collect();
        let mut f = orig.clone();
        collide_site(&mut f, &p, &vs, &mut vec![0.0; 9]).unwrap();
        for (a, b) in f.iter().zip(&orig) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn params_validation() {
        let vs = build_velocity_set("D2Q9").unwrap();
        let mut p = PhysicsParams::defaults_for(&vs);
        assert!(p.validate(&vs).is_ok());
        p.tau = 0.5;
        assert!(p.validate(&vs).is_err());
        p.tau = 1.0;
        p.eq_order = 4;
        assert!(p.validate(&vs).is_err());
    }

    proptest! {
        // Moments of the truncated expansion up to the truncation order match
        // those of the continuous Maxwellian (exact quadrature).
        #[test]
        fn equilibrium_reproduces_maxwellian_moments(
            rho in 0.5f64..2.0,
            ux in -0.1f64..0.1,
            uy in -0.1f64..0.1,
            dt in -0.2f64..0.2,
        ) {
            for vs in sets() {
                let order = vs.max_eq_order() as u32;
                let t = vs.cs2() * (1.0 + dt);
                let feq = equilibrium(rho, [ux, uy], t, &vs, order as usize).unwrap();
                for n in 0..=order {
                    for a in 0..=n {
                        let b = n - a;
                        let got: f64 = vs.c().iter().zip(&feq)
                            .map(|(c, f)| f * (c[0] as f64).powi(a as i32) * (c[1] as f64).powi(b as i32))
                            .sum();
                        let want = rho * shifted_gaussian_moment(ux, t, a) * shifted_gaussian_moment(uy, t, b);
                        prop_assert!((got - want).abs() < 1e-12 * want.abs().max(1.0),
                            "{} moment ({},{}) got {} want {}", vs.name(), a, b, got, want);
                    }
                }
                let m = moments(&feq, &vs).unwrap();
                prop_assert!((m.rho - rho).abs() < 1e-13);
                prop_assert!((m.u[0] - ux).abs() < 1e-13 && (m.u[1] - uy).abs() < 1e-13);
                prop_assert!((m.t - t).abs() < 1e-12);
            }
        }

        #[test]
        fn collision_conserves_mass_and_momentum(
            seed in any::<u64>(),
            tau in 0.55f64..3.0,
        ) {
            for vs in sets() {
                let mut p = PhysicsParams::defaults_for(&vs);
                p.g = [0.0, 0.0];
                p.tau = tau;
                let mut s = seed;
                let f0: Vec<f64> = vs.w().iter().map(|w| {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                    w * (1.0 + 0.05 * ((s >> 11) as f64 / (1u64 << 53) as f64 - 0.5))
                }).collect();
                let mut f = f0.clone();
                collide_site(&mut f, &p, &vs, &mut vec![0.0; vs.q()]).unwrap();
                let sum = |g: &[f64], k: usize| -> f64 {
                    g.iter().zip(vs.c()).map(|(v, c)| match k {
                        0 => *v,
                        1 => v * c[0] as f64,
                        _ => v * c[1] as f64,
                    }).sum()
                };
                for k in 0..3 {
                    prop_assert!((sum(&f, k) - sum(&f0, k)).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn collision_is_linear_contraction(seed in any::<u64>(), tau in 0.55f64..3.0) {
            let vs = build_velocity_set("D2Q37").unwrap();
            let mut p = PhysicsParams::defaults_for(&vs);
            p.tau = tau;
            p.g = [0.0, -1e-3];
            let mut s = seed;
            let f0: Vec<f64> = vs.w().iter().map(|w| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                w * (1.0 + 0.1 * ((s >> 11) as f64 / (1u64 << 53) as f64 - 0.5))
            }).collect();
            let m = moments(&f0, &vs).unwrap();
            let (ub, tb) = apply_shift(m.u, m.t, &p).unwrap();
            let feq = equilibrium(m.rho, ub, tb, &vs, 4).unwrap();
            let mut f = f0.clone();
            collide_site(&mut f, &p, &vs, &mut vec![0.0; 37]).unwrap();
            let norm = |a: &[f64]| a.iter().zip(&feq).map(|(x, e)| (x - e).powi(2)).sum::<f64>().sqrt();
            let before = norm(&f0);
            let after = norm(&f);
            prop_assert!((after - (1.0 - 1.0 / tau).abs() * before).abs() < 1e-14);
        }
    }
}
