//! Closed-form cost model for a lattice split over `Np` processors.
//!
//! Conventions: `bx` is the bandwidth for halos that run along X (rows,
//! exchanged with the neighbors above and below, strided in memory) and
//! `by` for halos that run along Y (columns, exchanged with the left and
//! right neighbors, contiguous). Times are per step, in seconds.

use crate::error::{PlanError, Result};

/// Bytes moved per boundary site by default: 26 populations of 8 bytes.
pub const DEFAULT_S: f64 = 26.0 * 8.0;

/// Width of the halo-dependent border strip, in sites.
pub const BORDER: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModelInput {
    pub lx: f64,
    pub ly: f64,
    pub np: usize,
    /// Bytes/s for row halos (length `Lx / nx`).
    pub bx: f64,
    /// Bytes/s for column halos (length `Ly / ny`).
    pub by: f64,
    /// Seconds per site update.
    pub beta: f64,
    /// Bytes per boundary site.
    pub s: f64,
}

impl CostModelInput {
    pub fn new(lx: f64, ly: f64, np: usize, bx: f64, by: f64, beta: f64, s: f64) -> Result<Self> {
        let input = Self { lx, ly, np, bx, by, beta, s };
        input.validate()?;
        Ok(input)
    }

    /// Lattice sites, `Lx * Ly`.
    pub fn n(&self) -> f64 {
        self.lx * self.ly
    }

    pub fn with_np(&self, np: usize) -> Self {
        Self { np, ..*self }
    }

    pub fn with_bandwidths(&self, bx: f64, by: f64) -> Self {
        Self { bx, by, ..*self }
    }

    /// Everything strictly positive except `s`, which may be zero. Infinite
    /// bandwidths are allowed.
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && !v.is_nan() {
                Ok(())
            } else {
                Err(PlanError::Input(format!("{name} = {v} must be positive")))
            }
        };
        pos("Lx", self.lx)?;
        pos("Ly", self.ly)?;
        pos("Bx", self.bx)?;
        pos("By", self.by)?;
        pos("beta", self.beta)?;
        if self.lx.is_infinite() || self.ly.is_infinite() || self.beta.is_infinite() {
            return Err(PlanError::Input("Lx, Ly and beta must be finite".into()));
        }
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(PlanError::Input(format!("S = {} must be finite and >= 0", self.s)));
        }
        if self.np == 0 {
            return Err(PlanError::Input("Np must be at least 1".into()));
        }
        Ok(())
    }

    /// Compute term `beta * N / Np`.
    pub fn t_p(&self) -> f64 {
        self.beta * self.n() / self.np as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub t_total: f64,
    /// Time added by communication, `t_total - t_p` for the non-overlapped
    /// variants and the exposed part for the overlapped ones.
    pub t_c: f64,
    pub t_p: f64,
    pub grid: (f64, f64),
    /// `t_total * Np / (beta * N)`; 1 is perfect strong scaling.
    pub scale_violation: f64,
}

impl Prediction {
    fn new(input: &CostModelInput, t_total: f64, grid: (f64, f64)) -> Self {
        let t_p = input.t_p();
        Self {
            t_total,
            t_c: t_total - t_p,
            t_p,
            grid,
            scale_violation: t_total * input.np as f64 / (input.beta * input.n()),
        }
    }
}

/// Surface-over-volume factor `d * Np^(1/d)`.
pub fn surface_over_volume(np: usize, d: u32) -> Result<f64> {
    if np == 0 || !(1..=2).contains(&d) {
        return Err(PlanError::Input(format!(
            "surface/volume needs Np >= 1 and d in {{1, 2}} (Np = {np}, d = {d})"
        )));
    }
    Ok(d as f64 * (np as f64).powf(1.0 / d as f64))
}

/// `S * (Ly / (By ny) + Lx / (Bx nx))`.
pub fn comm_time_2d(input: &CostModelInput, nx: usize, ny: usize) -> Result<f64> {
    if nx * ny != input.np {
        return Err(PlanError::Contract(format!("grid {nx}x{ny} does not use Np = {} processors", input.np)));
    }
    Ok(comm_time_real(input, nx as f64, ny as f64))
}

fn comm_time_real(input: &CostModelInput, nx: f64, ny: f64) -> f64 {
    input.s * (input.ly / (input.by * ny) + input.lx / (input.bx * nx))
}

/// Aspect factor `R = sqrt(Lx By / (Ly Bx))`.
pub fn aspect_factor(input: &CostModelInput) -> f64 {
    (input.lx * input.by / (input.ly * input.bx)).sqrt()
}

/// Real-valued minimizer of [`comm_time_2d`] under `nx * ny = Np`.
pub fn optimal_grid_real(input: &CostModelInput) -> (f64, f64) {
    let r = aspect_factor(input);
    let root = (input.np as f64).sqrt();
    (root * r, root / r)
}

/// Ordered factor pairs `(nx, ny)` of `np`, ascending in `nx`.
pub fn factor_pairs(np: usize) -> Vec<(usize, usize)> {
    (1..=np).filter(|d| np % d == 0).map(|d| (d, np / d)).collect()
}

/// Factor pair of `Np` with the least communication time; the smallest
/// `nx` wins ties.
pub fn optimal_grid(input: &CostModelInput) -> (usize, usize) {
    let mut best = (1, input.np);
    let mut best_t = f64::INFINITY;
    for (nx, ny) in factor_pairs(input.np) {
        let t = comm_time_real(input, nx as f64, ny as f64);
        if t < best_t {
            best = (nx, ny);
            best_t = t;
        }
    }
    best
}

/// Slabs along X: `T = beta N / Np + 2 S Ly / By`.
pub fn predict_1d(input: &CostModelInput) -> Prediction {
    let t = input.t_p() + 2.0 * input.s * input.ly / input.by;
    Prediction::new(input, t, (input.np as f64, 1.0))
}

/// Two-dimensional tiling at the real-valued optimal grid:
/// `T = beta N / Np * (1 + (4 S / beta) / sqrt(Bx By) * sqrt(Np / N))`.
pub fn predict_2d(input: &CostModelInput) -> Prediction {
    let n = input.n();
    let np = input.np as f64;
    let braces = 1.0 + (4.0 * input.s / input.beta) / (input.bx * input.by).sqrt() * (np / n).sqrt();
    Prediction::new(input, input.t_p() * braces, optimal_grid_real(input))
}

/// A concrete `nx x ny` tiling without overlap. Column halos are exchanged
/// with the left and right neighbors on every grid; row halos only when
/// there is more than one rank along Y, so `(Np, 1)` reproduces
/// [`predict_1d`].
pub fn predict_tiling(input: &CostModelInput, nx: usize, ny: usize) -> Result<Prediction> {
    if nx * ny != input.np {
        return Err(PlanError::Contract(format!("grid {nx}x{ny} does not use Np = {} processors", input.np)));
    }
    let mut t = input.t_p() + 2.0 * input.s * input.ly / (input.by * ny as f64);
    if ny > 1 {
        t += 2.0 * input.s * input.lx / (input.bx * nx as f64);
    }
    Ok(Prediction::new(input, t, (nx as f64, ny as f64)))
}

/// Slabs along X with the column exchange hidden behind the bulk update:
/// `T = beta N / Np * (max(1 - 6 Ly Np / N, (2 S Ly / (beta By)) Np / N) + 6 Ly Np / N)`.
pub fn predict_1d_overlap(input: &CostModelInput) -> Prediction {
    let n = input.n();
    let np = input.np as f64;
    let border = 2.0 * BORDER * input.ly * np / n;
    let comm = (2.0 * input.s * input.ly / (input.beta * input.by)) * np / n;
    let t = input.t_p() * ((1.0 - border).max(comm) + border);
    Prediction::new(input, t, (np, 1.0))
}

/// Square lattice on a `sqrt(Np) x sqrt(Np)` grid, column exchange
/// overlapped, row exchange exposed:
/// `T = beta N / Np * (max(1 - 12 r, (2 S / (beta By)) r) + (2 S / (beta Bx)) r + 12 r)`
/// with `r = sqrt(Np / N)`. Other aspect ratios are refused.
pub fn predict_2d_overlap(input: &CostModelInput) -> Result<Prediction> {
    if input.lx != input.ly {
        return Err(PlanError::Unsupported(format!(
            "overlapped 2D estimate is defined for square lattices only (got {}x{})",
            input.lx, input.ly
        )));
    }
    let np = input.np as f64;
    let r = (np / input.n()).sqrt();
    let border = 4.0 * BORDER * r;
    let col = (2.0 * input.s / (input.beta * input.by)) * r;
    let row = (2.0 * input.s / (input.beta * input.bx)) * r;
    let t = input.t_p() * ((1.0 - border).max(col) + row + border);
    Ok(Prediction::new(input, t, (np.sqrt(), np.sqrt())))
}

/// PRAM bound `w (1 + (N - 1) / Np)` for `N` unit tasks of cost `w`.
pub fn brent_bound(w: f64, n: f64, np: usize) -> f64 {
    w * (1.0 + (n - 1.0) / np as f64)
}
