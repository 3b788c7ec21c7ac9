//! Discrete velocity sets and their quadrature weights.
//!
//! A stencil is described by its speed shells (one representative vector per
//! orbit of the square's symmetry group) and by the list of even monomial
//! moments `Σ w c_x^a c_y^b` that must agree with a Gaussian of variance
//! `cs2`. With one more moment constraint than shells, the weights and the
//! sound-speed scale are fixed together: `cs2` is the root that makes the
//! linear system consistent, and the weights are its solution.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A named stencil family that knows how to derive its velocity set.
pub trait Stencil: Send + Sync {
    fn name(&self) -> &'static str;

    /// One representative per speed shell, with `0 <= c_y <= c_x`.
    fn shells(&self) -> &'static [[i32; 2]];

    /// Even monomial exponents `(a, b)` with `a >= b` matched against the
    /// Gaussian. Must contain exactly one more entry than `shells()`.
    fn matched_moments(&self) -> &'static [(u32, u32)];

    /// Highest Hermite order the quadrature integrates exactly against the
    /// equilibrium expansion.
    fn max_eq_order(&self) -> usize;

    /// Search interval for the sound-speed root.
    fn cs2_bracket(&self) -> (f64, f64) {
        (0.05, 3.0)
    }
}

pub struct D2Q37;

impl Stencil for D2Q37 {
    fn name(&self) -> &'static str {
        "D2Q37"
    }

    fn shells(&self) -> &'static [[i32; 2]] {
        &[[0, 0], [1, 0], [1, 1], [2, 0], [2, 1], [2, 2], [3, 0], [3, 1]]
    }

    fn matched_moments(&self) -> &'static [(u32, u32)] {
        &[(0, 0), (2, 0), (4, 0), (2, 2), (6, 0), (4, 2), (8, 0), (6, 2), (4, 4)]
    }

    fn max_eq_order(&self) -> usize {
        4
    }
}

pub struct D2Q9;

impl Stencil for D2Q9 {
    fn name(&self) -> &'static str {
        "D2Q9"
    }

    fn shells(&self) -> &'static [[i32; 2]] {
        &[[0, 0], [1, 0], [1, 1]]
    }

    fn matched_moments(&self) -> &'static [(u32, u32)] {
        &[(0, 0), (2, 0), (4, 0), (2, 2)]
    }

    fn max_eq_order(&self) -> usize {
        2
    }
}

/// Name-indexed collection of stencil families.
pub struct StencilRegistry {
    entries: Vec<Box<dyn Stencil>>,
}

impl StencilRegistry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(D2Q37));
        reg.register(Box::new(D2Q9));
        reg
    }

    /// Adds a stencil, replacing any previous entry with the same name.
    pub fn register(&mut self, stencil: Box<dyn Stencil>) {
        self.entries.retain(|s| s.name() != stencil.name());
        self.entries.push(stencil);
    }

    pub fn get(&self, name: &str) -> Option<&dyn Stencil> {
        self.entries.iter().find(|s| s.name().eq_ignore_ascii_case(name)).map(|s| s.as_ref())
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|s| s.name()).collect()
    }

    pub fn build(&self, name: &str) -> Result<VelocitySet> {
        let stencil = self.get(name).ok_or_else(|| {
            Error::config(format!("unknown velocity set '{name}' (known: {})", self.names().join(", ")))
        })?;
        VelocitySet::derive(stencil)
    }
}

/// Builds one of the built-in velocity sets by name.
pub fn build_velocity_set(name: &str) -> Result<VelocitySet> {
    StencilRegistry::builtin().build(name)
}

#[derive(Clone)]
pub struct VelocitySet {
    name: String,
    c: Vec<[i32; 2]>,
    w: Vec<f64>,
    cs2: f64,
    max_hop: usize,
    max_eq_order: usize,
    // c / sqrt(cs2), used by the equilibrium expansion
    xi: Vec<[f64; 2]>,
    xi2: Vec<f64>,
}

impl fmt::Debug for VelocitySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VelocitySet")
            .field("name", &self.name)
            .field("q", &self.q())
            .field("cs2", &self.cs2)
            .field("max_hop", &self.max_hop)
            .finish()
    }
}

impl VelocitySet {
    /// Derives the velocity set of `stencil` by solving the moment-matching
    /// system for the weights and the sound speed.
    pub fn derive(stencil: &dyn Stencil) -> Result<Self> {
        let shells = stencil.shells();
        let moments = stencil.matched_moments();
        if moments.len() != shells.len() + 1 {
            return Err(Error::config(format!(
                "{}: need {} matched moments for {} shells, got {}",
                stencil.name(),
                shells.len() + 1,
                shells.len(),
                moments.len()
            )));
        }
        let orbits: Vec<Vec<[i32; 2]>> = shells.iter().map(|&s| shell_orbit(s)).collect();
        let (cs2, shell_w) = solve_quadrature(&orbits, moments, stencil.cs2_bracket())?;

        let mut c = Vec::new();
        let mut w = Vec::new();
        for (orbit, &wk) in orbits.iter().zip(&shell_w) {
            for &v in orbit {
                c.push(v);
                w.push(wk);
            }
        }
        Ok(Self::from_parts(stencil.name(), c, w, cs2, stencil.max_eq_order()))
    }

    fn from_parts(name: &str, c: Vec<[i32; 2]>, w: Vec<f64>, cs2: f64, max_eq_order: usize) -> Self {
        let max_hop =
            c.iter().map(|v| v[0].unsigned_abs().max(v[1].unsigned_abs()) as usize).max().unwrap_or(0);
        let scale = cs2.sqrt().recip();
        let xi: Vec<[f64; 2]> = c.iter().map(|v| [v[0] as f64 * scale, v[1] as f64 * scale]).collect();
        let xi2 = xi.iter().map(|v| v[0] * v[0] + v[1] * v[1]).collect();
        Self { name: name.to_string(), c, w, cs2, max_hop, max_eq_order, xi, xi2 }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn q(&self) -> usize {
        self.c.len()
    }

    pub fn c(&self) -> &[[i32; 2]] {
        &self.c
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    /// Squared lattice sound speed; also the reference temperature.
    pub fn cs2(&self) -> f64 {
        self.cs2
    }

    pub fn max_hop(&self) -> usize {
        self.max_hop
    }

    pub fn max_eq_order(&self) -> usize {
        self.max_eq_order
    }

    pub(crate) fn xi(&self) -> &[[f64; 2]] {
        &self.xi
    }

    pub(crate) fn xi2(&self) -> &[f64] {
        &self.xi2
    }

    pub fn index_of(&self, v: [i32; 2]) -> Option<usize> {
        self.c.iter().position(|&c| c == v)
    }

    /// Index of the population moving with `-c_l`.
    pub fn opposite(&self, l: usize) -> usize {
        let [x, y] = self.c[l];
        self.index_of([-x, -y]).expect("velocity set closed under negation")
    }

    /// Index of the population moving with `(c_x, -c_y)`.
    pub fn reflect_y(&self, l: usize) -> usize {
        let [x, y] = self.c[l];
        self.index_of([x, -y]).expect("velocity set closed under reflection")
    }

    /// `Σ_l w_l c_x^a c_y^b`.
    pub fn moment(&self, a: u32, b: u32) -> f64 {
        self.c
            .iter()
            .zip(&self.w)
            .map(|(v, w)| w * (v[0] as f64).powi(a as i32) * (v[1] as f64).powi(b as i32))
            .sum()
    }
}

/// All distinct images of `rep` under axis swaps and sign flips, in a fixed
/// order.
pub fn shell_orbit(rep: [i32; 2]) -> Vec<[i32; 2]> {
    let [a, b] = rep;
    let mut out: Vec<[i32; 2]> = Vec::with_capacity(8);
    for (x, y) in [(a, b), (b, a)] {
        for sx in [1, -1] {
            for sy in [1, -1] {
                let v = [sx * x, sy * y];
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
    }
    out
}

/// `E[X^a Y^b]` for independent centered Gaussians of variance `cs2`.
pub fn gaussian_moment(a: u32, b: u32, cs2: f64) -> f64 {
    if a % 2 == 1 || b % 2 == 1 {
        return 0.0;
    }
    cs2.powi(((a + b) / 2) as i32) * double_factorial_odd(a) * double_factorial_odd(b)
}

// (n-1)!! for even n
fn double_factorial_odd(n: u32) -> f64 {
    let mut acc = 1.0;
    let mut k = n as i64 - 1;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

fn moment_matrix(orbits: &[Vec<[i32; 2]>], moments: &[(u32, u32)]) -> DMatrix<f64> {
    DMatrix::from_fn(moments.len(), orbits.len(), |i, j| {
        let (a, b) = moments[i];
        orbits[j].iter().map(|v| (v[0] as f64).powi(a as i32) * (v[1] as f64).powi(b as i32)).sum()
    })
}

fn moment_rhs(moments: &[(u32, u32)], cs2: f64) -> DVector<f64> {
    DVector::from_iterator(moments.len(), moments.iter().map(|&(a, b)| gaussian_moment(a, b, cs2)))
}

fn augmented_det(a: &DMatrix<f64>, moments: &[(u32, u32)], cs2: f64) -> f64 {
    let n = a.nrows();
    let rhs = moment_rhs(moments, cs2);
    let mut m = a.clone().insert_column(a.ncols(), 0.0);
    m.set_column(n - 1, &rhs);
    m.lu().determinant()
}

fn solve_quadrature(
    orbits: &[Vec<[i32; 2]>],
    moments: &[(u32, u32)],
    (lo, hi): (f64, f64),
) -> Result<(f64, Vec<f64>)> {
    let a = moment_matrix(orbits, moments);
    const SCAN: usize = 4000;
    let grid: Vec<f64> = (0..=SCAN).map(|i| lo + (hi - lo) * i as f64 / SCAN as f64).collect();
    let dets: Vec<f64> = grid.iter().map(|&s| augmented_det(&a, moments, s)).collect();

    for i in 0..SCAN {
        let (d0, d1) = (dets[i], dets[i + 1]);
        let root = if d0 == 0.0 {
            grid[i]
        } else if d0.signum() != d1.signum() && d1 != 0.0 {
            bisect(|s| augmented_det(&a, moments, s), grid[i], grid[i + 1], d0)
        } else {
            continue;
        };
        let w = least_squares(&a, &moment_rhs(moments, root))?;
        if w.iter().all(|&x| x > 0.0) {
            return Ok((root, w));
        }
    }
    Err(Error::Solver("no sound-speed root with positive weights in the search interval".into()))
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let sign_lo = f_lo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Vec<f64>> {
    let svd = a.clone().svd(true, true);
    let mut x = svd.solve(b, 1e-14).map_err(|e| Error::Solver(e.to_string()))?;
    // two rounds of iterative refinement
    for _ in 0..2 {
        let r = b - a * &x;
        let dx = svd.solve(&r, 1e-14).map_err(|e| Error::Solver(e.to_string()))?;
        x += dx;
    }
    Ok(x.iter().copied().collect())
}
