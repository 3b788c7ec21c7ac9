//! Whole-lattice state gathered from the ranks, macroscopic fields and
//! snapshot writers.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::kernels::moments;
use crate::lattice::PopulationField;
use crate::velocity::VelocitySet;

/// Populations of every physical site, stored `(l, x, y)` with `y` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalState {
    lx: usize,
    ly: usize,
    q: usize,
    data: Vec<f64>,
}

impl GlobalState {
    pub fn zeros(lx: usize, ly: usize, q: usize) -> Self {
        Self { lx, ly, q, data: vec![0.0; q * lx * ly] }
    }

    /// Copies the physical region of a single field.
    pub fn from_field(field: &PopulationField) -> Self {
        let g = field.geometry();
        Self { lx: g.lx, ly: g.ly, q: g.q, data: field.physical_values() }
    }

    pub fn lx(&self) -> usize {
        self.lx
    }

    pub fn ly(&self) -> usize {
        self.ly
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    fn index(&self, l: usize, x: usize, y: usize) -> usize {
        (l * self.lx + x) * self.ly + y
    }

    pub fn get(&self, l: usize, x: usize, y: usize) -> f64 {
        self.data[self.index(l, x, y)]
    }

    pub fn set(&mut self, l: usize, x: usize, y: usize, v: f64) {
        let i = self.index(l, x, y);
        self.data[i] = v;
    }

    pub fn read_site(&self, x: usize, y: usize, out: &mut [f64]) {
        for (l, v) in out.iter_mut().enumerate().take(self.q) {
            *v = self.get(l, x, y);
        }
    }

    /// Writes a tile's values (in the tile's own `(l, x, y)` order) at
    /// `origin`.
    pub fn insert_tile(
        &mut self,
        origin: (usize, usize),
        extent: (usize, usize),
        values: &[f64],
    ) -> Result<()> {
        let (tx, ty) = extent;
        if values.len() != self.q * tx * ty || origin.0 + tx > self.lx || origin.1 + ty > self.ly {
            return Err(Error::contract(format!(
                "tile {tx}x{ty} at {origin:?} with {} values does not fit a {}x{} lattice",
                values.len(),
                self.lx,
                self.ly
            )));
        }
        for l in 0..self.q {
            for x in 0..tx {
                let src = (l * tx + x) * ty;
                let dst = self.index(l, origin.0 + x, origin.1);
                self.data[dst..dst + ty].copy_from_slice(&values[src..src + ty]);
            }
        }
        Ok(())
    }

    /// Writes the state into the physical region of `field`.
    pub fn store_into(&self, field: &mut PopulationField) -> Result<()> {
        let g = *field.geometry();
        if (g.lx, g.ly, g.q) != (self.lx, self.ly, self.q) {
            return Err(Error::contract("field shape differs from the state"));
        }
        for l in 0..self.q {
            for x in 0..self.lx {
                for y in 0..self.ly {
                    field.set_phys(l, x, y, self.get(l, x, y));
                }
            }
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn total_momentum(&self, vs: &VelocitySet) -> [f64; 2] {
        let plane = self.lx * self.ly;
        let mut j = [0.0; 2];
        for (l, c) in vs.c().iter().enumerate() {
            let s: f64 = self.data[l * plane..(l + 1) * plane].iter().sum();
            j[0] += c[0] as f64 * s;
            j[1] += c[1] as f64 * s;
        }
        j
    }

    pub fn macro_fields(&self, vs: &VelocitySet) -> Result<MacroFields> {
        MacroFields::from_state(self, vs)
    }
}

/// Density, velocity and temperature per site, row-major (`y * lx + x`).
#[derive(Debug, Clone, PartialEq)]
pub struct MacroFields {
    pub lx: usize,
    pub ly: usize,
    pub rho: Vec<f64>,
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
    pub t: Vec<f64>,
}

impl MacroFields {
    pub fn from_state(state: &GlobalState, vs: &VelocitySet) -> Result<Self> {
        if state.q != vs.q() {
            return Err(Error::contract(format!(
                "state has {} populations, {} has {}",
                state.q,
                vs.name(),
                vs.q()
            )));
        }
        let n = state.lx * state.ly;
        let mut out = Self {
            lx: state.lx,
            ly: state.ly,
            rho: Vec::with_capacity(n),
            ux: Vec::with_capacity(n),
            uy: Vec::with_capacity(n),
            t: Vec::with_capacity(n),
        };
        let mut f = vec![0.0; vs.q()];
        for y in 0..state.ly {
            for x in 0..state.lx {
                state.read_site(x, y, &mut f);
                let m = moments(&f, vs).map_err(|e| e.at_site(x, y))?;
                out.rho.push(m.rho);
                out.ux.push(m.u[0]);
                out.uy.push(m.u[1]);
                out.t.push(m.t);
            }
        }
        Ok(out)
    }

    pub fn at(&self, x: usize, y: usize) -> usize {
        y * self.lx + x
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.rho.iter().zip(self.ux.iter().zip(&self.uy)).map(|(r, (u, v))| 0.5 * r * (u * u + v * v)).sum()
    }

    /// `x,y,rho,ux,uy,temperature` rows, `y` outer, with a unit header.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x [site],y [site],rho [lu],ux [site/step],uy [site/step],temperature [lu]")?;
        for y in 0..self.ly {
            for x in 0..self.lx {
                let i = self.at(x, y);
                writeln!(w, "{x},{y},{:e},{:e},{:e},{:e}", self.rho[i], self.ux[i], self.uy[i], self.t[i])?;
            }
        }
        Ok(())
    }

    /// 8-bit binary PGM of the temperature, min-max normalized, top row
    /// (largest `y`) first.
    pub fn write_temperature_pgm<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.lx, self.ly)?;
        let (lo, hi) =
            self.t.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let span = hi - lo;
        let mut row = vec![0u8; self.lx];
        for y in (0..self.ly).rev() {
            for (x, px) in row.iter_mut().enumerate() {
                let v = self.t[self.at(x, y)];
                *px = if span > 0.0 { (255.0 * (v - lo) / span).round().clamp(0.0, 255.0) as u8 } else { 0 };
            }
            w.write_all(&row)?;
        }
        Ok(())
    }
}
