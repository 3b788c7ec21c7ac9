//! Lattice geometry, population storage and double buffering.
//!
//! Storage is always column-major along Y: for a fixed population and
//! column, consecutive `y` are adjacent (SoA) or `Q` apart (AoS). Every
//! offset is a linear form `l*sl + x*sx + y*sy`, so kernels never branch on
//! layout.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::velocity::VelocitySet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layout {
    /// Structure of arrays: one full `NX*NY` plane per population.
    Soa,
    /// Array of structures: the `Q` populations of a site are adjacent.
    Aos,
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layout::Soa => "soa",
            Layout::Aos => "aos",
        })
    }
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "soa" => Ok(Layout::Soa),
            "aos" => Ok(Layout::Aos),
            other => Err(Error::config(format!("unknown layout '{other}' (soa | aos)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeGeometry {
    pub lx: usize,
    pub ly: usize,
    pub hx: usize,
    pub hy: usize,
    pub q: usize,
    pub layout: Layout,
}

impl LatticeGeometry {
    /// Geometry with halos equal to the stencil reach.
    pub fn new(lx: usize, ly: usize, vs: &VelocitySet, layout: Layout) -> Result<Self> {
        Self::with_halo(lx, ly, vs.max_hop(), vs.max_hop(), vs, layout)
    }

    pub fn with_halo(
        lx: usize,
        ly: usize,
        hx: usize,
        hy: usize,
        vs: &VelocitySet,
        layout: Layout,
    ) -> Result<Self> {
        if lx == 0 || ly == 0 {
            return Err(Error::config(format!("degenerate lattice {lx}x{ly}")));
        }
        if hx < vs.max_hop() || hy < vs.max_hop() {
            return Err(Error::config(format!(
                "halo {hx}x{hy} thinner than the {} stencil reach {}",
                vs.name(),
                vs.max_hop()
            )));
        }
        let geom = Self { lx, ly, hx, hy, q: vs.q(), layout };
        geom.checked_len()?;
        Ok(geom)
    }

    pub fn nx(&self) -> usize {
        self.hx + self.lx + self.hx
    }

    pub fn ny(&self) -> usize {
        self.hy + self.ly + self.hy
    }

    pub fn sites(&self) -> usize {
        self.nx() * self.ny()
    }

    fn checked_len(&self) -> Result<usize> {
        let nx = self.lx.checked_add(2 * self.hx);
        let ny = self.ly.checked_add(2 * self.hy);
        nx.zip(ny)
            .and_then(|(nx, ny)| nx.checked_mul(ny))
            .and_then(|s| s.checked_mul(self.q))
            .and_then(|n| n.checked_mul(std::mem::size_of::<f64>()).map(|_| n))
            .filter(|&n| n <= isize::MAX as usize / std::mem::size_of::<f64>())
            .ok_or_else(|| {
                Error::Allocation(format!(
                    "{}x{} lattice with {} populations exceeds addressable size",
                    self.lx, self.ly, self.q
                ))
            })
    }

    /// Total scalar count of one buffer.
    pub fn len(&self) -> usize {
        self.q * self.sites()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Strides `(population, x, y)` for the configured layout.
    #[inline]
    pub fn strides(&self) -> (usize, usize, usize) {
        match self.layout {
            Layout::Soa => (self.sites(), self.ny(), 1),
            Layout::Aos => (1, self.ny() * self.q, self.q),
        }
    }

    /// Storage offset of population `l` at allocated coordinates `(x, y)`.
    #[inline]
    pub fn site_index(&self, l: usize, x: usize, y: usize) -> usize {
        debug_assert!(
            l < self.q && x < self.nx() && y < self.ny(),
            "index ({l}, {x}, {y}) outside {}x{}x{}",
            self.q,
            self.nx(),
            self.ny()
        );
        let (sl, sx, sy) = self.strides();
        l * sl + x * sx + y * sy
    }

    /// Checked variant of [`site_index`](Self::site_index).
    pub fn try_site_index(&self, l: usize, x: usize, y: usize) -> Result<usize> {
        if l >= self.q || x >= self.nx() || y >= self.ny() {
            return Err(Error::contract(format!(
                "index ({l}, {x}, {y}) outside {}x{}x{}",
                self.q,
                self.nx(),
                self.ny()
            )));
        }
        Ok(self.site_index(l, x, y))
    }

    /// Region covering every physical site.
    pub fn physical(&self) -> Region {
        Region::new(0..self.lx, 0..self.ly)
    }

    pub fn with_layout(&self, layout: Layout) -> Self {
        Self { layout, ..*self }
    }
}

/// Rectangle of physical sites (coordinates exclude the halo frame).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub x: Range<usize>,
    pub y: Range<usize>,
}

impl Region {
    pub fn new(x: Range<usize>, y: Range<usize>) -> Self {
        Self { x, y }
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty() || self.y.is_empty()
    }

    pub fn sites(&self) -> usize {
        self.x.len() * self.y.len()
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.x.contains(&x) && self.y.contains(&y)
    }

    pub(crate) fn check_inside(&self, geom: &LatticeGeometry) -> Result<()> {
        if self.is_empty() {
            return Ok(());
        }
        if self.x.end > geom.lx || self.y.end > geom.ly {
            return Err(Error::contract(format!(
                "region {:?}x{:?} extends into the halo of a {}x{} tile",
                self.x, self.y, geom.lx, geom.ly
            )));
        }
        Ok(())
    }

    pub fn intersects_rows(&self, rows: &Range<usize>) -> bool {
        !self.is_empty() && self.y.start < rows.end && rows.start < self.y.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferRole {
    Prv,
    Nxt,
}

/// `Q x NX x NY` doubles for one time level.
#[derive(Clone)]
pub struct PopulationField {
    geom: LatticeGeometry,
    data: Vec<f64>,
    role: BufferRole,
}

impl fmt::Debug for PopulationField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PopulationField")
            .field("geom", &self.geom)
            .field("role", &self.role)
            .finish_non_exhaustive()
    }
}

impl PopulationField {
    pub fn zeros(geom: LatticeGeometry, role: BufferRole) -> Result<Self> {
        let len = geom.checked_len()?;
        let mut data = Vec::new();
        data.try_reserve_exact(len).map_err(|e| Error::Allocation(format!("{len} doubles: {e}")))?;
        data.resize(len, 0.0);
        Ok(Self { geom, data, role })
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geom
    }

    pub fn role(&self) -> BufferRole {
        self.role
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Value at allocated coordinates.
    #[inline]
    pub fn get(&self, l: usize, x: usize, y: usize) -> f64 {
        self.data[self.geom.site_index(l, x, y)]
    }

    #[inline]
    pub fn set(&mut self, l: usize, x: usize, y: usize, v: f64) {
        let i = self.geom.site_index(l, x, y);
        self.data[i] = v;
    }

    /// Value at physical coordinates.
    #[inline]
    pub fn get_phys(&self, l: usize, x: usize, y: usize) -> f64 {
        self.get(l, x + self.geom.hx, y + self.geom.hy)
    }

    #[inline]
    pub fn set_phys(&mut self, l: usize, x: usize, y: usize, v: f64) {
        self.set(l, x + self.geom.hx, y + self.geom.hy, v)
    }

    /// Copies the populations of physical site `(x, y)` into `out`.
    pub fn read_site(&self, x: usize, y: usize, out: &mut [f64]) {
        let (sl, _, _) = self.geom.strides();
        let base = self.geom.site_index(0, x + self.geom.hx, y + self.geom.hy);
        for (l, v) in out.iter_mut().enumerate().take(self.geom.q) {
            *v = self.data[base + l * sl];
        }
    }

    pub fn write_site(&mut self, x: usize, y: usize, vals: &[f64]) {
        let (sl, _, _) = self.geom.strides();
        let base = self.geom.site_index(0, x + self.geom.hx, y + self.geom.hy);
        for (l, &v) in vals.iter().enumerate().take(self.geom.q) {
            self.data[base + l * sl] = v;
        }
    }

    /// Re-stores the field in `layout`. Values are moved, never recomputed.
    pub fn to_layout(&self, layout: Layout) -> PopulationField {
        let geom = self.geom.with_layout(layout);
        let mut data = vec![0.0; self.data.len()];
        for l in 0..geom.q {
            for x in 0..geom.nx() {
                for y in 0..geom.ny() {
                    data[geom.site_index(l, x, y)] = self.get(l, x, y);
                }
            }
        }
        PopulationField { geom, data, role: self.role }
    }

    /// Physical-region values in canonical `(l, x, y)` order.
    pub fn physical_values(&self) -> Vec<f64> {
        let g = &self.geom;
        let mut out = Vec::with_capacity(g.q * g.lx * g.ly);
        for l in 0..g.q {
            for x in 0..g.lx {
                for y in 0..g.ly {
                    out.push(self.get_phys(l, x, y));
                }
            }
        }
        out
    }

    /// Sets every halo cell to `v`.
    pub fn fill_halo(&mut self, v: f64) {
        let g = self.geom;
        for l in 0..g.q {
            for x in 0..g.nx() {
                let inside_x = x >= g.hx && x < g.hx + g.lx;
                for y in 0..g.ny() {
                    let inside_y = y >= g.hy && y < g.hy + g.ly;
                    if !(inside_x && inside_y) {
                        self.set(l, x, y, v);
                    }
                }
            }
        }
    }

    /// Fills the whole halo frame with the periodic wrap of the physical
    /// region in both directions. Single-field helper; the rank runtime does
    /// its own exchange.
    pub fn wrap_periodic(&mut self) {
        let g = self.geom;
        for l in 0..g.q {
            for x in 0..g.nx() {
                let sx = (x + g.lx - g.hx % g.lx) % g.lx;
                for y in 0..g.ny() {
                    let inside_x = x >= g.hx && x < g.hx + g.lx;
                    let inside_y = y >= g.hy && y < g.hy + g.ly;
                    if inside_x && inside_y {
                        continue;
                    }
                    let sy = (y + g.ly - g.hy % g.ly) % g.ly;
                    let v = self.get_phys(l, sx, sy);
                    self.set(l, x, y, v);
                }
            }
        }
    }
}

/// The `prv`/`nxt` pair. Swapping exchanges roles without copying data.
#[derive(Debug, Clone)]
pub struct DoubleBuffer {
    fields: [PopulationField; 2],
    read: usize,
}

impl DoubleBuffer {
    pub fn new(geom: LatticeGeometry) -> Result<Self> {
        Ok(Self {
            fields: [
                PopulationField::zeros(geom, BufferRole::Prv)?,
                PopulationField::zeros(geom, BufferRole::Nxt)?,
            ],
            read: 0,
        })
    }

    pub fn prv(&self) -> &PopulationField {
        &self.fields[self.read]
    }

    pub fn prv_mut(&mut self) -> &mut PopulationField {
        &mut self.fields[self.read]
    }

    pub fn nxt(&self) -> &PopulationField {
        &self.fields[1 - self.read]
    }

    pub fn nxt_mut(&mut self) -> &mut PopulationField {
        &mut self.fields[1 - self.read]
    }

    /// Borrow `(prv, nxt)` at once.
    pub fn split(&mut self) -> (&mut PopulationField, &mut PopulationField) {
        let (a, b) = self.fields.split_at_mut(1);
        if self.read == 0 {
            (&mut a[0], &mut b[0])
        } else {
            (&mut b[0], &mut a[0])
        }
    }

    pub fn swap(&mut self) {
        self.read = 1 - self.read;
        self.fields[self.read].role = BufferRole::Prv;
        self.fields[1 - self.read].role = BufferRole::Nxt;
    }

    /// Stable identity of the buffer currently used as `prv` (0 or 1).
    pub fn prv_slot(&self) -> usize {
        self.read
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        self.fields[0].geometry()
    }
}

/// Allocates a zeroed `(prv, nxt)` pair.
pub fn allocate_field(geom: LatticeGeometry) -> Result<(PopulationField, PopulationField)> {
    Ok((PopulationField::zeros(geom, BufferRole::Prv)?, PopulationField::zeros(geom, BufferRole::Nxt)?))
}
