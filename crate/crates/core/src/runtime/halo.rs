//! Halo geometry and staging.
//!
//! Only the populations a pull stencil actually reads across a face are
//! moved: the halo slice at depth `d` past the left edge is read only by
//! populations with `c_x >= d`, and so on for the other faces. For D2Q37
//! with a 3-deep halo this is 15 + 8 + 3 = 26 values per boundary site.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::lattice::{LatticeGeometry, PopulationField};
use crate::velocity::VelocitySet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    Left,
    Right,
    Down,
    Up,
}

impl Face {
    pub const ALL: [Face; 4] = [Face::Left, Face::Right, Face::Down, Face::Up];

    pub fn opposite(self) -> Face {
        match self {
            Face::Left => Face::Right,
            Face::Right => Face::Left,
            Face::Down => Face::Up,
            Face::Up => Face::Down,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Contiguous faces move whole Y columns; the others gather strided rows.
    pub fn is_contiguous(self) -> bool {
        matches!(self, Face::Left | Face::Right)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Edge {
    /// Fixed allocated `x`, values along `y`.
    Column,
    /// Fixed allocated `y`, values along `x`.
    Row,
}

/// A list of `(population, fixed coordinate)` lines, each spanning `span`.
#[derive(Debug, Clone)]
pub struct EdgePlan {
    edge: Edge,
    lines: Vec<(usize, usize)>,
    span: Range<usize>,
}

impl EdgePlan {
    pub fn len(&self) -> usize {
        self.lines.len() * self.span.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Distinct populations carried per boundary site.
    pub fn values_per_site(&self) -> usize {
        self.lines.len()
    }

    pub fn pack(&self, field: &PopulationField, buf: &mut Vec<f64>) {
        buf.clear();
        let g = field.geometry();
        let (_, sx, sy) = g.strides();
        let data = field.as_slice();
        for &(l, fixed) in &self.lines {
            match self.edge {
                Edge::Column => {
                    let start = g.site_index(l, fixed, self.span.start);
                    if sy == 1 {
                        buf.extend_from_slice(&data[start..start + self.span.len()]);
                    } else {
                        buf.extend((0..self.span.len()).map(|k| data[start + k * sy]));
                    }
                }
                Edge::Row => {
                    let start = g.site_index(l, self.span.start, fixed);
                    buf.extend((0..self.span.len()).map(|k| data[start + k * sx]));
                }
            }
        }
    }

    pub fn unpack(&self, buf: &[f64], field: &mut PopulationField) {
        debug_assert_eq!(buf.len(), self.len());
        let g = *field.geometry();
        let (_, sx, sy) = g.strides();
        let n = self.span.len();
        let data = field.as_mut_slice();
        for (chunk, &(l, fixed)) in buf.chunks_exact(n.max(1)).zip(&self.lines) {
            match self.edge {
                Edge::Column => {
                    let start = g.site_index(l, fixed, self.span.start);
                    if sy == 1 {
                        data[start..start + n].copy_from_slice(chunk);
                    } else {
                        for (k, &v) in chunk.iter().enumerate() {
                            data[start + k * sy] = v;
                        }
                    }
                }
                Edge::Row => {
                    let start = g.site_index(l, self.span.start, fixed);
                    for (k, &v) in chunk.iter().enumerate() {
                        data[start + k * sx] = v;
                    }
                }
            }
        }
    }
}

// Populations (depth-major) that cross `face` inward at each depth.
fn inbound(vs: &VelocitySet, face: Face, depth: usize) -> Vec<usize> {
    let d = depth as i32;
    (0..vs.q())
        .filter(|&l| {
            let [cx, cy] = vs.c()[l];
            match face {
                Face::Left => cx >= d,
                Face::Right => cx <= -d,
                Face::Down => cy >= d,
                Face::Up => cy <= -d,
            }
        })
        .collect()
}

/// Plan that fills the halo on `face` of this tile.
pub fn recv_plan(g: &LatticeGeometry, vs: &VelocitySet, face: Face) -> EdgePlan {
    let (hx, hy, lx, ly) = (g.hx, g.hy, g.lx, g.ly);
    let depth = if face.is_contiguous() { hx } else { hy };
    let mut lines = Vec::new();
    for d in 1..=depth {
        let fixed = match face {
            Face::Left => hx - d,
            Face::Right => hx + lx - 1 + d,
            Face::Down => hy - d,
            Face::Up => hy + ly - 1 + d,
        };
        lines.extend(inbound(vs, face, d).into_iter().map(|l| (l, fixed)));
    }
    edge_plan(g, face, lines)
}

/// Plan that reads this tile's edge for the neighbor across `face`; it
/// matches the neighbor's `recv_plan` on the opposite face line by line.
pub fn send_plan(g: &LatticeGeometry, vs: &VelocitySet, face: Face) -> EdgePlan {
    let (hx, hy, lx, ly) = (g.hx, g.hy, g.lx, g.ly);
    let depth = if face.is_contiguous() { hx } else { hy };
    let mut lines = Vec::new();
    for d in 1..=depth {
        let fixed = match face {
            Face::Right => hx + lx - d,
            Face::Left => hx + d - 1,
            Face::Up => hy + ly - d,
            Face::Down => hy + d - 1,
        };
        lines.extend(inbound(vs, face.opposite(), d).into_iter().map(|l| (l, fixed)));
    }
    edge_plan(g, face, lines)
}

fn edge_plan(g: &LatticeGeometry, face: Face, lines: Vec<(usize, usize)>) -> EdgePlan {
    if face.is_contiguous() {
        // whole columns, halo rows included, so corners come along
        EdgePlan { edge: Edge::Column, lines, span: 0..g.ny() }
    } else {
        // physical columns only
        EdgePlan { edge: Edge::Row, lines, span: g.hx..g.hx + g.lx }
    }
}

/// Specular image of the physical rows next to a wall, written into the halo
/// rows beyond it. Every population leaving through the wall re-enters as
/// its Y-reflection, so streaming stays a permutation.
#[derive(Debug, Clone)]
pub struct MirrorPlan {
    // (dst population, dst y, src population, src y)
    rows: Vec<(usize, usize, usize, usize)>,
    span: Range<usize>,
}

impl MirrorPlan {
    pub fn new(g: &LatticeGeometry, vs: &VelocitySet, face: Face) -> Result<Self> {
        if face.is_contiguous() {
            return Err(Error::contract("walls exist only on the Y faces"));
        }
        let mut rows = Vec::new();
        for d in 1..=g.hy {
            for l in inbound(vs, face, d) {
                if d > g.ly {
                    return Err(Error::config(format!(
                        "tile of height {} too short for wall reflection depth {d}",
                        g.ly
                    )));
                }
                let (dst_y, src_y) = match face {
                    Face::Up => (g.hy + g.ly - 1 + d, g.hy + g.ly - d),
                    _ => (g.hy - d, g.hy + d - 1),
                };
                rows.push((l, dst_y, vs.reflect_y(l), src_y));
            }
        }
        Ok(Self { rows, span: g.hx..g.hx + g.lx })
    }

    pub fn apply(&self, field: &mut PopulationField) {
        for &(l, dy, sl, sy) in &self.rows {
            for x in self.span.clone() {
                let v = field.get(sl, x, sy);
                field.set(l, x, dy, v);
            }
        }
    }
}

/// Per-face plans and persistent staging. Each face owns one buffer sized
/// at construction; a send lends it to the channel and the matching receive
/// hands back a buffer of the same length, so no allocation happens after
/// start-up.
#[derive(Debug)]
pub struct HaloBuffer {
    send: [EdgePlan; 4],
    recv: [EdgePlan; 4],
    staging: [Option<Vec<f64>>; 4],
}

impl HaloBuffer {
    pub fn new(g: &LatticeGeometry, vs: &VelocitySet) -> Result<Self> {
        let send = Face::ALL.map(|f| send_plan(g, vs, f));
        let recv = Face::ALL.map(|f| recv_plan(g, vs, f));
        for f in Face::ALL {
            if send[f.index()].len() != recv[f.index()].len() {
                return Err(Error::contract(format!(
                    "asymmetric halo plan on {f:?}: send {} vs recv {}",
                    send[f.index()].len(),
                    recv[f.index()].len()
                )));
            }
        }
        let staging = Face::ALL.map(|f| Some(Vec::with_capacity(send[f.index()].len())));
        Ok(Self { send, recv, staging })
    }

    pub fn send_plan(&self, face: Face) -> &EdgePlan {
        &self.send[face.index()]
    }

    pub fn recv_plan(&self, face: Face) -> &EdgePlan {
        &self.recv[face.index()]
    }

    /// Size in doubles of the staging area for `face`.
    pub fn capacity(&self, face: Face) -> usize {
        self.send[face.index()].len()
    }

    /// Packs the outgoing edge for `face` into its staging buffer and lends
    /// the buffer out.
    pub fn pack(&mut self, face: Face, field: &PopulationField, rank: usize) -> Result<Vec<f64>> {
        let mut buf = self.staging[face.index()].take().ok_or_else(|| Error::Protocol {
            rank,
            detail: format!("{face:?} staging buffer already in flight"),
        })?;
        if buf.capacity() < self.capacity(face) {
            return Err(Error::Protocol {
                rank,
                detail: format!(
                    "{face:?} staging buffer holds {} doubles, need {}",
                    buf.capacity(),
                    self.capacity(face)
                ),
            });
        }
        self.send[face.index()].pack(field, &mut buf);
        Ok(buf)
    }

    /// Scatters `buf` into the halo on `face` and keeps it as staging.
    pub fn unpack(
        &mut self,
        face: Face,
        buf: Vec<f64>,
        field: &mut PopulationField,
        rank: usize,
    ) -> Result<()> {
        let plan = &self.recv[face.index()];
        if buf.len() != plan.len() {
            return Err(Error::Protocol {
                rank,
                detail: format!("{face:?} halo message has {} doubles, expected {}", buf.len(), plan.len()),
            });
        }
        plan.unpack(&buf, field);
        self.staging[face.index()] = Some(buf);
        Ok(())
    }
}
