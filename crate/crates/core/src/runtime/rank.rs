//! One worker: a tile, its two time levels and its links.

use std::ops::Range;
use std::sync::Arc;

use super::comm::Links;
use super::decompose::{TileAssignment, BORDER};
use super::halo::{Face, HaloBuffer, MirrorPlan};
use crate::error::{Error, Result};
use crate::kernels::{PhysicsParams, WALL_ROWS};
use crate::lattice::{DoubleBuffer, LatticeGeometry, Region};
use crate::velocity::VelocitySet;

/// The five sub-tiles a step is split into. The bulk never reads halo data;
/// the borders do.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileRegions {
    pub bulk: Region,
    pub left: Region,
    pub right: Region,
    pub bottom: Region,
    pub top: Region,
}

impl TileRegions {
    pub fn new(tx: usize, ty: usize) -> Self {
        let b = BORDER;
        Self {
            bulk: Region::new(b..tx - b, b..ty - b),
            left: Region::new(0..b, b..ty - b),
            right: Region::new(tx - b..tx, b..ty - b),
            bottom: Region::new(0..tx, 0..b),
            top: Region::new(0..tx, ty - b..ty),
        }
    }
}

pub struct Rank {
    pub(crate) tile: TileAssignment,
    pub(crate) vs: Arc<VelocitySet>,
    pub(crate) params: PhysicsParams,
    pub(crate) buf: DoubleBuffer,
    pub(crate) halo: HaloBuffer,
    pub(crate) links: Links,
    mirror_down: Option<MirrorPlan>,
    mirror_up: Option<MirrorPlan>,
    pub(crate) regions: TileRegions,
}

impl Rank {
    pub fn new(
        tile: TileAssignment,
        geom: LatticeGeometry,
        vs: Arc<VelocitySet>,
        params: PhysicsParams,
        links: Links,
    ) -> Result<Self> {
        if (geom.lx, geom.ly) != tile.extent {
            return Err(Error::contract(format!(
                "geometry {}x{} does not match tile {:?}",
                geom.lx, geom.ly, tile.extent
            )));
        }
        let halo = HaloBuffer::new(&geom, &vs)?;
        let mirror_down = if tile.lowermost { Some(MirrorPlan::new(&geom, &vs, Face::Down)?) } else { None };
        let mirror_up = if tile.uppermost { Some(MirrorPlan::new(&geom, &vs, Face::Up)?) } else { None };
        Ok(Self {
            regions: TileRegions::new(geom.lx, geom.ly),
            buf: DoubleBuffer::new(geom)?,
            tile,
            vs,
            params,
            halo,
            links,
            mirror_down,
            mirror_up,
        })
    }

    pub fn tile(&self) -> &TileAssignment {
        &self.tile
    }

    pub fn buffers(&self) -> &DoubleBuffer {
        &self.buf
    }

    pub fn buffers_mut(&mut self) -> &mut DoubleBuffer {
        &mut self.buf
    }

    /// Doubles moved per halo message across `face`.
    pub fn halo_capacity(&self, face: Face) -> usize {
        self.halo.capacity(face)
    }

    pub fn id(&self) -> usize {
        self.tile.rank
    }

    /// Tile rows rewritten by the wall kernel on this rank.
    pub fn wall_rows(&self) -> Vec<Range<usize>> {
        let ty = self.tile.extent.1;
        let mut rows = Vec::new();
        if self.tile.lowermost {
            rows.push(0..WALL_ROWS);
        }
        if self.tile.uppermost {
            rows.push(ty - WALL_ROWS..ty);
        }
        rows
    }

    /// `(region, wall temperature)` for each wall this rank owns.
    pub fn wall_regions(&self) -> Vec<(Region, f64)> {
        let (tx, ty) = self.tile.extent;
        let mut out = Vec::new();
        if self.tile.lowermost {
            out.push((Region::new(0..tx, 0..WALL_ROWS), self.params.t_bot));
        }
        if self.tile.uppermost {
            out.push((Region::new(0..tx, ty - WALL_ROWS..ty), self.params.t_top));
        }
        out
    }

    /// Y-direction halo update: exchange with the neighbors above and below,
    /// reflect at walls. Both faces are packed and posted before either
    /// receive, since their rows are disjoint.
    pub fn y_phase(&mut self, step: u64) -> Result<()> {
        let rank = self.tile.rank;
        let prv = self.buf.prv_mut();
        for face in [Face::Down, Face::Up] {
            if self.links.has_neighbor(face) {
                let data = self.halo.pack(face, prv, rank)?;
                self.links.send(face, step, data)?;
            }
        }
        for face in [Face::Down, Face::Up] {
            if self.links.has_neighbor(face) {
                let data = self.links.recv(face, step)?;
                self.halo.unpack(face, data, prv, rank)?;
            }
        }
        if let Some(m) = &self.mirror_down {
            m.apply(prv);
        }
        if let Some(m) = &self.mirror_up {
            m.apply(prv);
        }
        Ok(())
    }

    /// Packs and posts the X-direction halos; returns without waiting.
    pub fn x_post(&mut self, step: u64) -> Result<()> {
        let rank = self.tile.rank;
        let prv = self.buf.prv();
        for face in [Face::Left, Face::Right] {
            let data = self.halo.pack(face, prv, rank)?;
            self.links.send(face, step, data)?;
        }
        Ok(())
    }

    /// Waits for the X-direction halos and unpacks them.
    pub fn x_complete(&mut self, step: u64) -> Result<()> {
        let rank = self.tile.rank;
        let prv = self.buf.prv_mut();
        for face in [Face::Left, Face::Right] {
            let data = self.links.recv(face, step)?;
            self.halo.unpack(face, data, prv, rank)?;
        }
        Ok(())
    }

    pub fn abort_all(&self) {
        self.links.abort_all();
    }
}
