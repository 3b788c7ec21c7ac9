use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Width of the border strips that depend on halo data; also the number of
/// wall rows. Tiles must be at least twice this wide in each direction.
pub const BORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tiling {
    /// `np` slabs along X on a ring.
    OneD { np: usize },
    /// `nx x ny` grid: ring along X, chain (or ring when periodic) along Y.
    TwoD { nx: usize, ny: usize },
}

impl Tiling {
    pub fn grid(&self) -> (usize, usize) {
        match *self {
            Tiling::OneD { np } => (np, 1),
            Tiling::TwoD { nx, ny } => (nx, ny),
        }
    }

    pub fn ranks(&self) -> usize {
        let (nx, ny) = self.grid();
        nx * ny
    }
}

impl fmt::Display for Tiling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tiling::OneD { np } => write!(f, "1d:{np}"),
            Tiling::TwoD { nx, ny } => write!(f, "2d:{nx}x{ny}"),
        }
    }
}

impl FromStr for Tiling {
    type Err = Error;

    /// Accepts `1d:<np>` and `2d:<nx>x<ny>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config(format!("bad tiling '{s}' (expected 1d:<np> or 2d:<nx>x<ny>)"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        match kind.to_ascii_lowercase().as_str() {
            "1d" => Ok(Tiling::OneD { np: rest.trim().parse().map_err(|_| bad())? }),
            "2d" => {
                let (a, b) = rest.split_once(['x', 'X']).ok_or_else(bad)?;
                Ok(Tiling::TwoD {
                    nx: a.trim().parse().map_err(|_| bad())?,
                    ny: b.trim().parse().map_err(|_| bad())?,
                })
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Thermal walls at the top and bottom rows; periodic along X.
    Walls,
    /// Periodic in both directions, no wall kernel.
    Periodic,
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "walls" => Ok(Boundary::Walls),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::config(format!("unknown boundary '{other}' (walls | periodic)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbors {
    pub left: usize,
    pub right: usize,
    pub up: Option<usize>,
    pub down: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileAssignment {
    pub rank: usize,
    pub grid: (usize, usize),
    pub coords: (usize, usize),
    /// Global coordinates of the tile's first physical site.
    pub origin: (usize, usize),
    pub extent: (usize, usize),
    pub neighbors: Neighbors,
    pub uppermost: bool,
    pub lowermost: bool,
}

impl TileAssignment {
    pub fn rank_of(grid: (usize, usize), ix: usize, iy: usize) -> usize {
        iy * grid.0 + ix
    }
}

fn divisors(n: usize, min_quotient: usize) -> Vec<usize> {
    (1..=n).filter(|d| n % d == 0 && n / d >= min_quotient).collect()
}

/// Splits an `lx x ly` lattice into uniform tiles.
pub fn decompose(lx: usize, ly: usize, tiling: Tiling, boundary: Boundary) -> Result<Vec<TileAssignment>> {
    let (nx, ny) = tiling.grid();
    if nx == 0 || ny == 0 {
        return Err(Error::config(format!("tiling {tiling} has no ranks")));
    }
    let min = 2 * BORDER;
    let fits = |l: usize, n: usize| l % n == 0 && l / n >= min;
    if !fits(lx, nx) || !fits(ly, ny) {
        let msg = match tiling {
            Tiling::OneD { np } => format!(
                "1D tiling of Lx = {lx} over {np} ranks needs Lx divisible by Np with tiles at least {min} wide; valid Np: {:?}",
                divisors(lx, min)
            ),
            Tiling::TwoD { nx, ny } => format!(
                "2D tiling {nx}x{ny} of {lx}x{ly} needs uniform tiles at least {min} wide; valid nx: {:?}, valid ny: {:?}",
                divisors(lx, min),
                divisors(ly, min)
            ),
        };
        return Err(Error::config(msg));
    }
    let (tx, ty) = (lx / nx, ly / ny);
    let periodic_y = boundary == Boundary::Periodic;
    let walls = boundary == Boundary::Walls;
    let grid = (nx, ny);
    let mut tiles = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let up = if iy + 1 < ny {
                Some(TileAssignment::rank_of(grid, ix, iy + 1))
            } else if periodic_y {
                Some(TileAssignment::rank_of(grid, ix, 0))
            } else {
                None
            };
            let down = if iy > 0 {
                Some(TileAssignment::rank_of(grid, ix, iy - 1))
            } else if periodic_y {
                Some(TileAssignment::rank_of(grid, ix, ny - 1))
            } else {
                None
            };
            tiles.push(TileAssignment {
                rank: TileAssignment::rank_of(grid, ix, iy),
                grid,
                coords: (ix, iy),
                origin: (ix * tx, iy * ty),
                extent: (tx, ty),
                neighbors: Neighbors {
                    left: TileAssignment::rank_of(grid, (ix + nx - 1) % nx, iy),
                    right: TileAssignment::rank_of(grid, (ix + 1) % nx, iy),
                    up,
                    down,
                },
                uppermost: walls && iy + 1 == ny,
                lowermost: walls && iy == 0,
            });
        }
    }
    Ok(tiles)
}
