use std::ops::Range;

use super::{collide_site, equilibrium_into, moments, PhysicsParams};
use crate::error::{Error, Result};
use crate::lattice::{PopulationField, Region};
use crate::velocity::VelocitySet;

/// Counters reported by the compute kernels.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct KernelStats {
    pub sites: usize,
    /// Populations that came out of collision negative.
    pub negative: usize,
}

impl std::ops::AddAssign for KernelStats {
    fn add_assign(&mut self, rhs: Self) {
        self.sites += rhs.sites;
        self.negative += rhs.negative;
    }
}

fn same_shape(a: &PopulationField, b: &PopulationField) -> Result<()> {
    if a.geometry() != b.geometry() {
        return Err(Error::contract("prv and nxt have different geometries"));
    }
    Ok(())
}

// Offset of the source of population l relative to its destination.
fn pull_offsets(field: &PopulationField, vs: &VelocitySet) -> Vec<isize> {
    let (_, sx, sy) = field.geometry().strides();
    vs.c().iter().map(|c| c[0] as isize * sx as isize + c[1] as isize * sy as isize).collect()
}

/// Pull streaming: `nxt_l(y) = prv_l(y - c_l)` for every site of `region`.
pub fn propagate(
    prv: &PopulationField,
    nxt: &mut PopulationField,
    vs: &VelocitySet,
    region: &Region,
) -> Result<()> {
    same_shape(prv, nxt)?;
    let g = *prv.geometry();
    region.check_inside(&g)?;
    if region.is_empty() {
        return Ok(());
    }
    let offsets = pull_offsets(prv, vs);
    let src = prv.as_slice();
    let dst = nxt.as_mut_slice();
    for (l, &off) in offsets.iter().enumerate() {
        for x in region.x.clone() {
            let row0 = g.site_index(l, x + g.hx, region.y.start + g.hy);
            let (_, _, sy) = g.strides();
            for k in 0..region.y.len() {
                let d = row0 + k * sy;
                let s = d as isize - off;
                debug_assert!(s >= 0 && (s as usize) < src.len());
                dst[d] = src[s as usize];
            }
        }
    }
    Ok(())
}

/// Wall kernel: replaces every site of `region` by the equilibrium at rest
/// with temperature `t_wall`, keeping the local density.
pub fn bc(
    field: &mut PopulationField,
    vs: &VelocitySet,
    params: &PhysicsParams,
    region: &Region,
    t_wall: f64,
) -> Result<()> {
    region.check_inside(field.geometry())?;
    let q = vs.q();
    let mut f = vec![0.0; q];
    let mut feq = vec![0.0; q];
    for x in region.x.clone() {
        for y in region.y.clone() {
            field.read_site(x, y, &mut f);
            let rho = moments(&f, vs).map_err(|e| e.at_site(x, y))?.rho;
            equilibrium_into(rho, [0.0, 0.0], t_wall, vs, params.eq_order, &mut feq)
                .map_err(|e| e.at_site(x, y))?;
            field.write_site(x, y, &feq);
        }
    }
    Ok(())
}

/// In-place collision over `region` of an already gathered field.
pub fn collide(
    field: &mut PopulationField,
    vs: &VelocitySet,
    params: &PhysicsParams,
    region: &Region,
) -> Result<KernelStats> {
    region.check_inside(field.geometry())?;
    let q = vs.q();
    let mut f = vec![0.0; q];
    let mut scratch = vec![0.0; q];
    let mut stats = KernelStats::default();
    for x in region.x.clone() {
        for y in region.y.clone() {
            field.read_site(x, y, &mut f);
            collide_site(&mut f, params, vs, &mut scratch).map_err(|e| e.at_site(x, y))?;
            stats.negative += f.iter().filter(|&&v| v < 0.0).count();
            field.write_site(x, y, &f);
        }
    }
    stats.sites = region.sites();
    Ok(stats)
}

/// Gather, collide and store in one pass. `bc_rows` lists tile rows owned by
/// the wall kernel; the region must not touch them.
pub fn propagate_collide_fused(
    prv: &PopulationField,
    nxt: &mut PopulationField,
    vs: &VelocitySet,
    params: &PhysicsParams,
    region: &Region,
    bc_rows: &[Range<usize>],
) -> Result<KernelStats> {
    same_shape(prv, nxt)?;
    let g = *prv.geometry();
    region.check_inside(&g)?;
    if let Some(rows) = bc_rows.iter().find(|r| region.intersects_rows(r)) {
        return Err(Error::contract(format!(
            "fused region rows {:?} overlap wall rows {:?}",
            region.y, rows
        )));
    }
    let mut stats = KernelStats::default();
    if region.is_empty() {
        return Ok(stats);
    }
    let offsets = pull_offsets(prv, vs);
    let (sl, _, _) = g.strides();
    let q = vs.q();
    let mut f = vec![0.0; q];
    let mut scratch = vec![0.0; q];
    let src = prv.as_slice();
    for x in region.x.clone() {
        for y in region.y.clone() {
            let base = g.site_index(0, x + g.hx, y + g.hy);
            for l in 0..q {
                let d = base + l * sl;
                f[l] = src[(d as isize - offsets[l]) as usize];
            }
            collide_site(&mut f, params, vs, &mut scratch).map_err(|e| e.at_site(x, y))?;
            stats.negative += f.iter().filter(|&&v| v < 0.0).count();
            let dst = nxt.as_mut_slice();
            for l in 0..q {
                dst[base + l * sl] = f[l];
            }
        }
    }
    stats.sites = region.sites();
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{equilibrium, WALL_ROWS};
    use crate::lattice::{allocate_field, LatticeGeometry, Layout};
    use crate::velocity::build_velocity_set;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_near_eq(field: &mut PopulationField, vs: &VelocitySet, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = *field.geometry();
        for x in 0..g.lx {
            for y in 0..g.ly {
                let rho = 1.0 + 0.05 * rng.gen_range(-1.0..1.0);
                let u = [0.02 * rng.gen_range(-1.0..1.0), 0.02 * rng.gen_range(-1.0..1.0)];
                let t = vs.cs2() * (1.0 + 0.05 * rng.gen_range(-1.0..1.0));
                let mut f = equilibrium(rho, u, t, vs, vs.max_eq_order()).unwrap();
                for v in f.iter_mut() {
                    *v *= 1.0 + 0.01 * rng.gen_range(-1.0..1.0);
                }
                field.write_site(x, y, &f);
            }
        }
    }

    #[test]
    fn single_value_moves_along_its_velocity() {
        let vs = build_velocity_set("D2Q37").unwrap();
        for layout in [Layout::Soa, Layout::Aos] {
            let g = LatticeGeometry::new(12, 10, &vs, layout).unwrap();
            let (mut prv, mut nxt) = allocate_field(g).unwrap();
            let l = vs.index_of([3, -1]).unwrap();
            prv.set_phys(l, 4, 5, 1.5);
            propagate(&prv, &mut nxt, &vs, &g.physical()).unwrap();
            assert_eq!(nxt.get_phys(l, 7, 4), 1.5);
            assert_eq!(nxt.as_slice().iter().filter(|&&v| v != 0.0).count(), 1);
        }
    }

    #[test]
    fn propagate_preserves_multiset_on_periodic_lattice() {
        let vs = build_velocity_set("D2Q37").unwrap();
        let g = LatticeGeometry::new(9, 7, &vs, Layout::Soa).unwrap();
        let (mut prv, mut nxt) = allocate_field(g).unwrap();
        random_near_eq(&mut prv, &vs, 3);
        prv.wrap_periodic();
        propagate(&prv, &mut nxt, &vs, &g.physical()).unwrap();
        let mut a = prv.physical_values();
        let mut b = nxt.physical_values();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_field_unchanged_by_propagate() {
        let vs = build_velocity_set("D2Q9").unwrap();
        let g = LatticeGeometry::new(6, 6, &vs, Layout::Soa).unwrap();
        let (mut prv, mut nxt) = allocate_field(g).unwrap();
        for x in 0..6 {
            for y in 0..6 {
                prv.write_site(x, y, vs.w());
            }
        }
        prv.wrap_periodic();
        propagate(&prv, &mut nxt, &vs, &g.physical()).unwrap();
        assert_eq!(prv.physical_values(), nxt.physical_values());
    }

    #[test]
    fn region_in_halo_is_contract_violation() {
        let vs = build_velocity_set("D2Q9").unwrap();
        let g = LatticeGeometry::new(6, 6, &vs, Layout::Soa).unwrap();
        let (prv, mut nxt) = allocate_field(g).unwrap();
        let r = Region::new(0..7, 0..6);
        assert!(matches!(propagate(&prv, &mut nxt, &vs, &r), Err(Error::Contract(_))));
    }

    #[test]
    fn bc_sets_wall_state_and_conserves_row_mass() {
        let vs = build_velocity_set("D2Q37").unwrap();
        let g = LatticeGeometry::new(10, 12, &vs, Layout::Soa).unwrap();
        let (mut f, _) = allocate_field(g).unwrap();
        random_near_eq(&mut f, &vs, 11);
        let params = PhysicsParams::defaults_for(&vs);
        let before = f.clone();
        let top = Region::new(0..10, 12 - WALL_ROWS..12);
        let mass = |fld: &PopulationField| -> f64 {
            let mut s = 0.0;
            for x in top.x.clone() {
                for y in top.y.clone() {
                    for l in 0..vs.q() {
                        s += fld.get_phys(l, x, y);
                    }
                }
            }
            s
        };
        let t_wall = 0.9;
        bc(&mut f, &vs, &params, &top, t_wall).unwrap();
        assert!((mass(&f) - mass(&before)).abs() < 1e-12 * mass(&before));
        let mut site = vec![0.0; vs.q()];
        for x in 0..10 {
            for y in 0..12 {
                f.read_site(x, y, &mut site);
                if top.contains(x, y) {
                    let m = moments(&site, &vs).unwrap();
                    assert!(m.u[0].hypot(m.u[1]) < 1e-14);
                    assert!((m.t - t_wall).abs() < 1e-12);
                } else {
                    for l in 0..vs.q() {
                        assert_eq!(f.get_phys(l, x, y).to_bits(), before.get_phys(l, x, y).to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn fused_matches_staged_bitwise() {
        let vs = build_velocity_set("D2Q37").unwrap();
        let mut params = PhysicsParams::defaults_for(&vs);
        params.tau = 0.9;
        params.g = [1e-4, -2e-4];
        for layout in [Layout::Soa, Layout::Aos] {
            let g = LatticeGeometry::new(11, 13, &vs, layout).unwrap();
            let (mut prv, mut staged) = allocate_field(g).unwrap();
            let mut fused = staged.clone();
            random_near_eq(&mut prv, &vs, 5);
            prv.wrap_periodic();
            let r = Region::new(2..9, 3..10);
            propagate(&prv, &mut staged, &vs, &r).unwrap();
            let s1 = collide(&mut staged, &vs, &params, &r).unwrap();
            let s2 = propagate_collide_fused(&prv, &mut fused, &vs, &params, &r, &[]).unwrap();
            assert_eq!(s1, s2);
            let a: Vec<u64> = staged.as_slice().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = fused.as_slice().iter().map(|v| v.to_bits()).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn fused_empty_region_is_noop() {
        let vs = build_velocity_set("D2Q9").unwrap();
        let g = LatticeGeometry::new(6, 6, &vs, Layout::Soa).unwrap();
        let (prv, mut nxt) = allocate_field(g).unwrap();
        let params = PhysicsParams::defaults_for(&vs);
        let stats =
            propagate_collide_fused(&prv, &mut nxt, &vs, &params, &Region::new(2..2, 0..6), &[]).unwrap();
        assert_eq!(stats.sites, 0);
        assert!(nxt.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fused_single_site_equals_collide_of_gather() {
        let vs = build_velocity_set("D2Q9").unwrap();
        let g = LatticeGeometry::new(6, 6, &vs, Layout::Soa).unwrap();
        let (mut prv, mut nxt) = allocate_field(g).unwrap();
        random_near_eq(&mut prv, &vs, 9);
        prv.wrap_periodic();
        let mut params = PhysicsParams::defaults_for(&vs);
        params.tau = 0.7;
        propagate_collide_fused(&prv, &mut nxt, &vs, &params, &Region::new(3..4, 2..3), &[]).unwrap();
        let mut gathered: Vec<f64> = (0..9)
            .map(|l| {
                let c = vs.c()[l];
                prv.get_phys(l, (3 - c[0]) as usize, (2 - c[1]) as usize)
            })
            .collect();
        collide_site(&mut gathered, &params, &vs, &mut vec![0.0; 9]).unwrap();
        let mut out = vec![0.0; 9];
        nxt.read_site(3, 2, &mut out);
        assert_eq!(out, gathered);
    }

    #[test]
    fn fused_refuses_wall_rows() {
        let vs = build_velocity_set("D2Q9").unwrap();
        let g = LatticeGeometry::new(8, 8, &vs, Layout::Soa).unwrap();
        let (prv, mut nxt) = allocate_field(g).unwrap();
        let params = PhysicsParams::defaults_for(&vs);
        let err = propagate_collide_fused(&prv, &mut nxt, &vs, &params, &Region::new(0..8, 4..8), &[5..8])
            .unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn collide_reports_site_of_degenerate_state() {
        let vs = build_velocity_set("D2Q9").unwrap();
        let g = LatticeGeometry::new(4, 4, &vs, Layout::Soa).unwrap();
        let (mut f, _) = allocate_field(g).unwrap();
        for x in 0..4 {
            for y in 0..4 {
                f.write_site(x, y, vs.w());
            }
        }
        f.write_site(2, 1, &[0.0; 9]);
        let params = PhysicsParams::defaults_for(&vs);
        let err = collide(&mut f, &vs, &params, &g.physical()).unwrap_err();
        assert!(matches!(err, Error::Site { x: 2, y: 1, .. }));
    }
}
