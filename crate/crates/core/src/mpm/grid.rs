//! Background grid and the P2G / grid update / G2P transfers.

use rayon::prelude::*;

use super::collider::{project_velocity, Collider, ContactMode};
use super::kernel::{apic_d_inv, Stencil};
use super::particles::ParticleSet;
use super::{Aabb, DomainBoundary, MpmError, Result};
use crate::constitutive::{cauchy_stress, return_map, DeformationState, MaterialModel};
use crate::forces::{wind_force, WindField};
use crate::math::{compensated_sum, Mat3, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub origin: Vec3,
    pub dx: f64,
    /// Node counts per axis.
    pub dims: [usize; 3],
    pub mass: Vec<f64>,
    pub momentum: Vec<Vec3>,
    pub velocity: Vec<Vec3>,
    /// Nodes touched by the last scatter, in first-touch order.
    active: Vec<usize>,
}

impl GridState {
    /// Grid whose nodes cover `domain` with spacing `dx`.
    pub fn new(domain: &Aabb, dx: f64) -> Self {
        let ext = domain.max - domain.min;
        let dims = [0, 1, 2].map(|a| (ext[a] / dx).ceil() as usize + 1);
        let n = dims[0] * dims[1] * dims[2];
        Self {
            origin: domain.min,
            dx,
            dims,
            mass: vec![0.0; n],
            momentum: vec![Vec3::zeros(); n],
            velocity: vec![Vec3::zeros(); n],
            active: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.mass.len()
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [idx % nx, idx / nx % ny, idx / (nx * ny)]
    }

    pub fn node_position(&self, idx: usize) -> Vec3 {
        let [i, j, k] = self.coords(idx);
        self.origin + Vec3::new(i as f64, j as f64, k as f64) * self.dx
    }

    /// Indices of nodes that received mass in the last scatter.
    pub fn active_nodes(&self) -> &[usize] {
        &self.active
    }

    /// Zeroes the nodes touched since the last clear.
    pub fn clear(&mut self) {
        for &i in &self.active {
            self.mass[i] = 0.0;
            self.momentum[i] = Vec3::zeros();
            self.velocity[i] = Vec3::zeros();
        }
        self.active.clear();
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.active.iter().map(|&i| self.mass[i]))
    }

    pub fn total_momentum(&self) -> Vec3 {
        let axis = |a: usize| compensated_sum(self.active.iter().map(|&i| self.momentum[i][a]));
        Vec3::new(axis(0), axis(1), axis(2))
    }

    /// Order-independent fingerprint of node masses and velocities.
    pub fn checksum(&self) -> u64 {
        let mut nodes = self.active.clone();
        nodes.sort_unstable();
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |x: f64| {
            for b in x.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for i in nodes {
            eat(self.mass[i]);
            self.momentum[i].iter().for_each(|&c| eat(c));
        }
        h
    }

    fn stencil(&self, x: &Vec3, index: usize) -> Result<Stencil> {
        let s = Stencil::new(x, &self.origin, self.dx);
        let inside = (0..3).all(|a| s.base[a] >= 0 && (s.base[a] as usize) + 2 < self.dims[a]);
        if inside {
            Ok(s)
        } else {
            Err(MpmError::ParticleOutOfDomain {
                index,
                position: [x.x, x.y, x.z],
            })
        }
    }

    fn node_of(&self, s: &Stencil, off: [usize; 3]) -> usize {
        self.index(
            s.base[0] as usize + off[0],
            s.base[1] as usize + off[1],
            s.base[2] as usize + off[2],
        )
    }
}

/// Particle-to-grid transfer.
///
/// Updates each particle's deformation gradient (trial update, return map,
/// volume-only reset for fluids tracking `J`) and scatters mass, APIC
/// momentum and the stress impulse onto the cleared grid. Per-particle work
/// runs in parallel; the scatter is serial in particle order so results are
/// bitwise reproducible.
pub fn p2g(particles: &mut ParticleSet, materials: &[MaterialModel], grid: &mut GridState, dt: f64) -> Result<()> {
    grid.clear();
    let d_inv = apic_d_inv(grid.dx);
    let g: &GridState = grid;
    let affine: Vec<(Mat3, Mat3, Stencil)> = (0..particles.len())
        .into_par_iter()
        .map(|p| {
            let x = particles.x[p];
            let stencil = g.stencil(&x, p)?;
            let model = materials.get(particles.material_id[p]).ok_or(MpmError::UnknownMaterial {
                index: p,
                material_id: particles.material_id[p],
            })?;
            let c = particles.c[p];
            let wrap = |source| MpmError::Constitutive { index: p, source };
            let trial = (Mat3::identity() + c * dt) * particles.f[p];
            let mut f = return_map(model, &trial, dt).map_err(wrap)?;
            if model.tracks_volume_only() {
                f = Mat3::identity() * f.determinant().cbrt();
            }
            let state = DeformationState::new(f).with_velocity_gradient(c);
            let stress = cauchy_stress(model, &state).map_err(wrap)?;
            let q = stress * (-dt * particles.volume0[p] * d_inv) + c * particles.mass[p];
            Ok((f, q, stencil))
        })
        .collect::<Result<_>>()?;

    let dx = grid.dx;
    for (p, (f, q, stencil)) in affine.into_iter().enumerate() {
        particles.f[p] = f;
        let m = particles.mass[p];
        let mv = particles.v[p] * m;
        stencil.for_each(dx, |off, w, dpos| {
            if w == 0.0 {
                return;
            }
            let idx = grid.node_of(&stencil, off);
            if grid.mass[idx] == 0.0 {
                grid.active.push(idx);
            }
            grid.mass[idx] += w * m;
            grid.momentum[idx] += (mv + q * dpos) * w;
        });
    }
    Ok(())
}

/// External accelerations and collision handling applied per node.
#[derive(Debug, Clone, Copy, Default)]
pub struct GridForces<'a> {
    pub gravity: Vec3,
    pub boundary: Option<&'a DomainBoundary>,
    pub colliders: &'a [Collider],
    /// Wind fields, applied as force per unit mass.
    pub wind: &'a [WindField],
}

fn apply_boundary(b: &DomainBoundary, coords: [usize; 3], dims: [usize; 3], v: Vec3) -> Vec3 {
    let mut v = v;
    for a in 0..3 {
        let mut n = Vec3::zeros();
        if coords[a] < b.cells {
            n[a] = 1.0;
        } else if coords[a] + b.cells >= dims[a] {
            n[a] = -1.0;
        } else {
            continue;
        }
        v = project_velocity(&v, &n, b.mode, b.friction);
        if b.mode == ContactMode::Sticky {
            break;
        }
    }
    v
}

/// Normalizes momenta to velocities, adds gravity and wind, then runs the
/// domain boundary, analytic colliders and voxel SDFs in that order.
pub fn grid_update(grid: &mut GridState, forces: &GridForces<'_>, dt: f64) {
    let active = std::mem::take(&mut grid.active);
    let g: &GridState = grid;
    let updated: Vec<Vec3> = active
        .par_iter()
        .map(|&idx| {
            let m = g.mass[idx];
            // Momentum and mass share every weight, so any positive mass
            // gives a well-defined velocity.
            if !(m > 0.0) {
                return Vec3::zeros();
            }
            let x = g.node_position(idx);
            let mut v = g.momentum[idx] / m + forces.gravity * dt;
            for w in forces.wind {
                v += wind_force(w, &x) * dt;
            }
            if let Some(b) = forces.boundary {
                v = apply_boundary(b, g.coords(idx), g.dims, v);
            }
            for c in forces.colliders {
                v = c.apply(&x, &v);
            }
            v
        })
        .collect();
    for (&idx, v) in active.iter().zip(updated) {
        grid.velocity[idx] = v;
    }
    grid.active = active;
}

/// Grid-to-particle gather and advection, clamping positions to keep a
/// two-cell margin inside `domain`.
pub fn g2p(grid: &GridState, particles: &mut ParticleSet, dt: f64, domain: &Aabb) {
    let dx = grid.dx;
    let d_inv = apic_d_inv(dx);
    let lo = domain.min + Vec3::repeat(2.0 * dx);
    let hi = domain.max - Vec3::repeat(2.0 * dx);
    particles
        .x
        .par_iter_mut()
        .zip(particles.v.par_iter_mut())
        .zip(particles.c.par_iter_mut())
        .for_each(|((x, v), c)| {
            let stencil = Stencil::new(x, &grid.origin, dx);
            let mut new_v = Vec3::zeros();
            let mut b = Mat3::zeros();
            stencil.for_each(dx, |off, w, dpos| {
                let idx = grid.node_of(&stencil, off);
                let vi = grid.velocity[idx];
                new_v += vi * w;
                b += (vi * w) * dpos.transpose();
            });
            *v = new_v;
            *c = b * d_inv;
            *x = (*x + new_v * dt).sup(&lo).inf(&hi);
        });
}
