//! Particle storage and seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Aabb, MpmError, Result};
use crate::math::{compensated_sum, Mat3, Vec3};

/// One particle, used when building a [`ParticleSet`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub position: Vec3,
    pub velocity: Vec3,
    pub mass: f64,
    pub volume0: f64,
    pub material_id: usize,
}

/// Structure-of-arrays particle state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParticleSet {
    pub x: Vec<Vec3>,
    pub v: Vec<Vec3>,
    pub mass: Vec<f64>,
    pub volume0: Vec<f64>,
    pub f: Vec<Mat3>,
    pub c: Vec<Mat3>,
    pub material_id: Vec<usize>,
}

impl ParticleSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Adds an undeformed particle (`F = I`, `C = 0`).
    pub fn push(&mut self, p: Particle) {
        self.x.push(p.position);
        self.v.push(p.velocity);
        self.mass.push(p.mass);
        self.volume0.push(p.volume0);
        self.f.push(Mat3::identity());
        self.c.push(Mat3::zeros());
        self.material_id.push(p.material_id);
    }

    pub fn extend(&mut self, other: &ParticleSet) {
        self.x.extend_from_slice(&other.x);
        self.v.extend_from_slice(&other.v);
        self.mass.extend_from_slice(&other.mass);
        self.volume0.extend_from_slice(&other.volume0);
        self.f.extend_from_slice(&other.f);
        self.c.extend_from_slice(&other.c);
        self.material_id.extend_from_slice(&other.material_id);
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.mass.iter().copied())
    }

    pub fn total_momentum(&self) -> Vec3 {
        let axis = |a: usize| compensated_sum(self.mass.iter().zip(&self.v).map(|(m, v)| m * v[a]));
        Vec3::new(axis(0), axis(1), axis(2))
    }

    pub fn max_speed(&self) -> f64 {
        self.v.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Checks field lengths, positive masses, finiteness and containment.
    pub fn validate(&self, domain: &Aabb) -> Result<()> {
        let n = self.len();
        let lens = [
            self.v.len(),
            self.mass.len(),
            self.volume0.len(),
            self.f.len(),
            self.c.len(),
            self.material_id.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(MpmError::InvalidConfig("particle field lengths differ".into()));
        }
        for i in 0..n {
            if !(self.mass[i] > 0.0) || !(self.volume0[i] > 0.0) {
                return Err(MpmError::InvalidConfig(format!(
                    "particle {i} has non-positive mass or volume"
                )));
            }
            if !self.x[i].iter().chain(self.v[i].iter()).all(|c| c.is_finite()) {
                return Err(MpmError::NonFinite { index: i });
            }
            if !domain.contains(&self.x[i]) {
                return Err(MpmError::ParticleOutOfDomain {
                    index: i,
                    position: self.x[i].into(),
                });
            }
        }
        Ok(())
    }
}

/// Jittered seeding of the cells of `region` (cell size `dx`) whose centre
/// satisfies `inside`. Each cell is split into `per_cell` strata when that is
/// a perfect cube, otherwise points are uniform over the cell; samples that
/// fail `inside` are discarded.
pub fn seed_particles(
    region: &Aabb,
    dx: f64,
    per_cell: usize,
    density: f64,
    material_id: usize,
    seed: u64,
    inside: impl Fn(&Vec3) -> bool,
) -> ParticleSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ext = region.max - region.min;
    let cells = [0, 1, 2].map(|a| (ext[a] / dx).ceil().max(1.0) as usize);
    let side = (per_cell as f64).cbrt().round() as usize;
    let stratified = side.pow(3) == per_cell;
    let volume0 = dx * dx * dx / per_cell as f64;
    let mut out = ParticleSet::new();
    for k in 0..cells[2] {
        for j in 0..cells[1] {
            for i in 0..cells[0] {
                let corner = region.min + Vec3::new(i as f64, j as f64, k as f64) * dx;
                if !inside(&(corner + Vec3::repeat(0.5 * dx))) {
                    continue;
                }
                for s in 0..per_cell {
                    let jitter = Vec3::new(rng.random(), rng.random(), rng.random());
                    let local = if stratified {
                        let sub = Vec3::new((s % side) as f64, (s / side % side) as f64, (s / (side * side)) as f64);
                        (sub + jitter) / side as f64
                    } else {
                        jitter
                    };
                    let p = corner + local * dx;
                    if !inside(&p) || !region.contains(&p) {
                        continue;
                    }
                    out.push(Particle {
                        position: p,
                        velocity: Vec3::zeros(),
                        mass: density * volume0,
                        volume0,
                        material_id,
                    });
                }
            }
        }
    }
    out
}

/// Seeds the whole box `region`.
pub fn seed_box(region: &Aabb, dx: f64, per_cell: usize, density: f64, material_id: usize, seed: u64) -> ParticleSet {
    seed_particles(region, dx, per_cell, density, material_id, seed, |_| true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_seeding_density_and_determinism() {
        let region = Aabb::new(Vec3::zeros(), Vec3::repeat(0.1));
        let a = seed_box(&region, 0.01, 8, 1000.0, 0, 3);
        assert_eq!(a.len(), 8000);
        assert!((a.total_mass() - 1000.0 * 1e-3).abs() < 1e-12);
        assert!(a.x.iter().all(|p| region.contains(p)));
        assert_eq!(a, seed_box(&region, 0.01, 8, 1000.0, 0, 3));
        assert_ne!(a.x, seed_box(&region, 0.01, 8, 1000.0, 0, 4).x);
    }

    #[test]
    fn predicate_restricts_samples() {
        let region = Aabb::new(Vec3::repeat(-1.0), Vec3::repeat(1.0));
        let ball = seed_particles(&region, 0.1, 8, 1.0, 2, 0, |p| p.norm() < 0.5);
        assert!(ball.x.iter().all(|p| p.norm() < 0.5));
        let expect = 4.0 / 3.0 * std::f64::consts::PI * 0.125 / (0.001 / 8.0);
        assert!((ball.len() as f64 / expect - 1.0).abs() < 0.1);
        assert!(ball.material_id.iter().all(|&m| m == 2));
    }

    #[test]
    fn validation_catches_bad_particles() {
        let domain = Aabb::new(Vec3::zeros(), Vec3::repeat(1.0));
        let mut p = ParticleSet::new();
        p.push(Particle {
            position: Vec3::repeat(0.5),
            velocity: Vec3::zeros(),
            mass: 1.0,
            volume0: 1.0,
            material_id: 0,
        });
        assert!(p.validate(&domain).is_ok());
        p.x[0] = Vec3::repeat(2.0);
        assert!(matches!(p.validate(&domain), Err(MpmError::ParticleOutOfDomain { index: 0, .. })));
        p.x[0] = Vec3::repeat(0.5);
        p.mass[0] = 0.0;
        assert!(p.validate(&domain).is_err());
    }
}
