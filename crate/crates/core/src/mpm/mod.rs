//! Material point method solver.
//!
//! One substep is `p2g → grid_update → g2p` on a regular background grid with
//! quadratic B-spline weights and APIC transfers. Particle state is kept in
//! `f64`; checkpoints are written as `f32`.

pub mod checkpoint;
pub mod collider;
pub mod grid;
pub mod kernel;
pub mod mesh;
pub mod particles;
pub mod sdf;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constitutive::{ConstitutiveError, MaterialModel};
use crate::forces::WindField;
use crate::math::Vec3;

pub use checkpoint::{decode_pios, encode_pios, load_checkpoint, save_checkpoint};
pub use collider::{AnalyticCollider, AnalyticShape, Collider, ContactMode};
pub use grid::{g2p, grid_update, p2g, GridForces, GridState};
pub use mesh::{load_mesh, TriangleMesh};
pub use particles::{seed_box, seed_particles, Particle, ParticleSet};
pub use sdf::{sdf_from_mesh, VoxelSdf};

#[derive(Debug, Error)]
pub enum MpmError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("particle {index} at {position:?} is outside the simulation domain")]
    ParticleOutOfDomain { index: usize, position: [f64; 3] },
    #[error("particle {index} has non-finite state")]
    NonFinite { index: usize },
    #[error("particle {index} references unknown material {material_id}")]
    UnknownMaterial { index: usize, material_id: usize },
    #[error("constitutive update failed for particle {index}: {source}")]
    Constitutive {
        index: usize,
        #[source]
        source: ConstitutiveError,
    },
    #[error("mesh is not watertight: {:.3}% of voxels have inconsistent parity", fraction * 100.0)]
    NonWatertight { fraction: f64 },
    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),
    #[error("malformed mesh: {0}")]
    MalformedMesh(String),
    #[error("malformed checkpoint: {0}")]
    MalformedCheckpoint(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, MpmError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn is_valid(&self) -> bool {
        (0..3).all(|a| self.min[a].is_finite() && self.max[a].is_finite() && self.max[a] > self.min[a])
    }
}

/// Contact applied to nodes within `cells` of the domain faces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DomainBoundary {
    pub mode: ContactMode,
    pub cells: usize,
    pub friction: f64,
}

impl Default for DomainBoundary {
    fn default() -> Self {
        Self {
            mode: ContactMode::Separate,
            cells: 3,
            friction: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub dt: f64,
    pub dx: f64,
    pub gravity: Vec3,
    pub substeps_per_frame: usize,
    pub frame_rate: f64,
    pub domain: Aabb,
    /// `None` disables the domain box collider.
    pub boundary: Option<DomainBoundary>,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1.0 / 150.0,
            dx: 0.0083,
            gravity: Vec3::new(0.0, 0.0, -9.8),
            substeps_per_frame: 5,
            frame_rate: 30.0,
            domain: Aabb::new(Vec3::zeros(), Vec3::repeat(1.0)),
            boundary: Some(DomainBoundary::default()),
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(MpmError::InvalidConfig(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return bad(format!("dx must be positive, got {}", self.dx));
        }
        if !(self.frame_rate > 0.0) || self.substeps_per_frame == 0 {
            return bad("frame_rate and substeps_per_frame must be positive".into());
        }
        if !self.gravity.iter().all(|g| g.is_finite()) {
            return bad("gravity must be finite".into());
        }
        if !self.domain.is_valid() {
            return bad(format!("domain {:?} is empty or non-finite", self.domain));
        }
        let cells = self.domain.extent() / self.dx;
        if cells.min() < 5.0 {
            return bad("domain must span at least 5 cells per axis".into());
        }
        if cells.x * cells.y * cells.z > 5e8 {
            return bad(format!("grid of {:.0} cells is too large", cells.x * cells.y * cells.z));
        }
        Ok(())
    }

    /// `max speed · dt / dx`; above 1 a particle can skip a cell per step.
    pub fn cfl_number(&self, particles: &ParticleSet) -> f64 {
        particles.max_speed() * self.dt / self.dx
    }
}

/// One substep on the given state.
pub fn step(
    particles: &mut ParticleSet,
    grid: &mut GridState,
    cfg: &SimConfig,
    materials: &[MaterialModel],
    colliders: &[Collider],
    wind: &[WindField],
) -> Result<()> {
    p2g(particles, materials, grid, cfg.dt)?;
    let forces = GridForces {
        gravity: cfg.gravity,
        boundary: cfg.boundary.as_ref(),
        colliders,
        wind,
    };
    grid_update(grid, &forces, cfg.dt);
    g2p(grid, particles, cfg.dt, &cfg.domain);
    Ok(())
}

/// Owned simulation state.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub config: SimConfig,
    pub particles: ParticleSet,
    pub grid: GridState,
    pub materials: Vec<MaterialModel>,
    colliders: Vec<Collider>,
    pub wind: Vec<WindField>,
    pub steps: u64,
    cfl_warned: bool,
}

impl Simulation {
    pub fn new(config: SimConfig, particles: ParticleSet, materials: Vec<MaterialModel>) -> Result<Self> {
        config.validate()?;
        particles.validate(&config.domain)?;
        if let Some((index, &material_id)) = particles
            .material_id
            .iter()
            .enumerate()
            .find(|(_, &m)| m >= materials.len())
        {
            return Err(MpmError::UnknownMaterial { index, material_id });
        }
        let grid = GridState::new(&config.domain, config.dx);
        Ok(Self {
            config,
            particles,
            grid,
            materials,
            colliders: Vec::new(),
            wind: Vec::new(),
            steps: 0,
            cfl_warned: false,
        })
    }

    /// Adds a collider; analytic shapes always run before SDFs.
    pub fn add_collider(&mut self, c: Collider) {
        self.colliders.push(c);
        collider::order_colliders(&mut self.colliders);
    }

    pub fn colliders(&self) -> &[Collider] {
        &self.colliders
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.config.dt
    }

    pub fn step(&mut self) -> Result<()> {
        let cfl = self.config.cfl_number(&self.particles);
        if cfl >= 1.0 && !self.cfl_warned {
            log::warn!("CFL number {cfl:.3} ≥ 1 at step {}; consider a smaller dt", self.steps);
            self.cfl_warned = true;
        }
        step(
            &mut self.particles,
            &mut self.grid,
            &self.config,
            &self.materials,
            &self.colliders,
            &self.wind,
        )?;
        self.steps += 1;
        if let Some(index) = self
            .particles
            .v
            .iter()
            .position(|v| !v.iter().all(|c| c.is_finite()))
        {
            return Err(MpmError::NonFinite { index });
        }
        Ok(())
    }

    /// Runs `substeps_per_frame` substeps.
    pub fn advance_frame(&mut self) -> Result<()> {
        for _ in 0..self.config.substeps_per_frame {
            self.step()?;
        }
        Ok(())
    }
}
