//! Scene documents, parameter ranges, material variation and the conversion
//! of a scene into a runnable simulation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::annotate::{CameraTrack, FrameSnapshot, ObjectState};
use super::registry::{Activity, PhenomenonRegistry};
use super::{io_err, Result, SceneError};
use crate::camera::{generate_trajectory, sample_static_ring, TrajectoryConfig};
use crate::constitutive::MaterialModel;
use crate::forces::{Magnet, WindField};
use crate::math::Vec3;
use crate::mpm::{
    load_mesh, sdf_from_mesh, seed_particles, Aabb, AnalyticCollider, Collider, ContactMode, ParticleSet, SimConfig,
    Simulation, TriangleMesh, VoxelSdf,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRange {
    pub name: &'static str,
    pub min: f64,
    pub max: f64,
}

impl ParamRange {
    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        rng.random_range(self.min..=self.max)
    }
}

const FRICTION: ParamRange = ParamRange { name: "friction", min: 0.0, max: 0.9 };
const RESTITUTION: ParamRange = ParamRange { name: "restitution", min: 0.1, max: 0.8 };
/// g/cm³.
const DENSITY: ParamRange = ParamRange { name: "density", min: 0.1, max: 21.3 };
const FRICTION_ANGLE: ParamRange = ParamRange { name: "friction_angle", min: 15.0, max: 60.0 };
const YIELD_STRESS: ParamRange = ParamRange { name: "yield_stress", min: 0.1, max: 10.0 };
const FLUID_VISCOSITY: ParamRange = ParamRange { name: "fluid_viscosity", min: 25.0, max: 200.0 };
const PLASTIC_VISCOSITY: ParamRange = ParamRange { name: "plasticity_viscosity", min: 3.0, max: 10.0 };
const SPH_VISCOSITY: ParamRange = ParamRange { name: "sph_viscosity", min: 0.0, max: 5.0 };
const SPH_TENSION: ParamRange = ParamRange { name: "sph_surface_tension", min: 0.5, max: 3.0 };

/// Published bounds for the variable material parameters.
pub const PARAMETER_RANGES: [ParamRange; 9] = [
    FRICTION,
    RESTITUTION,
    DENSITY,
    FRICTION_ANGLE,
    YIELD_STRESS,
    FLUID_VISCOSITY,
    PLASTIC_VISCOSITY,
    SPH_VISCOSITY,
    SPH_TENSION,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectClass {
    Solid,
    Interactable,
    Destructible,
    Deformable,
    Granular,
    Liquid,
}

impl ObjectClass {
    /// Classes advanced by the particle solver; the others are static.
    pub fn is_simulated(self) -> bool {
        matches!(self, Self::Deformable | Self::Granular | Self::Liquid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceProperties {
    pub dynamic_friction: f64,
    pub static_friction: f64,
    /// g/cm³.
    pub density: f64,
    pub restitution: f64,
}

/// Constitutive parameters as written in scene files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Elastic {
        youngs_modulus: f64,
        poisson_ratio: f64,
    },
    Plasticine {
        youngs_modulus: f64,
        poisson_ratio: f64,
        yield_stress: f64,
    },
    Newtonian {
        viscosity: f64,
        bulk_modulus: f64,
    },
    NonNewtonian {
        shear_modulus: f64,
        bulk_modulus: f64,
        yield_stress: f64,
        plastic_viscosity: f64,
    },
    Granular {
        youngs_modulus: f64,
        poisson_ratio: f64,
        friction_angle: f64,
    },
    /// Particle-fluid parameters; described but not simulated by the MPM solver.
    Sph {
        viscosity: f64,
        surface_tension: f64,
    },
}

impl ModelSpec {
    /// `None` for SPH parameters.
    pub fn to_model(&self) -> std::result::Result<Option<MaterialModel>, crate::constitutive::ConstitutiveError> {
        Ok(Some(match *self {
            Self::Elastic {
                youngs_modulus,
                poisson_ratio,
            } => MaterialModel::elastic(youngs_modulus, poisson_ratio)?,
            Self::Plasticine {
                youngs_modulus,
                poisson_ratio,
                yield_stress,
            } => MaterialModel::plasticine(youngs_modulus, poisson_ratio, yield_stress)?,
            Self::Newtonian {
                viscosity,
                bulk_modulus,
            } => MaterialModel::newtonian(viscosity, bulk_modulus)?,
            Self::NonNewtonian {
                shear_modulus,
                bulk_modulus,
                yield_stress,
                plastic_viscosity,
            } => MaterialModel::non_newtonian(shear_modulus, bulk_modulus, yield_stress, plastic_viscosity)?,
            Self::Granular {
                youngs_modulus,
                poisson_ratio,
                friction_angle,
            } => MaterialModel::granular(youngs_modulus, poisson_ratio, friction_angle)?,
            Self::Sph { .. } => return Ok(None),
        }))
    }

    fn fits_class(&self, class: ObjectClass) -> bool {
        match class {
            ObjectClass::Deformable => matches!(self, Self::Elastic { .. } | Self::Plasticine { .. }),
            ObjectClass::Granular => matches!(self, Self::Granular { .. }),
            ObjectClass::Liquid => matches!(self, Self::Newtonian { .. } | Self::NonNewtonian { .. } | Self::Sph { .. }),
            _ => true,
        }
    }

    /// `(field, value, range)` for every range-checked parameter.
    fn ranged(&self) -> Vec<(&'static str, f64, ParamRange)> {
        match *self {
            Self::Elastic { .. } => vec![],
            Self::Plasticine { yield_stress, .. } => vec![("yield_stress", yield_stress, YIELD_STRESS)],
            Self::Newtonian { viscosity, .. } => vec![("viscosity", viscosity, FLUID_VISCOSITY)],
            Self::NonNewtonian {
                yield_stress,
                plastic_viscosity,
                ..
            } => vec![
                ("yield_stress", yield_stress, YIELD_STRESS),
                ("plastic_viscosity", plastic_viscosity, PLASTIC_VISCOSITY),
            ],
            Self::Granular { friction_angle, .. } => vec![("friction_angle", friction_angle, FRICTION_ANGLE)],
            Self::Sph {
                viscosity,
                surface_tension,
            } => vec![("viscosity", viscosity, SPH_VISCOSITY), ("surface_tension", surface_tension, SPH_TENSION)],
        }
    }

    fn resample(&mut self, rng: &mut impl Rng) {
        match self {
            Self::Elastic { .. } => {}
            Self::Plasticine { yield_stress, .. } => *yield_stress = YIELD_STRESS.sample(rng),
            Self::Newtonian { viscosity, .. } => *viscosity = FLUID_VISCOSITY.sample(rng),
            Self::NonNewtonian {
                yield_stress,
                plastic_viscosity,
                ..
            } => {
                *yield_stress = YIELD_STRESS.sample(rng);
                *plastic_viscosity = PLASTIC_VISCOSITY.sample(rng);
            }
            Self::Granular { friction_angle, .. } => *friction_angle = FRICTION_ANGLE.sample(rng),
            Self::Sph {
                viscosity,
                surface_tension,
            } => {
                *viscosity = SPH_VISCOSITY.sample(rng);
                *surface_tension = SPH_TENSION.sample(rng);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub name: String,
    pub surface: SurfaceProperties,
    /// Required for simulated classes, ignored for static ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeSpec {
    Box { half_extents: Vec3 },
    Sphere { radius: f64 },
    /// STL or OFF file, relative to the scene file.
    Mesh { path: String },
}

fn identity_rotation() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    /// Unit quaternion `(w, x, y, z)`.
    #[serde(default = "identity_rotation")]
    pub rotation: [f64; 4],
}

impl Pose {
    pub fn rotation(&self) -> UnitQuaternion<f64> {
        let [w, x, y, z] = self.rotation;
        UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z))
    }

    pub fn to_world(&self, local: &Vec3) -> Vec3 {
        self.rotation() * local + self.position
    }

    pub fn to_local(&self, world: &Vec3) -> Vec3 {
        self.rotation().inverse() * (world - self.position)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub asset_id: String,
    pub class: ObjectClass,
    pub shape: ShapeSpec,
    pub pose: Pose,
    #[serde(default)]
    pub velocity: Vec3,
    /// Name of an entry in `materials`.
    pub material: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForceSpec {
    Wind(WindField),
    Magnet(Magnet),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraSpec {
    pub static_count: usize,
    /// Moving camera; its radius and frame count are filled in from the scene.
    pub trajectory: Option<TrajectoryConfig>,
    /// Overrides `1.5 ×` the scene's bounding-sphere radius.
    pub base_radius: Option<f64>,
    pub fov_deg: f64,
    pub width: usize,
    pub height: usize,
    /// Half-size in pixels of the square splat drawn per point.
    pub splat_radius: usize,
}

impl Default for CameraSpec {
    fn default() -> Self {
        Self {
            static_count: 4,
            trajectory: Some(TrajectoryConfig::default()),
            base_radius: None,
            fov_deg: 50.0,
            width: 64,
            height: 48,
            splat_radius: 1,
        }
    }
}

fn default_per_cell() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub id: String,
    pub activity: Activity,
    #[serde(default)]
    pub background: String,
    #[serde(default)]
    pub seed: u64,
    pub materials: Vec<MaterialSpec>,
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub forces: Vec<ForceSpec>,
    /// Static analytic colliders such as a ground plane.
    #[serde(default)]
    pub colliders: Vec<AnalyticCollider>,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub cameras: CameraSpec,
    #[serde(default = "default_per_cell")]
    pub particles_per_cell: usize,
    /// Phenomenon index to the asset ids that exhibit it.
    #[serde(default)]
    pub phenomenon_tags: BTreeMap<usize, Vec<String>>,
    /// Skips the published-range checks on material parameters.
    #[serde(default)]
    pub range_check_override: bool,
}

impl SceneSpec {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text).map_err(|e| SceneError::Json {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn material(&self, name: &str) -> Option<&MaterialSpec> {
        self.materials.iter().find(|m| m.name == name)
    }

    /// Segmentation id of object `k`.
    pub fn object_id(k: usize) -> u16 {
        (k + 1) as u16
    }

    pub fn asset_ids(&self) -> BTreeSet<&str> {
        self.objects.iter().map(|o| o.asset_id.as_str()).collect()
    }

    /// Structural, constitutive and range validation. The activity is also
    /// checked against `registry` when given.
    pub fn validate(&self, registry: Option<&PhenomenonRegistry>) -> Result<()> {
        let invalid = |m: String| Err(SceneError::Invalid(m));
        if self.id.is_empty() {
            return invalid("scene id is empty".into());
        }
        if self.objects.is_empty() {
            return invalid("scene has no objects".into());
        }
        if self.objects.len() >= u16::MAX as usize {
            return invalid("too many objects for 16-bit segmentation".into());
        }
        if self.particles_per_cell == 0 {
            return invalid("particles_per_cell must be positive".into());
        }
        let mut names = BTreeSet::new();
        for m in &self.materials {
            if !names.insert(m.name.as_str()) {
                return invalid(format!("duplicate material {:?}", m.name));
            }
            self.validate_material(m)?;
        }
        let mut assets = BTreeSet::new();
        for o in &self.objects {
            if !assets.insert(o.asset_id.as_str()) {
                return invalid(format!("duplicate asset id {:?}", o.asset_id));
            }
            let m = self.material(&o.material).ok_or_else(|| SceneError::UnknownMaterial {
                object: o.asset_id.clone(),
                material: o.material.clone(),
            })?;
            match (&m.model, o.class.is_simulated()) {
                (None, true) => {
                    return invalid(format!("{:?} object {:?} needs a material model", o.class, o.asset_id));
                }
                (Some(model), true) if !model.fits_class(o.class) => {
                    return invalid(format!("material {:?} does not fit {:?} object {:?}", m.name, o.class, o.asset_id));
                }
                _ => {}
            }
            validate_shape(&o.shape, &o.asset_id)?;
            let q = o.pose.rotation;
            let qn = q.iter().map(|c| c * c).sum::<f64>().sqrt();
            if !(qn > 1e-9) || !o.pose.position.iter().all(|c| c.is_finite()) {
                return invalid(format!("object {:?} has an invalid pose", o.asset_id));
            }
        }
        if let Some(reg) = registry {
            reg.validate_activity(&self.activity)?;
        }
        for &p in &self.activity.phenomena {
            let tagged = self
                .phenomenon_tags
                .get(&p)
                .is_some_and(|ids| ids.iter().any(|id| assets.contains(id.as_str())));
            if !tagged {
                return Err(SceneError::UntaggedPhenomenon(p));
            }
        }
        for f in &self.forces {
            match f {
                ForceSpec::Wind(w) => w.validate()?,
                ForceSpec::Magnet(m) => m.validate()?,
            }
        }
        self.sim.validate()?;
        if let Some(t) = &self.cameras.trajectory {
            t.validate()?;
        }
        if self.cameras.width == 0 || self.cameras.height == 0 || !(self.cameras.fov_deg > 0.0 && self.cameras.fov_deg < 180.0) {
            return invalid("camera raster size and field of view must be positive".into());
        }
        Ok(())
    }

    fn validate_material(&self, m: &MaterialSpec) -> Result<()> {
        let s = &m.surface;
        let checks = [
            ("dynamic_friction", s.dynamic_friction, FRICTION),
            ("static_friction", s.static_friction, FRICTION),
            ("density", s.density, DENSITY),
            ("restitution", s.restitution, RESTITUTION),
        ];
        if !(s.density > 0.0) || checks.iter().any(|c| !c.1.is_finite()) {
            return Err(SceneError::Invalid(format!("material {:?} has invalid surface properties", m.name)));
        }
        if let Some(model) = &m.model {
            model.to_model().map_err(|source| SceneError::Constitutive {
                material: m.name.clone(),
                source,
            })?;
        }
        if self.range_check_override {
            return Ok(());
        }
        let model_checks = m.model.map(|mm| mm.ranged()).unwrap_or_default();
        for (parameter, value, range) in checks.into_iter().chain(model_checks) {
            if !range.contains(value) {
                return Err(SceneError::OutOfRange {
                    material: m.name.clone(),
                    parameter,
                    value,
                    min: range.min,
                    max: range.max,
                });
            }
        }
        Ok(())
    }

    /// Centre and radius of a sphere enclosing every object.
    pub fn bounding_sphere(&self, base_dir: &Path) -> Result<(Vec3, f64)> {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for o in &self.objects {
            let geom = Geometry::load(&o.shape, base_dir, self.sim.dx)?;
            for v in geom.hull_points() {
                let w = o.pose.to_world(&v);
                lo = lo.inf(&w);
                hi = hi.sup(&w);
            }
        }
        let center = (lo + hi) * 0.5;
        Ok((center, ((hi - lo) * 0.5).norm()))
    }

    /// Static ring cameras followed by the moving camera, if any. Camera
    /// seeds derive from the scene seed.
    pub fn camera_tracks(&self, n_frames: usize, base_dir: &Path) -> Result<Vec<CameraTrack>> {
        let (center, radius) = self.bounding_sphere(base_dir)?;
        let base_radius = self.cameras.base_radius.unwrap_or(1.5 * radius).max(1e-6);
        let mut tracks: Vec<CameraTrack> = sample_static_ring(self.cameras.static_count, base_radius, center, self.seed)
            .into_iter()
            .map(CameraTrack::Static)
            .collect();
        if let Some(t) = &self.cameras.trajectory {
            let cfg = TrajectoryConfig {
                base_radius,
                n_frames: n_frames.max(2),
                seed: self.seed.wrapping_add(1),
                ..*t
            };
            tracks.push(CameraTrack::Moving(generate_trajectory(&cfg, center)?));
        }
        Ok(tracks)
    }

    /// Seeds particles for simulated objects, installs static objects as
    /// colliders and assembles the simulation.
    pub fn build(&self, base_dir: &Path) -> Result<SceneRuntime> {
        self.validate(None)?;
        let cfg = SimConfig {
            seed: self.seed,
            ..self.sim.clone()
        };
        let mut models = Vec::new();
        let mut model_index = BTreeMap::new();
        for m in &self.materials {
            if let Some(spec) = &m.model {
                let model = spec.to_model().map_err(|source| SceneError::Constitutive {
                    material: m.name.clone(),
                    source,
                })?;
                if let Some(model) = model {
                    model_index.insert(m.name.as_str(), models.len());
                    models.push(model);
                }
            }
        }
        let mut particles = ParticleSet::new();
        let mut owners = Vec::new();
        let mut objects = Vec::new();
        let mut colliders: Vec<Collider> = self.colliders.iter().copied().map(Collider::Analytic).collect();
        for (k, o) in self.objects.iter().enumerate() {
            let id = Self::object_id(k);
            let material = self.material(&o.material).expect("validated");
            let geom = Geometry::load(&o.shape, base_dir, cfg.dx)?;
            let simulated = o.class.is_simulated();
            if simulated {
                let &mid = model_index.get(material.name.as_str()).ok_or_else(|| {
                    SceneError::Invalid(format!(
                        "object {:?}: particle-fluid materials are not simulated by the MPM solver",
                        o.asset_id
                    ))
                })?;
                let (mut lo, mut hi) = (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY));
                for v in geom.hull_points() {
                    let w = o.pose.to_world(&v);
                    lo = lo.inf(&w);
                    hi = hi.sup(&w);
                }
                let region = Aabb::new(lo.sup(&cfg.domain.min), hi.inf(&cfg.domain.max));
                let seed = self.seed ^ (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                let mut set = if region.is_valid() {
                    seed_particles(&region, cfg.dx, self.particles_per_cell, material.surface.density * 1000.0, mid, seed, |p| {
                        geom.contains_local(&o.pose.to_local(p))
                    })
                } else {
                    ParticleSet::new()
                };
                if set.is_empty() {
                    return Err(SceneError::Invalid(format!("object {:?} produced no particles", o.asset_id)));
                }
                set.v.iter_mut().for_each(|v| *v = o.velocity);
                owners.extend(std::iter::repeat_n(id, set.len()));
                particles.extend(&set);
            } else {
                colliders.push(geom.collider(&o.pose, material.surface.dynamic_friction, cfg.dx)?);
            }
            objects.push(ObjectRecord {
                object_id: id,
                asset_id: o.asset_id.clone(),
                simulated,
                pose: o.pose,
                surface_points: if simulated {
                    Vec::new()
                } else {
                    geom.surface_samples(cfg.dx).iter().map(|p| o.pose.to_world(p)).collect()
                },
            });
        }
        let mut simulation = Simulation::new(cfg, particles, models)?;
        for c in colliders {
            simulation.add_collider(c);
        }
        for f in &self.forces {
            if let ForceSpec::Wind(w) = f {
                simulation.wind.push(*w);
            }
        }
        Ok(SceneRuntime {
            simulation,
            owners,
            objects,
        })
    }

    /// Scene identity used for dataset splitting.
    pub fn split_item(&self) -> super::split::SplitItem {
        super::split::SplitItem {
            id: self.id.clone(),
            assets: self.objects.iter().map(|o| o.asset_id.clone()).collect(),
            phenomena: self.activity.phenomena.clone(),
        }
    }
}

fn validate_shape(shape: &ShapeSpec, asset: &str) -> Result<()> {
    let ok = match shape {
        ShapeSpec::Box { half_extents } => half_extents.iter().all(|h| *h > 0.0 && h.is_finite()),
        ShapeSpec::Sphere { radius } => *radius > 0.0 && radius.is_finite(),
        ShapeSpec::Mesh { path } => !path.is_empty(),
    };
    if ok {
        Ok(())
    } else {
        Err(SceneError::Invalid(format!("object {asset:?} has a degenerate shape")))
    }
}

/// Object geometry in its local frame.
enum Geometry {
    Box(Vec3),
    Sphere(f64),
    Mesh { mesh: TriangleMesh, sdf: VoxelSdf },
}

impl Geometry {
    fn load(shape: &ShapeSpec, base_dir: &Path, spacing: f64) -> Result<Self> {
        Ok(match shape {
            ShapeSpec::Box { half_extents } => Self::Box(*half_extents),
            ShapeSpec::Sphere { radius } => Self::Sphere(*radius),
            ShapeSpec::Mesh { path } => {
                let mesh = load_mesh(&base_dir.join(path))?;
                let sdf = sdf_from_mesh(&mesh, spacing, 2)?;
                Self::Mesh { mesh, sdf }
            }
        })
    }

    fn contains_local(&self, p: &Vec3) -> bool {
        match self {
            Self::Box(h) => (0..3).all(|a| p[a].abs() <= h[a]),
            Self::Sphere(r) => p.norm() <= *r,
            Self::Mesh { sdf, .. } => sdf.sample(p).is_some_and(|d| d < 0.0),
        }
    }

    /// Points whose convex hull contains the shape.
    fn hull_points(&self) -> Vec<Vec3> {
        let corners = |h: Vec3| {
            (0..8)
                .map(|c| Vec3::new(if c & 1 == 0 { -h.x } else { h.x }, if c & 2 == 0 { -h.y } else { h.y }, if c & 4 == 0 { -h.z } else { h.z }))
                .collect()
        };
        match self {
            Self::Box(h) => corners(*h),
            Self::Sphere(r) => corners(Vec3::repeat(*r)),
            Self::Mesh { mesh, .. } => mesh.vertices.clone(),
        }
    }

    /// Surface points at roughly `spacing` apart.
    fn surface_samples(&self, spacing: f64) -> Vec<Vec3> {
        match self {
            Self::Box(h) => {
                let mut out = Vec::new();
                for axis in 0..3 {
                    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
                    let nu = (2.0 * h[u] / spacing).ceil().max(1.0) as usize;
                    let nv = (2.0 * h[v] / spacing).ceil().max(1.0) as usize;
                    for side in [-1.0, 1.0] {
                        for i in 0..=nu {
                            for j in 0..=nv {
                                let mut p = Vec3::zeros();
                                p[axis] = side * h[axis];
                                p[u] = -h[u] + 2.0 * h[u] * i as f64 / nu as f64;
                                p[v] = -h[v] + 2.0 * h[v] * j as f64 / nv as f64;
                                out.push(p);
                            }
                        }
                    }
                }
                out
            }
            Self::Sphere(r) => {
                let n = ((4.0 * std::f64::consts::PI * r * r) / (spacing * spacing)).ceil().max(32.0) as usize;
                let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
                (0..n)
                    .map(|i| {
                        let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                        let rho = (1.0 - z * z).sqrt();
                        let phi = golden * i as f64;
                        Vec3::new(rho * phi.cos(), rho * phi.sin(), z) * *r
                    })
                    .collect()
            }
            Self::Mesh { mesh, .. } => {
                let mut out = mesh.vertices.clone();
                for t in &mesh.triangles {
                    let [a, b, c] = mesh.corners(t);
                    let edge = (b - a).norm().max((c - a).norm());
                    let n = (edge / spacing).ceil().max(1.0) as usize;
                    for i in 0..=n {
                        for j in 0..=n - i {
                            let (s, u) = (i as f64 / n as f64, j as f64 / n as f64);
                            out.push(a + (b - a) * s + (c - a) * u);
                        }
                    }
                }
                out
            }
        }
    }

    fn collider(&self, pose: &Pose, friction: f64, spacing: f64) -> Result<Collider> {
        let mode = ContactMode::Separate;
        Ok(match self {
            Self::Sphere(r) => Collider::Analytic(AnalyticCollider {
                friction,
                ..AnalyticCollider::sphere(pose.position, *r, mode)
            }),
            Self::Box(h) => {
                let local = TriangleMesh::cuboid(-h, *h);
                Collider::Sdf(sdf_from_mesh(&transform_mesh(local, pose), spacing, 3)?.with_contact(mode, friction))
            }
            Self::Mesh { mesh, .. } => {
                Collider::Sdf(sdf_from_mesh(&transform_mesh(mesh.clone(), pose), spacing, 3)?.with_contact(mode, friction))
            }
        })
    }
}

fn transform_mesh(mut mesh: TriangleMesh, pose: &Pose) -> TriangleMesh {
    for v in &mut mesh.vertices {
        *v = pose.to_world(v);
    }
    mesh
}

/// Per-object bookkeeping of a built scene.
#[derive(Debug, Clone)]
pub struct ObjectRecord {
    pub object_id: u16,
    pub asset_id: String,
    pub simulated: bool,
    pub pose: Pose,
    /// World-space surface samples of static objects.
    pub surface_points: Vec<Vec3>,
}

/// A scene turned into a simulation plus the particle-to-object map.
#[derive(Debug, Clone)]
pub struct SceneRuntime {
    pub simulation: Simulation,
    /// Segmentation id of each particle.
    pub owners: Vec<u16>,
    pub objects: Vec<ObjectRecord>,
}

impl SceneRuntime {
    pub fn snapshot(&self) -> FrameSnapshot {
        self.snapshot_of(&self.simulation.particles).expect("owners match the live particle set")
    }

    /// Snapshot for a particle set with the same layout as the built one,
    /// such as a loaded checkpoint.
    pub fn snapshot_of(&self, particles: &ParticleSet) -> Result<FrameSnapshot> {
        if particles.len() != self.owners.len() {
            return Err(SceneError::Invalid(format!(
                "particle count {} does not match the scene's {}",
                particles.len(),
                self.owners.len()
            )));
        }
        let mut grouped: BTreeMap<u16, Vec<Vec3>> = BTreeMap::new();
        for (x, id) in particles.x.iter().zip(&self.owners) {
            grouped.entry(*id).or_default().push(*x);
        }
        let objects = self
            .objects
            .iter()
            .map(|o| {
                if o.simulated {
                    let points = grouped.remove(&o.object_id).unwrap_or_default();
                    let position = if points.is_empty() {
                        o.pose.position
                    } else {
                        points.iter().sum::<Vec3>() / points.len() as f64
                    };
                    ObjectState {
                        object_id: o.object_id,
                        position,
                        rotation: identity_rotation(),
                        points,
                    }
                } else {
                    ObjectState {
                        object_id: o.object_id,
                        position: o.pose.position,
                        rotation: o.pose.rotation,
                        points: o.surface_points.clone(),
                    }
                }
            })
            .collect();
        Ok(FrameSnapshot { objects })
    }
}

/// `n_variants` copies of `spec` with every material's surface properties and
/// ranged model parameters drawn uniformly from the published ranges.
pub fn vary_materials(spec: &SceneSpec, n_variants: usize, seed: u64) -> Vec<SceneSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_variants)
        .map(|k| {
            let mut v = spec.clone();
            v.id = format!("{}_v{:03}", spec.id, k);
            for m in &mut v.materials {
                let s = &mut m.surface;
                s.dynamic_friction = FRICTION.sample(&mut rng);
                s.static_friction = rng.random_range(s.dynamic_friction..=FRICTION.max);
                s.restitution = RESTITUTION.sample(&mut rng);
                s.density = DENSITY.sample(&mut rng);
                if let Some(model) = &mut m.model {
                    model.resample(&mut rng);
                }
            }
            v
        })
        .collect()
}

/// A bundled example: an elastic cube dropped onto a ground plane.
pub fn example_elastic_cube() -> SceneSpec {
    SceneSpec::from_json(include_str!("../../data/elastic_cube.json")).expect("bundled example parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cube() -> SceneSpec {
        example_elastic_cube()
    }

    #[test]
    fn example_is_valid() {
        let s = cube();
        s.validate(Some(&PhenomenonRegistry::builtin())).unwrap();
        let back = SceneSpec::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn range_checks_and_override() {
        let mut s = cube();
        s.materials[0].surface.restitution = 0.95;
        assert!(matches!(
            s.validate(None),
            Err(SceneError::OutOfRange { parameter: "restitution", .. })
        ));
        s.range_check_override = true;
        s.validate(None).unwrap();
    }

    #[test]
    fn poisson_error_is_named() {
        let mut s = cube();
        s.range_check_override = true;
        s.materials[0].model = Some(ModelSpec::Elastic {
            youngs_modulus: 1e4,
            poisson_ratio: 0.5,
        });
        let err = s.validate(None).unwrap_err();
        assert!(err.to_string().contains("InvalidPoisson"), "{err}");
    }

    #[test]
    fn structural_errors() {
        let mut s = cube();
        s.objects[0].material = "missing".into();
        assert!(matches!(s.validate(None), Err(SceneError::UnknownMaterial { .. })));
        let mut s = cube();
        s.phenomenon_tags.clear();
        assert!(matches!(s.validate(None), Err(SceneError::UntaggedPhenomenon(_))));
        let mut s = cube();
        s.materials[0].model = None;
        assert!(matches!(s.validate(None), Err(SceneError::Invalid(_))));
    }

    #[test]
    fn variation_basics() {
        let s = cube();
        assert!(vary_materials(&s, 0, 1).is_empty());
        let a = vary_materials(&s, 20, 5);
        assert_eq!(a, vary_materials(&s, 20, 5));
        assert_ne!(a, vary_materials(&s, 20, 6));
        for v in &a {
            assert_eq!(v.objects, s.objects);
            assert_eq!(v.activity, s.activity);
            let r = v.materials[0].surface.restitution;
            assert!((0.1..=0.8).contains(&r));
            v.validate(None).unwrap();
        }
    }

    fn every_model() -> SceneSpec {
        let mut s = cube();
        let surface = s.materials[0].surface;
        let models = [
            ModelSpec::Plasticine {
                youngs_modulus: 1e4,
                poisson_ratio: 0.3,
                yield_stress: 1.0,
            },
            ModelSpec::Newtonian {
                viscosity: 50.0,
                bulk_modulus: 1e4,
            },
            ModelSpec::NonNewtonian {
                shear_modulus: 1e3,
                bulk_modulus: 1e4,
                yield_stress: 1.0,
                plastic_viscosity: 5.0,
            },
            ModelSpec::Granular {
                youngs_modulus: 1e4,
                poisson_ratio: 0.3,
                friction_angle: 30.0,
            },
            ModelSpec::Sph {
                viscosity: 1.0,
                surface_tension: 1.0,
            },
        ];
        for (k, m) in models.into_iter().enumerate() {
            s.materials.push(MaterialSpec {
                name: format!("m{k}"),
                surface,
                model: Some(m),
            });
        }
        s
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn variation_stays_in_range(seed in any::<u64>(), n in 1usize..8) {
            for v in vary_materials(&every_model(), n, seed) {
                prop_assert!(v.validate(None).is_ok());
                for m in &v.materials {
                    prop_assert!(m.surface.static_friction >= m.surface.dynamic_friction);
                }
            }
        }
    }

    #[test]
    fn build_cube_scene() {
        let s = cube();
        let rt = s.build(Path::new(".")).unwrap();
        assert!(!rt.simulation.particles.is_empty());
        assert_eq!(rt.owners.len(), rt.simulation.particles.len());
        let snap = rt.snapshot();
        assert_eq!(snap.objects.len(), s.objects.len());
        let cube_state = &snap.objects[0];
        assert!((cube_state.position - s.objects[0].pose.position).norm() < 0.01);
        let tracks = s.camera_tracks(5, Path::new(".")).unwrap();
        assert_eq!(tracks.len(), s.cameras.static_count + 1);
    }

    #[test]
    fn static_objects_become_colliders() {
        let mut s = cube();
        s.materials.push(MaterialSpec {
            name: "wood".into(),
            surface: s.materials[0].surface,
            model: None,
        });
        s.objects.push(ObjectSpec {
            asset_id: "block".into(),
            class: ObjectClass::Solid,
            shape: ShapeSpec::Box {
                half_extents: Vec3::new(0.05, 0.05, 0.02),
            },
            pose: Pose {
                position: Vec3::new(0.3, 0.3, 0.1),
                rotation: [0.9238795, 0.0, 0.0, 0.3826834],
            },
            velocity: Vec3::zeros(),
            material: "wood".into(),
        });
        let before = cube().build(Path::new(".")).unwrap();
        let rt = s.build(Path::new(".")).unwrap();
        assert_eq!(rt.simulation.colliders().len(), before.simulation.colliders().len() + 1);
        assert_eq!(rt.simulation.particles.len(), before.simulation.particles.len());
        let block = &rt.objects[1];
        assert!(!block.simulated && !block.surface_points.is_empty());
        for p in &block.surface_points {
            let local = block.pose.to_local(p);
            assert!(local.x.abs() <= 0.05 + 1e-9 && local.y.abs() <= 0.05 + 1e-9 && local.z.abs() <= 0.02 + 1e-9);
        }
    }
}
