//! Analytic force and ray models: magnetic dipoles, wind fields, laser
//! reflection and the SPH pressure/viscosity force kernels.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForceError {
    #[error("field evaluated within 1e-9 m of a pole at {0:?}")]
    PoleSingularity([f64; 3]),
    #[error("ray direction {d:?} is not incident on normal {n:?}")]
    NonIncident { d: [f64; 3], n: [f64; 3] },
    #[error("particle density must be positive, got {0}")]
    ZeroDensity(f64),
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, ForceError>;

const POLE_EPS: f64 = 1e-9;

/// Bar magnet described by its two poles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Magnet {
    pub pole_n: Vec3,
    pub pole_s: Vec3,
    /// Linear force scale applied to sampled field values.
    pub strength: f64,
    pub center_of_mass: Vec3,
}

impl Magnet {
    pub fn new(pole_n: Vec3, pole_s: Vec3, strength: f64) -> Result<Self> {
        let m = Self {
            pole_n,
            pole_s,
            strength,
            center_of_mass: (pole_n + pole_s) * 0.5,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if (self.pole_n - self.pole_s).norm() <= POLE_EPS {
            return Err(ForceError::InvalidParameter {
                name: "magnet",
                reason: "poles coincide".into(),
            });
        }
        if !(self.strength > 0.0) {
            return Err(ForceError::InvalidParameter {
                name: "magnet",
                reason: format!("strength {} must be positive", self.strength),
            });
        }
        Ok(())
    }

    /// Unit vector from S to N.
    pub fn axis(&self) -> Vec3 {
        (self.pole_n - self.pole_s).normalize()
    }
}

/// `B(p) = r_N/‖r_N‖³ − r_S/‖r_S‖³` with `r = p − pole`.
pub fn dipole_field(p: &Vec3, magnet: &Magnet) -> Result<Vec3> {
    let r_n = p - magnet.pole_n;
    let r_s = p - magnet.pole_s;
    let (dn, ds) = (r_n.norm(), r_s.norm());
    if dn <= POLE_EPS || ds <= POLE_EPS {
        return Err(ForceError::PoleSingularity([p.x, p.y, p.z]));
    }
    Ok(r_n / (dn * dn * dn) - r_s / (ds * ds * ds))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    pub force: Vec3,
    pub torque: Vec3,
}

/// Force and torque (about the target's centre of mass) exerted by the
/// field of `source` on the poles of `target`.
pub fn magnet_wrench(source: &Magnet, target: &Magnet) -> Result<Wrench> {
    let mut force = Vec3::zeros();
    let mut torque = Vec3::zeros();
    for (pole, sign) in [(target.pole_n, 1.0), (target.pole_s, -1.0)] {
        let f = sign * target.strength * dipole_field(&pole, source)?;
        force += f;
        torque += (pole - target.center_of_mass).cross(&f);
    }
    Ok(Wrench { force, torque })
}

/// Rectangular wind region blowing along `direction` from a source plane.
///
/// The force magnitude is `F₀ (1 − (s/L)²)` at depth `s ∈ [0, L]` along the
/// direction, and zero outside the box. The field is continuous at the far
/// end and jumps to zero across the lateral faces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindField {
    /// Centre of the source plane.
    pub origin: Vec3,
    pub direction: Vec3,
    pub length: f64,
    /// Half-widths of the cross-section along `lateral_axes()`.
    pub half_widths: [f64; 2],
    pub peak_force: f64,
}

impl WindField {
    pub fn new(origin: Vec3, direction: Vec3, length: f64, half_widths: [f64; 2], peak_force: f64) -> Result<Self> {
        let n = direction.norm();
        if !(n > 0.0) {
            return Err(ForceError::InvalidParameter {
                name: "wind.direction",
                reason: "zero vector".into(),
            });
        }
        let w = Self {
            origin,
            direction: direction / n,
            length,
            half_widths,
            peak_force,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if (self.direction.norm() - 1.0).abs() > 1e-9 {
            return Err(ForceError::InvalidParameter {
                name: "wind.direction",
                reason: "must be a unit vector".into(),
            });
        }
        if !(self.length > 0.0) || !(self.peak_force >= 0.0) || self.half_widths.iter().any(|h| !(*h > 0.0)) {
            return Err(ForceError::InvalidParameter {
                name: "wind",
                reason: "length and half-widths must be positive, peak force non-negative".into(),
            });
        }
        Ok(())
    }

    /// Two unit vectors spanning the source plane. The first is horizontal
    /// (perpendicular to world z) unless the wind blows vertically.
    pub fn lateral_axes(&self) -> (Vec3, Vec3) {
        let d = self.direction;
        let helper = if d.z.abs() < 0.9 { Vec3::z() } else { Vec3::x() };
        let a = helper.cross(&d).normalize();
        (a, d.cross(&a))
    }
}

pub fn wind_force(field: &WindField, p: &Vec3) -> Vec3 {
    let rel = p - field.origin;
    let s = rel.dot(&field.direction);
    if !(0.0..=field.length).contains(&s) {
        return Vec3::zeros();
    }
    let (a, b) = field.lateral_axes();
    if rel.dot(&a).abs() > field.half_widths[0] || rel.dot(&b).abs() > field.half_widths[1] {
        return Vec3::zeros();
    }
    let x = s / field.length;
    field.direction * (field.peak_force * (1.0 - x * x))
}

/// Mirror reflection `r = d − 2(d·n)n` of an incident unit direction.
pub fn reflect_ray(d: &Vec3, n: &Vec3) -> Result<Vec3> {
    let dn = d.dot(n);
    if !(dn < 0.0) {
        return Err(ForceError::NonIncident {
            d: [d.x, d.y, d.z],
            n: [n.x, n.y, n.z],
        });
    }
    Ok(d - n * (2.0 * dn))
}

/// Something a laser can hit: a signed distance with an outward normal.
pub trait Surface {
    fn distance(&self, p: &Vec3) -> f64;

    /// Outward normal, by central differences unless overridden.
    fn normal(&self, p: &Vec3) -> Vec3 {
        let h = 1e-6;
        let g = Vec3::new(
            self.distance(&(p + Vec3::x() * h)) - self.distance(&(p - Vec3::x() * h)),
            self.distance(&(p + Vec3::y() * h)) - self.distance(&(p - Vec3::y() * h)),
            self.distance(&(p + Vec3::z() * h)) - self.distance(&(p - Vec3::z() * h)),
        );
        g.try_normalize(1e-300).unwrap_or_else(Vec3::z)
    }
}

pub struct PlaneSurface {
    pub point: Vec3,
    pub normal: Vec3,
}

impl Surface for PlaneSurface {
    fn distance(&self, p: &Vec3) -> f64 {
        (p - self.point).dot(&self.normal)
    }

    fn normal(&self, _p: &Vec3) -> Vec3 {
        self.normal
    }
}

pub struct SphereSurface {
    pub center: Vec3,
    pub radius: f64,
}

impl Surface for SphereSurface {
    fn distance(&self, p: &Vec3) -> f64 {
        (p - self.center).norm() - self.radius
    }

    fn normal(&self, p: &Vec3) -> Vec3 {
        (p - self.center).try_normalize(1e-300).unwrap_or_else(Vec3::z)
    }
}

/// A scene surface and whether it reflects the beam.
pub struct LaserTarget<'a> {
    pub surface: &'a dyn Surface,
    pub mirror: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BeamEnd {
    /// Absorbed by a non-mirror surface at the last vertex.
    Blocked,
    /// Left the scene after travelling `max_distance`.
    Escaped,
    /// Stopped after the bounce limit.
    BounceLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaserPath {
    /// Beam vertices: origin, every hit point, and the escape point.
    pub vertices: Vec<Vec3>,
    pub end: BeamEnd,
}

pub const MAX_LASER_BOUNCES: usize = 16;

/// Sphere-traces a beam through `targets`, reflecting on mirrors.
pub fn trace_laser(origin: Vec3, direction: Vec3, targets: &[LaserTarget<'_>], max_distance: f64) -> LaserPath {
    const HIT_EPS: f64 = 1e-7;
    const MAX_MARCH: usize = 10_000;

    let mut vertices = vec![origin];
    let mut p = origin;
    let mut d = direction.normalize();
    let mut travelled = 0.0;
    let mut bounces = 0;
    // Surface just left; ignored until the beam has moved off it.
    let mut skip: Option<usize> = None;

    for _ in 0..MAX_MARCH {
        let mut nearest = (f64::INFINITY, usize::MAX);
        for (i, t) in targets.iter().enumerate() {
            let dist = t.surface.distance(&p).abs();
            if skip == Some(i) && dist < 10.0 * HIT_EPS {
                continue;
            }
            if dist < nearest.0 {
                nearest = (dist, i);
            }
        }
        if nearest.1 == usize::MAX {
            break;
        }
        let (dist, idx) = nearest;
        if dist < HIT_EPS {
            vertices.push(p);
            let target = &targets[idx];
            if !target.mirror {
                return LaserPath { vertices, end: BeamEnd::Blocked };
            }
            if bounces == MAX_LASER_BOUNCES {
                return LaserPath { vertices, end: BeamEnd::BounceLimit };
            }
            let mut n = target.surface.normal(&p);
            if d.dot(&n) > 0.0 {
                n = -n;
            }
            d = match reflect_ray(&d, &n) {
                Ok(r) => r.normalize(),
                Err(_) => d,
            };
            bounces += 1;
            skip = Some(idx);
            p += d * (20.0 * HIT_EPS);
            continue;
        }
        if skip.is_some_and(|s| targets[s].surface.distance(&p).abs() >= 10.0 * HIT_EPS) {
            skip = None;
        }
        let step = dist.min(max_distance - travelled);
        p += d * step;
        travelled += step;
        if travelled >= max_distance {
            break;
        }
    }
    vertices.push(p);
    LaserPath { vertices, end: BeamEnd::Escaped }
}

/// One particle as seen by the SPH force kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphParticleView {
    pub mass: f64,
    pub density: f64,
    pub pressure: f64,
    pub velocity: Vec3,
    pub position: Vec3,
    pub smoothing_length: f64,
}

/// Gradient of the spiky kernel, `−45/(π h⁶) (h − r)² r̂` for `0 < r < h`.
pub fn spiky_gradient(r: &Vec3, h: f64) -> Vec3 {
    let len = r.norm();
    if len <= 0.0 || len >= h {
        return Vec3::zeros();
    }
    let coef = -45.0 / (std::f64::consts::PI * h.powi(6)) * (h - len).powi(2);
    r * (coef / len)
}

/// Laplacian of the viscosity kernel, `45/(π h⁶) (h − r)` for `r < h`.
pub fn viscosity_laplacian(r: &Vec3, h: f64) -> f64 {
    let len = r.norm();
    if len >= h {
        return 0.0;
    }
    45.0 / (std::f64::consts::PI * h.powi(6)) * (h - len)
}

fn check_density(p: &SphParticleView) -> Result<()> {
    if p.density > 0.0 {
        Ok(())
    } else {
        Err(ForceError::ZeroDensity(p.density))
    }
}

/// `F_i = −Σ_j m_i m_j (p_i + p_j)/(2 ρ_i ρ_j) ∇W(r_ij, h)`.
pub fn sph_pressure_force(i: &SphParticleView, neighbors: &[SphParticleView]) -> Result<Vec3> {
    check_density(i)?;
    let mut f = Vec3::zeros();
    for j in neighbors {
        check_density(j)?;
        let r = i.position - j.position;
        let coef = i.mass * j.mass * (i.pressure + j.pressure) / (2.0 * i.density * j.density);
        f -= spiky_gradient(&r, i.smoothing_length) * coef;
    }
    Ok(f)
}

/// `F_i = Σ_j (μ/2) (v_j − v_i)/(ρ_i + ρ_j) ∇²W(r_ij, h)`, dissipative for
/// the positive viscosity-kernel Laplacian.
pub fn sph_viscous_force(i: &SphParticleView, neighbors: &[SphParticleView], mu: f64) -> Result<Vec3> {
    check_density(i)?;
    let mut f = Vec3::zeros();
    for j in neighbors {
        check_density(j)?;
        let lap = viscosity_laplacian(&(i.position - j.position), i.smoothing_length);
        f += (j.velocity - i.velocity) * (0.5 * mu * lap / (i.density + j.density));
    }
    Ok(f)
}
