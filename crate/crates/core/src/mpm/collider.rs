//! Grid-velocity contact projections.

use serde::{Deserialize, Serialize};

use super::sdf::VoxelSdf;
use crate::math::Vec3;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactMode {
    Sticky,
    Slip,
    #[default]
    Separate,
}

/// Projects a node velocity against a surface with outward normal `n`.
///
/// `friction` applies Coulomb scaling `max(0, 1 − f·|v_n|/|v_t|)` to the
/// tangential part whenever a normal component was removed.
pub fn project_velocity(v: &Vec3, n: &Vec3, mode: ContactMode, friction: f64) -> Vec3 {
    let vn = v.dot(n);
    let removed = match mode {
        ContactMode::Sticky => return Vec3::zeros(),
        ContactMode::Slip => vn,
        ContactMode::Separate => vn.min(0.0),
    };
    let mut out = v - n * removed;
    if friction > 0.0 && removed != 0.0 {
        let vt = out - n * out.dot(n);
        let t = vt.norm();
        if t > 0.0 {
            let scale = (1.0 - friction * removed.abs() / t).max(0.0);
            out = out - vt + vt * scale;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticShape {
    /// Half-space below the plane is solid.
    Plane { point: Vec3, normal: Vec3 },
    /// Solid ball.
    Sphere { center: Vec3, radius: f64 },
}

impl AnalyticShape {
    pub fn distance(&self, p: &Vec3) -> f64 {
        match self {
            AnalyticShape::Plane { point, normal } => (p - point).dot(normal),
            AnalyticShape::Sphere { center, radius } => (p - center).norm() - radius,
        }
    }

    pub fn normal(&self, p: &Vec3) -> Vec3 {
        match self {
            AnalyticShape::Plane { normal, .. } => *normal,
            AnalyticShape::Sphere { center, .. } => (p - center).try_normalize(1e-300).unwrap_or_else(Vec3::z),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticCollider {
    pub shape: AnalyticShape,
    #[serde(default)]
    pub mode: ContactMode,
    #[serde(default)]
    pub friction: f64,
}

impl AnalyticCollider {
    pub fn plane(point: Vec3, normal: Vec3, mode: ContactMode) -> Self {
        Self {
            shape: AnalyticShape::Plane {
                point,
                normal: normal.normalize(),
            },
            mode,
            friction: 0.0,
        }
    }

    pub fn sphere(center: Vec3, radius: f64, mode: ContactMode) -> Self {
        Self {
            shape: AnalyticShape::Sphere { center, radius },
            mode,
            friction: 0.0,
        }
    }

    pub fn apply(&self, x: &Vec3, v: &Vec3) -> Vec3 {
        if self.shape.distance(x) > 0.0 {
            return *v;
        }
        project_velocity(v, &self.shape.normal(x), self.mode, self.friction)
    }
}

/// Any collider run by the grid update, in application order within its
/// class: analytic primitives before voxel SDFs.
#[derive(Debug, Clone, PartialEq)]
pub enum Collider {
    Analytic(AnalyticCollider),
    Sdf(VoxelSdf),
}

impl Collider {
    fn rank(&self) -> u8 {
        match self {
            Collider::Analytic(_) => 0,
            Collider::Sdf(_) => 1,
        }
    }

    pub fn apply(&self, x: &Vec3, v: &Vec3) -> Vec3 {
        match self {
            Collider::Analytic(c) => c.apply(x, v),
            Collider::Sdf(s) => s.apply(x, v),
        }
    }
}

/// Stable sort putting analytic colliders before SDFs.
pub fn order_colliders(colliders: &mut [Collider]) {
    colliders.sort_by_key(Collider::rank);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contact_mode_examples() {
        let n = Vec3::z();
        let down = Vec3::new(0.0, 0.0, -1.0);
        assert_eq!(project_velocity(&down, &n, ContactMode::Sticky, 0.0), Vec3::zeros());
        assert_eq!(project_velocity(&down, &n, ContactMode::Slip, 0.0), Vec3::zeros());
        assert_eq!(
            project_velocity(&Vec3::new(1.0, 0.0, -1.0), &n, ContactMode::Slip, 0.0),
            Vec3::new(1.0, 0.0, 0.0)
        );
        assert_eq!(project_velocity(&Vec3::z(), &n, ContactMode::Separate, 0.0), Vec3::z());
        assert_eq!(project_velocity(&Vec3::z(), &n, ContactMode::Slip, 0.0), Vec3::zeros());
    }

    #[test]
    fn coulomb_friction_scales_tangent() {
        let n = Vec3::z();
        let v = Vec3::new(2.0, 0.0, -1.0);
        let r = project_velocity(&v, &n, ContactMode::Separate, 0.5);
        assert!((r - Vec3::new(1.5, 0.0, 0.0)).norm() < 1e-15);
        let stuck = project_velocity(&v, &n, ContactMode::Slip, 5.0);
        assert_eq!(stuck, Vec3::zeros());
        // Departing nodes feel no friction in separate mode.
        let up = Vec3::new(2.0, 0.0, 1.0);
        assert_eq!(project_velocity(&up, &n, ContactMode::Separate, 0.5), up);
    }

    #[test]
    fn analytic_colliders_only_act_inside() {
        let floor = AnalyticCollider::plane(Vec3::zeros(), Vec3::z(), ContactMode::Sticky);
        let v = Vec3::new(1.0, 1.0, -1.0);
        assert_eq!(floor.apply(&Vec3::new(0.0, 0.0, 0.1), &v), v);
        assert_eq!(floor.apply(&Vec3::new(0.0, 0.0, -0.1), &v), Vec3::zeros());
        let ball = AnalyticCollider::sphere(Vec3::zeros(), 1.0, ContactMode::Slip);
        let r = ball.apply(&Vec3::new(0.9, 0.0, 0.0), &Vec3::new(-1.0, 1.0, 0.0));
        assert!((r - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
    }
}
