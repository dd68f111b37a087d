//! Quadratic B-spline interpolation stencil.

use crate::math::Vec3;

/// `w(r)` for the quadratic B-spline with support `|r| < 3/2`.
pub fn quadratic_bspline(r: f64) -> f64 {
    let a = r.abs();
    if a < 0.5 {
        0.75 - a * a
    } else if a < 1.5 {
        0.5 * (1.5 - a) * (1.5 - a)
    } else {
        0.0
    }
}

/// The 3×3×3 node stencil of one particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    /// Lowest node index touched on each axis.
    pub base: [i64; 3],
    /// Per-axis weights of nodes `base + k`, `k = 0, 1, 2`.
    pub weights: [[f64; 3]; 3],
    /// Particle position in cell units relative to `base`.
    pub fx: Vec3,
}

impl Stencil {
    /// Stencil for `x` on a grid with the given origin and spacing.
    pub fn new(x: &Vec3, origin: &Vec3, dx: f64) -> Self {
        let mut base = [0i64; 3];
        let mut fx = Vec3::zeros();
        let mut weights = [[0.0; 3]; 3];
        for a in 0..3 {
            let g = (x[a] - origin[a]) / dx;
            let b = (g - 0.5).floor();
            let f = g - b;
            base[a] = b as i64;
            fx[a] = f;
            weights[a] = [
                0.5 * (1.5 - f) * (1.5 - f),
                0.75 - (f - 1.0) * (f - 1.0),
                0.5 * (f - 0.5) * (f - 0.5),
            ];
        }
        Self { base, weights, fx }
    }

    /// Visits the 27 nodes as `(offset, weight, x_i − x_p)`.
    #[inline]
    pub fn for_each(&self, dx: f64, mut f: impl FnMut([usize; 3], f64, Vec3)) {
        for i in 0..3 {
            for j in 0..3 {
                let wij = self.weights[0][i] * self.weights[1][j];
                for k in 0..3 {
                    let w = wij * self.weights[2][k];
                    let dpos = Vec3::new(
                        (i as f64 - self.fx.x) * dx,
                        (j as f64 - self.fx.y) * dx,
                        (k as f64 - self.fx.z) * dx,
                    );
                    f([i, j, k], w, dpos);
                }
            }
        }
    }
}

/// APIC inertia inverse `D⁻¹ = 4/dx²` for quadratic splines.
pub fn apic_d_inv(dx: f64) -> f64 {
    4.0 / (dx * dx)
}
