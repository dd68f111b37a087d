//! Voxel signed distance fields and mesh voxelization.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::collider::{project_velocity, ContactMode};
use super::mesh::TriangleMesh;
use super::{MpmError, Result};
use crate::math::Vec3;

/// Fraction of voxels whose per-axis parity votes may disagree before a
/// mesh is rejected as not watertight.
pub const MAX_PARITY_DISAGREEMENT: f64 = 1e-3;

pub const SDF_MAGIC: &[u8; 4] = b"PIOF";
pub const SDF_VERSION: u32 = 1;

/// Signed distances (negative inside) sampled at the nodes of a regular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelSdf {
    pub origin: Vec3,
    pub spacing: f64,
    /// Node counts per axis.
    pub dims: [usize; 3],
    pub distance: Vec<f64>,
    pub normals: Vec<Vec3>,
    pub contact_mode: ContactMode,
    pub friction: f64,
}

impl VoxelSdf {
    /// Samples `f` at every node and derives normals.
    pub fn from_fn(origin: Vec3, spacing: f64, dims: [usize; 3], f: impl Fn(&Vec3) -> f64 + Sync) -> Result<Self> {
        check_grid(spacing, dims)?;
        let n = dims[0] * dims[1] * dims[2];
        let distance: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|idx| f(&node_position(&origin, spacing, dims, idx)))
            .collect();
        Self::from_distances(origin, spacing, dims, distance)
    }

    pub fn from_distances(origin: Vec3, spacing: f64, dims: [usize; 3], distance: Vec<f64>) -> Result<Self> {
        check_grid(spacing, dims)?;
        if distance.len() != dims[0] * dims[1] * dims[2] {
            return Err(MpmError::InvalidConfig(format!(
                "SDF has {} values for dims {dims:?}",
                distance.len()
            )));
        }
        let mut sdf = Self {
            origin,
            spacing,
            dims,
            distance,
            normals: Vec::new(),
            contact_mode: ContactMode::default(),
            friction: 0.0,
        };
        sdf.normals = sdf.gradient_normals();
        Ok(sdf)
    }

    pub fn with_contact(mut self, mode: ContactMode, friction: f64) -> Self {
        self.contact_mode = mode;
        self.friction = friction;
        self
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64, j as f64, k as f64) * self.spacing
    }

    pub fn len(&self) -> usize {
        self.distance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distance.is_empty()
    }

    fn gradient_normals(&self) -> Vec<Vec3> {
        let [nx, ny, nz] = self.dims;
        let d = |i: usize, j: usize, k: usize| self.distance[self.index(i, j, k)];
        let diff = |lo: usize, hi: usize, f: &dyn Fn(usize) -> f64| (f(hi) - f(lo)) / ((hi - lo) as f64 * self.spacing);
        (0..self.len())
            .into_par_iter()
            .map(|idx| {
                let (i, j, k) = (idx % nx, idx / nx % ny, idx / (nx * ny));
                let span = |c: usize, n: usize| (c.saturating_sub(1), (c + 1).min(n - 1));
                let g = Vec3::new(
                    if nx > 1 { let (a, b) = span(i, nx); diff(a, b, &|c| d(c, j, k)) } else { 0.0 },
                    if ny > 1 { let (a, b) = span(j, ny); diff(a, b, &|c| d(i, c, k)) } else { 0.0 },
                    if nz > 1 { let (a, b) = span(k, nz); diff(a, b, &|c| d(i, j, c)) } else { 0.0 },
                );
                g.try_normalize(1e-300).unwrap_or_else(Vec3::zeros)
            })
            .collect()
    }

    /// Trilinear corner indices and weights, or `None` outside the grid.
    fn trilinear(&self, p: &Vec3) -> Option<[(usize, f64); 8]> {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let g = (p[a] - self.origin[a]) / self.spacing;
            let last = (self.dims[a] - 1) as f64;
            if !(g >= 0.0 && g <= last) {
                return None;
            }
            let b = g.floor().min((last - 1.0).max(0.0));
            base[a] = b as usize;
            frac[a] = g - b;
        }
        let mut out = [(0usize, 0.0); 8];
        for (c, slot) in out.iter_mut().enumerate() {
            let o = [c & 1, (c >> 1) & 1, (c >> 2) & 1];
            let mut w = 1.0;
            let mut ijk = [0usize; 3];
            for a in 0..3 {
                ijk[a] = (base[a] + o[a]).min(self.dims[a] - 1);
                w *= if o[a] == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            *slot = (self.index(ijk[0], ijk[1], ijk[2]), w);
        }
        Some(out)
    }

    /// Trilinearly interpolated distance; `None` outside the grid.
    pub fn sample(&self, p: &Vec3) -> Option<f64> {
        self.trilinear(p).map(|c| c.iter().map(|&(i, w)| w * self.distance[i]).sum())
    }

    /// Interpolated unit normal; `None` outside the grid or where it vanishes.
    pub fn normal_at(&self, p: &Vec3) -> Option<Vec3> {
        let c = self.trilinear(p)?;
        c.iter()
            .fold(Vec3::zeros(), |acc, &(i, w)| acc + self.normals[i] * w)
            .try_normalize(1e-12)
    }

    /// Contact projection of a node velocity at `x`.
    pub fn apply(&self, x: &Vec3, v: &Vec3) -> Vec3 {
        match self.sample(x) {
            Some(d) if d <= 0.0 => match self.normal_at(x) {
                Some(n) => project_velocity(v, &n, self.contact_mode, self.friction),
                None => *v,
            },
            _ => *v,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_grid(self.spacing, self.dims)?;
        if self.distance.len() != self.len() || self.normals.len() != self.len() {
            return Err(MpmError::InvalidConfig("SDF field lengths differ".into()));
        }
        if let Some(i) = self.distance.iter().position(|d| !d.is_finite()) {
            return Err(MpmError::NonFinite { index: i });
        }
        Ok(())
    }

    /// Binary form: magic, version, dims, origin, spacing, then the
    /// distances as little-endian `f32`.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(48 + 4 * self.len());
        out.extend_from_slice(SDF_MAGIC);
        out.extend_from_slice(&SDF_VERSION.to_le_bytes());
        for d in self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for c in self.origin.iter() {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out.extend_from_slice(&self.spacing.to_le_bytes());
        for d in &self.distance {
            out.extend_from_slice(&(*d as f32).to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| MpmError::MalformedCheckpoint(m.to_string());
        if bytes.len() < 52 || &bytes[..4] != SDF_MAGIC {
            return Err(bad("missing SDF magic"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
        if u32_at(4) != SDF_VERSION {
            return Err(bad("unsupported SDF version"));
        }
        let dims = [u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize];
        let origin = Vec3::new(f64_at(20), f64_at(28), f64_at(36));
        let spacing = f64_at(44);
        let n = dims.iter().product::<usize>();
        if bytes.len() != 52 + 4 * n {
            return Err(bad("SDF payload length does not match dims"));
        }
        let distance = bytes[52..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect();
        Self::from_distances(origin, spacing, dims, distance)
    }
}

fn check_grid(spacing: f64, dims: [usize; 3]) -> Result<()> {
    if !(spacing > 0.0 && spacing.is_finite()) || dims.contains(&0) {
        return Err(MpmError::InvalidConfig(format!(
            "SDF grid needs positive spacing and dims, got {spacing} and {dims:?}"
        )));
    }
    Ok(())
}

fn node_position(origin: &Vec3, spacing: f64, dims: [usize; 3], idx: usize) -> Vec3 {
    let (i, j, k) = (idx % dims[0], idx / dims[0] % dims[1], idx / (dims[0] * dims[1]));
    origin + Vec3::new(i as f64, j as f64, k as f64) * spacing
}

/// Closest point to `p` on triangle `abc`.
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Crossings of the axis-parallel line `{x_b = u, x_c = w}` with the mesh,
/// as sorted coordinates along axis `a`.
fn line_crossings(mesh: &TriangleMesh, axis: usize, u: f64, w: f64) -> Vec<f64> {
    let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
    let mut hits = Vec::new();
    for t in &mesh.triangles {
        let [p0, p1, p2] = mesh.corners(t);
        let (x0, y0) = (p0[b] - u, p0[c] - w);
        let (x1, y1) = (p1[b] - u, p1[c] - w);
        let (x2, y2) = (p2[b] - u, p2[c] - w);
        // Signed areas of the sub-triangles around the line in the projection.
        let e0 = x1 * y2 - x2 * y1;
        let e1 = x2 * y0 - x0 * y2;
        let e2 = x0 * y1 - x1 * y0;
        let pos = e0 > 0.0 && e1 > 0.0 && e2 > 0.0;
        let neg = e0 < 0.0 && e1 < 0.0 && e2 < 0.0;
        if !(pos || neg) {
            continue;
        }
        let s = e0 + e1 + e2;
        hits.push((e0 * p0[axis] + e1 * p1[axis] + e2 * p2[axis]) / s);
    }
    hits.sort_by(f64::total_cmp);
    hits
}

/// Voxelizes a closed mesh.
///
/// The grid covers the mesh bounds plus `padding` cells on each side.
/// Inside/outside is decided by majority vote of parity ray casts along the
/// three axes; magnitudes are exact distances to the nearest triangle.
pub fn sdf_from_mesh(mesh: &TriangleMesh, spacing: f64, padding: usize) -> Result<VoxelSdf> {
    mesh.validate()?;
    if !(spacing > 0.0) {
        return Err(MpmError::InvalidConfig(format!("SDF spacing must be positive, got {spacing}")));
    }
    let (lo, hi) = mesh.bounds();
    let origin = lo - Vec3::repeat(padding as f64 * spacing);
    let dims = [0, 1, 2].map(|a| ((hi[a] - lo[a]) / spacing).ceil() as usize + 2 * padding + 1);
    let n = dims[0] * dims[1] * dims[2];

    // Tiny irrational offsets keep rays off edges and vertices of meshes
    // that are aligned with the grid.
    let jitter = [0.7071067811865476e-6, 0.5773502691896258e-6].map(|j| j * spacing);
    let mut votes = vec![0u8; n];
    let mut inside_count = vec![0u8; n];
    for axis in 0..3 {
        let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
        let lines: Vec<(usize, usize)> = (0..dims[c]).flat_map(|q| (0..dims[b]).map(move |p| (p, q))).collect();
        let per_line: Vec<Vec<bool>> = lines
            .par_iter()
            .map(|&(p, q)| {
                let u = origin[b] + p as f64 * spacing + jitter[0];
                let w = origin[c] + q as f64 * spacing + jitter[1];
                let hits = line_crossings(mesh, axis, u, w);
                (0..dims[axis])
                    .map(|s| {
                        let x = origin[axis] + s as f64 * spacing;
                        let beyond = hits.len() - hits.partition_point(|&h| h <= x);
                        beyond % 2 == 1
                    })
                    .collect()
            })
            .collect();
        for (&(p, q), inside) in lines.iter().zip(per_line) {
            for (s, is_in) in inside.into_iter().enumerate() {
                let mut ijk = [0usize; 3];
                ijk[axis] = s;
                ijk[b] = p;
                ijk[c] = q;
                let idx = (ijk[2] * dims[1] + ijk[1]) * dims[0] + ijk[0];
                votes[idx] += 1;
                inside_count[idx] += is_in as u8;
            }
        }
    }
    debug_assert!(votes.iter().all(|&v| v == 3));

    let tris: Vec<[Vec3; 3]> = mesh.triangles.iter().map(|t| mesh.corners(t)).collect();
    let unsigned: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|idx| {
            let p = node_position(&origin, spacing, dims, idx);
            tris.iter()
                .map(|[a, b, c]| (closest_point_on_triangle(&p, a, b, c) - p).norm_squared())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect();

    // Nodes on the surface itself legitimately split their votes.
    let on_surface = 1e-4 * spacing;
    let disagreements = inside_count
        .iter()
        .zip(&unsigned)
        .filter(|&(&c, &d)| (c == 1 || c == 2) && d > on_surface)
        .count();
    let fraction = disagreements as f64 / n as f64;
    if fraction > MAX_PARITY_DISAGREEMENT {
        return Err(MpmError::NonWatertight { fraction });
    }
    let distance = unsigned
        .into_iter()
        .zip(&inside_count)
        .map(|(d, &c)| if c >= 2 { -d } else { d })
        .collect();
    VoxelSdf::from_distances(origin, spacing, dims, distance)
}
