//! Triangle meshes and STL/OFF ingestion.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{MpmError, Result};
use crate::math::Vec3;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let m = Self { vertices, triangles };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.triangles.is_empty() {
            return Err(MpmError::DegenerateMesh("mesh has no triangles".into()));
        }
        if self.vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(MpmError::DegenerateMesh("non-finite vertex".into()));
        }
        if let Some(t) = self.triangles.iter().find(|t| t.iter().any(|&i| i >= self.vertices.len())) {
            return Err(MpmError::DegenerateMesh(format!("triangle {t:?} indexes past the vertex list")));
        }
        if self.triangles.iter().all(|t| self.triangle_area(t) <= 0.0) {
            return Err(MpmError::DegenerateMesh("all triangles have zero area".into()));
        }
        Ok(())
    }

    pub fn corners(&self, t: &[usize; 3]) -> [Vec3; 3] {
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    fn triangle_area(&self, t: &[usize; 3]) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn translated(mut self, offset: Vec3) -> Self {
        for v in &mut self.vertices {
            *v += offset;
        }
        self
    }

    /// Axis-aligned box with outward-facing triangles.
    pub fn cuboid(min: Vec3, max: Vec3) -> Self {
        let vertices = (0..8)
            .map(|i| {
                Vec3::new(
                    if i & 1 == 0 { min.x } else { max.x },
                    if i & 2 == 0 { min.y } else { max.y },
                    if i & 4 == 0 { min.z } else { max.z },
                )
            })
            .collect();
        let triangles = vec![
            [0, 2, 1], [1, 2, 3], // -z
            [4, 5, 6], [5, 7, 6], // +z
            [0, 1, 4], [1, 5, 4], // -y
            [2, 6, 3], [3, 6, 7], // +y
            [0, 4, 2], [2, 4, 6], // -x
            [1, 3, 5], [3, 7, 5], // +x
        ];
        Self { vertices, triangles }
    }

    /// Geodesic sphere from a subdivided icosahedron.
    pub fn icosphere(center: Vec3, radius: f64, subdivisions: usize) -> Self {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut vertices: Vec<Vec3> = [
            (-1.0, t, 0.0), (1.0, t, 0.0), (-1.0, -t, 0.0), (1.0, -t, 0.0),
            (0.0, -1.0, t), (0.0, 1.0, t), (0.0, -1.0, -t), (0.0, 1.0, -t),
            (t, 0.0, -1.0), (t, 0.0, 1.0), (-t, 0.0, -1.0), (-t, 0.0, 1.0),
        ]
        .iter()
        .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
        .collect();
        let mut triangles: Vec<[usize; 3]> = vec![
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ];
        for _ in 0..subdivisions {
            let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
            let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| {
                *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                    verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                    verts.len() - 1
                })
            };
            let mut next = Vec::with_capacity(triangles.len() * 4);
            for [a, b, c] in triangles {
                let ab = mid(a, b, &mut vertices);
                let bc = mid(b, c, &mut vertices);
                let ca = mid(c, a, &mut vertices);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            triangles = next;
        }
        let vertices = vertices.into_iter().map(|v| center + v * radius).collect();
        Self { vertices, triangles }
    }

    /// ASCII STL text.
    pub fn to_ascii_stl(&self) -> String {
        let mut s = String::from("solid mesh\n");
        for t in &self.triangles {
            let [a, b, c] = self.corners(t);
            let n = (b - a).cross(&(c - a)).try_normalize(0.0).unwrap_or_else(Vec3::zeros);
            s += &format!("  facet normal {} {} {}\n    outer loop\n", n.x, n.y, n.z);
            for p in [a, b, c] {
                s += &format!("      vertex {} {} {}\n", p.x, p.y, p.z);
            }
            s += "    endloop\n  endfacet\n";
        }
        s + "endsolid mesh\n"
    }

    pub fn to_off(&self) -> String {
        let mut s = format!("OFF\n{} {} 0\n", self.vertices.len(), self.triangles.len());
        for v in &self.vertices {
            s += &format!("{} {} {}\n", v.x, v.y, v.z);
        }
        for t in &self.triangles {
            s += &format!("3 {} {} {}\n", t[0], t[1], t[2]);
        }
        s
    }
}

/// Merges bit-identical vertices of a triangle soup.
fn weld(soup: Vec<[Vec3; 3]>) -> Result<TriangleMesh> {
    let mut index: HashMap<[u64; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::with_capacity(soup.len());
    for tri in soup {
        let ids = tri.map(|p| {
            *index.entry([p.x.to_bits(), p.y.to_bits(), p.z.to_bits()]).or_insert_with(|| {
                vertices.push(p);
                vertices.len() - 1
            })
        });
        triangles.push(ids);
    }
    TriangleMesh::new(vertices, triangles)
}

fn malformed(msg: impl Into<String>) -> MpmError {
    MpmError::MalformedMesh(msg.into())
}

/// Parses ASCII or binary STL.
pub fn parse_stl(bytes: &[u8]) -> Result<TriangleMesh> {
    let is_binary = bytes.len() >= 84 && {
        let n = u32::from_le_bytes(bytes[80..84].try_into().expect("4 bytes")) as usize;
        bytes.len() == 84 + 50 * n
    };
    if is_binary {
        let n = (bytes.len() - 84) / 50;
        let soup = (0..n)
            .map(|i| {
                let rec = &bytes[84 + 50 * i..84 + 50 * (i + 1)];
                let f = |k: usize| f32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().expect("4 bytes")) as f64;
                [1, 2, 3].map(|v| Vec3::new(f(3 * v), f(3 * v + 1), f(3 * v + 2)))
            })
            .collect();
        return weld(soup);
    }
    let text = std::str::from_utf8(bytes).map_err(|_| malformed("STL is neither binary nor UTF-8 text"))?;
    let mut soup = Vec::new();
    let mut current = Vec::with_capacity(3);
    for line in text.lines() {
        let mut it = line.split_whitespace();
        if it.next() != Some("vertex") {
            continue;
        }
        let coords: Vec<f64> = it
            .map(|s| s.parse::<f64>().map_err(|_| malformed(format!("bad vertex line {line:?}"))))
            .collect::<Result<_>>()?;
        if coords.len() != 3 {
            return Err(malformed(format!("bad vertex line {line:?}")));
        }
        current.push(Vec3::new(coords[0], coords[1], coords[2]));
        if current.len() == 3 {
            soup.push([current[0], current[1], current[2]]);
            current.clear();
        }
    }
    if !current.is_empty() {
        return Err(malformed("facet with fewer than three vertices"));
    }
    weld(soup)
}

/// Parses OFF, fan-triangulating polygons.
pub fn parse_off(text: &str) -> Result<TriangleMesh> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    if tokens.next() != Some("OFF") {
        return Err(malformed("missing OFF header"));
    }
    let mut next_num = |what: &str| -> Result<f64> {
        tokens
            .next()
            .ok_or_else(|| malformed(format!("truncated OFF while reading {what}")))?
            .parse::<f64>()
            .map_err(|_| malformed(format!("bad number in {what}")))
    };
    let nv = next_num("counts")? as usize;
    let nf = next_num("counts")? as usize;
    let _ne = next_num("counts")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        vertices.push(Vec3::new(next_num("vertex")?, next_num("vertex")?, next_num("vertex")?));
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let k = next_num("face")? as usize;
        let ids: Vec<usize> = (0..k).map(|_| next_num("face").map(|x| x as usize)).collect::<Result<_>>()?;
        if k < 3 {
            return Err(malformed("face with fewer than three vertices"));
        }
        for i in 1..k - 1 {
            triangles.push([ids[0], ids[i], ids[i + 1]]);
        }
    }
    TriangleMesh::new(vertices, triangles)
}

/// Loads `.stl` or `.off` by extension.
pub fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    let bytes = fs::read(path).map_err(|source| MpmError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("stl") => parse_stl(&bytes),
        Some("off") => parse_off(std::str::from_utf8(&bytes).map_err(|_| malformed("OFF is not UTF-8"))?),
        _ => Err(malformed(format!("unsupported mesh extension for {}", path.display()))),
    }
}
