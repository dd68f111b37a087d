//! PIOS particle checkpoints.
//!
//! Layout (little-endian): magic `PIOS`, `u32` version, `u64` particle
//! count, `u32` field count, then per field a `u8` name length, the UTF-8
//! name, a `u8` component count and a `u8` dtype (1 = f32, 2 = u32). Field
//! arrays follow in table order, particle-major.

use std::fs;
use std::path::Path;

use super::particles::ParticleSet;
use super::{MpmError, Result};
use crate::math::{Mat3, Vec3};

pub const PIOS_MAGIC: &[u8; 4] = b"PIOS";
pub const PIOS_VERSION: u32 = 1;
const DTYPE_F32: u8 = 1;
const DTYPE_U32: u8 = 2;

const FIELDS: [(&str, u8, u8); 7] = [
    ("position", 3, DTYPE_F32),
    ("velocity", 3, DTYPE_F32),
    ("mass", 1, DTYPE_F32),
    ("volume0", 1, DTYPE_F32),
    ("deformation", 9, DTYPE_F32),
    ("affine", 9, DTYPE_F32),
    ("material_id", 1, DTYPE_U32),
];

fn push_f32s(out: &mut Vec<u8>, values: impl Iterator<Item = f64>) {
    for v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
}

/// Matrices are written row-major.
fn mat_rows(m: &Mat3) -> impl Iterator<Item = f64> + '_ {
    (0..9).map(move |k| m[(k / 3, k % 3)])
}

pub fn encode_pios(p: &ParticleSet) -> Vec<u8> {
    let n = p.len();
    let mut out = Vec::with_capacity(128 + n * 4 * 27);
    out.extend_from_slice(PIOS_MAGIC);
    out.extend_from_slice(&PIOS_VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(FIELDS.len() as u32).to_le_bytes());
    for (name, comps, dtype) in FIELDS {
        out.push(name.len() as u8);
        out.extend_from_slice(name.as_bytes());
        out.push(comps);
        out.push(dtype);
    }
    push_f32s(&mut out, p.x.iter().flat_map(|v| [v.x, v.y, v.z]));
    push_f32s(&mut out, p.v.iter().flat_map(|v| [v.x, v.y, v.z]));
    push_f32s(&mut out, p.mass.iter().copied());
    push_f32s(&mut out, p.volume0.iter().copied());
    push_f32s(&mut out, p.f.iter().flat_map(mat_rows));
    push_f32s(&mut out, p.c.iter().flat_map(mat_rows));
    for m in &p.material_id {
        out.extend_from_slice(&(*m as u32).to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| MpmError::MalformedCheckpoint("truncated checkpoint".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f32s(&mut self, count: usize) -> Result<Vec<f64>> {
        let raw = self.take(count.checked_mul(4).ok_or_else(|| MpmError::MalformedCheckpoint("size overflow".into()))?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect())
    }
}

pub fn decode_pios(bytes: &[u8]) -> Result<ParticleSet> {
    let bad = |m: String| MpmError::MalformedCheckpoint(m);
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != PIOS_MAGIC {
        return Err(bad("missing PIOS magic".into()));
    }
    let version = r.u32()?;
    if version != PIOS_VERSION {
        return Err(bad(format!("unsupported PIOS version {version}")));
    }
    let n = r.u64()? as usize;
    let field_count = r.u32()? as usize;
    let mut table = Vec::with_capacity(field_count);
    for _ in 0..field_count {
        let len = r.u8()? as usize;
        let name = std::str::from_utf8(r.take(len)?).map_err(|_| bad("field name is not UTF-8".into()))?;
        table.push((name.to_string(), r.u8()?, r.u8()?));
    }
    let expected: Vec<(String, u8, u8)> = FIELDS.iter().map(|(a, b, c)| (a.to_string(), *b, *c)).collect();
    if table != expected {
        return Err(bad(format!("unexpected field table {table:?}")));
    }
    let vecs = |v: Vec<f64>| v.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect::<Vec<_>>();
    let mats = |v: Vec<f64>| v.chunks_exact(9).map(Mat3::from_row_slice).collect::<Vec<_>>();
    let x = vecs(r.f32s(3 * n)?);
    let v = vecs(r.f32s(3 * n)?);
    let mass = r.f32s(n)?;
    let volume0 = r.f32s(n)?;
    let f = mats(r.f32s(9 * n)?);
    let c = mats(r.f32s(9 * n)?);
    let material_id = (0..n).map(|_| r.u32().map(|m| m as usize)).collect::<Result<_>>()?;
    if r.pos != bytes.len() {
        return Err(bad("trailing bytes after checkpoint payload".into()));
    }
    Ok(ParticleSet {
        x,
        v,
        mass,
        volume0,
        f,
        c,
        material_id,
    })
}

pub fn save_checkpoint(path: &Path, p: &ParticleSet) -> Result<()> {
    fs::write(path, encode_pios(p)).map_err(|source| MpmError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<ParticleSet> {
    let bytes = fs::read(path).map_err(|source| MpmError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_pios(&bytes)
}
