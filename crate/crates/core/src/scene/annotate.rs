//! Annotation export.
//!
//! Depth and segmentation rasters are point splats of object samples through
//! a pinhole camera with a z-buffer, not renders. Depth is the distance along
//! the viewing axis in metres with 0 for background; segmentation ids start
//! at 1 with 0 for background.
//!
//! File layout under the output directory:
//!
//! - `depth/cam{c:02}_frame{f:04}.piod`: magic `PIOD`, `u32` H, `u32` W, then
//!   `f32` depths row-major.
//! - `segmentation/cam{c:02}_frame{f:04}.pios16`: magic `PIOS16`, `u32` H,
//!   `u32` W, then `u16` ids row-major.
//! - `trajectory.jsonl`: one `{frame, object_id, position, quaternion}` line
//!   per object per frame, quaternion as `(w, x, y, z)`.
//! - `physics.json`: surface properties keyed by segmentation id.
//! - `cameras.json`: camera-to-world matrices per camera and frame.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::spec::{SceneSpec, SurfaceProperties};
use super::{io_err, Result, SceneError};
use crate::camera::CameraPose;
use crate::math::Vec3;

pub const PIOD_MAGIC: &[u8; 4] = b"PIOD";
pub const PIOS16_MAGIC: &[u8; 6] = b"PIOS16";

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectState {
    pub object_id: u16,
    pub position: Vec3,
    /// `(w, x, y, z)`.
    pub rotation: [f64; 4],
    /// World-space samples splatted into the rasters.
    pub points: Vec<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameSnapshot {
    pub objects: Vec<ObjectState>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CameraTrack {
    Static(CameraPose),
    /// One pose per frame; the last pose is held past the end.
    Moving(Vec<CameraPose>),
}

impl CameraTrack {
    pub fn pose_at(&self, frame: usize) -> CameraPose {
        match self {
            Self::Static(p) => *p,
            Self::Moving(poses) => poses[frame.min(poses.len() - 1)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterConfig {
    pub width: usize,
    pub height: usize,
    /// Vertical field of view.
    pub fov_deg: f64,
    pub splat_radius: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f32>,
    pub segmentation: Vec<u16>,
}

/// Splats every object sample seen by `pose` into a depth and id raster.
pub fn render_frame(snapshot: &FrameSnapshot, pose: &CameraPose, cfg: &RasterConfig) -> Raster {
    let (w, h) = (cfg.width, cfg.height);
    let mut zbuf = vec![f64::INFINITY; w * h];
    let mut seg = vec![0u16; w * h];
    let forward = (pose.look_at - pose.position).normalize();
    let right = forward.cross(&pose.up).normalize();
    let up = right.cross(&forward);
    let focal = 0.5 * h as f64 / (0.5 * cfg.fov_deg.to_radians()).tan();
    let r = cfg.splat_radius as i64;
    for obj in &snapshot.objects {
        for p in &obj.points {
            let d = p - pose.position;
            let z = d.dot(&forward);
            if z <= 1e-6 {
                continue;
            }
            let u = 0.5 * w as f64 + focal * d.dot(&right) / z;
            let v = 0.5 * h as f64 - focal * d.dot(&up) / z;
            if !(u.is_finite() && v.is_finite()) {
                continue;
            }
            let (cu, cv) = (u.floor() as i64, v.floor() as i64);
            for row in cv - r..=cv + r {
                for col in cu - r..=cu + r {
                    if row < 0 || col < 0 || row >= h as i64 || col >= w as i64 {
                        continue;
                    }
                    let idx = row as usize * w + col as usize;
                    // Ties keep the lower id so output is order-independent.
                    if z < zbuf[idx] || (z == zbuf[idx] && obj.object_id < seg[idx]) {
                        zbuf[idx] = z;
                        seg[idx] = obj.object_id;
                    }
                }
            }
        }
    }
    Raster {
        width: w,
        height: h,
        depth: zbuf.iter().map(|&z| if z.is_finite() { z as f32 } else { 0.0 }).collect(),
        segmentation: seg,
    }
}

fn header(magic: &[u8], h: usize, w: usize, payload: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(magic.len() + 8 + payload);
    out.extend_from_slice(magic);
    out.extend_from_slice(&(h as u32).to_le_bytes());
    out.extend_from_slice(&(w as u32).to_le_bytes());
    out
}

pub fn encode_piod(r: &Raster) -> Vec<u8> {
    let mut out = header(PIOD_MAGIC, r.height, r.width, 4 * r.depth.len());
    r.depth.iter().for_each(|d| out.extend_from_slice(&d.to_le_bytes()));
    out
}

pub fn encode_pios16(r: &Raster) -> Vec<u8> {
    let mut out = header(PIOS16_MAGIC, r.height, r.width, 2 * r.segmentation.len());
    r.segmentation.iter().for_each(|d| out.extend_from_slice(&d.to_le_bytes()));
    out
}

fn read_header<'a>(bytes: &'a [u8], magic: &[u8], elem: usize) -> Result<(usize, usize, &'a [u8])> {
    let bad = |m: &str| SceneError::MalformedRaster(m.to_string());
    let rest = bytes.strip_prefix(magic).ok_or_else(|| bad("wrong magic"))?;
    if rest.len() < 8 {
        return Err(bad("truncated header"));
    }
    let h = u32::from_le_bytes(rest[0..4].try_into().expect("4 bytes")) as usize;
    let w = u32::from_le_bytes(rest[4..8].try_into().expect("4 bytes")) as usize;
    let data = &rest[8..];
    if Some(data.len()) != h.checked_mul(w).and_then(|n| n.checked_mul(elem)) {
        return Err(bad("payload size does not match H × W"));
    }
    Ok((h, w, data))
}

/// Returns `(height, width, depths)`.
pub fn read_piod(bytes: &[u8]) -> Result<(usize, usize, Vec<f32>)> {
    let (h, w, data) = read_header(bytes, PIOD_MAGIC, 4)?;
    Ok((h, w, data.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect()))
}

/// Returns `(height, width, ids)`.
pub fn read_pios16(bytes: &[u8]) -> Result<(usize, usize, Vec<u16>)> {
    let (h, w, data) = read_header(bytes, PIOS16_MAGIC, 2)?;
    Ok((h, w, data.chunks_exact(2).map(|c| u16::from_le_bytes(c.try_into().expect("2 bytes"))).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub frame: usize,
    pub object_id: u16,
    pub position: [f64; 3],
    pub quaternion: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicsRecord {
    pub asset_id: String,
    pub material: String,
    #[serde(flatten)]
    pub surface: SurfaceProperties,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CameraRecord {
    camera: usize,
    frame: usize,
    camera_to_world: [f64; 16],
    fov_deg: f64,
}

/// Files written, relative to the output directory, in a fixed order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnnotationSummary {
    pub files: Vec<PathBuf>,
}

/// Physics entries keyed by segmentation id.
pub fn physics_records(spec: &SceneSpec) -> BTreeMap<u16, PhysicsRecord> {
    spec.objects
        .iter()
        .enumerate()
        .map(|(k, o)| {
            let m = spec.material(&o.material);
            (
                SceneSpec::object_id(k),
                PhysicsRecord {
                    asset_id: o.asset_id.clone(),
                    material: o.material.clone(),
                    surface: m.map(|m| m.surface).unwrap_or(SurfaceProperties {
                        dynamic_friction: 0.0,
                        static_friction: 0.0,
                        density: 0.0,
                        restitution: 0.0,
                    }),
                },
            )
        })
        .collect()
}

fn write(out_dir: &Path, rel: PathBuf, bytes: &[u8]) -> Result<PathBuf> {
    let path = out_dir.join(&rel);
    fs::write(&path, bytes).map_err(io_err(&path))?;
    Ok(rel)
}

pub fn write_annotations(
    spec: &SceneSpec,
    frames: &[FrameSnapshot],
    cameras: &[CameraTrack],
    cfg: &RasterConfig,
    out_dir: &Path,
) -> Result<AnnotationSummary> {
    if frames.is_empty() {
        return Err(SceneError::Invalid("annotation needs at least one frame".into()));
    }
    if cfg.width == 0 || cfg.height == 0 {
        return Err(SceneError::Invalid("raster size must be positive".into()));
    }
    for sub in ["depth", "segmentation"] {
        let d = out_dir.join(sub);
        fs::create_dir_all(&d).map_err(io_err(&d))?;
    }

    let jobs: Vec<(usize, usize)> = (0..frames.len()).flat_map(|f| (0..cameras.len()).map(move |c| (f, c))).collect();
    let raster_files: Vec<Vec<PathBuf>> = jobs
        .par_iter()
        .map(|&(f, c)| {
            let raster = render_frame(&frames[f], &cameras[c].pose_at(f), cfg);
            let stem = format!("cam{c:02}_frame{f:04}");
            Ok(vec![
                write(out_dir, Path::new("depth").join(format!("{stem}.piod")), &encode_piod(&raster))?,
                write(out_dir, Path::new("segmentation").join(format!("{stem}.pios16")), &encode_pios16(&raster))?,
            ])
        })
        .collect::<Result<_>>()?;
    let mut files: Vec<PathBuf> = raster_files.into_iter().flatten().collect();

    let mut lines = String::new();
    for (f, snap) in frames.iter().enumerate() {
        for o in &snap.objects {
            let rec = TrajectoryRecord {
                frame: f,
                object_id: o.object_id,
                position: o.position.into(),
                quaternion: o.rotation,
            };
            lines.push_str(&serde_json::to_string(&rec).expect("record serializes"));
            lines.push('\n');
        }
    }
    files.push(write(out_dir, "trajectory.jsonl".into(), lines.as_bytes())?);

    let physics = serde_json::to_string_pretty(&physics_records(spec)).expect("physics serializes");
    files.push(write(out_dir, "physics.json".into(), physics.as_bytes())?);

    let cams: Vec<CameraRecord> = (0..cameras.len())
        .flat_map(|c| {
            (0..frames.len()).map(move |f| CameraRecord {
                camera: c,
                frame: f,
                camera_to_world: cameras[c].pose_at(f).camera_to_world(),
                fov_deg: cfg.fov_deg,
            })
        })
        .collect();
    let cams = serde_json::to_string_pretty(&cams).expect("cameras serialize");
    files.push(write(out_dir, "cameras.json".into(), cams.as_bytes())?);
    Ok(AnnotationSummary { files })
}

/// Parses a physics file written by [`write_annotations`].
pub fn read_physics(text: &str) -> std::result::Result<BTreeMap<u16, PhysicsRecord>, serde_json::Error> {
    serde_json::from_str(text)
}
