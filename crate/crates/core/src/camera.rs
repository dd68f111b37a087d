//! Camera placement and monocular trajectory sampling.
//!
//! Cameras live on a sphere around the event origin. Static cameras form a
//! ring at random elevations in `[30°, 60°]`; the moving camera follows one
//! of three stochastic control-point samplers (linear drift, sinusoidal
//! easing, circular loop) which are then splined to one pose per frame.
//!
//! World up is `+z`. Latitude is elevation above the `xy` plane, longitude
//! is measured from `+x` towards `+y`. Longitudes are kept unwrapped so
//! splines never jump across the 0°/360° seam.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CameraError {
    #[error("trajectory interpolation needs at least 2 control points, got {0}")]
    TooFewPoints(usize),
    #[error("invalid trajectory config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, CameraError>;

pub const STATIC_MIN_ELEVATION: f64 = 30.0;
pub const STATIC_MAX_ELEVATION: f64 = 60.0;
/// Latitude bound for monocular control points.
pub const MONO_LAT_LIMIT: f64 = 45.0;
const GIMBAL_LAT: f64 = 89.0;
const DRIFT_ATTEMPTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalPoint {
    /// Degrees.
    pub latitude: f64,
    /// Degrees, unwrapped.
    pub longitude: f64,
    /// Multiplier of the base radius.
    pub radius_factor: f64,
}

impl SphericalPoint {
    pub fn new(latitude: f64, longitude: f64, radius_factor: f64) -> Self {
        Self {
            latitude,
            longitude,
            radius_factor,
        }
    }

    /// Offset from the sphere centre for a given base radius.
    pub fn to_offset(&self, base_radius: f64) -> Vec3 {
        let (lat, lon) = (self.latitude.to_radians(), self.longitude.to_radians());
        let r = self.radius_factor * base_radius;
        Vec3::new(r * lat.cos() * lon.cos(), r * lat.cos() * lon.sin(), r * lat.sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub position: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
}

impl CameraPose {
    /// Row-major 4×4 camera-to-world transform. The camera looks down its
    /// local `−z` with `+y` up.
    pub fn camera_to_world(&self) -> [f64; 16] {
        let forward = (self.look_at - self.position).normalize();
        let right = forward.cross(&self.up).normalize();
        let up = right.cross(&forward);
        let back = -forward;
        let p = self.position;
        [
            right.x, up.x, back.x, p.x, //
            right.y, up.y, back.y, p.y, //
            right.z, up.z, back.z, p.z, //
            0.0, 0.0, 0.0, 1.0,
        ]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hemisphere {
    #[default]
    Upper,
    Lower,
    Both,
}

impl Hemisphere {
    /// Admissible latitude band after clipping.
    pub fn clip_range(self) -> (f64, f64) {
        match self {
            Hemisphere::Upper => (0.0, 90.0),
            Hemisphere::Lower => (-90.0, 0.0),
            Hemisphere::Both => (-90.0, 90.0),
        }
    }

    /// Band for monocular control points: `[−45°, 45°]` intersected with the
    /// hemisphere.
    pub fn control_range(self) -> (f64, f64) {
        let (lo, hi) = self.clip_range();
        (lo.max(-MONO_LAT_LIMIT), hi.min(MONO_LAT_LIMIT))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryStrategy {
    #[default]
    LinearDrift,
    Sinusoidal,
    CircularLoop,
}

impl TrajectoryStrategy {
    pub const ALL: [TrajectoryStrategy; 3] = [
        TrajectoryStrategy::LinearDrift,
        TrajectoryStrategy::Sinusoidal,
        TrajectoryStrategy::CircularLoop,
    ];
}

impl std::str::FromStr for TrajectoryStrategy {
    type Err = CameraError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear_drift" | "linear-drift" => Ok(Self::LinearDrift),
            "sinusoidal" => Ok(Self::Sinusoidal),
            "circular_loop" | "circular-loop" => Ok(Self::CircularLoop),
            other => Err(CameraError::InvalidConfig(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrajectoryConfig {
    pub strategy: TrajectoryStrategy,
    pub hemisphere: Hemisphere,
    pub base_radius: f64,
    pub n_frames: usize,
    pub seed: u64,
    /// Standard deviation of the latitude random walk, degrees.
    pub drift_sigma: f64,
    /// Control points produced by the sinusoidal sampler.
    pub sinusoidal_points: usize,
    /// Amplitude `a` of the radius modulation `1 + a sin(πu)`.
    pub radius_amplitude: f64,
    /// Loop radius in degrees.
    pub loop_intensity: f64,
    pub loop_points: usize,
    /// Amplitude of the optional radius modulation around the loop.
    pub loop_radius_variation: f64,
    pub fov_deg: f64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            strategy: TrajectoryStrategy::LinearDrift,
            hemisphere: Hemisphere::Upper,
            base_radius: 1.0,
            n_frames: 60,
            seed: 0,
            drift_sigma: 5.0,
            sinusoidal_points: 16,
            radius_amplitude: 0.1,
            loop_intensity: 15.0,
            loop_points: 16,
            loop_radius_variation: 0.0,
            fov_deg: 50.0,
        }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CameraError::InvalidConfig(m));
        if self.n_frames < 2 {
            return bad(format!("n_frames must be ≥ 2, got {}", self.n_frames));
        }
        if !(self.base_radius > 0.0) {
            return bad(format!("base_radius must be positive, got {}", self.base_radius));
        }
        if !(self.drift_sigma >= 0.0) {
            return bad(format!("drift_sigma must be ≥ 0, got {}", self.drift_sigma));
        }
        if !(0.0..=MONO_LAT_LIMIT).contains(&self.loop_intensity) {
            return bad(format!("loop_intensity must lie in [0, 45], got {}", self.loop_intensity));
        }
        if self.loop_points < 2 || self.sinusoidal_points < 2 {
            return bad("loop_points and sinusoidal_points must be ≥ 2".into());
        }
        if !(self.radius_amplitude > -1.0 && self.loop_radius_variation.abs() < 1.0) {
            return bad("radius modulation must keep the radius positive".into());
        }
        Ok(())
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Builds a pose at `offset` from `center` looking back at it. `prev_up` is
/// used near the poles where world-up is nearly parallel to the view.
fn pose_at(center: &Vec3, offset: Vec3, latitude: f64, prev_up: Option<Vec3>) -> CameraPose {
    let position = center + offset;
    let forward = -offset.normalize();
    let project = |u: Vec3| (u - forward * u.dot(&forward)).try_normalize(1e-9);
    let up = if latitude.abs() > GIMBAL_LAT {
        prev_up.and_then(project)
    } else {
        None
    }
    .or_else(|| project(Vec3::z()))
    .or_else(|| project(Vec3::x()))
    .expect("x and z cannot both be parallel to the view");
    CameraPose {
        position,
        look_at: *center,
        up,
    }
}

/// `n` cameras at uniform azimuths `k·360/n` with random elevation in
/// `[30°, 60°]`, all at `base_radius` from `center`.
pub fn sample_static_ring(n: usize, base_radius: f64, center: Vec3, seed: u64) -> Vec<CameraPose> {
    sample_static_ring_visible(n, base_radius, center, seed, |_| true, 0)
}

/// Like [`sample_static_ring`], re-drawing the elevation of any pose rejected
/// by `visible` up to `max_resamples` times.
pub fn sample_static_ring_visible(
    n: usize,
    base_radius: f64,
    center: Vec3,
    seed: u64,
    visible: impl Fn(&CameraPose) -> bool,
    max_resamples: usize,
) -> Vec<CameraPose> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let azimuth = 360.0 * k as f64 / n as f64;
            let mut attempt = 0;
            loop {
                let elevation = uniform(&mut rng, STATIC_MIN_ELEVATION, STATIC_MAX_ELEVATION);
                let sp = SphericalPoint::new(elevation, azimuth, 1.0);
                let pose = pose_at(&center, sp.to_offset(base_radius), elevation, None);
                if attempt >= max_resamples || visible(&pose) {
                    break pose;
                }
                attempt += 1;
            }
        })
        .collect()
}

/// Evenly spaced longitudes over 180° with a Gaussian latitude random walk.
pub fn sample_linear_drift(cfg: &TrajectoryConfig) -> Vec<SphericalPoint> {
    let mut rng = cfg.rng();
    let n: usize = rng.random_range(10..=20);
    let start = uniform(&mut rng, 0.0, 360.0);
    let direction = if rng.random::<bool>() { 1.0 } else { -1.0 };
    let (lo, hi) = cfg.hemisphere.control_range();
    let step = Normal::new(0.0, cfg.drift_sigma).expect("sigma validated non-negative");

    let mut lat = uniform(&mut rng, lo, hi);
    let mut points = Vec::with_capacity(n);
    for k in 0..n {
        if k > 0 {
            let mut next = None;
            for _ in 0..DRIFT_ATTEMPTS {
                let cand = lat + step.sample(&mut rng);
                if (lo..=hi).contains(&cand) {
                    next = Some(cand);
                    break;
                }
            }
            lat = next.unwrap_or_else(|| lat.clamp(lo, hi));
        }
        let lon = start + direction * 180.0 * k as f64 / (n - 1) as f64;
        points.push(SphericalPoint::new(lat, lon, 1.0));
    }
    points
}

/// Raised-cosine interpolation between `start` and `end` at `u ∈ [0, 1]`
/// with radius factor `1 + a sin(πu)`.
pub fn sinusoidal_point(start: &SphericalPoint, end: &SphericalPoint, amplitude: f64, u: f64) -> SphericalPoint {
    let pi = std::f64::consts::PI;
    let ease = (1.0 - (pi * u).cos()) / 2.0;
    let (ease, radius_factor) = if u <= 0.0 {
        (0.0, 1.0)
    } else if u >= 1.0 {
        (1.0, 1.0)
    } else {
        (ease, 1.0 + amplitude * (pi * u).sin())
    };
    SphericalPoint::new(
        start.latitude + (end.latitude - start.latitude) * ease,
        start.longitude + (end.longitude - start.longitude) * ease,
        radius_factor,
    )
}

pub fn sample_sinusoidal(cfg: &TrajectoryConfig) -> Vec<SphericalPoint> {
    let mut rng = cfg.rng();
    let (lo, hi) = cfg.hemisphere.control_range();
    let lon0 = uniform(&mut rng, 0.0, 360.0);
    let start = SphericalPoint::new(uniform(&mut rng, lo, hi), lon0, 1.0);
    let end = SphericalPoint::new(uniform(&mut rng, lo, hi), lon0 + uniform(&mut rng, -180.0, 180.0), 1.0);
    let k = cfg.sinusoidal_points;
    (0..k)
        .map(|i| sinusoidal_point(&start, &end, cfg.radius_amplitude, i as f64 / (k - 1) as f64))
        .collect()
}

/// Loop of `n` points with offsets `(I cos θ_k, I sin θ_k)` around `center`,
/// before hemisphere clipping.
pub fn circular_loop_points(center: &SphericalPoint, n: usize, intensity: f64, radius_variation: f64) -> Vec<SphericalPoint> {
    (0..n)
        .map(|k| {
            let theta = std::f64::consts::TAU * k as f64 / n as f64;
            SphericalPoint::new(
                center.latitude + intensity * theta.cos(),
                center.longitude + intensity * theta.sin(),
                center.radius_factor * (1.0 + radius_variation * theta.sin()),
            )
        })
        .collect()
}

pub fn clip_to_hemisphere(points: &mut [SphericalPoint], hemisphere: Hemisphere) {
    let (lo, hi) = hemisphere.clip_range();
    for p in points {
        p.latitude = p.latitude.clamp(lo, hi);
    }
}

/// Circular-loop control points before clipping. The centre latitude is
/// drawn so every point stays within `[−45°, 45°]`.
pub fn sample_circular_loop_unclipped(cfg: &TrajectoryConfig) -> Vec<SphericalPoint> {
    let mut rng = cfg.rng();
    let (lo, hi) = cfg.hemisphere.control_range();
    let i = cfg.loop_intensity;
    let c_lo = lo.max(-MONO_LAT_LIMIT + i);
    let c_hi = hi.min(MONO_LAT_LIMIT - i);
    let lat = if c_hi >= c_lo {
        uniform(&mut rng, c_lo, c_hi)
    } else {
        0.5 * (c_lo + c_hi)
    };
    let center = SphericalPoint::new(lat, uniform(&mut rng, 0.0, 360.0), 1.0);
    circular_loop_points(&center, cfg.loop_points, i, cfg.loop_radius_variation)
}

pub fn sample_circular_loop(cfg: &TrajectoryConfig) -> Vec<SphericalPoint> {
    let mut pts = sample_circular_loop_unclipped(cfg);
    clip_to_hemisphere(&mut pts, cfg.hemisphere);
    pts
}

/// Control points for the configured strategy.
pub fn sample_control_points(cfg: &TrajectoryConfig) -> Vec<SphericalPoint> {
    match cfg.strategy {
        TrajectoryStrategy::LinearDrift => sample_linear_drift(cfg),
        TrajectoryStrategy::Sinusoidal => sample_sinusoidal(cfg),
        TrajectoryStrategy::CircularLoop => sample_circular_loop(cfg),
    }
}

fn unwrap_longitudes(points: &[SphericalPoint]) -> Vec<SphericalPoint> {
    let mut out: Vec<SphericalPoint> = Vec::with_capacity(points.len());
    for p in points {
        let mut q = *p;
        if let Some(prev) = out.last() {
            q.longitude -= 360.0 * ((q.longitude - prev.longitude) / 360.0).round();
        }
        out.push(q);
    }
    out
}

fn catmull_rom(p0: f64, p1: f64, p2: f64, p3: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    0.5 * (2.0 * p1 + (p2 - p0) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2 + (3.0 * p1 - p0 - 3.0 * p2 + p3) * t3)
}

/// Uniform Catmull-Rom through `points` in `(lat, lon, radius_factor)` with
/// clamped ends, evaluated at `n_frames` evenly spaced parameters.
pub fn interpolate_spherical(points: &[SphericalPoint], n_frames: usize) -> Result<Vec<SphericalPoint>> {
    if points.len() < 2 {
        return Err(CameraError::TooFewPoints(points.len()));
    }
    let pts = unwrap_longitudes(points);
    let m = pts.len();
    let at = |i: isize| pts[i.clamp(0, m as isize - 1) as usize];
    let samples = (0..n_frames)
        .map(|f| {
            if f + 1 == n_frames && n_frames > 1 {
                return pts[m - 1];
            }
            let u = if n_frames > 1 {
                f as f64 * (m - 1) as f64 / (n_frames - 1) as f64
            } else {
                0.0
            };
            let seg = (u.floor() as isize).min(m as isize - 2);
            let t = u - seg as f64;
            let (a, b, c, d) = (at(seg - 1), at(seg), at(seg + 1), at(seg + 2));
            SphericalPoint::new(
                catmull_rom(a.latitude, b.latitude, c.latitude, d.latitude, t).clamp(-90.0, 90.0),
                catmull_rom(a.longitude, b.longitude, c.longitude, d.longitude, t),
                catmull_rom(a.radius_factor, b.radius_factor, c.radius_factor, d.radius_factor, t),
            )
        })
        .collect();
    Ok(samples)
}

/// Splines control points to one [`CameraPose`] per frame on the sphere
/// of `base_radius` around `center`.
pub fn interpolate_trajectory(
    points: &[SphericalPoint],
    n_frames: usize,
    base_radius: f64,
    center: Vec3,
) -> Result<Vec<CameraPose>> {
    let samples = interpolate_spherical(points, n_frames)?;
    let mut poses: Vec<CameraPose> = Vec::with_capacity(samples.len());
    for sp in samples {
        let prev_up = poses.last().map(|p| p.up);
        poses.push(pose_at(&center, sp.to_offset(base_radius), sp.latitude, prev_up));
    }
    Ok(poses)
}

/// Samples control points per `cfg` and interpolates them to per-frame poses.
pub fn generate_trajectory(cfg: &TrajectoryConfig, center: Vec3) -> Result<Vec<CameraPose>> {
    cfg.validate()?;
    interpolate_trajectory(&sample_control_points(cfg), cfg.n_frames, cfg.base_radius, center)
}

/// One exported trajectory frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFrame {
    pub frame: usize,
    pub position: [f64; 3],
    pub look_at: [f64; 3],
    pub up: [f64; 3],
    pub camera_to_world: [f64; 16],
    pub fov_deg: f64,
}

pub fn export_frames(poses: &[CameraPose], fov_deg: f64) -> Vec<TrajectoryFrame> {
    poses
        .iter()
        .enumerate()
        .map(|(frame, p)| TrajectoryFrame {
            frame,
            position: p.position.into(),
            look_at: p.look_at.into(),
            up: p.up.into(),
            camera_to_world: p.camera_to_world(),
            fov_deg,
        })
        .collect()
}

/// Great-circle angles (radians) between consecutive camera directions.
pub fn angular_steps(poses: &[CameraPose]) -> Vec<f64> {
    poses
        .windows(2)
        .map(|w| {
            let a = (w[0].position - w[0].look_at).normalize();
            let b = (w[1].position - w[1].look_at).normalize();
            a.cross(&b).norm().atan2(a.dot(&b))
        })
        .collect()
}
