use std::path::PathBuf;

use clap::{Args, ValueEnum};
use physkit_core::camera::{export_frames, generate_trajectory, sample_static_ring, Hemisphere, TrajectoryConfig};
use physkit_core::Vec3;

use crate::failure::{io, CmdResult, Failure};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum HemisphereArg {
    Upper,
    Lower,
    Both,
}

impl From<HemisphereArg> for Hemisphere {
    fn from(h: HemisphereArg) -> Self {
        match h {
            HemisphereArg::Upper => Hemisphere::Upper,
            HemisphereArg::Lower => Hemisphere::Lower,
            HemisphereArg::Both => Hemisphere::Both,
        }
    }
}

#[derive(Debug, Args)]
pub struct CamerasArgs {
    /// linear_drift, sinusoidal or circular_loop.
    #[arg(long, default_value = "linear_drift")]
    pub strategy: String,
    /// Frames in the trajectory.
    #[arg(long, default_value_t = 60)]
    pub frames: usize,
    /// Base orbit radius in scene units.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Look-at point as `x,y,z`.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.0, 0.0])]
    pub center: Vec<f64>,
    /// Hemisphere of the sampled viewpoints.
    #[arg(long, value_enum, default_value_t = HemisphereArg::Upper)]
    pub hemisphere: HemisphereArg,
    /// Vertical field of view in degrees, recorded with each frame.
    #[arg(long, default_value_t = 50.0)]
    pub fov: f64,
    /// Emit a ring of this many static cameras instead of a trajectory.
    #[arg(long = "static")]
    pub static_count: Option<usize>,
    /// Write to a file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &CamerasArgs, seed: Option<u64>) -> CmdResult {
    let seed = seed.unwrap_or(0);
    let &[x, y, z] = args.center.as_slice() else {
        return Err(Failure::config(format!("--center needs 3 values, got {}", args.center.len())));
    };
    let center = Vec3::new(x, y, z);
    let poses = match args.static_count {
        Some(n) => {
            if args.radius.is_nan() || args.radius <= 0.0 {
                return Err(Failure::config(format!("radius must be positive, got {}", args.radius)));
            }
            sample_static_ring(n, args.radius, center, seed)
        }
        None => {
            let cfg = TrajectoryConfig {
                strategy: args.strategy.parse().map_err(Failure::config)?,
                hemisphere: args.hemisphere.into(),
                base_radius: args.radius,
                n_frames: args.frames,
                seed,
                fov_deg: args.fov,
                ..Default::default()
            };
            generate_trajectory(&cfg, center).map_err(Failure::config)?
        }
    };
    let text = serde_json::to_string_pretty(&export_frames(&poses, args.fov)).expect("frames serialize");
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(|e| io(path, e)),
        None => {
            outln!("{text}");
            Ok(())
        }
    }
}
