use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use physkit_core::mpm::encode_pios;
use physkit_core::scene::{write_annotations, FrameSnapshot, RasterConfig, SceneSpec};

use crate::failure::{io, mpm_code, scene_code, CmdResult, Failure, EXIT_CONFIG};
use crate::manifest::{digest_files, sha256_hex, versions, Hashed, RunManifest};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scene JSON file.
    #[arg(long)]
    pub scene: PathBuf,
    /// Frames to simulate; one checkpoint is written per frame.
    #[arg(long, default_value_t = 30)]
    pub frames: usize,
    /// Output directory for checkpoints, annotations and the manifest.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write depth, segmentation, trajectory and physics annotations.
    #[arg(long)]
    pub annotate: bool,
    /// Override the substep length in seconds.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Override the grid spacing.
    #[arg(long)]
    pub dx: Option<f64>,
    /// Override the substeps per frame.
    #[arg(long)]
    pub substeps: Option<usize>,
    /// Accept material parameters outside the published ranges.
    #[arg(long)]
    pub no_range_check: bool,
}

/// Loads a scene and applies command-line overrides.
pub fn load_scene(path: &Path, seed: Option<u64>, no_range_check: bool) -> CmdResult<SceneSpec> {
    let mut spec = SceneSpec::load(path).map_err(|e| Failure::new(scene_code(&e), e))?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    spec.range_check_override |= no_range_check;
    Ok(spec)
}

/// Structural validation plus a check that every phenomenon exists. The
/// shipped compatibility matrix is only a starter, so pairings are not
/// rejected here.
pub fn validate_scene(spec: &SceneSpec) -> CmdResult {
    spec.validate(None).map_err(|e| Failure::new(scene_code(&e), e))?;
    let registry = physkit_core::scene::PhenomenonRegistry::builtin();
    for &p in &spec.activity.phenomena {
        if registry.get(p).is_none() {
            return Err(Failure::new(EXIT_CONFIG, physkit_core::scene::SceneError::UnknownPhenomenon(p)));
        }
    }
    Ok(())
}

pub fn base_dir(path: &Path) -> &Path {
    path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."))
}

pub fn raster_config(spec: &SceneSpec) -> RasterConfig {
    RasterConfig {
        width: spec.cameras.width,
        height: spec.cameras.height,
        fov_deg: spec.cameras.fov_deg,
        splat_radius: spec.cameras.splat_radius,
    }
}

pub fn checkpoint_name(frame: usize) -> PathBuf {
    Path::new("checkpoints").join(format!("frame_{frame:04}.pios"))
}

pub fn run(args: &SimulateArgs, seed: Option<u64>) -> CmdResult {
    let started = Instant::now();
    let mut spec = load_scene(&args.scene, seed, args.no_range_check)?;
    if let Some(dt) = args.dt {
        spec.sim.dt = dt;
    }
    if let Some(dx) = args.dx {
        spec.sim.dx = dx;
    }
    if let Some(n) = args.substeps {
        spec.sim.substeps_per_frame = n;
    }
    validate_scene(&spec)?;
    let base = base_dir(&args.scene);
    let mut runtime = spec.build(base).map_err(|e| Failure::new(scene_code(&e), e))?;

    std::fs::create_dir_all(&args.out).map_err(|e| io(&args.out, e))?;
    let mut outputs: Vec<PathBuf> = Vec::new();
    if args.frames > 0 {
        let ckpt_dir = args.out.join("checkpoints");
        std::fs::create_dir_all(&ckpt_dir).map_err(|e| io(&ckpt_dir, e))?;
    }
    let mut snapshots: Vec<FrameSnapshot> = Vec::new();
    for frame in 0..args.frames {
        runtime
            .simulation
            .advance_frame()
            .map_err(|e| Failure::new(mpm_code(&e), anyhow::anyhow!("frame {frame}: {e}")))?;
        let rel = checkpoint_name(frame);
        let path = args.out.join(&rel);
        std::fs::write(&path, encode_pios(&runtime.simulation.particles)).map_err(|e| io(&path, e))?;
        outputs.push(rel);
        if args.annotate {
            snapshots.push(runtime.snapshot());
        }
        log::info!("frame {}/{} done", frame + 1, args.frames);
    }
    if args.annotate && !snapshots.is_empty() {
        let tracks = spec
            .camera_tracks(snapshots.len(), base)
            .map_err(|e| Failure::new(scene_code(&e), e))?;
        let ann_dir = args.out.join("annotations");
        std::fs::create_dir_all(&ann_dir).map_err(|e| io(&ann_dir, e))?;
        let summary = write_annotations(&spec, &snapshots, &tracks, &raster_config(&spec), &ann_dir)
            .map_err(|e| Failure::new(scene_code(&e), e))?;
        outputs.extend(summary.files.into_iter().map(|f| Path::new("annotations").join(f)));
    }

    let hashed = Hashed {
        command: "simulate".into(),
        config_hash: sha256_hex(spec.to_json().as_bytes()),
        seeds: BTreeMap::from([("scene".to_string(), spec.seed)]),
        versions: versions(),
        frames: args.frames,
        outputs: digest_files(&args.out, &outputs)?,
    };
    let manifest = RunManifest::new(hashed, started.elapsed().as_secs_f64());
    manifest.write(&args.out.join("manifest.json"))?;
    outln!("{}", manifest.digest);
    Ok(())
}
