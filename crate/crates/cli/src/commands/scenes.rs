use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use physkit_core::mpm::load_checkpoint;
use physkit_core::scene::{
    enumerate_activities, split_scenes, vary_materials, write_annotations, Arity, PhenomenonRegistry, SceneSpec,
};
use serde_json::json;

use super::simulate::{base_dir, load_scene, raster_config, validate_scene};
use crate::failure::{io, mpm_code, scene_code, CmdResult, Failure};

#[derive(Debug, Subcommand)]
pub enum ScenesCommand {
    /// List the activities of one arity.
    Enumerate(EnumerateArgs),
    /// Write material variants of a scene.
    Vary(VaryArgs),
    /// Split scenes into train/val/test with asset exclusivity.
    Split(SplitArgs),
    /// Write annotations from saved checkpoints.
    Annotate(AnnotateArgs),
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    /// single, double or triple.
    #[arg(long, default_value = "single")]
    pub arity: String,
    /// JSON file with `pairs` and optional `triples`, replacing the starter matrix.
    #[arg(long, conflicts_with = "all_compatible")]
    pub compatibility: Option<PathBuf>,
    /// Treat every pair as compatible.
    #[arg(long)]
    pub all_compatible: bool,
    /// Print only the number of activities.
    #[arg(long)]
    pub count: bool,
}

#[derive(Debug, Args)]
pub struct VaryArgs {
    /// Scene JSON file to vary.
    #[arg(long)]
    pub scene: PathBuf,
    /// Number of variants to write.
    #[arg(long, short = 'n')]
    pub variants: usize,
    /// Output directory for the variant scenes.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Scene files or directories of `*.json` scenes.
    #[arg(required = true)]
    pub scenes: Vec<PathBuf>,
    /// Train, val and test weights, e.g. `0.8,0.1,0.1`.
    #[arg(long, value_delimiter = ',', default_values_t = [8.0, 1.0, 1.0])]
    pub ratios: Vec<f64>,
    /// Write the split to a file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    /// Scene JSON file the checkpoints were simulated from.
    #[arg(long)]
    pub scene: PathBuf,
    /// Directory of `frame_NNNN.pios` checkpoints.
    #[arg(long)]
    pub checkpoints: PathBuf,
    /// Output directory for the annotation files.
    #[arg(long)]
    pub out: PathBuf,
    /// Accept material parameters outside the published ranges.
    #[arg(long)]
    pub no_range_check: bool,
}

pub fn run(cmd: &ScenesCommand, seed: Option<u64>) -> CmdResult {
    match cmd {
        ScenesCommand::Enumerate(a) => enumerate(a),
        ScenesCommand::Vary(a) => vary(a, seed),
        ScenesCommand::Split(a) => split(a, seed),
        ScenesCommand::Annotate(a) => annotate(a, seed),
    }
}

fn enumerate(args: &EnumerateArgs) -> CmdResult {
    let arity: Arity = args.arity.parse().map_err(Failure::config)?;
    let mut reg = PhenomenonRegistry::builtin();
    if args.all_compatible {
        reg.fill_compatibility(true);
    }
    if let Some(path) = &args.compatibility {
        reg.load_compatibility(path).map_err(|e| Failure::new(scene_code(&e), e))?;
    }
    let activities = enumerate_activities(&reg, arity);
    if args.count {
        outln!("{}", activities.len());
        return Ok(());
    }
    for a in &activities {
        let names: Vec<&str> = a
            .phenomena
            .iter()
            .map(|&p| reg.get(p).map_or("", |e| e.name.as_str()))
            .collect();
        outln!("{}", json!({ "phenomena": a.phenomena, "names": names }));
    }
    Ok(())
}

fn vary(args: &VaryArgs, seed: Option<u64>) -> CmdResult {
    let spec = load_scene(&args.scene, None, false)?;
    validate_scene(&spec)?;
    let seed = seed.unwrap_or(spec.seed);
    std::fs::create_dir_all(&args.out).map_err(|e| io(&args.out, e))?;
    for v in vary_materials(&spec, args.variants, seed) {
        let path = args.out.join(format!("{}.json", v.id));
        std::fs::write(&path, v.to_json()).map_err(|e| io(&path, e))?;
        outln!("{}", path.display());
    }
    Ok(())
}

fn scene_files(inputs: &[PathBuf]) -> CmdResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(input)
                .map_err(|e| io(input, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }
    Ok(files)
}

fn split(args: &SplitArgs, seed: Option<u64>) -> CmdResult {
    let files = scene_files(&args.scenes)?;
    let scenes = files
        .iter()
        .map(|f| SceneSpec::load(f).map_err(|e| Failure::new(scene_code(&e), e)))
        .collect::<CmdResult<Vec<_>>>()?;
    let ratios: [f64; 3] = args
        .ratios
        .as_slice()
        .try_into()
        .map_err(|_| Failure::config(format!("--ratios needs 3 values, got {}", args.ratios.len())))?;
    let split = split_scenes(&scenes, ratios, seed.unwrap_or(0)).map_err(|e| Failure::new(scene_code(&e), e))?;
    let text = serde_json::to_string_pretty(&split).expect("split serializes");
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(|e| io(path, e)),
        None => {
            outln!("{text}");
            Ok(())
        }
    }
}

fn annotate(args: &AnnotateArgs, seed: Option<u64>) -> CmdResult {
    let spec = load_scene(&args.scene, seed, args.no_range_check)?;
    validate_scene(&spec)?;
    let base = base_dir(&args.scene);
    let runtime = spec.build(base).map_err(|e| Failure::new(scene_code(&e), e))?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(&args.checkpoints)
        .map_err(|e| io(&args.checkpoints, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pios"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Failure::config(format!("no .pios checkpoints in {}", args.checkpoints.display())));
    }
    let snapshots = files
        .iter()
        .map(|f| {
            let particles = load_checkpoint(f).map_err(|e| Failure::new(mpm_code(&e), anyhow::anyhow!("{}: {e}", f.display())))?;
            runtime.snapshot_of(&particles).map_err(|e| Failure::new(scene_code(&e), e))
        })
        .collect::<CmdResult<Vec<_>>>()?;
    let tracks = spec
        .camera_tracks(snapshots.len(), base)
        .map_err(|e| Failure::new(scene_code(&e), e))?;
    std::fs::create_dir_all(&args.out).map_err(|e| io(&args.out, e))?;
    let summary = write_annotations(&spec, &snapshots, &tracks, &raster_config(&spec), &args.out)
        .map_err(|e| Failure::new(scene_code(&e), e))?;
    for f in summary.files {
        outln!("{}", Path::new(&args.out).join(f).display());
    }
    Ok(())
}
