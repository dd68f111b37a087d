use std::path::{Path, PathBuf};

use clap::Args;
use physkit_core::spectral::{tv_distance, video_energy, EnergySpectrum, PmfConfig, SpectralError};
use physkit_core::video::{load_video, VideoTensor};
use serde::Serialize;

use crate::failure::{io, video_code, CmdResult, Failure, EXIT_CONFIG, EXIT_ZERO_ENERGY};

#[derive(Debug, Args)]
pub struct PmfArgs {
    /// Generated video (PIOV file or directory of frames).
    #[arg(required_unless_present = "batch")]
    pub generated: Option<PathBuf>,
    /// Reference video.
    #[arg(required_unless_present = "batch")]
    pub reference: Option<PathBuf>,
    /// CSV of `generated,reference` pairs, resolved relative to the file.
    #[arg(long, conflicts_with_all = ["generated", "reference"])]
    pub batch: Option<PathBuf>,
    /// Print a JSON report instead of the bare score.
    #[arg(long)]
    pub json: bool,
    /// Lower clamp on the total variation distance.
    #[arg(long, default_value_t = 1e-9)]
    pub tv_floor: f64,
}

#[derive(Debug, Serialize)]
struct PmfJson {
    pmf: f64,
    tv_distance: f64,
    dims: [usize; 4],
}

fn load(path: &Path) -> CmdResult<VideoTensor> {
    load_video(path).map_err(|e| Failure::new(video_code(&e), anyhow::anyhow!("{}: {e}", path.display())))
}

fn energy(path: &Path, v: &VideoTensor) -> CmdResult<EnergySpectrum> {
    video_energy(v).map_err(|e| {
        let code = if e == SpectralError::ZeroEnergy { EXIT_ZERO_ENERGY } else { EXIT_CONFIG };
        Failure::new(code, anyhow::anyhow!("{}: {e}", path.display()))
    })
}

/// Returns `(pmf, tv_distance, dims)`.
fn score(gen_path: &Path, ref_path: &Path, cfg: &PmfConfig) -> CmdResult<(f64, f64, [usize; 4])> {
    let gen = load(gen_path)?;
    let reference = load(ref_path)?;
    if gen.dims() != reference.dims() {
        return Err(Failure::config(format!(
            "dimension mismatch: {} is {:?} but {} is {:?} (C, H, W, T)",
            gen_path.display(),
            gen.dims(),
            ref_path.display(),
            reference.dims()
        )));
    }
    let e1 = energy(gen_path, &gen)?;
    let e2 = energy(ref_path, &reference)?;
    let tv = tv_distance(&e1, &e2).map_err(Failure::config)?;
    let (c, h, w, t) = gen.dims();
    Ok((-tv.max(cfg.tv_floor).ln(), tv, [c, h, w, t]))
}

pub fn run(args: &PmfArgs) -> CmdResult {
    let cfg = PmfConfig {
        tv_floor: args.tv_floor,
    };
    cfg.validate().map_err(Failure::config)?;
    if let Some(batch) = &args.batch {
        return run_batch(batch, &cfg);
    }
    let (g, r) = (args.generated.as_ref().expect("clap"), args.reference.as_ref().expect("clap"));
    let (pmf, tv, dims) = score(g, r, &cfg)?;
    if args.json {
        let out = PmfJson {
            pmf,
            tv_distance: tv,
            dims,
        };
        outln!("{}", serde_json::to_string(&out).expect("serializes"));
    } else {
        outln!("{pmf:.4}");
    }
    Ok(())
}

fn run_batch(batch: &Path, cfg: &PmfConfig) -> CmdResult {
    let text = std::fs::read_to_string(batch).map_err(|e| io(batch, e))?;
    let base = batch.parent().unwrap_or(Path::new("."));
    let mut rows = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(Failure::config(format!(
                "{}:{}: expected `generated,reference`",
                batch.display(),
                line_no + 1
            )));
        }
        if line_no == 0 && fields == ["generated", "reference"] {
            continue;
        }
        let (pmf, tv, _) = score(&base.join(fields[0]), &base.join(fields[1]), cfg)?;
        rows.push((fields[0].to_string(), fields[1].to_string(), format!("{pmf:.4}"), tv));
    }
    if rows.is_empty() {
        return Err(Failure::config(format!("{} lists no pairs", batch.display())));
    }
    outln!("generated,reference,pmf,tv_distance");
    let mut sum = 0.0;
    for (g, r, pmf, tv) in &rows {
        outln!("{g},{r},{pmf},{tv:e}");
        sum += pmf.parse::<f64>().expect("formatted number");
    }
    outln!("mean,,{:.4},", sum / rows.len() as f64);
    Ok(())
}
