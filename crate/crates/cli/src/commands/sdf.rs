use std::path::PathBuf;

use clap::Args;
use physkit_core::mpm::{load_mesh, sdf_from_mesh, MpmError};
use serde_json::json;

use crate::failure::{io, CmdResult, Failure, EXIT_CONFIG, EXIT_IO};

#[derive(Debug, Args)]
pub struct SdfArgs {
    /// Closed STL or OFF mesh.
    #[arg(long)]
    pub mesh: PathBuf,
    /// Voxel spacing in mesh units.
    #[arg(long)]
    pub spacing: f64,
    /// Extra cells around the mesh bounds.
    #[arg(long, default_value_t = 3)]
    pub padding: usize,
    /// Output PIOF file.
    #[arg(long)]
    pub out: PathBuf,
}

fn code(e: &MpmError) -> u8 {
    if matches!(e, MpmError::Io { .. }) {
        EXIT_IO
    } else {
        EXIT_CONFIG
    }
}

pub fn run(args: &SdfArgs) -> CmdResult {
    if args.spacing.is_nan() || args.spacing <= 0.0 {
        return Err(Failure::config(format!("spacing must be positive, got {}", args.spacing)));
    }
    let mesh = load_mesh(&args.mesh).map_err(|e| Failure::new(code(&e), e))?;
    let sdf = sdf_from_mesh(&mesh, args.spacing, args.padding)
        .map_err(|e| Failure::new(code(&e), anyhow::anyhow!("{}: {e}", args.mesh.display())))?;
    std::fs::write(&args.out, sdf.encode()).map_err(|e| io(&args.out, e))?;
    let summary = json!({
        "dims": sdf.dims,
        "spacing": sdf.spacing,
        "origin": [sdf.origin.x, sdf.origin.y, sdf.origin.z],
        "triangles": mesh.triangles.len(),
    });
    outln!("{summary}");
    Ok(())
}
