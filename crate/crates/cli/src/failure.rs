//! Exit codes and error classification.

use physkit_core::mpm::MpmError;
use physkit_core::scene::SceneError;
use physkit_core::video::VideoError;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_ZERO_ENERGY: u8 = 3;
pub const EXIT_RUNTIME: u8 = 4;
pub const EXIT_IO: u8 = 5;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Self {
            code,
            error: error.into(),
        }
    }

    pub fn config(msg: impl std::fmt::Display) -> Self {
        Self::new(EXIT_CONFIG, anyhow::anyhow!("{msg}"))
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

pub fn io(path: &std::path::Path, e: std::io::Error) -> Failure {
    Failure::new(EXIT_IO, anyhow::anyhow!("{}: {e}", path.display()))
}

/// Errors raised while stepping a simulation.
pub fn mpm_code(e: &MpmError) -> u8 {
    match e {
        MpmError::Io { .. } => EXIT_IO,
        MpmError::NonFinite { .. } | MpmError::Constitutive { .. } | MpmError::ParticleOutOfDomain { .. } => {
            EXIT_RUNTIME
        }
        _ => EXIT_CONFIG,
    }
}

/// Errors raised while loading and validating a scene; everything but I/O
/// is a configuration problem.
pub fn scene_code(e: &SceneError) -> u8 {
    match e {
        SceneError::Io { .. } | SceneError::Mpm(MpmError::Io { .. }) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

pub fn video_code(e: &VideoError) -> u8 {
    match e {
        VideoError::Io { .. } => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}
