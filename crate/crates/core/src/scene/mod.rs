//! Scene descriptions and dataset tooling.
//!
//! A [`SceneSpec`] is the single JSON document a simulation run, its cameras
//! and its annotations are derived from. The submodules cover phenomenon
//! combinations ([`registry`]), parameter ranges and material variation
//! ([`spec`]), asset-exclusive dataset splitting ([`split`]) and annotation
//! export ([`annotate`]).

pub mod annotate;
pub mod registry;
pub mod spec;
pub mod split;

use std::path::PathBuf;

use thiserror::Error;

use crate::camera::CameraError;
use crate::constitutive::ConstitutiveError;
use crate::forces::ForceError;
use crate::mpm::MpmError;

pub use annotate::{
    encode_piod, encode_pios16, physics_records, read_physics, read_piod, read_pios16, render_frame,
    write_annotations, AnnotationSummary, CameraTrack, FrameSnapshot, ObjectState, PhysicsRecord, Raster,
    RasterConfig, TrajectoryRecord,
};
pub use registry::{enumerate_activities, Activity, Arity, CompatibilityFile, Phenomenon, PhenomenonRegistry, TripleRule};
pub use spec::{
    example_elastic_cube, vary_materials, CameraSpec, ForceSpec, MaterialSpec, ModelSpec, ObjectClass, ObjectRecord, ObjectSpec, ParamRange, Pose, SceneRuntime,
    SceneSpec, ShapeSpec, SurfaceProperties, PARAMETER_RANGES,
};
pub use split::{split_dataset, split_scenes, DatasetSplit, Split, SplitItem};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error("unknown phenomenon index {0}")]
    UnknownPhenomenon(usize),
    #[error("phenomena {0:?} are not compatible")]
    IncompatibleActivity(Vec<usize>),
    #[error("object {object:?} references unknown material {material:?}")]
    UnknownMaterial { object: String, material: String },
    #[error("material {material:?}: {parameter} = {value} outside [{min}, {max}]")]
    OutOfRange {
        material: String,
        parameter: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("material {material:?}: {source:?}: {source}")]
    Constitutive {
        material: String,
        #[source]
        source: ConstitutiveError,
    },
    #[error("phenomenon {0} is not tagged on any object")]
    UntaggedPhenomenon(usize),
    #[error(transparent)]
    Force(#[from] ForceError),
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Mpm(#[from] MpmError),
    #[error("splitting needs at least 10 scenes, got {0}")]
    TooFewScenes(usize),
    #[error(
        "infeasible split: {scenes} of {total} scenes are connected through shared assets [{}]",
        group.join(", ")
    )]
    Infeasible {
        group: Vec<String>,
        scenes: usize,
        total: usize,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON in {path}: {message}")]
    Json { path: PathBuf, message: String },
    #[error("malformed raster: {0}")]
    MalformedRaster(String),
}

pub type Result<T> = std::result::Result<T, SceneError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> SceneError {
    let path = path.into();
    move |source| SceneError::Io { path, source }
}
