//! Physics-scene simulation and video-dynamics evaluation.
//!
//! The crate is organised by subsystem:
//!
//! - [`video`]: dense `C×H×W×T` video tensors and their binary/raster I/O.
//! - [`spectral`]: 3D DFT, normalized energy spectra, total variation distance
//!   and the PMF motion-fidelity score.
//! - [`constitutive`]: the five MPM material models (stress and return mapping).
//! - [`mpm`]: the APIC/MLS material point solver, colliders and voxel SDFs.
//! - [`forces`]: magnetic dipoles, wind fields, laser reflection and SPH kernels.
//! - [`camera`]: static camera rings and monocular trajectory sampling.
//! - [`scene`]: scene specs, activity enumeration, material variation,
//!   dataset splitting and annotation export.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod camera;
pub mod constitutive;
pub mod forces;
pub mod math;
pub mod mpm;
pub mod scene;
pub mod spectral;
pub mod video;
pub mod workloads;

pub use camera::{CameraPose, SphericalPoint, TrajectoryConfig, TrajectoryStrategy};
pub use constitutive::{LameParameters, MaterialModel};
pub use mpm::{GridState, ParticleSet, SimConfig, Simulation, VoxelSdf};
pub use math::{Mat3, Vec3};
pub use scene::{Activity, DatasetSplit, PhenomenonRegistry, SceneSpec};
pub use spectral::{ComplexSpectrum, EnergySpectrum, PmfConfig};
pub use video::VideoTensor;
