pub mod bench;
pub mod cameras;
pub mod pmf;
pub mod scenes;
pub mod sdf;
pub mod simulate;
