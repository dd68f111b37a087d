//! Seeded synthetic inputs shared by the benchmark harnesses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constitutive::MaterialModel;
use crate::math::Vec3;
use crate::mpm::{Aabb, Particle, ParticleSet, SimConfig};
use crate::video::VideoTensor;

/// Uniform noise video.
pub fn noise_video(channels: usize, height: usize, width: usize, frames: usize, seed: u64) -> VideoTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..channels * height * width * frames).map(|_| rng.random::<f64>()).collect();
    VideoTensor::new(channels, height, width, frames, data).expect("values lie in [0, 1)")
}

/// `n` elastic particles scattered through the centre of the default unit
/// domain with small random velocities, and the matching config. The
/// material is soft enough to stay stable at the default time step.
pub fn particle_cloud(n: usize, seed: u64) -> (SimConfig, ParticleSet, Vec<MaterialModel>) {
    let cfg = SimConfig {
        seed,
        ..SimConfig::default()
    };
    let region = Aabb::new(Vec3::repeat(0.3), Vec3::repeat(0.7));
    let volume0 = region.extent().product() / n.max(1) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = ParticleSet::new();
    for _ in 0..n {
        let u = Vec3::new(rng.random(), rng.random(), rng.random());
        let v = Vec3::new(rng.random(), rng.random(), rng.random()) - Vec3::repeat(0.5);
        p.push(Particle {
            position: region.min + region.extent().component_mul(&u),
            velocity: v * 0.2,
            mass: 1000.0 * volume0,
            volume0,
            material_id: 0,
        });
    }
    let materials = vec![MaterialModel::elastic(500.0, 0.3).expect("valid constants")];
    (cfg, p, materials)
}
