use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion, Throughput};
use physkit_core::mpm::{p2g, GridState, Simulation};
use physkit_core::spectral::{dft3, pmf};
use physkit_core::workloads::{noise_video, particle_cloud};
use physkit_core::PmfConfig;

fn fft(c: &mut Criterion) {
    let mut group = c.benchmark_group("dft3");
    for size in [16usize, 32, 64] {
        let video = noise_video(3, size, size, 16, 1);
        group.throughput(Throughput::Elements(video.len() as u64));
        group.bench_with_input(BenchmarkId::from_parameter(size), &video, |b, v| {
            b.iter(|| dft3(black_box(v)).unwrap())
        });
    }
    group.finish();

    let gen = noise_video(3, 64, 64, 16, 2);
    let reference = noise_video(3, 64, 64, 16, 3);
    c.bench_function("pmf_3x64x64x16", |b| {
        b.iter(|| pmf(black_box(&gen), black_box(&reference), &PmfConfig::default()).unwrap())
    });
}

fn scatter(c: &mut Criterion) {
    let mut group = c.benchmark_group("p2g");
    group.sample_size(20);
    for n in [10_000usize, 100_000] {
        let (cfg, particles, materials) = particle_cloud(n, 4);
        let mut grid = GridState::new(&cfg.domain, cfg.dx);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_function(BenchmarkId::from_parameter(n), |b| {
            b.iter_batched(
                || particles.clone(),
                |mut p| p2g(&mut p, &materials, &mut grid, cfg.dt).unwrap(),
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn full_step(c: &mut Criterion) {
    let (cfg, particles, materials) = particle_cloud(10_000, 5);
    let mut group = c.benchmark_group("step");
    group.sample_size(20);
    group.throughput(Throughput::Elements(particles.len() as u64));
    group.bench_function("10000", |b| {
        b.iter_batched(
            || Simulation::new(cfg.clone(), particles.clone(), materials.clone()).unwrap(),
            |mut sim| sim.step().unwrap(),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

criterion_group!(benches, fft, scatter, full_step);
criterion_main!(benches);
