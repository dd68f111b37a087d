use std::time::Instant;

use clap::{Args, ValueEnum};
use physkit_core::mpm::{p2g, GridState, Simulation};
use physkit_core::spectral::dft3;
use physkit_core::workloads::{noise_video, particle_cloud};
use serde::Serialize;

use crate::failure::{CmdResult, Failure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Fft,
    P2g,
    FullStep,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Kernel to time.
    #[arg(value_enum)]
    pub suite: Suite,
    /// Timed runs; the median is reported.
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    /// Particle count for p2g (default 100000) and full-step (default 10000).
    #[arg(long)]
    pub particles: Option<usize>,
    /// Spatial and temporal size of the fft tensor.
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    /// Print a JSON report.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Serialize)]
struct Report {
    suite: &'static str,
    repeats: usize,
    items: usize,
    median_seconds: f64,
    min_seconds: f64,
    throughput: f64,
    throughput_unit: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    checksum: Option<String>,
}

fn time(repeats: usize, mut f: impl FnMut() -> CmdResult) -> CmdResult<(f64, f64)> {
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let t = Instant::now();
        f()?;
        times.push(t.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    let mid = times.len() / 2;
    let median = if times.len() % 2 == 1 {
        times[mid]
    } else {
        0.5 * (times[mid - 1] + times[mid])
    };
    Ok((median, times[0]))
}

pub fn run(args: &BenchArgs, seed: Option<u64>) -> CmdResult {
    if args.repeats == 0 {
        return Err(Failure::config("repeats must be at least 1"));
    }
    let seed = seed.unwrap_or(0);
    let runtime = |e: physkit_core::mpm::MpmError| Failure::new(crate::failure::mpm_code(&e), e);
    let report = match args.suite {
        Suite::Fft => {
            let n = args.size;
            let video = noise_video(2, n, n, n, seed);
            let (median, min) = time(args.repeats, || dft3(&video).map(|_| ()).map_err(Failure::config))?;
            Report {
                suite: "fft",
                repeats: args.repeats,
                items: video.len(),
                median_seconds: median,
                min_seconds: min,
                throughput: video.len() as f64 / median,
                throughput_unit: "voxels_per_second",
                checksum: None,
            }
        }
        Suite::P2g => {
            let n = args.particles.unwrap_or(100_000);
            let (cfg, particles, materials) = particle_cloud(n, seed);
            let mut grid = GridState::new(&cfg.domain, cfg.dx);
            let (median, min) = time(args.repeats, || {
                let mut p = particles.clone();
                p2g(&mut p, &materials, &mut grid, cfg.dt).map_err(runtime)
            })?;
            Report {
                suite: "p2g",
                repeats: args.repeats,
                items: n,
                median_seconds: median,
                min_seconds: min,
                throughput: n as f64 / median,
                throughput_unit: "particles_per_second",
                checksum: Some(format!("{:016x}", grid.checksum())),
            }
        }
        Suite::FullStep => {
            let n = args.particles.unwrap_or(10_000);
            let (cfg, particles, materials) = particle_cloud(n, seed);
            let mut sim = Simulation::new(cfg, particles, materials).map_err(runtime)?;
            let (median, min) = time(args.repeats, || sim.step().map_err(runtime))?;
            Report {
                suite: "full-step",
                repeats: args.repeats,
                items: n,
                median_seconds: median,
                min_seconds: min,
                throughput: n as f64 / median,
                throughput_unit: "particles_per_second",
                checksum: Some(format!("{:016x}", sim.grid.checksum())),
            }
        }
    };
    if args.json {
        outln!("{}", serde_json::to_string(&report).expect("report serializes"));
    } else {
        print!(
            "{}: median {:.6} s, min {:.6} s over {} runs, {:.4e} {}",
            report.suite, report.median_seconds, report.min_seconds, report.repeats, report.throughput, report.throughput_unit
        );
        match &report.checksum {
            Some(c) => outln!(", checksum {c}"),
            None => outln!(),
        }
    }
    Ok(())
}
