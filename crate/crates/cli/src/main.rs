//! `physkit` command-line interface.
//!
//! Exit codes: 0 success, 1 unexpected failure, 2 invalid input or
//! configuration, 3 zero-energy video, 4 simulation instability, 5 I/O.

/// `println!` that exits quietly when stdout is a closed pipe.
macro_rules! outln {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        if let Err(e) = writeln!(std::io::stdout().lock(), $($arg)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
            eprintln!("error: stdout: {e}");
            std::process::exit($crate::failure::EXIT_IO as i32);
        }
    }};
}

mod commands;
mod failure;
mod manifest;

use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};

use commands::{bench, cameras, pmf, scenes, sdf, simulate};

#[derive(Debug, Parser)]
#[command(name = "physkit", version, about = "Physics-scene simulation and video motion-fidelity tools")]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "PHYSKIT_THREADS")]
    threads: Option<usize>,
    /// Seed for every random choice; overrides scene seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Increase log verbosity (repeatable).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score a generated video against a reference with PMF.
    Pmf(pmf::PmfArgs),
    /// Run a scene and write per-frame checkpoints.
    Simulate(simulate::SimulateArgs),
    /// Sample static camera rings or moving-camera trajectories.
    Cameras(cameras::CamerasArgs),
    /// Activity enumeration, material variation, splitting and annotation.
    Scenes {
        #[command(subcommand)]
        command: scenes::ScenesCommand,
    },
    /// Voxelize a closed mesh into a signed distance field.
    Sdf(sdf::SdfArgs),
    /// Time the core kernels.
    Bench(bench::BenchArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(failure::EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Pmf(a) => pmf::run(a),
        Command::Simulate(a) => simulate::run(a, cli.seed),
        Command::Cameras(a) => cameras::run(a, cli.seed),
        Command::Scenes { command } => scenes::run(command, cli.seed),
        Command::Sdf(a) => sdf::run(a),
        Command::Bench(a) => bench::run(a, cli.seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.error);
            ExitCode::from(f.code)
        }
    }
}
