use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vortexlab::experiment::{self, error_exit_code, ExperimentConfig, ExperimentKind};

/// Numerical experiments with critically coupled abelian Higgs vortices.
#[derive(Parser)]
#[command(name = "vortexlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for a vortex configuration on the disk.
    SolveDisk(Common),
    /// Solve for a vortex configuration on the flat torus.
    SolveTorus(Common),
    /// Torus solves across a list of couplings around the Bradlow bound.
    BradlowSweep(Common),
    /// Kinetic metric at one point of the moduli space.
    Metric(Common),
    /// Geodesic of a centred vortex pair.
    Geodesic(Common),
    /// Scattering angle against impact parameter.
    Scatter(Common),
    /// Hyperbolic evolution of a vortex configuration.
    Evolve(Common),
    /// Slow hyperbolic motion against the geodesic, for several speeds.
    AdiabaticCompare(Common),
    /// Run whatever experiment the config names.
    Run(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parameter sweeps.
    #[arg(long, env = "VORTEXLAB_THREADS")]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match cli.command {
        Command::SolveDisk(c) => (Some(ExperimentKind::SolveDisk), c),
        Command::SolveTorus(c) => (Some(ExperimentKind::SolveTorus), c),
        Command::BradlowSweep(c) => (Some(ExperimentKind::BradlowSweep), c),
        Command::Metric(c) => (Some(ExperimentKind::Metric), c),
        Command::Geodesic(c) => (Some(ExperimentKind::Geodesic), c),
        Command::Scatter(c) => (Some(ExperimentKind::Scatter), c),
        Command::Evolve(c) => (Some(ExperimentKind::Evolve), c),
        Command::AdiabaticCompare(c) => (Some(ExperimentKind::AdiabaticCompare), c),
        Command::Run(c) => (None, c),
    };
    if let Some(n) = common.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let result = ExperimentConfig::load(&common.config).and_then(|cfg| experiment::run(&cfg, kind, common.out.as_deref()));
    match result {
        Ok(report) => {
            println!("{} -> {}", report.experiment.name(), report.output_dir.display());
            for (k, v) in &report.headline {
                println!("  {k} = {v}");
            }
            for (k, v) in &report.checks {
                println!("  {k}: {}", if *v { "yes" } else { "no" });
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_exit_code(&e) as u8)
        }
    }
}
