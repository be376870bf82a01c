use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sdstab::commands::{
    cmd_analyze, cmd_heat_demo, cmd_radius, cmd_simulate, cmd_sweep, cmd_validate, exit_code_for,
    ValidateOptions,
};
use sdstab::config::ScenarioConfig;

#[derive(Parser)]
#[command(
    name = "sdstab",
    version,
    about = "Sampled-data loops for diagonal semigroups: simulation, stability margins, demos"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (key = value format)
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Truncation order override (overrides system.N)
    #[arg(long)]
    truncation: Option<usize>,
    /// Random seed override (overrides analysis.seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for grid sweeps
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Directory for the optional JSON report
    #[arg(long)]
    out: Option<PathBuf>,
    /// Truncation order for the validation systems
    #[arg(long, default_value_t = 32)]
    truncation: usize,
    /// Random seed for the randomized suites
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (accepted for interface symmetry)
    #[arg(long)]
    workers: Option<usize>,
    /// Also print the N vs 2N sensitivity table
    #[arg(long)]
    double_truncation: bool,
    /// Test hook: corrupt the perturbation column and expect the eta suite to fail
    #[arg(long)]
    inject_eta_defect: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the sampled-data loop; writes the trajectory CSV and a stability report
    Simulate(RunArgs),
    /// Spectral-radius report with resolvent and Volterra diagnostics
    Analyze(RunArgs),
    /// Stability-radius search over the perturbation scale
    Radius(RunArgs),
    /// Evaluate the c-curve over perturbation.c_grid with a worker pool
    Sweep(RunArgs),
    /// Run the built-in verification suites
    Validate(ValidateArgs),
    /// Heated rod: spectral model vs finite-difference oracle
    HeatDemo(RunArgs),
}

fn load_config(args: &RunArgs) -> sdstab::Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::load(&args.config)?;
    if let Some(n) = args.truncation {
        cfg.truncation = n;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.display().to_string();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> sdstab::Result<i32> {
    match cli.command {
        Cmd::Simulate(args) => cmd_simulate(&load_config(&args)?),
        Cmd::Analyze(args) => cmd_analyze(&load_config(&args)?),
        Cmd::Radius(args) => cmd_radius(&load_config(&args)?),
        Cmd::Sweep(args) => {
            let cfg = load_config(&args)?;
            cmd_sweep(&cfg, args.workers)
        }
        Cmd::HeatDemo(args) => cmd_heat_demo(&load_config(&args)?),
        Cmd::Validate(args) => cmd_validate(&ValidateOptions {
            truncation: args.truncation,
            double_truncation: args.double_truncation,
            inject_eta_defect: args.inject_eta_defect,
            seed: args.seed,
            out_dir: args.out,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err) as u8)
        }
    }
}
