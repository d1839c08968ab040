use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use ea_pricing::solver::DEFAULT_GRID;
use ea_pricing_cli::config::{load_instance, Overrides};
use ea_pricing_cli::run::{run, Mode, RunOptions};
use ea_pricing_cli::CliError;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Optimize,
    Settle,
    Scenarios,
    UsmCompare,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Optimize => Mode::Optimize,
            ModeArg::Settle => Mode::Settle,
            ModeArg::Scenarios => Mode::Scenarios,
            ModeArg::UsmCompare => Mode::UsmCompare,
        }
    }
}

/// Day-ahead pricing of wholesale and lump-sum packages for a prosumer
/// community.
#[derive(Debug, Parser)]
#[command(name = "ea-pricing", version)]
struct Args {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value = "optimize")]
    mode: ModeArg,
    /// 1-based hour for settle and the per-hour optimize reports.
    #[arg(long)]
    hour: Option<usize>,
    /// Package selection as a bitmask; bit i set means prosumer i+1 picks
    /// the wholesale package.
    #[arg(long)]
    scenario: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Cross-check every cell against a grid search and every equilibrium
    /// against a linear solve.
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    /// Regulation-price CSV replacing the configured source.
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Demand CSV replacing the configured profiles.
    #[arg(long)]
    demand: Option<PathBuf>,
    /// Mean wind CSV replacing the configured profiles.
    #[arg(long)]
    wind_mean: Option<PathBuf>,
    /// Seed for synthetic prices.
    #[arg(long)]
    seed: Option<u64>,
    /// Carry the balancing total of this selection bitmask to the next
    /// hour's ramp limits instead of the expected total.
    #[arg(long)]
    carry_scenario: Option<u64>,
    /// Treat numeric warnings as errors (exit code 4).
    #[arg(long)]
    deny_warnings: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(args: &Args) -> Result<(), CliError> {
    let overrides = Overrides {
        prices: args.prices.clone(),
        demand: args.demand.clone(),
        wind_mean: args.wind_mean.clone(),
        seed: args.seed,
    };
    let instance = load_instance(&args.config, &overrides)?;
    let opts = RunOptions {
        mode: args.mode.into(),
        hour: args.hour,
        scenario: args.scenario,
        out: args.out.clone(),
        verify: args.verify,
        grid_resolution: args.grid,
        carry_scenario: args.carry_scenario,
    };
    let report = run(&instance, &opts)?;
    print!("{}", report.summary);
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    if args.deny_warnings && !report.warnings.is_empty() {
        return Err(CliError::Numeric(format!(
            "{} warning(s) raised",
            report.warnings.len()
        )));
    }
    Ok(())
}
