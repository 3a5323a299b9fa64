use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use epialloc::cli::{self, Overrides, RunConfig};
use epialloc::domain::CompatPreset;
use epialloc::scenario::Scenario;
use epialloc::simulate::ForecastMode;

#[derive(Parser)]
#[command(name = "epialloc", version, about = "Forecast, allocate and simulate scarce typed resources")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    mip_compat: Option<CompatPreset>,
    #[arg(long, global = true)]
    fulfill_compat: Option<CompatPreset>,
    /// per-resource or aggregate
    #[arg(long, global = true)]
    mode: Option<ForecastMode>,
    #[arg(long, global = true)]
    runs: Option<usize>,
    #[arg(long, global = true)]
    horizon: Option<usize>,
    /// Use actual values in place of forecasts.
    #[arg(long, global = true)]
    perfect_information: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic scenario.
    Generate,
    /// Replay the online forecaster over one stream (e.g. supplier:O, hub3:all).
    Forecast { scenario: PathBuf, stream: String },
    /// Solve one allocation problem.
    Allocate { problem: PathBuf },
    /// Run one simulation over the horizon.
    Simulate { scenario: PathBuf },
    /// Run repeated simulations and summarise fairness.
    Montecarlo { scenario: PathBuf },
    /// Check a scenario, problem or config file.
    Validate { file: PathBuf },
}

fn run(cli: Cli) -> epialloc::Result<()> {
    let c = cli.common;
    let cfg = RunConfig::load(c.config.as_deref())?.apply(Overrides {
        seed: c.seed,
        out: c.out,
        workers: c.workers,
        mip_compat: c.mip_compat,
        fulfill_compat: c.fulfill_compat,
        mode: c.mode,
        runs: c.runs,
        horizon: c.horizon,
        perfect_information: c.perfect_information,
    });
    match cli.command {
        Command::Generate => println!("{}", cli::cmd_generate(&cfg)?.display()),
        Command::Forecast { scenario, stream } => {
            println!("{}", cli::cmd_forecast(&Scenario::load_json(&scenario)?, &stream, &cfg)?.display());
        }
        Command::Allocate { problem } => {
            let (path, out) = cli::cmd_allocate(&problem, &cfg)?;
            println!("{} variables, {} constraints", out.variables, out.constraints);
            println!("{}", cli::describe_plan(&out.record.problem, &out.record.plan));
            println!("{}", path.display());
        }
        Command::Simulate { scenario } => {
            for p in cli::cmd_simulate(&Scenario::load_json(&scenario)?, &cfg)? {
                println!("{}", p.display());
            }
        }
        Command::Montecarlo { scenario } => {
            for p in cli::cmd_montecarlo(&Scenario::load_json(&scenario)?, &cfg)? {
                println!("{}", p.display());
            }
        }
        Command::Validate { file } => println!("ok: {:?}", cli::cmd_validate(&file)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
