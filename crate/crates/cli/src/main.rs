mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Matching and routing planner for robot tour guides.
#[derive(Parser, Debug)]
#[command(name = "smrp", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Draw a random instance.
    Generate(GenerateArgs),
    /// Solve an instance.
    Plan(PlanArgs),
    /// Check a plan against its instance and re-derive its objective.
    Check(CheckArgs),
    /// Print the objective breakdown of a plan.
    Eval(EvalArgs),
    /// Replay a plan under random travel and visit times.
    Simulate(SimulateArgs),
    /// Re-solve over a list of tour time limits.
    SweepTimelimit(SweepTimelimitArgs),
    /// Plan at several estimated sigmas and simulate under a ground truth.
    SweepSigma(SweepSigmaArgs),
    /// Run methods over a grid of instance sizes.
    Benchmark(BenchmarkArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SampleArgs {
    /// Number of sampled scenarios for stochastic methods.
    #[arg(long)]
    pub scenarios: Option<usize>,
    /// Relative standard deviation of sampled times.
    #[arg(long)]
    pub sigma: Option<f64>,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Generator settings as JSON; missing fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub robots: Option<usize>,
    #[arg(long)]
    pub humans: Option<usize>,
    #[arg(long)]
    pub pois: Option<usize>,
    #[command(flatten)]
    pub samples: SampleArgs,
    /// Output file; stdout if omitted. A manifest is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PlanArgs {
    pub instance: PathBuf,
    #[arg(long, default_value = "d-lns")]
    pub method: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub budget_seconds: Option<f64>,
    #[command(flatten)]
    pub samples: SampleArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the search trace here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Keep wall-clock fields in the trace.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    pub instance: PathBuf,
    pub plan: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    pub instance: PathBuf,
    pub plan: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub samples: SampleArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    pub instance: PathBuf,
    pub plan: PathBuf,
    /// Ground-truth relative standard deviation.
    #[arg(long, default_value_t = 0.3)]
    pub sigma: f64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Correct-action rates to simulate; repeat or comma-separate.
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    pub rate: Vec<f64>,
    /// Travel multiplier table as `rate:multiplier` pairs, replacing 1/rate.
    #[arg(long, value_delimiter = ',')]
    pub inflation_table: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the raw per-trial trace here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write per-robot summary rows here as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub append: bool,
}

#[derive(Args, Debug)]
pub struct SweepTimelimitArgs {
    pub instance: PathBuf,
    /// Ascending tour time limits; comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub limits: Vec<f64>,
    #[arg(long, default_value = "d-lns")]
    pub method: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub budget_seconds: Option<f64>,
    #[command(flatten)]
    pub samples: SampleArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub append: bool,
    /// Write one plan file per limit into this directory.
    #[arg(long)]
    pub plans_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepSigmaArgs {
    pub instance: PathBuf,
    #[arg(long, default_value_t = 0.3)]
    pub ground_truth: f64,
    /// Estimated sigmas; comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.6,1.0")]
    pub estimates: Vec<f64>,
    #[arg(long, default_value = "s-lns")]
    pub method: String,
    /// Planning seeds per estimated sigma.
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub scenarios: usize,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 1.0)]
    pub rate: f64,
    #[arg(long)]
    pub budget_seconds: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub append: bool,
}

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    /// Grid settings as JSON; missing fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub budget_seconds: Option<f64>,
    /// Methods to run; comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub method: Vec<String>,
    #[arg(long)]
    pub scenarios: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub append: bool,
    /// Write each generated instance and plan into this directory.
    #[arg(long)]
    pub plans_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { commands::EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code_for(&e))
        }
    }
}
