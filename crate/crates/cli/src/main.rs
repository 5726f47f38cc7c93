//! `agentflow`: evaluate, optimize, sweep, verify and simulate LLM agent
//! workflows described in TOML files.

mod commands;
mod failure;
mod render;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use agentflow::allocation::Strategy;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::failure::{Failure, EXIT_CODES};

#[derive(Parser, Debug)]
#[command(name = "agentflow", version, about, after_help = EXIT_CODES)]
pub struct Cli {
    /// Workflow definition (TOML).
    #[arg(long, short, global = true)]
    pub input: Option<PathBuf>,
    /// Write results here instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for the simulator.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps and simulations; never changes results.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Also write a run manifest (with timestamp) to this path.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct BudgetArgs {
    /// Latency budget T in seconds; overrides [budgets].
    #[arg(long)]
    pub latency_budget: Option<f64>,
    /// User cost budget C; overrides [budgets].
    #[arg(long)]
    pub cost_budget: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a workflow file and report every problem.
    Validate,
    /// Expected latency, reliability and costs under the file's [allocation].
    Evaluate,
    /// Water-filling response lengths under the latency and cost budgets.
    Optimize {
        #[command(flatten)]
        budgets: BudgetArgs,
        /// Also show the uniform, proportional and inverse-proportional splits.
        #[arg(long)]
        compare_baselines: bool,
        /// Also show lengths floored to whole tokens.
        #[arg(long)]
        integer: bool,
    },
    /// Reliability of each strategy over a list of effective token budgets.
    Sweep {
        /// Comma-separated token budgets.
        #[arg(long, value_delimiter = ',', conflicts_with = "range")]
        budgets: Option<Vec<f64>>,
        /// `start:end:step`, end included.
        #[arg(long)]
        range: Option<String>,
        /// Comma-separated subset of strategies.
        #[arg(long, value_delimiter = ',', value_parser = parse_strategy)]
        strategies: Option<Vec<Strategy>>,
    },
    /// Compare the analytic allocation with a brute-force grid search.
    Verify {
        #[command(flatten)]
        budgets: BudgetArgs,
        /// Tokens per grid unit.
        #[arg(long, default_value_t = 1.0)]
        grid_step: f64,
        /// Token budget to split; defaults to the effective budget.
        #[arg(long)]
        budget: Option<f64>,
        /// Search exhaustively beyond three agents.
        #[arg(long)]
        allow_large: bool,
        /// Use pairwise-exchange refinement with this many rounds beyond three agents.
        #[arg(long)]
        refine: Option<u32>,
    },
    /// Monte Carlo estimate of latency and success rate.
    Simulate {
        #[command(flatten)]
        budgets: BudgetArgs,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Simulate the optimized allocation instead of [allocation].
        #[arg(long)]
        use_optimal: bool,
        /// Confidence level of the reported intervals.
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
    },
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse()
}

fn emit(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Io(format!("cannot write to standard output: {e}")))
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let outcome = commands::dispatch(cli);
    // verify prints its report before failing
    let (text, result) = match outcome {
        Ok(t) => (Some(t), Ok(())),
        Err((t, e)) => (t, Err(e)),
    };
    if let Some(t) = text {
        emit(cli, &t)?;
    }
    result
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.workers {
        Some(0) => Err(Failure::Usage("--workers must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(&cli)),
            Err(e) => Err(Failure::Io(format!("cannot start worker pool: {e}"))),
        },
        None => run(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::VerifyFailed => {}
                // diagnostics carry their own severity prefix
                Failure::Config(e) => eprintln!("{e}"),
                _ => eprintln!("error: {f}"),
            }
            if let Some(h) = f.hint() {
                eprintln!("hint: {h}");
            }
            ExitCode::from(f.code() as u8)
        }
    }
}
