use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use sors_cli::commands::{self, bench_csv};
use sors_cli::config::{parse_ks, DEFAULT_KS};
use sors_cli::{ConfigLayer, EvalArgs, EvalSplit, UsageError};
use sors_core::data::{ParseOptions, ZeroPolicy};
use sors_core::SplitSpec;

#[derive(Parser)]
#[command(
    name = "sors",
    version,
    about = "Sparse online relative similarity learning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one learner; writes curve.csv, model.txt and report.json.
    Train(RunFlags),
    /// Score a saved model on a dataset and print a JSON report.
    Eval(EvalFlags),
    /// Train several learners on one triplet stream; writes bench.csv.
    Bench(RunFlags),
}

#[derive(Args)]
struct RunFlags {
    /// JSON file with flat keys; flags given here take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// LIBSVM file, optionally gzipped.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Algorithm name, or a comma-separated list for bench.
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// AdaSORS accumulator offset.
    #[arg(long)]
    delta: Option<f64>,
    /// OASIS aggressiveness.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long)]
    eval_every: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated precision cutoffs.
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Fixed feature dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// Fail on explicit zero feature values instead of dropping them.
    #[arg(long)]
    reject_zeros: bool,
}

impl RunFlags {
    fn resolve(self) -> Result<sors_cli::ExperimentConfig> {
        let file = match &self.config {
            Some(path) => ConfigLayer::from_json_file(path)?,
            None => ConfigLayer::default(),
        };
        let flags = ConfigLayer {
            dataset: self.dataset,
            algo: self.algo,
            lambda: self.lambda,
            eta: self.eta,
            delta: self.delta,
            c: self.c,
            iters: self.iters,
            eval_every: self.eval_every,
            seed: self.seed,
            out: self.out,
            k: self.k,
            train_fraction: self.train_fraction,
            dim: self.dim,
            reject_zeros: self.reject_zeros.then_some(true),
        };
        Ok(file.overridden_by(flags).resolve()?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Test,
    All,
}

#[derive(Args)]
struct EvalFlags {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// Score the seeded test split (as used by train) or every item.
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    reject_zeros: bool,
    /// Report zero wall time so repeated runs print identical output.
    #[arg(long)]
    no_timing: bool,
}

impl EvalFlags {
    fn resolve(self) -> Result<EvalArgs> {
        let split_spec = SplitSpec::new(self.train_fraction, self.seed)
            .map_err(|e| UsageError(e.to_string()))?;
        let ks = match &self.k {
            Some(k) => parse_ks(k)?,
            None => DEFAULT_KS.to_vec(),
        };
        if self.dim == Some(0) {
            return Err(UsageError("dim must be positive".into()).into());
        }
        Ok(EvalArgs {
            model: self.model,
            dataset: self.dataset,
            split: match self.split {
                SplitArg::Test => EvalSplit::Test,
                SplitArg::All => EvalSplit::All,
            },
            split_spec,
            ks,
            parse: ParseOptions {
                dim: self.dim,
                zeros: if self.reject_zeros {
                    ZeroPolicy::Reject
                } else {
                    ZeroPolicy::Drop
                },
            },
            timing: !self.no_timing,
        })
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Train(flags) => {
            let cfg = flags.resolve()?;
            let outcome = commands::train(&cfg)?;
            eprintln!(
                "trained {} for {} steps in {:.3}s; stream sha256 {}",
                cfg.algorithm()?,
                cfg.iters,
                outcome.train_seconds,
                outcome.stream_digest
            );
            println!("{}", serde_json::to_string_pretty(&outcome.report)?);
        }
        Command::Eval(flags) => {
            let report = commands::evaluate(&flags.resolve()?)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Bench(flags) => {
            let rows = commands::bench(&flags.resolve()?)?;
            print!("{}", bench_csv(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
