//! `eqvar` command-line tool: simulate data, learn DAGs by order MCMC,
//! evaluate recovery, diagnose convergence and compute exact small-graph
//! posteriors. Each command writes a `manifest.json` that `eqvar replay`
//! can rerun.

mod config;
mod diagnose;
mod eval;
mod learn;
mod manifest;
mod oracle;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use eqvar::selection::RssMemo;
use eqvar::topdown::{itd, SubsetSearch, DEFAULT_MAX_OUTER};
use eqvar::ScoreModel;

use crate::config::{FileConfig, HyperArgs};
use crate::manifest::RunManifest;

#[derive(Parser)]
#[command(name = "eqvar", version, about = "Order MCMC for equal-variance Gaussian DAGs")]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, env = "EQVAR_CONFIG")]
    config: Option<PathBuf>,
    /// Worker threads for chains and replicates; outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic SEM datasets with their ground truth.
    Simulate(simulate::SimulateArgs),
    /// Sample orderings and estimate edge probabilities.
    Learn(learn::LearnArgs),
    /// Compare estimated edge probabilities with a ground truth.
    Eval(eval::EvalArgs),
    /// Per-edge Gelman-Rubin factors across chains.
    Diagnose(diagnose::DiagnoseArgs),
    /// Exact posterior over orderings and DAGs for p <= 6.
    Oracle(oracle::OracleArgs),
    /// Exact posterior of a simulated truth across sample sizes.
    OracleTrend(oracle::TrendArgs),
    /// Print the iterative top-down ordering as a JSON array.
    Itd(ItdArgs),
    /// Rerun the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(clap::Args)]
struct ItdArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    header: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_OUTER)]
    max_outer: usize,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(clap::Args)]
struct ReplayArgs {
    manifest: PathBuf,
    /// Write to this directory instead of the recorded one.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn summary(m: &RunManifest) -> serde_json::Value {
    serde_json::json!({ "command": m.command, "artifacts": m.artifacts.len(), "wall_time_s": m.wall_time_s })
}

fn replay(args: &ReplayArgs, jobs: usize) -> Result<()> {
    let m = RunManifest::read(&args.manifest)?;
    let cfg = m.config.clone();
    let out = args.out.clone();
    match m.command.as_str() {
        "simulate" => {
            let mut run: simulate::SimulateRun = serde_json::from_value(cfg)?;
            run.out = out.unwrap_or(run.out);
            print_json(&summary(&simulate::run(&run, jobs)?))
        }
        "learn" => {
            let mut run: learn::LearnRun = serde_json::from_value(cfg)?;
            run.out = out.unwrap_or(run.out);
            print_json(&summary(&learn::run(&run, jobs)?))
        }
        "eval" => {
            let mut run: eval::EvalRun = serde_json::from_value(cfg)?;
            run.out = out.or(run.out);
            print_json(&eval::run(&run)?)
        }
        "diagnose" => {
            let mut run: diagnose::DiagnoseRun = serde_json::from_value(cfg)?;
            run.out = out.unwrap_or(run.out);
            print_json(&diagnose::run(&run)?)
        }
        "oracle" => {
            let mut run: oracle::OracleRun = serde_json::from_value(cfg)?;
            run.out = out.unwrap_or(run.out);
            print_json(&oracle::run(&run)?)
        }
        "oracle-trend" => {
            let mut run: oracle::TrendRun = serde_json::from_value(cfg)?;
            run.out = out.unwrap_or(run.out);
            print_json(&oracle::run_trend(&run)?)
        }
        other => anyhow::bail!("manifest records unknown command {other:?}"),
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Simulate(a) => print_json(&summary(&simulate::run(&a.resolve(&file)?, cli.jobs)?)),
        Command::Learn(a) => print_json(&summary(&learn::run(&a.resolve(&file)?, cli.jobs)?)),
        Command::Eval(a) => print_json(&eval::run(&a.resolve())?),
        Command::Diagnose(a) => print_json(&diagnose::run(&a.resolve())?),
        Command::Oracle(a) => print_json(&oracle::run(&a.resolve(&file))?),
        Command::OracleTrend(a) => print_json(&oracle::run_trend(&a.resolve(&file))?),
        Command::Itd(a) => {
            let data = learn::load_data(&a.data, a.header)?;
            let model = ScoreModel::new(a.hyper.resolve(&file.hyper), data.n(), data.p())?;
            let out = itd(&data, &mut RssMemo::new(data.p()), &model, a.max_outer, SubsetSearch::Stepwise)?;
            if !out.converged {
                log::warn!("no fixed point after {} passes", out.outer_iterations);
            }
            println!("{}", serde_json::to_string(&out.ordering.to_one_based())?);
            Ok(())
        }
        Command::Replay(a) => replay(&a, cli.jobs).context("replaying manifest"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
