use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use eqvar::dataset::write_matrix_csv;
use eqvar::evaluate::threshold;
use eqvar::mcmc::run_multichain;
use eqvar::selection::RssMemo;
use eqvar::topdown::{itd, SubsetSearch, DEFAULT_MAX_OUTER};
use eqvar::{ChainConfig, DataMatrix, Hyperparams, InitKind, MoveKind, Ordering, ScoreKind, ScoreModel};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::config::{parse_move_kind, parse_score_kind, FileConfig, HyperArgs, InitChoice};
use crate::manifest::{check_artifacts, write_json, RunManifest};

#[derive(Debug, clap::Args)]
pub struct LearnArgs {
    /// Data CSV, one column per variable.
    #[arg(long)]
    pub data: PathBuf,
    /// The data file starts with a header row.
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Defaults to half the iterations.
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// adjacent, transposition or shuffle.
    #[arg(long, value_parser = parse_move_kind)]
    pub neighborhood: Option<MoveKind>,
    /// nondecomposable or decomposable.
    #[arg(long, value_parser = parse_score_kind)]
    pub score: Option<ScoreKind>,
    #[arg(long, value_enum)]
    pub init: Option<InitChoice>,
    /// 1-based initial ordering for --init given, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub order: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep every k-th post-burn-in sample in samples.jsonl; 0 keeps none.
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub rb_stride: Option<usize>,
    /// Edge probability cutoff for dag.txt.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnRun {
    pub data: PathBuf,
    pub header: bool,
    pub out: PathBuf,
    pub chains: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub neighborhood: MoveKind,
    pub score: ScoreKind,
    pub init: InitChoice,
    pub order: Option<Vec<usize>>,
    pub seed: u64,
    pub thin: usize,
    pub rb_stride: usize,
    pub threshold: f64,
    pub max_outer: usize,
    pub hyper: Hyperparams,
}

impl LearnArgs {
    pub fn resolve(&self, file: &FileConfig) -> Result<LearnRun> {
        let f = &file.learn;
        let iterations = self.iterations.or(f.iterations).unwrap_or(3000);
        let init = self.init.or(f.init).unwrap_or(InitChoice::Itd);
        let order = self.order.clone().or_else(|| f.order.clone());
        anyhow::ensure!(
            (init == InitChoice::Given) == order.is_some(),
            "--order is required with --init given and only allowed with it"
        );
        let run = LearnRun {
            data: self.data.clone(),
            header: self.header || f.header.unwrap_or(false),
            out: self.out.clone(),
            chains: self.chains.or(f.chains).unwrap_or(1),
            iterations,
            burn_in: self.burn_in.or(f.burn_in).unwrap_or(iterations / 2),
            neighborhood: self.neighborhood.or(f.neighborhood).unwrap_or(MoveKind::Adjacent),
            score: self.score.or(f.score).unwrap_or_default(),
            init,
            order,
            seed: self.seed.or(f.seed).unwrap_or(0),
            thin: self.thin.or(f.thin).unwrap_or(1),
            rb_stride: self.rb_stride.or(f.rb_stride).unwrap_or(1),
            threshold: self.threshold.or(f.threshold).unwrap_or(0.5),
            max_outer: self.max_outer.or(f.max_outer).unwrap_or(DEFAULT_MAX_OUTER),
            hyper: self.hyper.resolve(&file.hyper),
        };
        anyhow::ensure!(run.chains >= 1, "chains must be at least 1");
        anyhow::ensure!((0.0..=1.0).contains(&run.threshold), "threshold must lie in [0, 1]");
        Ok(run)
    }
}

impl LearnRun {
    fn chain_config(&self) -> Result<ChainConfig> {
        let init = match self.init {
            InitChoice::Itd => InitKind::Itd,
            InitChoice::Random => InitKind::Random,
            InitChoice::Given => InitKind::Given(Ordering::from_one_based(
                self.order.as_deref().context("missing --order")?,
            )?),
        };
        Ok(ChainConfig {
            iterations: self.iterations,
            burn_in: Some(self.burn_in),
            neighborhood: self.neighborhood,
            seed: self.seed,
            init,
            hyper: self.hyper,
            score_kind: self.score,
            thin: self.thin,
            rb_stride: self.rb_stride,
            max_outer: self.max_outer,
        })
    }
}

pub fn load_data(path: &Path, header: bool) -> Result<DataMatrix> {
    DataMatrix::load_csv(path, header).with_context(|| format!("loading {}", path.display()))
}

#[derive(Serialize)]
struct ChainSummary {
    chain: usize,
    seed: u64,
    initial_ordering: Vec<usize>,
    initial_score: f64,
    final_ordering: Vec<usize>,
    final_score: f64,
    acceptance_rate: f64,
    effective_iterations: usize,
    memo_entries: usize,
    cap_hits: u64,
}

#[derive(Serialize)]
struct WarmStart<'a> {
    ordering: &'a [usize],
    outer_iterations: usize,
    converged: bool,
}

pub fn run(run: &LearnRun, jobs: usize) -> Result<RunManifest> {
    let started = Instant::now();
    let data = load_data(&run.data, run.header)?;
    let p = data.p();
    let config = run.chain_config()?;
    config.validate(p)?;
    std::fs::create_dir_all(&run.out).with_context(|| format!("creating {}", run.out.display()))?;
    let mut artifacts = Vec::new();

    let model = ScoreModel::new(run.hyper, data.n(), p)?.with_kind(run.score);
    let warm = itd(&data, &mut RssMemo::new(p), &model, run.max_outer, SubsetSearch::Stepwise)?;
    write_json(
        &run.out.join("warm_start.json"),
        &WarmStart {
            ordering: &warm.ordering.to_one_based(),
            outer_iterations: warm.outer_iterations,
            converged: warm.converged,
        },
    )?;
    artifacts.push("warm_start.json".to_string());

    let results = run_multichain(&config, run.chains, &data, jobs)?;
    let mut pip = Array2::<f64>::zeros((p, p));
    let mut ok = 0;
    let mut failures = Vec::new();
    for (c, result) in results.into_iter().enumerate() {
        let out = match result {
            Ok(out) => out,
            Err(e) => {
                log::error!("chain {c} failed: {e}");
                failures.push(format!("chain {c}: {e}"));
                continue;
            }
        };
        let rel = format!("chain_{c:03}");
        let dir = run.out.join(&rel);
        std::fs::create_dir_all(&dir)?;
        out.write_trace_csv(dir.join("trace.csv"))?;
        out.write_samples_jsonl(dir.join("samples.jsonl"))?;
        write_matrix_csv(dir.join("pip.csv"), out.pip.view(), None)?;
        std::fs::write(dir.join("final_dag.txt"), out.final_dag.to_edge_list())?;
        let accepted = out.trace.iter().filter(|r| r.accepted).count();
        write_json(
            &dir.join("summary.json"),
            &ChainSummary {
                chain: c,
                seed: eqvar::rng::derive_seed(run.seed, c),
                initial_ordering: out.initial_ordering.to_one_based(),
                initial_score: out.initial_score,
                final_ordering: out.final_ordering.to_one_based(),
                final_score: out.trace.last().map_or(out.initial_score, |r| r.log_score),
                acceptance_rate: accepted as f64 / out.trace.len().max(1) as f64,
                effective_iterations: out.effective_iterations,
                memo_entries: out.memo_entries,
                cap_hits: out.cap_hits,
            },
        )?;
        for f in ["trace.csv", "samples.jsonl", "pip.csv", "final_dag.txt", "summary.json"] {
            artifacts.push(format!("{rel}/{f}"));
        }
        pip += &out.pip;
        ok += 1;
    }
    if ok > 0 {
        pip /= ok as f64;
        write_matrix_csv(run.out.join("pip.csv"), pip.view(), None)?;
        let calls = threshold(pip.view(), run.threshold);
        let mut edges = String::new();
        for ((i, j), v) in calls.indexed_iter() {
            if *v > 0.0 {
                edges.push_str(&format!("{} {}\n", i + 1, j + 1));
            }
        }
        std::fs::write(run.out.join("dag.txt"), edges)?;
        artifacts.push("pip.csv".into());
        artifacts.push("dag.txt".into());
    }
    let mut manifest = RunManifest::new("learn", run, run.seed, started)?;
    manifest.artifacts = artifacts;
    check_artifacts(&run.out, &manifest.artifacts)?;
    manifest.write(&run.out)?;
    anyhow::ensure!(failures.is_empty(), "{} of {} chains failed: {}", failures.len(), run.chains, failures.join("; "));
    Ok(manifest)
}
