//! Metropolis-Hastings sampling over orderings.
//!
//! Each state is an ordering paired with its MAP DAG. A proposal applies a
//! uniformly drawn move from the configured neighborhood, and the acceptance
//! ratio is the score difference of the two MAP DAGs since every
//! neighborhood is symmetric. Edge inclusion probabilities are averaged from
//! a conditional estimate at each post-burn-in state.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::DataMatrix;
use crate::error::{Error, Result};
use crate::graph::{sample_move, Dag, MoveKind, Ordering};
use crate::rng::{derive_seed, seeded};
use crate::score::{log_accept_ratio, Hyperparams, ScoreKind, ScoreModel};
use crate::selection::{Selected, SelectionCache, Selector};
use crate::topdown::{itd, SubsetSearch, DEFAULT_MAX_OUTER};

#[derive(Debug, Clone, PartialEq)]
pub enum InitKind {
    /// Iterative top-down estimate.
    Itd,
    /// Uniformly random ordering drawn from the chain's generator.
    Random,
    Given(Ordering),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub iterations: usize,
    /// Defaults to half of `iterations`.
    pub burn_in: Option<usize>,
    pub neighborhood: MoveKind,
    pub seed: u64,
    pub init: InitKind,
    pub hyper: Hyperparams,
    pub score_kind: ScoreKind,
    /// Keep every `thin`-th post-burn-in state; 0 keeps none.
    pub thin: usize,
    /// Accumulate edge probabilities every `rb_stride`-th post-burn-in state.
    pub rb_stride: usize,
    pub max_outer: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            iterations: 3000,
            burn_in: None,
            neighborhood: MoveKind::Adjacent,
            seed: 0,
            init: InitKind::Itd,
            hyper: Hyperparams::default(),
            score_kind: ScoreKind::Nondecomposable,
            thin: 0,
            rb_stride: 1,
            max_outer: DEFAULT_MAX_OUTER,
        }
    }
}

impl ChainConfig {
    pub fn effective_burn_in(&self) -> usize {
        self.burn_in.unwrap_or(self.iterations / 2)
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let burn = self.effective_burn_in();
        if self.iterations > 0 && burn >= self.iterations {
            return Err(Error::Config(format!(
                "burn_in {burn} must be below iterations {}",
                self.iterations
            )));
        }
        if self.iterations == 0 && burn > 0 {
            return Err(Error::Config("burn_in must be 0 when iterations is 0".into()));
        }
        if self.rb_stride == 0 {
            return Err(Error::Config("rb_stride must be at least 1".into()));
        }
        if self.max_outer == 0 {
            return Err(Error::Config("max_outer must be at least 1".into()));
        }
        if let InitKind::Given(o) = &self.init {
            if o.len() != p {
                return Err(Error::Config(format!(
                    "initial ordering has {} nodes, data has {p}",
                    o.len()
                )));
            }
        }
        self.hyper.validate(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Score of the current MAP DAG after the accept/reject step.
    pub log_score: f64,
    pub accepted: bool,
    pub nodewise_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub iteration: usize,
    pub ordering: Ordering,
    pub dag: Dag,
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub trace: Vec<TraceRecord>,
    /// Mean conditional edge probabilities over post-burn-in states.
    pub pip: Array2<f64>,
    pub initial_ordering: Ordering,
    /// Score of the initial MAP DAG.
    pub initial_score: f64,
    pub final_ordering: Ordering,
    pub final_dag: Dag,
    pub samples: Vec<Sample>,
    /// Nodewise searches run by proposals.
    pub effective_iterations: usize,
    /// Distinct residual evaluations made by the chain.
    pub memo_entries: usize,
    pub cap_hits: u64,
}

/// Conditional edge probabilities at `(sigma, current)`. For each `i` that
/// precedes `j`, the entry is `1 / (1 + exp(phi(G - e) - phi(G + e)))` for
/// `e = i -> j`, one of the two graphs being the current DAG. The in-degree
/// cap is not applied to `G + e`. Entries whose residual is degenerate are 0.
pub fn rb_matrix(sigma: &Ordering, current: &Selected, selector: &mut Selector<'_>) -> Result<Array2<f64>> {
    let p = sigma.len();
    let model = *selector.model();
    let mut out = Array2::zeros((p, p));
    for j in 0..p {
        let parents = current.dag.parents(j);
        for i in sigma.potential_parents(j).iter() {
            let present = parents.contains(i);
            let other_set = if present { parents.without(i) } else { parents.with(i) };
            let Some(r) = selector.rss(j, &other_set) else {
                log::debug!("edge {} -> {} has a degenerate design", i + 1, j + 1);
                continue;
            };
            let other = model.score_with(&current.state, j, r, if present { -1 } else { 1 })?;
            let (with, without) = if present {
                (current.score, other)
            } else {
                (other, current.score)
            };
            out[[i, j]] = 1.0 / (1.0 + (without - with).exp());
        }
    }
    Ok(out)
}

/// Runs one chain. Identical configuration and data give identical output.
pub fn run_chain(config: &ChainConfig, data: &DataMatrix) -> Result<ChainOutput> {
    let p = data.p();
    config.validate(p)?;
    let model = ScoreModel::new(config.hyper, data.n(), p)?.with_kind(config.score_kind);
    let burn_in = config.effective_burn_in();
    let mut rng = seeded(config.seed);
    let mut cache = SelectionCache::new(data)?;

    let mut sigma = match &config.init {
        InitKind::Itd => {
            itd(data, &mut cache.memo, &model, config.max_outer, SubsetSearch::Stepwise)?.ordering
        }
        InitKind::Random => Ordering::random(p, &mut rng),
        InitKind::Given(o) => o.clone(),
    };
    let initial_ordering = sigma.clone();
    let mut selector = Selector::with_cache(data, model, cache);
    let mut current = selector.map_dag(&sigma)?;
    let initial_score = current.score;

    let mut trace = Vec::with_capacity(config.iterations);
    let mut pip = Array2::zeros((p, p));
    let mut pip_count = 0usize;
    let mut rb_current: Option<Array2<f64>> = None;
    let mut samples = Vec::new();
    let mut effective = 0usize;

    for t in 0..config.iterations {
        let wrap = |e: Error| Error::Chain {
            chain: 0,
            iteration: t,
            source: Box::new(e),
        };
        let mv = sample_move(p, config.neighborhood, &mut rng);
        let proposed = sigma.apply(&mv).map_err(wrap)?;
        let (candidate, count) = selector.update_after_move(&proposed, &mv).map_err(wrap)?;
        effective += count;
        let u: f64 = rng.random();
        let accepted = u < log_accept_ratio(candidate.score, current.score).exp();
        if accepted {
            selector.commit();
            sigma = proposed;
            current = candidate;
            rb_current = None;
        } else {
            selector.rollback();
        }
        trace.push(TraceRecord {
            iteration: t,
            log_score: current.score,
            accepted,
            nodewise_count: count,
        });
        if t < burn_in {
            continue;
        }
        let k = t - burn_in;
        if k.is_multiple_of(config.rb_stride) {
            if rb_current.is_none() {
                rb_current = Some(rb_matrix(&sigma, &current, &mut selector).map_err(wrap)?);
            }
            pip += rb_current.as_ref().expect("just computed");
            pip_count += 1;
        }
        if config.thin > 0 && k.is_multiple_of(config.thin) {
            samples.push(Sample {
                iteration: t,
                ordering: sigma.clone(),
                dag: current.dag.clone(),
            });
        }
    }
    if pip_count > 0 {
        pip /= pip_count as f64;
    }
    let cache = selector.cache();
    Ok(ChainOutput {
        trace,
        pip,
        initial_ordering,
        initial_score,
        final_ordering: sigma,
        final_dag: current.dag,
        samples,
        effective_iterations: effective,
        memo_entries: cache.memo.len(),
        cap_hits: cache.stats.cap_hits,
    })
}

/// Runs `n_chains` independent chains with seeds `seed + index` on a pool of
/// `jobs` threads (0 lets the pool decide). Results are in chain order and do
/// not depend on scheduling; one chain failing does not stop the others.
pub fn run_multichain(
    config: &ChainConfig,
    n_chains: usize,
    data: &DataMatrix,
    jobs: usize,
) -> Result<Vec<Result<ChainOutput>>> {
    if n_chains == 0 {
        return Err(Error::Config("need at least one chain".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(|| {
        (0..n_chains)
            .into_par_iter()
            .map(|c| {
                let mut cfg = config.clone();
                cfg.seed = derive_seed(config.seed, c);
                run_chain(&cfg, data).map_err(|e| match e {
                    Error::Chain { iteration, source, .. } => Error::Chain {
                        chain: c,
                        iteration,
                        source,
                    },
                    other => other,
                })
            })
            .collect()
    }))
}

#[derive(Serialize, Deserialize)]
struct TraceRow {
    iteration: usize,
    log_score: f64,
    accepted: u8,
    nodewise_count: usize,
    effective_cum: usize,
}

#[derive(Serialize, Deserialize)]
struct SampleRow {
    iteration: usize,
    /// 1-based node labels.
    ordering: Vec<usize>,
    /// 1-based `[parent, child]` pairs.
    edges: Vec<[usize; 2]>,
}

impl ChainOutput {
    /// Trace CSV with columns iteration, log_score, accepted, nodewise_count
    /// and effective_cum.
    pub fn write_trace_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        let mut cum = 0;
        for r in &self.trace {
            cum += r.nodewise_count;
            w.serialize(TraceRow {
                iteration: r.iteration,
                log_score: r.log_score,
                accepted: u8::from(r.accepted),
                nodewise_count: r.nodewise_count,
                effective_cum: cum,
            })
            .map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// One JSON object per retained sample.
    pub fn write_samples_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for s in &self.samples {
            let row = SampleRow {
                iteration: s.iteration,
                ordering: s.ordering.to_one_based(),
                edges: s.dag.edges().iter().map(|&(i, j)| [i + 1, j + 1]).collect(),
            };
            let line = serde_json::to_string(&row).map_err(|e| Error::InvalidData(e.to_string()))?;
            writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Reads samples written by [`ChainOutput::write_samples_jsonl`].
pub fn read_samples_jsonl(path: impl AsRef<Path>) -> Result<Vec<Sample>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: SampleRow = serde_json::from_str(&line).map_err(|e| Error::Parse {
            row: k + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        let ordering = Ordering::from_one_based(&row.ordering)?;
        let edges: Vec<(usize, usize)> = row
            .edges
            .iter()
            .map(|&[i, j]| {
                if i == 0 || j == 0 {
                    Err(Error::Parse {
                        row: k + 1,
                        column: 0,
                        message: "node labels are 1-based".into(),
                    })
                } else {
                    Ok((i - 1, j - 1))
                }
            })
            .collect::<Result<_>>()?;
        out.push(Sample {
            iteration: row.iteration,
            dag: Dag::from_edges(ordering.len(), &edges)?,
            ordering,
        });
    }
    Ok(out)
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}
