use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use eqvar::rng::derive_seed;
use eqvar::simulate::{simulate, VarianceModel, WeightDist};
use eqvar::SimConfig;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{FileConfig, Preset};
use crate::manifest::{check_artifacts, write_json, RunManifest};

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub edge_prob: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replicate datasets per setting, written to rep_000, rep_001, ...
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Heterogeneous error variances on [1 - b, 1 + b].
    #[arg(long)]
    pub hetero_b: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateRun {
    pub out: PathBuf,
    pub base: SimConfig,
    pub replicates: usize,
    /// Heterogeneity levels, one subdirectory each; empty for a single setting.
    pub sweep: Vec<f64>,
}

impl SimulateArgs {
    pub fn resolve(&self, file: &FileConfig) -> Result<SimulateRun> {
        let f = &file.simulate;
        let preset = self.preset.or(f.preset);
        let mut base = SimConfig::new(40, 500, 0);
        base.weights = WeightDist::Uniform { lo: 0.3, hi: 1.0 };
        let sweep = match preset {
            Some(Preset::Fig2) => (0..10).map(|k| k as f64 / 10.0).collect(),
            _ => Vec::new(),
        };
        base.p = self.p.or(f.p).unwrap_or(base.p);
        base.n = self.n.or(f.n).unwrap_or(base.n);
        base.edge_prob = self.edge_prob.or(f.edge_prob);
        base.seed = self.seed.or(f.seed).unwrap_or(0);
        if let Some(w) = f.weights {
            base.weights = w;
        }
        if let Some(v) = f.variance {
            base.variance = v;
        }
        if let Some(b) = self.hetero_b {
            base.variance = VarianceModel::Heterogeneous { b };
        }
        base.validate()?;
        let replicates = self.replicates.or(f.replicates).unwrap_or(1);
        anyhow::ensure!(replicates >= 1, "replicates must be at least 1");
        Ok(SimulateRun {
            out: self.out.clone(),
            base,
            replicates,
            sweep,
        })
    }
}

pub fn run(run: &SimulateRun, jobs: usize) -> Result<RunManifest> {
    let started = Instant::now();
    let groups: Vec<(String, SimConfig)> = if run.sweep.is_empty() {
        vec![(String::new(), run.base)]
    } else {
        run.sweep
            .iter()
            .map(|&b| {
                let mut cfg = run.base;
                cfg.variance = VarianceModel::Heterogeneous { b };
                (format!("b_{b:.1}"), cfg)
            })
            .collect()
    };
    let mut leaves = Vec::new();
    for (g, (name, cfg)) in groups.iter().enumerate() {
        for r in 0..run.replicates {
            let mut leaf = *cfg;
            leaf.seed = derive_seed(run.base.seed, g * run.replicates + r);
            let mut rel = PathBuf::from(name);
            if run.replicates > 1 {
                rel.push(format!("rep_{r:03}"));
            }
            leaves.push((rel, leaf));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let written: Vec<Vec<String>> = pool.install(|| {
        leaves
            .par_iter()
            .map(|(rel, cfg)| -> Result<Vec<String>> {
                let dir = run.out.join(rel);
                let truth = simulate(cfg)?;
                let mut files = truth.write_dir(&dir)?;
                write_json(&dir.join("simulation.json"), cfg)?;
                files.push("simulation.json".into());
                Ok(files.into_iter().map(|f| rel.join(f).to_string_lossy().into_owned()).collect())
            })
            .collect::<Result<_>>()
    })?;
    let mut manifest = RunManifest::new("simulate", run, run.base.seed, started)?;
    manifest.artifacts = written.into_iter().flatten().collect();
    check_artifacts(&run.out, &manifest.artifacts)?;
    manifest.write(&run.out)?;
    Ok(manifest)
}
