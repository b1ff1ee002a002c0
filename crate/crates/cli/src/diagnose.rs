use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use eqvar::dataset::write_matrix_csv;
use eqvar::evaluate::gelman_rubin;
use eqvar::mcmc::read_samples_jsonl;
use eqvar::Dag;
use serde::{Deserialize, Serialize};

use crate::manifest::{write_json, RunManifest};

#[derive(Debug, clap::Args)]
pub struct DiagnoseArgs {
    /// Learn output or chain directories; each contributes its samples.jsonl
    /// or those of its chain_* subdirectories.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Factor at or below which an edge counts as converged.
    #[arg(long, default_value_t = 1.1)]
    pub cutoff: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnoseRun {
    pub inputs: Vec<PathBuf>,
    pub out: PathBuf,
    pub cutoff: f64,
}

impl DiagnoseArgs {
    pub fn resolve(&self) -> DiagnoseRun {
        DiagnoseRun {
            inputs: self.inputs.clone(),
            out: self.out.clone(),
            cutoff: self.cutoff,
        }
    }
}

#[derive(Serialize)]
struct Summary {
    chains: usize,
    draws_per_chain: usize,
    directed_edges: usize,
    share_at_or_below_cutoff: f64,
    cutoff: f64,
    infinite: usize,
    median_finite: f64,
    q90_finite: f64,
    max_finite: f64,
}

fn sample_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let direct = dir.join("samples.jsonl");
    if direct.exists() {
        return Ok(vec![direct]);
    }
    let mut found: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path().join("samples.jsonl"))
        .filter(|p| p.exists())
        .collect();
    found.sort();
    Ok(found)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

pub fn run(run: &DiagnoseRun) -> Result<serde_json::Value> {
    let started = Instant::now();
    let mut chains: Vec<Vec<Dag>> = Vec::new();
    for input in &run.inputs {
        for file in sample_files(input)? {
            let samples = read_samples_jsonl(&file).with_context(|| format!("reading {}", file.display()))?;
            chains.push(samples.into_iter().map(|s| s.dag).collect());
        }
    }
    anyhow::ensure!(chains.len() >= 2, "need at least 2 chains with samples, found {}", chains.len());
    let gr = gelman_rubin(&chains)?;
    let p = gr.nrows();
    let off: Vec<f64> = gr
        .indexed_iter()
        .filter(|((i, j), _)| i != j)
        .map(|(_, v)| *v)
        .collect();
    let mut finite: Vec<f64> = off.iter().copied().filter(|v| v.is_finite()).collect();
    finite.sort_by(f64::total_cmp);
    let summary = Summary {
        chains: chains.len(),
        draws_per_chain: chains[0].len(),
        directed_edges: p * (p - 1),
        share_at_or_below_cutoff: off.iter().filter(|v| **v <= run.cutoff).count() as f64 / off.len() as f64,
        cutoff: run.cutoff,
        infinite: off.iter().filter(|v| v.is_infinite()).count(),
        median_finite: quantile(&finite, 0.5),
        q90_finite: quantile(&finite, 0.9),
        max_finite: finite.last().copied().unwrap_or(f64::NAN),
    };
    std::fs::create_dir_all(&run.out)?;
    write_matrix_csv(run.out.join("gr.csv"), gr.view(), None)?;
    write_json(&run.out.join("gr_summary.json"), &summary)?;
    let mut manifest = RunManifest::new("diagnose", run, 0, started)?;
    manifest.artifacts = vec!["gr.csv".into(), "gr_summary.json".into()];
    manifest.write(&run.out)?;
    Ok(serde_json::to_value(summary)?)
}
