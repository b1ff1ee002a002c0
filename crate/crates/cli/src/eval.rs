use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use eqvar::dataset::read_matrix_csv;
use eqvar::evaluate::{mean_se, metrics, threshold};
use eqvar::MetricReport;
use serde::{Deserialize, Serialize};

use crate::manifest::{write_json, RunManifest};

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    /// Simulation output directory (or parent of replicate directories with --batch).
    #[arg(long)]
    pub truth: PathBuf,
    /// Learn output directory (or parent of replicate directories with --batch).
    #[arg(long)]
    pub learn: PathBuf,
    /// Score hard edge calls at this cutoff instead of raw edge probabilities.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Evaluate every subdirectory present under both --truth and --learn.
    #[arg(long)]
    pub batch: bool,
    /// Directory for report.json and the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRun {
    pub truth: PathBuf,
    pub learn: PathBuf,
    pub threshold: Option<f64>,
    pub batch: bool,
    pub out: Option<PathBuf>,
}

impl EvalArgs {
    pub fn resolve(&self) -> EvalRun {
        EvalRun {
            truth: self.truth.clone(),
            learn: self.learn.clone(),
            threshold: self.threshold,
            batch: self.batch,
            out: self.out.clone(),
        }
    }
}

#[derive(Serialize)]
struct MeanSe {
    mean: f64,
    se: f64,
}

#[derive(Serialize)]
struct BatchReport {
    replicates: Vec<(String, MetricReport)>,
    hd: MeanSe,
    fnr_pct: MeanSe,
    fdr_pct: MeanSe,
    flip_pct: MeanSe,
}

pub fn evaluate_pair(truth: &Path, learn: &Path, cutoff: Option<f64>) -> Result<MetricReport> {
    let t = read_matrix_csv(truth.join("truth_adjacency.csv"))
        .with_context(|| format!("reading truth in {}", truth.display()))?;
    let mut pip = read_matrix_csv(learn.join("pip.csv"))
        .with_context(|| format!("reading edge probabilities in {}", learn.display()))?;
    if let Some(c) = cutoff {
        pip = threshold(pip.view(), c);
    }
    Ok(metrics(t.view(), pip.view())?)
}

pub fn run(run: &EvalRun) -> Result<serde_json::Value> {
    let started = Instant::now();
    let report = if run.batch {
        let mut names: Vec<String> = std::fs::read_dir(&run.truth)
            .with_context(|| format!("listing {}", run.truth.display()))?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_dir() && run.learn.join(e.file_name()).is_dir())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .collect();
        names.sort();
        anyhow::ensure!(!names.is_empty(), "no replicate directories shared by truth and learn");
        let replicates = names
            .iter()
            .map(|n| Ok((n.clone(), evaluate_pair(&run.truth.join(n), &run.learn.join(n), run.threshold)?)))
            .collect::<Result<Vec<_>>>()?;
        let stat = |f: fn(&MetricReport) -> f64| {
            let v: Vec<f64> = replicates.iter().map(|(_, r)| f(r)).collect();
            let (mean, se) = mean_se(&v);
            MeanSe { mean, se }
        };
        serde_json::to_value(BatchReport {
            hd: stat(|r| r.hd),
            fnr_pct: stat(|r| r.fnr_pct),
            fdr_pct: stat(|r| r.fdr_pct),
            flip_pct: stat(|r| r.flip_pct),
            replicates,
        })?
    } else {
        serde_json::to_value(evaluate_pair(&run.truth, &run.learn, run.threshold)?)?
    };
    if let Some(out) = &run.out {
        std::fs::create_dir_all(out)?;
        write_json(&out.join("report.json"), &report)?;
        let mut manifest = RunManifest::new("eval", run, 0, started)?;
        manifest.artifacts = vec!["report.json".into()];
        manifest.write(out)?;
    }
    Ok(report)
}
