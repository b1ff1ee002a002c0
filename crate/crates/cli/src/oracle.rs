use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use eqvar::dataset::read_matrix_csv;
use eqvar::evaluate::{exact_posterior, median};
use eqvar::rng::{derive_seed, seeded};
use eqvar::simulate::{gen_data, Truth};
use eqvar::{Dag, Hyperparams, ScoreModel};
use serde::{Deserialize, Serialize};

use crate::config::{FileConfig, HyperArgs};
use crate::learn::load_data;
use crate::manifest::{write_json, RunManifest};

#[derive(Debug, clap::Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleRun {
    pub data: PathBuf,
    pub header: bool,
    pub out: PathBuf,
    pub hyper: Hyperparams,
}

impl OracleArgs {
    pub fn resolve(&self, file: &FileConfig) -> OracleRun {
        OracleRun {
            data: self.data.clone(),
            header: self.header,
            out: self.out.clone(),
            hyper: self.hyper.resolve(&file.hyper),
        }
    }
}

fn edge_label(g: &Dag) -> String {
    let e: Vec<String> = g.edges().iter().map(|(i, j)| format!("{}>{}", i + 1, j + 1)).collect();
    e.join(";")
}

pub fn run(run: &OracleRun) -> Result<serde_json::Value> {
    let started = Instant::now();
    let data = load_data(&run.data, run.header)?;
    let model = ScoreModel::new(run.hyper, data.n(), data.p())?;
    let post = exact_posterior(&data, &model)?;
    std::fs::create_dir_all(&run.out)?;

    let mut orders = String::from("ordering,probability,log_score,map_edges\n");
    for k in 0..post.orderings.len() {
        let label: Vec<String> = post.orderings[k].to_one_based().iter().map(|v| v.to_string()).collect();
        writeln!(
            orders,
            "{},{},{},{}",
            label.join(" "),
            post.order_probs[k],
            post.log_scores[k],
            edge_label(&post.map_dag_by_order[k])
        )?;
    }
    std::fs::write(run.out.join("order_probs.csv"), orders)?;
    let mut dags = String::from("edges,probability\n");
    for (g, q) in &post.dag_probs {
        writeln!(dags, "{},{q}", edge_label(g))?;
    }
    std::fs::write(run.out.join("dag_probs.csv"), dags)?;

    let summary = serde_json::json!({
        "p": data.p(),
        "orderings": post.orderings.len(),
        "top_dag": edge_label(&post.dag_probs[0].0),
        "top_dag_probability": post.dag_probs[0].1,
    });
    write_json(&run.out.join("summary.json"), &summary)?;
    let mut manifest = RunManifest::new("oracle", run, 0, started)?;
    manifest.artifacts = vec!["order_probs.csv".into(), "dag_probs.csv".into(), "summary.json".into()];
    manifest.write(&run.out)?;
    Ok(summary)
}

#[derive(Debug, clap::Args)]
pub struct TrendArgs {
    /// Simulation directory holding weights.csv and variances.csv.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrendRun {
    pub truth: PathBuf,
    pub out: PathBuf,
    pub ns: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub hyper: Hyperparams,
}

impl TrendArgs {
    pub fn resolve(&self, file: &FileConfig) -> TrendRun {
        let f = &file.oracle;
        TrendRun {
            truth: self.truth.clone(),
            out: self.out.clone(),
            ns: self.ns.clone().or_else(|| f.ns.clone()).unwrap_or_else(|| vec![50, 200, 1000]),
            replicates: self.replicates.or(f.replicates).unwrap_or(20),
            seed: self.seed.or(f.seed).unwrap_or(0),
            hyper: self.hyper.resolve(&file.hyper),
        }
    }
}

fn load_truth(dir: &Path) -> Result<Truth> {
    let weights = read_matrix_csv(dir.join("weights.csv")).context("reading weights.csv")?;
    let variances = read_matrix_csv(dir.join("variances.csv")).context("reading variances.csv")?;
    let dag = Dag::from_adjacency(&weights.mapv(|w| f64::from(w != 0.0)))?;
    Ok(Truth {
        dag,
        weights,
        variances: variances.iter().copied().collect(),
    })
}

pub fn run_trend(run: &TrendRun) -> Result<serde_json::Value> {
    let started = Instant::now();
    let truth = load_truth(&run.truth)?;
    let p = truth.p();
    let mut rows = String::from("n,replicate,prob_true_dag\n");
    let mut summary = String::from("n,median,mean\n");
    let mut medians = Vec::new();
    for (k, &n) in run.ns.iter().enumerate() {
        let model = ScoreModel::new(run.hyper, n, p)?;
        let mut probs = Vec::with_capacity(run.replicates);
        for r in 0..run.replicates {
            let mut rng = seeded(derive_seed(run.seed, k * run.replicates + r));
            let data = gen_data(&truth, n, &mut rng)?;
            let q = exact_posterior(&data, &model)?.dag_prob(&truth.dag);
            writeln!(rows, "{n},{r},{q}")?;
            probs.push(q);
        }
        let med = median(&probs);
        writeln!(summary, "{n},{med},{}", probs.iter().sum::<f64>() / probs.len() as f64)?;
        medians.push(med);
    }
    std::fs::create_dir_all(&run.out)?;
    std::fs::write(run.out.join("trend.csv"), rows)?;
    std::fs::write(run.out.join("trend_summary.csv"), summary)?;
    let mut manifest = RunManifest::new("oracle-trend", run, run.seed, started)?;
    manifest.artifacts = vec!["trend.csv".into(), "trend_summary.csv".into()];
    manifest.write(&run.out)?;
    Ok(serde_json::json!({ "ns": run.ns, "median_prob_true_dag": medians }))
}
