//! Config file sections. Every key is optional; command-line flags win over
//! file values, which win over defaults.

use std::path::Path;

use anyhow::{Context, Result};
use eqvar::simulate::{VarianceModel, WeightDist};
use eqvar::{Hyperparams, MoveKind, ScoreKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub learn: LearnSection,
    #[serde(default)]
    pub hyper: HyperSection,
    #[serde(default)]
    pub oracle: OracleSection,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// p = 40, n = 500, weights on +-[0.3, 1], unit variances.
    Table1,
    /// The table1 setting over heterogeneity b = 0, 0.1, ..., 0.9.
    Fig2,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub preset: Option<Preset>,
    pub p: Option<usize>,
    pub n: Option<usize>,
    pub edge_prob: Option<f64>,
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub weights: Option<WeightDist>,
    pub variance: Option<VarianceModel>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnSection {
    pub chains: Option<usize>,
    pub iterations: Option<usize>,
    pub burn_in: Option<usize>,
    pub neighborhood: Option<MoveKind>,
    pub score: Option<ScoreKind>,
    pub init: Option<InitChoice>,
    /// 1-based initial ordering for `init = "given"`.
    pub order: Option<Vec<usize>>,
    pub seed: Option<u64>,
    pub thin: Option<usize>,
    pub rb_stride: Option<usize>,
    pub threshold: Option<f64>,
    pub max_outer: Option<usize>,
    pub header: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperSection {
    pub c0: Option<f64>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub kappa: Option<f64>,
    pub d_in: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub ns: Option<Vec<usize>>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InitChoice {
    Itd,
    Random,
    Given,
}

/// Hyperparameter flags shared by several commands.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct HyperArgs {
    #[arg(long)]
    pub c0: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Maximum in-degree; defaults to min(p - 1, 10).
    #[arg(long)]
    pub d_in: Option<usize>,
}

impl HyperArgs {
    pub fn resolve(&self, file: &HyperSection) -> Hyperparams {
        let d = Hyperparams::default();
        Hyperparams {
            c0: self.c0.or(file.c0).unwrap_or(d.c0),
            alpha: self.alpha.or(file.alpha).unwrap_or(d.alpha),
            gamma: self.gamma.or(file.gamma).unwrap_or(d.gamma),
            kappa: self.kappa.or(file.kappa).unwrap_or(d.kappa),
            d_in: self.d_in.or(file.d_in),
        }
    }
}

pub fn parse_move_kind(s: &str) -> Result<MoveKind, String> {
    s.parse().map_err(|e: eqvar::Error| e.to_string())
}

pub fn parse_score_kind(s: &str) -> Result<ScoreKind, String> {
    s.parse().map_err(|e: eqvar::Error| e.to_string())
}
