//! Posterior scores, all in the log domain.
//!
//! For a DAG `G` with `|G|` edges and per-node residual sums of squares
//! `RSS_j(G)`:
//!
//! ```text
//! phi(G)  = -|G| c0 log p - |G|/2 log(1 + alpha/gamma)
//!           - (alpha p n + kappa)/2 * log(sum_j RSS_j(G))
//! phi'(G) = -|G| c0 log p - |G|/2 log(1 + alpha/gamma)
//!           - (alpha n + kappa)/2 * sum_j log RSS_j(G)
//! ```
//!
//! `phi` comes from a single error variance shared by all nodes and is not
//! decomposable; `phi'` is the per-node-variance baseline and is score
//! equivalent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default prior settings: `c0 = 3`, `alpha = 0.99`, `gamma = 0.01`,
/// `kappa = 0`.
pub const DEFAULT_C0: f64 = 3.0;
pub const DEFAULT_ALPHA: f64 = 0.99;
pub const DEFAULT_GAMMA: f64 = 0.01;
pub const DEFAULT_KAPPA: f64 = 0.0;
pub const DEFAULT_MAX_IN_DEGREE: usize = 10;

/// Full resyncs of the running RSS total happen after this many updates.
pub const RESYNC_INTERVAL: u32 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparams {
    pub c0: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub kappa: f64,
    /// Maximum in-degree; `None` means `min(p - 1, 10)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_in: Option<usize>,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            c0: DEFAULT_C0,
            alpha: DEFAULT_ALPHA,
            gamma: DEFAULT_GAMMA,
            kappa: DEFAULT_KAPPA,
            d_in: None,
        }
    }
}

impl Hyperparams {
    pub fn with_max_in_degree(mut self, d_in: usize) -> Self {
        self.d_in = Some(d_in);
        self
    }

    pub fn max_in_degree(&self, p: usize) -> usize {
        self.d_in
            .unwrap_or(DEFAULT_MAX_IN_DEGREE)
            .min(p.saturating_sub(1))
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return bad(format!("c0 must be positive, got {}", self.c0));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return bad(format!("kappa must be non-negative, got {}", self.kappa));
        }
        match self.d_in {
            Some(0) => bad("d_in must be at least 1".into()),
            Some(d) if d + 1 > p => bad(format!("d_in = {d} exceeds p - 1 = {}", p - 1)),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    /// Shared error variance; log of the summed RSS.
    #[default]
    Nondecomposable,
    /// Per-node error variances; sum of per-node log RSS.
    Decomposable,
}

impl std::str::FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nondecomposable" | "eqvar" => Ok(ScoreKind::Nondecomposable),
            "decomposable" => Ok(ScoreKind::Decomposable),
            other => Err(Error::Config(format!("unknown score kind {other:?}"))),
        }
    }
}

/// Hyperparameters bound to the data dimensions, with the constant factors
/// of the score precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreModel {
    pub hyper: Hyperparams,
    pub kind: ScoreKind,
    pub n: usize,
    pub p: usize,
    pub d_in: usize,
    /// `c0 log p + log(1 + alpha/gamma)/2`, the cost of one edge.
    pub edge_penalty: f64,
    /// `(alpha p n + kappa)/2`.
    pub rss_weight: f64,
    /// `(alpha n + kappa)/2`.
    pub node_rss_weight: f64,
}

impl ScoreModel {
    pub fn new(hyper: Hyperparams, n: usize, p: usize) -> Result<Self> {
        hyper.validate(p)?;
        let (nf, pf) = (n as f64, p as f64);
        Ok(ScoreModel {
            hyper,
            kind: ScoreKind::Nondecomposable,
            n,
            p,
            d_in: hyper.max_in_degree(p),
            edge_penalty: hyper.c0 * pf.ln() + 0.5 * (1.0 + hyper.alpha / hyper.gamma).ln(),
            rss_weight: (hyper.alpha * pf * nf + hyper.kappa) / 2.0,
            node_rss_weight: (hyper.alpha * nf + hyper.kappa) / 2.0,
        })
    }

    pub fn with_kind(mut self, kind: ScoreKind) -> Self {
        self.kind = kind;
        self
    }

    /// The non-decomposable score from the edge count and total RSS.
    pub fn phi(&self, edges: usize, total_rss: f64) -> Result<f64> {
        if !(total_rss > 0.0) {
            return Err(Error::NonPositiveRss { value: total_rss });
        }
        Ok(-(edges as f64) * self.edge_penalty - self.rss_weight * total_rss.ln())
    }

    /// The decomposable baseline from the edge count and per-node RSS.
    pub fn phi_decomposable(&self, edges: usize, rss_by_node: &[f64]) -> Result<f64> {
        let mut logs = Vec::with_capacity(rss_by_node.len());
        for &r in rss_by_node {
            if !(r > 0.0) {
                return Err(Error::NonPositiveRss { value: r });
            }
            logs.push(r.ln());
        }
        Ok(-(edges as f64) * self.edge_penalty - self.node_rss_weight * neumaier_sum(logs))
    }

    /// Score of the state under the model's score kind.
    pub fn score(&self, state: &ScoreState) -> Result<f64> {
        match self.kind {
            ScoreKind::Nondecomposable => self.phi(state.edge_count(), state.total_rss()),
            ScoreKind::Decomposable => {
                self.phi_decomposable(state.edge_count(), state.rss_by_node())
            }
        }
    }

    /// Score of the state after node `j` takes residual `rss` and the edge
    /// count changes by `edge_delta`, without mutating the state.
    pub fn score_with(
        &self,
        state: &ScoreState,
        j: usize,
        rss: f64,
        edge_delta: isize,
    ) -> Result<f64> {
        let edges = state.edge_count().checked_add_signed(edge_delta).unwrap_or(0);
        match self.kind {
            ScoreKind::Nondecomposable => {
                let total = state.total_rss() - state.rss_by_node()[j] + rss;
                self.phi(edges, total)
            }
            ScoreKind::Decomposable => {
                let old = state.rss_by_node()[j];
                if !(rss > 0.0) {
                    return Err(Error::NonPositiveRss { value: rss });
                }
                Ok(self.score(state)? - edge_delta as f64 * self.edge_penalty
                    - self.node_rss_weight * (rss.ln() - old.ln()))
            }
        }
    }

    /// Nodewise score of a parent set of size `set_size` with residual
    /// `rss_j`, given the total residual `rss_rest` of the other nodes.
    pub fn phi_nodewise(&self, set_size: usize, rss_j: f64, rss_rest: f64) -> Result<f64> {
        let total = rss_rest + rss_j;
        if !(rss_rest > 0.0) || !(total > 0.0) {
            return Err(Error::NonPositiveRss { value: total });
        }
        Ok(-(set_size as f64) * self.edge_penalty - self.rss_weight * total.ln())
    }

    /// Objective maximized by nodewise selection under the model's score kind.
    /// For the decomposable score `rss_rest` is ignored.
    pub fn node_objective(&self, set_size: usize, rss_j: f64, rss_rest: f64) -> Result<f64> {
        match self.kind {
            ScoreKind::Nondecomposable => self.phi_nodewise(set_size, rss_j, rss_rest),
            ScoreKind::Decomposable => {
                if !(rss_j > 0.0) {
                    return Err(Error::NonPositiveRss { value: rss_j });
                }
                Ok(-(set_size as f64) * self.edge_penalty - self.node_rss_weight * rss_j.ln())
            }
        }
    }
}

/// `min(0, phi_new - phi_old)`: the log Metropolis acceptance probability
/// under a symmetric proposal.
pub fn log_accept_ratio(phi_new: f64, phi_old: f64) -> f64 {
    (phi_new - phi_old).min(0.0)
}

/// Per-node RSS of the current DAG with a compensated running total.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreState {
    rss_by_node: Vec<f64>,
    sum: f64,
    compensation: f64,
    edge_count: usize,
    updates: u32,
}

impl ScoreState {
    pub fn new(rss_by_node: Vec<f64>, edge_count: usize) -> Self {
        let mut s = ScoreState {
            rss_by_node,
            sum: 0.0,
            compensation: 0.0,
            edge_count,
            updates: 0,
        };
        s.resync();
        s
    }

    pub fn rss_by_node(&self) -> &[f64] {
        &self.rss_by_node
    }

    pub fn total_rss(&self) -> f64 {
        self.sum + self.compensation
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Replaces node `j`'s residual and adjusts the edge count.
    pub fn set_node(&mut self, j: usize, rss: f64, edge_delta: isize) {
        let old = std::mem::replace(&mut self.rss_by_node[j], rss);
        self.edge_count = self
            .edge_count
            .checked_add_signed(edge_delta)
            .expect("edge count stays non-negative");
        self.updates += 1;
        if self.updates >= RESYNC_INTERVAL {
            self.resync();
        } else {
            self.add(-old);
            self.add(rss);
        }
    }

    /// Recomputes the total from scratch.
    pub fn resync(&mut self) {
        let (s, c) = neumaier(self.rss_by_node.iter().copied());
        self.sum = s;
        self.compensation = c;
        self.updates = 0;
    }

    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.compensation += (self.sum - t) + v;
        } else {
            self.compensation += (v - t) + self.sum;
        }
        self.sum = t;
    }
}

fn neumaier(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    (sum, c)
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (s, c) = neumaier(values.into_iter());
    s + c
}
