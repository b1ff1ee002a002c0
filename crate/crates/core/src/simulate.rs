//! Synthetic Gaussian structural equation model data.
//!
//! The true ordering is the identity: edges only run from lower to higher
//! node indices. Each column is generated as
//! `X_j = sum_{i in Pa_j} B_ij X_i + e_j` with `e_j ~ N(0, omega_j)`.

use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{write_matrix_csv, DataMatrix};
use crate::error::{Error, Result};
use crate::graph::{Dag, NodeSet};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum WeightDist {
    /// Magnitude uniform on `[lo, hi]` with a fair random sign.
    Uniform { lo: f64, hi: f64 },
    /// Standard normal.
    Normal,
}

impl Default for WeightDist {
    fn default() -> Self {
        WeightDist::Uniform { lo: 0.3, hi: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum VarianceModel {
    /// Every error variance equals `omega`.
    Equal { omega: f64 },
    /// Error variances drawn from `Uniform[1 - b, 1 + b]`.
    Heterogeneous { b: f64 },
}

impl Default for VarianceModel {
    fn default() -> Self {
        VarianceModel::Equal { omega: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub p: usize,
    pub n: usize,
    /// Probability of each forward edge; `3 / (2p - 2)` when absent.
    #[serde(default)]
    pub edge_prob: Option<f64>,
    #[serde(default)]
    pub weights: WeightDist,
    #[serde(default)]
    pub variance: VarianceModel,
    #[serde(default)]
    pub seed: u64,
}

impl SimConfig {
    pub fn new(p: usize, n: usize, seed: u64) -> Self {
        SimConfig {
            p,
            n,
            edge_prob: None,
            weights: WeightDist::default(),
            variance: VarianceModel::default(),
            seed,
        }
    }

    /// Expected edge count `3p/4` for `p >= 2`.
    pub fn default_edge_prob(p: usize) -> f64 {
        (3.0 / (2.0 * p as f64 - 2.0)).min(1.0)
    }

    pub fn effective_edge_prob(&self) -> f64 {
        self.edge_prob.unwrap_or_else(|| Self::default_edge_prob(self.p))
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 || self.n < 2 {
            return Err(Error::Config(format!(
                "need p >= 2 and n >= 2, got p = {}, n = {}",
                self.p, self.n
            )));
        }
        let q = self.effective_edge_prob();
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Config(format!("edge_prob {q} outside [0, 1]")));
        }
        if let WeightDist::Uniform { lo, hi } = self.weights {
            if !(0.0 <= lo && lo <= hi && hi.is_finite()) {
                return Err(Error::Config(format!("weight range [{lo}, {hi}] is invalid")));
            }
        }
        match self.variance {
            VarianceModel::Equal { omega } if !(omega > 0.0 && omega.is_finite()) => {
                Err(Error::Config(format!("omega must be positive, got {omega}")))
            }
            VarianceModel::Heterogeneous { b } if !(0.0..1.0).contains(&b) => {
                Err(Error::Config(format!("b must lie in [0, 1), got {b}")))
            }
            _ => Ok(()),
        }
    }
}

/// True DAG, edge weights and error variances.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub dag: Dag,
    /// `weights[[i, j]]` is nonzero exactly when `i -> j` is an edge.
    pub weights: Array2<f64>,
    pub variances: Vec<f64>,
}

impl Truth {
    pub fn p(&self) -> usize {
        self.dag.p()
    }

    /// Population covariance `(I - B)^{-T} Omega (I - B)^{-1}`.
    pub fn covariance(&self) -> Array2<f64> {
        let p = self.p();
        // (I - B)^{-1} = I + B + B^2 + ... since B is strictly upper triangular.
        let mut inv = Array2::<f64>::eye(p);
        let mut power = Array2::<f64>::eye(p);
        for _ in 1..p {
            power = power.dot(&self.weights);
            inv += &power;
        }
        let omega = Array2::from_diag(&Array1::from(self.variances.clone()));
        inv.t().dot(&omega).dot(&inv)
    }
}

/// A truth together with data drawn from it.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub truth: Truth,
    pub data: DataMatrix,
}

impl GroundTruth {
    /// Writes `data.csv`, `truth_edges.txt`, `truth_adjacency.csv`,
    /// `weights.csv` and `variances.csv` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<Vec<String>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.data.write_csv(dir.join("data.csv"))?;
        let edges = dir.join("truth_edges.txt");
        std::fs::write(&edges, self.truth.dag.to_edge_list()).map_err(|e| Error::io(&edges, e))?;
        write_matrix_csv(dir.join("truth_adjacency.csv"), self.truth.dag.adjacency().view(), None)?;
        write_matrix_csv(dir.join("weights.csv"), self.truth.weights.view(), None)?;
        let var = Array2::from_shape_vec((self.truth.p(), 1), self.truth.variances.clone())
            .expect("column vector shape");
        write_matrix_csv(dir.join("variances.csv"), var.view(), None)?;
        Ok([
            "data.csv",
            "truth_edges.txt",
            "truth_adjacency.csv",
            "weights.csv",
            "variances.csv",
        ]
        .map(String::from)
        .to_vec())
    }
}

/// Draws the DAG, weights and variances. Edges are visited as `(i, j)` with
/// `i < j` in lexicographic order; each included edge draws its weight
/// immediately.
pub fn sample_truth<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<Truth> {
    cfg.validate()?;
    let p = cfg.p;
    let q = cfg.effective_edge_prob();
    let mut parents = vec![NodeSet::empty(p); p];
    let mut weights = Array2::zeros((p, p));
    for i in 0..p {
        for j in i + 1..p {
            if !rng.random_bool(q) {
                continue;
            }
            let w = match cfg.weights {
                WeightDist::Uniform { lo, hi } => {
                    let mag = if lo == hi { lo } else { rng.random_range(lo..=hi) };
                    if rng.random_bool(0.5) {
                        mag
                    } else {
                        -mag
                    }
                }
                WeightDist::Normal => rng.sample(StandardNormal),
            };
            if w == 0.0 {
                continue;
            }
            parents[j].insert(i);
            weights[[i, j]] = w;
        }
    }
    let variances = (0..p)
        .map(|_| match cfg.variance {
            VarianceModel::Equal { omega } => omega,
            VarianceModel::Heterogeneous { b: 0.0 } => 1.0,
            VarianceModel::Heterogeneous { b } => rng.random_range(1.0 - b..=1.0 + b),
        })
        .collect();
    Ok(Truth {
        dag: Dag::from_parents(parents)?,
        weights,
        variances,
    })
}

/// Draws `n` i.i.d. rows; within a row, noise is drawn in column order.
pub fn gen_data<R: Rng + ?Sized>(truth: &Truth, n: usize, rng: &mut R) -> Result<DataMatrix> {
    let p = truth.p();
    let sd: Vec<f64> = truth.variances.iter().map(|v| v.sqrt()).collect();
    let parents: Vec<Vec<(usize, f64)>> = (0..p)
        .map(|j| {
            truth
                .dag
                .parents(j)
                .iter()
                .map(|i| (i, truth.weights[[i, j]]))
                .collect()
        })
        .collect();
    let mut x = Array2::zeros((n, p));
    for r in 0..n {
        for j in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            let signal: f64 = parents[j].iter().map(|&(i, w)| w * x[[r, i]]).sum();
            x[[r, j]] = signal + sd[j] * z;
        }
    }
    DataMatrix::new(x)
}

/// Truth and data from `cfg.seed`.
pub fn simulate(cfg: &SimConfig) -> Result<GroundTruth> {
    let mut rng = seeded(cfg.seed);
    let truth = sample_truth(cfg, &mut rng)?;
    let data = gen_data(&truth, cfg.n, &mut rng)?;
    Ok(GroundTruth { truth, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_edge_prob_gives_empty_dag() {
        let mut cfg = SimConfig::new(10, 20, 0);
        cfg.edge_prob = Some(0.0);
        let t = sample_truth(&cfg, &mut seeded(1)).unwrap();
        assert_eq!(t.dag.edge_count(), 0);
    }

    #[test]
    fn default_edge_count_is_three_quarters_p() {
        let cfg = SimConfig::new(40, 2, 0);
        let mut rng = seeded(7);
        let draws = 10_000;
        let counts: Vec<f64> = (0..draws)
            .map(|_| sample_truth(&cfg, &mut rng).unwrap().dag.edge_count() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / draws as f64;
        // Binomial(780, 3/78): variance 780 q (1 - q).
        let q = 3.0 / 78.0;
        let se = (780.0 * q * (1.0 - q) / draws as f64).sqrt();
        assert!((mean - 30.0).abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn uniform_weights_stay_in_support() {
        let mut cfg = SimConfig::new(30, 2, 0);
        cfg.edge_prob = Some(0.5);
        let t = sample_truth(&cfg, &mut seeded(2)).unwrap();
        for (i, j) in t.dag.edges() {
            let w = t.weights[[i, j]].abs();
            assert!((0.3..=1.0).contains(&w));
        }
        let nonzero = t.weights.iter().filter(|w| **w != 0.0).count();
        assert_eq!(nonzero, t.dag.edge_count());
        assert!(t.dag.edges().iter().all(|&(i, j)| i < j));
    }

    #[test]
    fn heterogeneous_variances_in_range() {
        let mut cfg = SimConfig::new(50, 2, 0);
        cfg.variance = VarianceModel::Heterogeneous { b: 0.3 };
        let t = sample_truth(&cfg, &mut seeded(3)).unwrap();
        assert!(t.variances.iter().all(|v| (0.7..=1.3).contains(v)));
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = SimConfig::new(5, 10, 0);
        cfg.edge_prob = Some(1.5);
        assert!(cfg.validate().is_err());
        let mut cfg = SimConfig::new(5, 10, 0);
        cfg.variance = VarianceModel::Heterogeneous { b: 1.0 };
        assert!(cfg.validate().is_err());
        let mut cfg = SimConfig::new(5, 10, 0);
        cfg.variance = VarianceModel::Equal { omega: 0.0 };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn independent_columns_have_identity_covariance() {
        let mut cfg = SimConfig::new(5, 10_000, 11);
        cfg.edge_prob = Some(0.0);
        let g = simulate(&cfg).unwrap();
        let cov = g.data.gram().to_owned() / 10_000.0;
        let frob = (&cov - &Array2::<f64>::eye(5)).mapv(|v| v * v).sum().sqrt();
        assert!(frob < 0.2, "{frob}");
    }

    #[test]
    fn two_node_chain_moments() {
        let truth = Truth {
            dag: Dag::from_edges(2, &[(0, 1)]).unwrap(),
            weights: ndarray::array![[0.0, 1.0], [0.0, 0.0]],
            variances: vec![1.0, 1.0],
        };
        let sigma = truth.covariance();
        assert_eq!(sigma, ndarray::array![[1.0, 1.0], [1.0, 2.0]]);
        let d = gen_data(&truth, 100_000, &mut seeded(4)).unwrap();
        let s = d.gram().to_owned() / 100_000.0;
        assert!((s[[1, 1]] - 2.0).abs() < 0.04);
        assert!((s[[0, 1]] - 1.0).abs() < 0.02);
    }

    #[test]
    fn non_source_nodes_have_larger_population_variance() {
        let mut rng = seeded(9);
        for _ in 0..20 {
            let t = sample_truth(&SimConfig::new(15, 2, 0), &mut rng).unwrap();
            let sigma = t.covariance();
            for j in 0..15 {
                if !t.dag.parents(j).is_empty() {
                    assert!(sigma[[j, j]] > 1.0);
                } else {
                    assert!((sigma[[j, j]] - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn same_seed_same_bits() {
        let cfg = SimConfig::new(8, 50, 42);
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a.data.values(), b.data.values());
        assert_eq!(a.truth, b.truth);
    }

    #[test]
    fn writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let g = simulate(&SimConfig::new(4, 10, 1)).unwrap();
        let files = g.write_dir(dir.path()).unwrap();
        for f in files {
            assert!(dir.path().join(f).exists());
        }
        let text = std::fs::read_to_string(dir.path().join("truth_edges.txt")).unwrap();
        assert_eq!(Dag::parse_edge_list(4, &text).unwrap(), g.truth.dag);
    }
}
