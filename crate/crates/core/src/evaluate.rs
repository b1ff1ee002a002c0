//! Structure-recovery metrics, Gelman-Rubin factors and the exact posterior
//! over orderings for small graphs.

use std::collections::HashMap;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::DataMatrix;
use crate::error::{Error, Result};
use crate::graph::{Dag, NodeSet, Ordering};
use crate::score::{ScoreKind, ScoreModel};

/// Largest node count accepted by [`exact_posterior`].
pub const EXACT_MAX_P: usize = 6;

/// Recovery metrics of an estimated edge-probability matrix against a true
/// 0/1 adjacency matrix. Percentages are in `[0, 100]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricReport {
    pub hd: f64,
    pub fnr_pct: f64,
    pub fdr_pct: f64,
    pub flip_pct: f64,
    /// The true graph has no edges, so FNR and flip are reported as 0.
    pub degenerate: bool,
}

/// HD, FNR, FDR and flip percentage. The FDR denominator is the total
/// estimated mass, and FDR is 0 when that mass is 0.
pub fn metrics(gamma_true: ArrayView2<'_, f64>, gamma_est: ArrayView2<'_, f64>) -> Result<MetricReport> {
    if gamma_true.dim() != gamma_est.dim() || gamma_true.nrows() != gamma_true.ncols() {
        return Err(Error::InvalidData(format!(
            "matrix shapes {:?} and {:?} do not match",
            gamma_true.dim(),
            gamma_est.dim()
        )));
    }
    let p = gamma_true.nrows();
    let (mut hd, mut missed, mut false_mass, mut est_mass, mut flipped, mut true_edges) =
        (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..p {
        for j in 0..p {
            let t = gamma_true[[i, j]];
            let e = gamma_est[[i, j]];
            hd += (t - e).abs();
            missed += t * (1.0 - e);
            false_mass += (1.0 - t) * e;
            est_mass += e;
            flipped += gamma_true[[j, i]] * e;
            true_edges += t;
        }
    }
    let degenerate = true_edges == 0.0;
    let pct = |num: f64, den: f64| if den == 0.0 { 0.0 } else { 100.0 * num / den };
    Ok(MetricReport {
        hd,
        fnr_pct: pct(missed, true_edges),
        fdr_pct: pct(false_mass, est_mass),
        flip_pct: pct(flipped, true_edges),
        degenerate,
    })
}

/// Hard edge calls: 1 where `pip >= threshold`.
pub fn threshold(pip: ArrayView2<'_, f64>, threshold: f64) -> Array2<f64> {
    pip.mapv(|v| if v >= threshold { 1.0 } else { 0.0 })
}

/// Mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

/// Potential scale reduction from per-chain means and sample variances of
/// streams of common length `n`, without the degrees-of-freedom correction.
/// Zero within-chain variance gives infinity when the chain means differ and
/// 1 when they agree.
pub fn psrf(means: &[f64], variances: &[f64], n: usize) -> f64 {
    let m = means.len() as f64;
    let nf = n as f64;
    let grand = means.iter().sum::<f64>() / m;
    let b = nf / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = variances.iter().sum::<f64>() / m;
    if w == 0.0 {
        return if b > 0.0 { f64::INFINITY } else { 1.0 };
    }
    let v = (nf - 1.0) / nf * w + (1.0 + 1.0 / m) * b / nf;
    (v / w).sqrt()
}

/// Gelman-Rubin factor of scalar streams, one per chain.
pub fn gelman_rubin_scalar(chains: &[&[f64]]) -> Result<f64> {
    let n = check_chains(chains.iter().map(|c| c.len()))?;
    let mut means = Vec::with_capacity(chains.len());
    let mut vars = Vec::with_capacity(chains.len());
    for c in chains {
        let mean = c.iter().sum::<f64>() / n as f64;
        let var = c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        means.push(mean);
        vars.push(var);
    }
    Ok(psrf(&means, &vars, n))
}

/// Per-edge Gelman-Rubin factors of the edge-inclusion indicators of DAG
/// sample streams, one stream per chain. Diagonal entries are 1.
pub fn gelman_rubin(chains: &[Vec<Dag>]) -> Result<Array2<f64>> {
    let n = check_chains(chains.iter().map(Vec::len))?;
    let p = chains[0][0].p();
    if chains.iter().flatten().any(|g| g.p() != p) {
        return Err(Error::InvalidData("DAG samples differ in node count".into()));
    }
    let counts: Vec<Array2<f64>> = chains
        .iter()
        .map(|c| {
            let mut k = Array2::<f64>::zeros((p, p));
            for g in c {
                for (i, j) in g.edges() {
                    k[[i, j]] += 1.0;
                }
            }
            k
        })
        .collect();
    let nf = n as f64;
    let mut out = Array2::from_elem((p, p), 1.0);
    for i in 0..p {
        for j in 0..p {
            if i == j {
                continue;
            }
            let means: Vec<f64> = counts.iter().map(|k| k[[i, j]] / nf).collect();
            // Sample variance of a 0/1 stream with mean m.
            let vars: Vec<f64> = means.iter().map(|m| nf / (nf - 1.0) * m * (1.0 - m)).collect();
            out[[i, j]] = psrf(&means, &vars, n);
        }
    }
    Ok(out)
}

fn check_chains(lengths: impl Iterator<Item = usize>) -> Result<usize> {
    let lengths: Vec<usize> = lengths.collect();
    if lengths.len() < 2 {
        return Err(Error::InvalidData(format!(
            "need at least 2 chains, got {}",
            lengths.len()
        )));
    }
    let n = lengths[0];
    if lengths.iter().any(|&l| l != n) {
        return Err(Error::InvalidData(format!("chain lengths differ: {lengths:?}")));
    }
    if n < 10 {
        return Err(Error::InvalidData(format!("chains need at least 10 draws, got {n}")));
    }
    Ok(n)
}

/// Posterior over orderings and DAGs by enumeration, with each ordering
/// represented by its exact best DAG.
#[derive(Debug, Clone)]
pub struct ExactPosterior {
    /// All orderings in lexicographic order.
    pub orderings: Vec<Ordering>,
    /// Score of each ordering's best DAG.
    pub log_scores: Vec<f64>,
    pub order_probs: Vec<f64>,
    pub map_dag_by_order: Vec<Dag>,
    /// DAG probabilities, largest first; ties by edge list.
    pub dag_probs: Vec<(Dag, f64)>,
}

impl ExactPosterior {
    pub fn order_prob(&self, sigma: &Ordering) -> f64 {
        self.orderings
            .iter()
            .position(|o| o == sigma)
            .map_or(0.0, |k| self.order_probs[k])
    }

    pub fn dag_prob(&self, g: &Dag) -> f64 {
        self.dag_probs
            .iter()
            .find(|(d, _)| d == g)
            .map_or(0.0, |(_, q)| *q)
    }

    pub fn map_dag(&self, sigma: &Ordering) -> Option<&Dag> {
        self.orderings
            .iter()
            .position(|o| o == sigma)
            .map(|k| &self.map_dag_by_order[k])
    }
}

/// Exact posterior for `p <= 6`. Each ordering's best DAG maximizes the
/// score over all DAGs consistent with it with in-degree at most
/// `model.d_in`; ties go to the lexicographically smallest sorted edge list.
/// Residuals come straight from [`DataMatrix::rss`].
pub fn exact_posterior(data: &DataMatrix, model: &ScoreModel) -> Result<ExactPosterior> {
    let p = data.p();
    if p > EXACT_MAX_P {
        return Err(Error::OutOfRange {
            what: "node count for exact enumeration",
            value: p,
            limit: EXACT_MAX_P,
        });
    }
    // Residual of node j on every parent mask of size <= d_in.
    let mut table: Vec<HashMap<u32, f64>> = vec![HashMap::new(); p];
    for (j, row) in table.iter_mut().enumerate() {
        for mask in 0u32..(1 << p) {
            if mask & (1 << j) != 0 || mask.count_ones() as usize > model.d_in {
                continue;
            }
            let members: Vec<usize> = (0..p).filter(|b| mask & (1 << b) != 0).collect();
            if let Ok(r) = data.rss_sorted(j, &members) {
                row.insert(mask, r);
            }
        }
    }

    let orderings = permutations(p);
    let best: Vec<(f64, Vec<u32>)> = orderings
        .par_iter()
        .map(|sigma| best_dag_for(sigma, &table, model))
        .collect::<Result<_>>()?;

    let log_scores: Vec<f64> = best.iter().map(|b| b.0).collect();
    let top = log_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_scores.iter().map(|s| (s - top).exp()).collect();
    let z: f64 = weights.iter().sum();
    let order_probs: Vec<f64> = weights.iter().map(|w| w / z).collect();

    let map_dag_by_order: Vec<Dag> = best
        .iter()
        .map(|(_, masks)| {
            let parents = masks
                .iter()
                .map(|&m| NodeSet::from_slice(p, &mask_members(m, p)))
                .collect();
            Dag::from_parents_unchecked(parents)
        })
        .collect();
    let mut by_dag: Vec<(Dag, f64)> = Vec::new();
    for (g, q) in map_dag_by_order.iter().zip(&order_probs) {
        match by_dag.iter_mut().find(|(d, _)| d == g) {
            Some(entry) => entry.1 += q,
            None => by_dag.push((g.clone(), *q)),
        }
    }
    by_dag.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.edges().cmp(&b.0.edges())));

    Ok(ExactPosterior {
        orderings,
        log_scores,
        order_probs,
        map_dag_by_order,
        dag_probs: by_dag,
    })
}

fn mask_members(mask: u32, p: usize) -> Vec<usize> {
    (0..p).filter(|b| mask & (1 << b) != 0).collect()
}

fn sorted_edges(masks: &[u32], p: usize) -> Vec<(usize, usize)> {
    let mut e: Vec<(usize, usize)> = masks
        .iter()
        .enumerate()
        .flat_map(|(j, &m)| mask_members(m, p).into_iter().map(move |i| (i, j)))
        .collect();
    e.sort_unstable();
    e
}

fn best_dag_for(
    sigma: &Ordering,
    table: &[HashMap<u32, f64>],
    model: &ScoreModel,
) -> Result<(f64, Vec<u32>)> {
    let p = sigma.len();
    // Feasible (mask, rss) choices per node.
    let options: Vec<Vec<(u32, f64)>> = (0..p)
        .map(|j| {
            let allowed: u32 = sigma.potential_parents(j).iter().map(|i| 1u32 << i).sum();
            let mut v: Vec<(u32, f64)> = table[j]
                .iter()
                .filter(|(&m, _)| m & !allowed == 0)
                .map(|(&m, &r)| (m, r))
                .collect();
            v.sort_unstable_by_key(|&(m, _)| m);
            v
        })
        .collect();

    let mut best: Option<(f64, Vec<u32>)> = None;
    let mut pick = vec![0usize; p];
    let mut rss = vec![0.0; p];
    loop {
        let mut edges = 0;
        for j in 0..p {
            let (m, r) = options[j][pick[j]];
            edges += m.count_ones() as usize;
            rss[j] = r;
        }
        let score = match model.kind {
            ScoreKind::Nondecomposable => model.phi(edges, rss.iter().sum())?,
            ScoreKind::Decomposable => model.phi_decomposable(edges, &rss)?,
        };
        let better = match &best {
            None => true,
            Some((b, masks)) => {
                score > *b
                    || (score == *b && {
                        let cand: Vec<u32> = (0..p).map(|j| options[j][pick[j]].0).collect();
                        sorted_edges(&cand, p) < sorted_edges(masks, p)
                    })
            }
        };
        if better {
            best = Some((score, (0..p).map(|j| options[j][pick[j]].0).collect()));
        }
        // Odometer over the per-node choices.
        let mut k = 0;
        while k < p {
            pick[k] += 1;
            if pick[k] < options[k].len() {
                break;
            }
            pick[k] = 0;
            k += 1;
        }
        if k == p {
            break;
        }
    }
    Ok(best.expect("the empty DAG is always feasible"))
}

/// All permutations of `0..p` in lexicographic order.
pub fn permutations(p: usize) -> Vec<Ordering> {
    let mut perm: Vec<usize> = (0..p).collect();
    let mut out = vec![Ordering::identity(p)];
    loop {
        let Some(k) = (0..p.saturating_sub(1)).rev().find(|&k| perm[k] < perm[k + 1]) else {
            return out;
        };
        let l = (k + 1..p).rev().find(|&l| perm[k] < perm[l]).expect("successor exists");
        perm.swap(k, l);
        perm[k + 1..].reverse();
        out.push(Ordering::new(perm.clone()).expect("valid permutation"));
    }
}
