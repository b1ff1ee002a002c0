//! Score-based top-down ordering estimates.
//!
//! STD builds an ordering one node at a time. Each round, every unplaced
//! node is regressed on a parent set chosen from the placed nodes, and the
//! unplaced node with the smallest residual is appended. Under equal error
//! variances a source node of the remaining graph has the smallest residual
//! variance, which is what makes the greedy choice sound. ITD reruns STD
//! seeded with the previous residual vector until the ordering stops
//! changing.

use serde::{Deserialize, Serialize};

use crate::dataset::DataMatrix;
use crate::error::{Error, Result};
use crate::graph::{NodeSet, Ordering};
use crate::score::ScoreModel;
use crate::selection::{best_subset_exhaustive, nodewise_fb, RssMemo};

/// Default cap on STD passes inside ITD.
pub const DEFAULT_MAX_OUTER: usize = 20;

/// How STD chooses each unplaced node's parent set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsetSearch {
    /// Nodewise forward-backward selection.
    #[default]
    Stepwise,
    /// Every subset of at most `d_in` placed nodes; at most 12 candidates.
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopDownResult {
    pub ordering: Ordering,
    /// Residual of each node on its parent set from the last round in which
    /// it was unplaced.
    pub rss: Vec<f64>,
    /// Number of STD passes run; 1 for a single STD call.
    pub outer_iterations: usize,
    /// Whether ITD reached a fixed point. Always true for a single STD call.
    pub converged: bool,
}

/// One STD pass seeded with `rss_init`. Ties go to the lowest node index.
pub fn std_pass(
    rss_init: &[f64],
    data: &DataMatrix,
    memo: &mut RssMemo,
    model: &ScoreModel,
    search: SubsetSearch,
) -> Result<TopDownResult> {
    let p = data.p();
    if rss_init.len() != p {
        return Err(Error::InvalidData(format!(
            "initial residual vector has length {}, expected {p}",
            rss_init.len()
        )));
    }
    if let Some(&bad) = rss_init.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::NonPositiveRss { value: bad });
    }
    let mut rss = rss_init.to_vec();
    let mut placed = NodeSet::empty(p);
    let mut order = Vec::with_capacity(p);
    let seed = argmin(&rss, |_| true);
    placed.insert(seed);
    order.push(seed);

    while order.len() < p {
        for j in (0..p).filter(|&j| !placed.contains(j)) {
            let rest = crate::dataset::sum_except(&rss, j);
            let set = match search {
                SubsetSearch::Stepwise => {
                    nodewise_fb(j, &placed, rest, rest, memo, data, model)?.0
                }
                SubsetSearch::Exhaustive => {
                    best_subset_exhaustive(j, &placed, rest, memo, data, model)?
                }
            };
            rss[j] = memo.get(data, j, &set).ok_or_else(|| Error::DegenerateDesign {
                node: j,
                set: set.to_vec(),
            })?;
        }
        let next = argmin(&rss, |j| !placed.contains(j));
        placed.insert(next);
        order.push(next);
    }
    Ok(TopDownResult {
        ordering: Ordering::new(order)?,
        rss,
        outer_iterations: 1,
        converged: true,
    })
}

/// Iterated STD, starting from the diagonal of the Gram matrix.
///
/// Stops when a pass reproduces the previous ordering; the returned residual
/// vector is the one that reproduces it. Gives up after `max_outer` passes
/// with `converged = false`.
pub fn itd(
    data: &DataMatrix,
    memo: &mut RssMemo,
    model: &ScoreModel,
    max_outer: usize,
    search: SubsetSearch,
) -> Result<TopDownResult> {
    if max_outer == 0 {
        return Err(Error::Config("max_outer must be at least 1".into()));
    }
    let diag: Vec<f64> = (0..data.p()).map(|j| data.gram()[[j, j]]).collect();
    let mut current = std_pass(&diag, data, memo, model, search)?;
    let mut passes = 1;
    while passes < max_outer {
        let next = std_pass(&current.rss, data, memo, model, search)?;
        passes += 1;
        if next.ordering == current.ordering {
            current.outer_iterations = passes;
            current.converged = true;
            return Ok(current);
        }
        current = next;
    }
    log::warn!("ITD did not reach a fixed point within {max_outer} passes");
    current.outer_iterations = passes;
    current.converged = false;
    Ok(current)
}

fn argmin(values: &[f64], keep: impl Fn(usize) -> bool) -> usize {
    let mut best: Option<usize> = None;
    for (j, &v) in values.iter().enumerate() {
        if keep(j) && best.is_none_or(|b| v < values[b]) {
            best = Some(j);
        }
    }
    best.expect("at least one candidate")
}
