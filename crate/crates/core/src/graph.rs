//! Orderings, DAGs and the proposal neighborhoods on the permutation space.
//!
//! Nodes and positions are 0-based in the API. Text formats (edge lists,
//! orderings in JSON) are 1-based.

use std::fmt;
use std::ops::RangeInclusive;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// A set of node indices backed by a fixed-width bitset.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct NodeSet {
    words: SmallVec<[u64; 2]>,
}

impl NodeSet {
    pub fn empty(p: usize) -> Self {
        NodeSet {
            words: SmallVec::from_elem(0, p.div_ceil(64).max(1)),
        }
    }

    pub fn from_slice(p: usize, items: &[usize]) -> Self {
        let mut s = NodeSet::empty(p);
        for &i in items {
            s.insert(i);
        }
        s
    }

    /// Number of nodes the set can address.
    pub fn capacity(&self) -> usize {
        self.words.len() * 64
    }

    pub fn insert(&mut self, i: usize) -> bool {
        let (w, b) = (i / 64, 1u64 << (i % 64));
        let fresh = self.words[w] & b == 0;
        self.words[w] |= b;
        fresh
    }

    pub fn remove(&mut self, i: usize) -> bool {
        let (w, b) = (i / 64, 1u64 << (i % 64));
        let present = self.words[w] & b != 0;
        self.words[w] &= !b;
        present
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words
            .get(i / 64)
            .is_some_and(|w| w & (1u64 << (i % 64)) != 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn with(&self, i: usize) -> Self {
        let mut s = self.clone();
        s.insert(i);
        s
    }

    pub fn without(&self, i: usize) -> Self {
        let mut s = self.clone();
        s.remove(i);
        s
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.words
            .iter()
            .zip(other.words.iter().chain(std::iter::repeat(&0)))
            .all(|(a, b)| a & !b == 0)
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A topological ordering: `perm[pos]` is the node at position `pos`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Ordering {
    perm: Vec<usize>,
    inverse: Vec<usize>,
}

impl Ordering {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let p = perm.len();
        let mut inverse = vec![usize::MAX; p];
        for (pos, &node) in perm.iter().enumerate() {
            if node >= p || inverse[node] != usize::MAX {
                return Err(Error::InvalidData(format!(
                    "{perm:?} is not a permutation of 0..{p}"
                )));
            }
            inverse[node] = pos;
        }
        Ok(Ordering { perm, inverse })
    }

    /// Builds an ordering from 1-based node labels.
    pub fn from_one_based(labels: &[usize]) -> Result<Self> {
        if labels.contains(&0) {
            return Err(Error::InvalidData("node labels are 1-based".into()));
        }
        Ordering::new(labels.iter().map(|&l| l - 1).collect())
    }

    pub fn identity(p: usize) -> Self {
        Ordering {
            perm: (0..p).collect(),
            inverse: (0..p).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Self {
        use rand::seq::SliceRandom;
        let mut perm: Vec<usize> = (0..p).collect();
        perm.shuffle(rng);
        Ordering::new(perm).expect("shuffle yields a permutation")
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.perm.iter().map(|&v| v + 1).collect()
    }

    pub fn node_at(&self, pos: usize) -> usize {
        self.perm[pos]
    }

    pub fn position(&self, node: usize) -> usize {
        self.inverse[node]
    }

    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.inverse[a] < self.inverse[b]
    }

    /// Nodes preceding `j`.
    pub fn potential_parents(&self, j: usize) -> NodeSet {
        NodeSet::from_slice(self.len(), &self.perm[..self.inverse[j]])
    }

    pub fn apply(&self, mv: &Move) -> Result<Ordering> {
        let mut next = self.clone();
        next.apply_in_place(mv)?;
        Ok(next)
    }

    /// Applies a move, touching only positions in `mv.touched()`.
    pub fn apply_in_place(&mut self, mv: &Move) -> Result<()> {
        let p = self.len();
        for pos in [mv.i, mv.j] {
            if pos >= p {
                return Err(Error::OutOfRange {
                    what: "move position",
                    value: pos,
                    limit: p,
                });
            }
        }
        let (i, j) = (mv.i, mv.j);
        match mv.kind {
            MoveKind::Adjacent | MoveKind::Transposition => self.perm.swap(i, j),
            MoveKind::Shuffle if i < j => self.perm[i..=j].rotate_left(1),
            MoveKind::Shuffle => self.perm[j..=i].rotate_right(1),
        }
        for pos in mv.touched() {
            self.inverse[self.perm[pos]] = pos;
        }
        Ok(())
    }
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.perm.iter().map(|v| (v + 1).to_string()).collect();
        write!(f, "({})", labels.join(","))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveKind {
    /// Swap of two neighbouring positions.
    Adjacent,
    /// Swap of two arbitrary positions.
    Transposition,
    /// Removal of the element at one position and reinsertion at another.
    Shuffle,
}

impl MoveKind {
    /// Number of proposals in the neighborhood of any ordering of `p` nodes.
    /// Shuffle proposals are indexed by ordered position pairs.
    pub fn neighborhood_size(self, p: usize) -> usize {
        match self {
            MoveKind::Adjacent => p.saturating_sub(1),
            MoveKind::Transposition => p * p.saturating_sub(1) / 2,
            MoveKind::Shuffle => p * p.saturating_sub(1),
        }
    }

    /// Every proposal of this kind for `p` nodes, each listed once.
    pub fn enumerate(self, p: usize) -> Vec<Move> {
        let mut out = Vec::with_capacity(self.neighborhood_size(p));
        for i in 0..p {
            for j in 0..p {
                let keep = match self {
                    MoveKind::Adjacent => j == i + 1,
                    MoveKind::Transposition => i < j,
                    MoveKind::Shuffle => i != j,
                };
                if keep {
                    out.push(Move { kind: self, i, j });
                }
            }
        }
        out
    }
}

impl std::str::FromStr for MoveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adjacent" | "adj" => Ok(MoveKind::Adjacent),
            "transposition" | "rtp" => Ok(MoveKind::Transposition),
            "shuffle" | "rrs" => Ok(MoveKind::Shuffle),
            other => Err(Error::Config(format!("unknown neighborhood {other:?}"))),
        }
    }
}

/// A proposal on the ordering space, addressed by positions.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Move {
    pub kind: MoveKind,
    pub i: usize,
    pub j: usize,
}

impl Move {
    pub fn new(kind: MoveKind, i: usize, j: usize) -> Result<Self> {
        let ok = match kind {
            MoveKind::Adjacent => j == i + 1,
            MoveKind::Transposition | MoveKind::Shuffle => i != j,
        };
        if !ok {
            return Err(Error::InvalidData(format!(
                "invalid {kind:?} move ({i}, {j})"
            )));
        }
        Ok(Move { kind, i, j })
    }

    /// Contiguous range of positions whose nodes change.
    pub fn touched(&self) -> RangeInclusive<usize> {
        self.i.min(self.j)..=self.i.max(self.j)
    }

    pub fn touched_len(&self) -> usize {
        self.i.abs_diff(self.j) + 1
    }

    /// The move that undoes this one.
    pub fn inverse(&self) -> Move {
        match self.kind {
            MoveKind::Shuffle => Move {
                kind: MoveKind::Shuffle,
                i: self.j,
                j: self.i,
            },
            _ => *self,
        }
    }
}

/// Draws a proposal uniformly from the neighborhood of the given kind.
pub fn sample_move<R: Rng + ?Sized>(p: usize, kind: MoveKind, rng: &mut R) -> Move {
    assert!(p >= 2, "proposals need at least two nodes");
    match kind {
        MoveKind::Adjacent => {
            let i = rng.random_range(0..p - 1);
            Move { kind, i, j: i + 1 }
        }
        MoveKind::Transposition | MoveKind::Shuffle => {
            let i = rng.random_range(0..p);
            let mut j = rng.random_range(0..p - 1);
            if j >= i {
                j += 1;
            }
            if kind == MoveKind::Transposition && i > j {
                Move { kind, i: j, j: i }
            } else {
                Move { kind, i, j }
            }
        }
    }
}

/// A DAG stored as one parent set per node.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Dag {
    parents: Vec<NodeSet>,
    edge_count: usize,
}

impl Dag {
    pub fn empty(p: usize) -> Self {
        Dag {
            parents: vec![NodeSet::empty(p); p],
            edge_count: 0,
        }
    }

    /// Builds a DAG from parent sets, rejecting self-loops and cycles.
    pub fn from_parents(parents: Vec<NodeSet>) -> Result<Self> {
        let p = parents.len();
        for (j, s) in parents.iter().enumerate() {
            if s.contains(j) {
                return Err(Error::InvalidData(format!("self-loop at node {}", j + 1)));
            }
            if s.iter().any(|i| i >= p) {
                return Err(Error::InvalidData(format!(
                    "parent of node {} out of range",
                    j + 1
                )));
            }
        }
        let dag = Self::from_parents_unchecked(parents);
        if dag.topological_order().is_none() {
            return Err(Error::InvalidData("graph contains a directed cycle".into()));
        }
        Ok(dag)
    }

    pub(crate) fn from_parents_unchecked(parents: Vec<NodeSet>) -> Self {
        let edge_count = parents.iter().map(NodeSet::len).sum();
        Dag {
            parents,
            edge_count,
        }
    }

    pub fn from_edges(p: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut parents = vec![NodeSet::empty(p); p];
        for &(i, j) in edges {
            if i >= p || j >= p {
                return Err(Error::OutOfRange {
                    what: "edge endpoint",
                    value: i.max(j),
                    limit: p,
                });
            }
            parents[j].insert(i);
        }
        Dag::from_parents(parents)
    }

    pub fn p(&self) -> usize {
        self.parents.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn parents(&self, j: usize) -> &NodeSet {
        &self.parents[j]
    }

    pub fn parent_sets(&self) -> &[NodeSet] {
        &self.parents
    }

    pub fn children(&self, j: usize) -> NodeSet {
        let mut out = NodeSet::empty(self.p());
        for (k, s) in self.parents.iter().enumerate() {
            if s.contains(j) {
                out.insert(k);
            }
        }
        out
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.parents[j].contains(i)
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) -> bool {
        let removed = self.parents[j].remove(i);
        if removed {
            self.edge_count -= 1;
        }
        removed
    }

    /// Edges `(i, j)` meaning `i -> j`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .parents
            .iter()
            .enumerate()
            .flat_map(|(j, s)| s.iter().map(move |i| (i, j)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn max_in_degree(&self) -> usize {
        self.parents.iter().map(NodeSet::len).max().unwrap_or(0)
    }

    /// True iff every edge points forward in `sigma`.
    pub fn is_consistent(&self, sigma: &Ordering) -> bool {
        self.parents
            .iter()
            .enumerate()
            .all(|(j, s)| s.iter().all(|i| sigma.precedes(i, j)))
    }

    /// A topological order, or `None` when the graph has a cycle.
    pub fn topological_order(&self) -> Option<Ordering> {
        let p = self.p();
        let mut indeg: Vec<usize> = self.parents.iter().map(NodeSet::len).collect();
        let children: Vec<NodeSet> = (0..p).map(|j| self.children(j)).collect();
        let mut ready: std::collections::BTreeSet<usize> =
            (0..p).filter(|&j| indeg[j] == 0).collect();
        let mut perm = Vec::with_capacity(p);
        while let Some(v) = ready.pop_first() {
            perm.push(v);
            for c in children[v].iter() {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        (perm.len() == p).then(|| Ordering::new(perm).expect("valid permutation"))
    }

    /// 0/1 adjacency matrix with `m[i][j] = 1` iff `i -> j`.
    pub fn adjacency(&self) -> Array2<f64> {
        let p = self.p();
        let mut m = Array2::zeros((p, p));
        for (i, j) in self.edges() {
            m[[i, j]] = 1.0;
        }
        m
    }

    pub fn from_adjacency(m: &Array2<f64>) -> Result<Self> {
        let p = m.nrows();
        let edges: Vec<(usize, usize)> = m
            .indexed_iter()
            .filter(|(_, &v)| v != 0.0)
            .map(|((i, j), _)| (i, j))
            .collect();
        Dag::from_edges(p, &edges)
    }

    /// One `i j` line per edge, 1-based.
    pub fn to_edge_list(&self) -> String {
        self.edges()
            .iter()
            .map(|(i, j)| format!("{} {}\n", i + 1, j + 1))
            .collect()
    }

    pub fn parse_edge_list(p: usize, text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |k: usize| -> Result<usize> {
                let v: usize = fields
                    .get(k)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Parse {
                        row: line_no + 1,
                        column: k + 1,
                        message: format!("expected two 1-based node labels, got {line:?}"),
                    })?;
                if v == 0 || v > p {
                    return Err(Error::Parse {
                        row: line_no + 1,
                        column: k + 1,
                        message: format!("node label {v} outside 1..={p}"),
                    });
                }
                Ok(v - 1)
            };
            if fields.len() != 2 {
                return Err(Error::Parse {
                    row: line_no + 1,
                    column: 1,
                    message: format!("expected two fields, got {line:?}"),
                });
            }
            edges.push((parse(0)?, parse(1)?));
        }
        Dag::from_edges(p, &edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand::Rng;
    use proptest::prelude::*;

    fn ord(labels: &[usize]) -> Ordering {
        Ordering::from_one_based(labels).unwrap()
    }

    #[test]
    fn potential_parents_examples() {
        assert!(ord(&[1, 2, 3]).potential_parents(0).is_empty());
        assert_eq!(ord(&[3, 1, 2]).potential_parents(1).to_vec(), vec![0, 2]);
        assert_eq!(ord(&[2, 1, 3]).potential_parents(2).to_vec(), vec![0, 1]);
    }

    #[test]
    fn apply_move_examples() {
        let m = Move::new(MoveKind::Transposition, 0, 1).unwrap();
        assert_eq!(ord(&[1, 2, 3]).apply(&m).unwrap(), ord(&[2, 1, 3]));
        let m = Move::new(MoveKind::Shuffle, 0, 2).unwrap();
        assert_eq!(ord(&[1, 2, 3]).apply(&m).unwrap(), ord(&[2, 3, 1]));
        let m = Move::new(MoveKind::Transposition, 1, 3).unwrap();
        assert_eq!(ord(&[4, 3, 2, 1]).apply(&m).unwrap(), ord(&[4, 1, 2, 3]));
    }

    #[test]
    fn apply_move_rejects_out_of_range() {
        let m = Move::new(MoveKind::Transposition, 0, 5).unwrap();
        assert!(ord(&[1, 2, 3]).apply(&m).is_err());
        assert!(Move::new(MoveKind::Adjacent, 0, 2).is_err());
        assert!(Move::new(MoveKind::Shuffle, 1, 1).is_err());
    }

    #[test]
    fn ordering_rejects_non_permutations() {
        assert!(Ordering::new(vec![0, 0, 1]).is_err());
        assert!(Ordering::new(vec![0, 3, 1]).is_err());
    }

    #[test]
    fn neighborhood_sizes() {
        for p in 2..8 {
            for kind in [MoveKind::Adjacent, MoveKind::Transposition, MoveKind::Shuffle] {
                assert_eq!(kind.enumerate(p).len(), kind.neighborhood_size(p));
            }
        }
        assert_eq!(MoveKind::Adjacent.neighborhood_size(20), 19);
        assert_eq!(MoveKind::Transposition.neighborhood_size(20), 190);
    }

    #[test]
    fn two_nodes_have_a_single_neighbor() {
        let mut rng = seeded(1);
        let sigma = ord(&[1, 2]);
        for kind in [MoveKind::Adjacent, MoveKind::Transposition, MoveKind::Shuffle] {
            for _ in 0..20 {
                let m = sample_move(2, kind, &mut rng);
                assert_eq!(sigma.apply(&m).unwrap(), ord(&[2, 1]));
            }
        }
    }

    #[test]
    fn adjacent_sampling_is_uniform() {
        let mut rng = seeded(7);
        let draws = 100_000;
        let mut counts = [0usize; 19];
        for _ in 0..draws {
            counts[sample_move(20, MoveKind::Adjacent, &mut rng).i] += 1;
        }
        let expect = draws as f64 / 19.0;
        let sd = (expect * (1.0 - 1.0 / 19.0)).sqrt();
        for c in counts {
            assert!((c as f64 - expect).abs() < 5.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn transposition_sampling_is_uniform() {
        let mut rng = seeded(8);
        let draws = 190 * 600;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..draws {
            let m = sample_move(20, MoveKind::Transposition, &mut rng);
            assert!(m.i < m.j);
            *counts.entry((m.i, m.j)).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 190);
        let expect = 600.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expect).powi(2) / expect)
            .sum();
        // 189 degrees of freedom; the 0.999 quantile is about 264.
        assert!(chi2 < 264.0, "chi2 = {chi2}");
    }

    #[test]
    fn neighborhoods_are_symmetric_exhaustively() {
        use itertools_free_permutations as perms;
        for p in 2..=5 {
            for perm in perms(p) {
                let sigma = Ordering::new(perm).unwrap();
                for kind in [MoveKind::Adjacent, MoveKind::Transposition, MoveKind::Shuffle] {
                    for m in kind.enumerate(p) {
                        let next = sigma.apply(&m).unwrap();
                        let back = kind
                            .enumerate(p)
                            .iter()
                            .any(|m2| next.apply(m2).unwrap() == sigma);
                        assert!(back, "{kind:?} {m:?} from {sigma}");
                        assert_eq!(next.apply(&m.inverse()).unwrap(), sigma);
                    }
                }
            }
        }
    }

    fn itertools_free_permutations(p: usize) -> Vec<Vec<usize>> {
        if p == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for rest in itertools_free_permutations(p - 1) {
            for pos in 0..=rest.len() {
                let mut v = rest.clone();
                v.insert(pos, p - 1);
                out.push(v);
            }
        }
        out
    }

    #[test]
    fn consistency_examples() {
        assert!(Dag::empty(3).is_consistent(&ord(&[3, 1, 2])));
        let g = Dag::from_edges(2, &[(0, 1)]).unwrap();
        assert!(g.is_consistent(&ord(&[1, 2])));
        assert!(!g.is_consistent(&ord(&[2, 1])));
    }

    #[test]
    fn cycles_are_rejected() {
        assert!(Dag::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).is_err());
        assert!(Dag::from_edges(2, &[(1, 1)]).is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Dag::from_edges(4, &[(0, 1), (2, 3), (0, 3)]).unwrap();
        let text = g.to_edge_list();
        assert_eq!(text, "1 2\n1 4\n3 4\n");
        assert_eq!(Dag::parse_edge_list(4, &text).unwrap(), g);
        assert!(Dag::parse_edge_list(4, "1 5\n").is_err());
        assert!(Dag::parse_edge_list(4, "1\n").is_err());
    }

    #[test]
    fn node_set_basics() {
        let mut s = NodeSet::empty(130);
        assert!(s.insert(3) && s.insert(129) && !s.insert(3));
        assert_eq!(s.to_vec(), vec![3, 129]);
        assert_eq!(s.len(), 2);
        assert!(s.remove(3) && !s.remove(3));
        assert!(NodeSet::from_slice(130, &[129]).is_subset(&s));
        assert_eq!(
            NodeSet::from_slice(8, &[5, 1]),
            NodeSet::from_slice(8, &[1, 5])
        );
    }

    proptest! {
        #[test]
        fn moves_are_invertible(p in 2usize..12, seed in any::<u64>()) {
            let mut rng = seeded(seed);
            let sigma = Ordering::random(p, &mut rng);
            for kind in [MoveKind::Adjacent, MoveKind::Transposition, MoveKind::Shuffle] {
                let m = sample_move(p, kind, &mut rng);
                let next = sigma.apply(&m).unwrap();
                for pos in 0..p {
                    prop_assert_eq!(next.position(next.node_at(pos)), pos);
                    if !m.touched().contains(&pos) {
                        prop_assert_eq!(next.node_at(pos), sigma.node_at(pos));
                    }
                }
                prop_assert_eq!(next.apply(&m.inverse()).unwrap(), sigma.clone());
            }
        }

        #[test]
        fn potential_parent_sizes_cover_all_positions(p in 1usize..20, seed in any::<u64>()) {
            let sigma = Ordering::random(p, &mut seeded(seed));
            let mut sizes: Vec<usize> = (0..p).map(|j| sigma.potential_parents(j).len()).collect();
            sizes.sort_unstable();
            prop_assert_eq!(sizes, (0..p).collect::<Vec<_>>());
        }

        #[test]
        fn dags_built_from_potential_parents_are_consistent(p in 2usize..15, seed in any::<u64>()) {
            let mut rng = seeded(seed);
            let sigma = Ordering::random(p, &mut rng);
            let parents: Vec<NodeSet> = (0..p)
                .map(|j| {
                    let pp = sigma.potential_parents(j).to_vec();
                    let keep: Vec<usize> = pp.into_iter().filter(|_| rng.random_bool(0.5)).collect();
                    NodeSet::from_slice(p, &keep)
                })
                .collect();
            let g = Dag::from_parents(parents).unwrap();
            prop_assert!(g.is_consistent(&sigma));
            prop_assert!(g.is_consistent(&g.topological_order().unwrap()));
        }
    }
}
