//! Directed temporal graphs with per-edge lags and scores, plus JSON I/O.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A directed edge `src -> dst` acting with a discrete delay.
///
/// `score` is the peak influence magnitude that ranked the edge; storing it
/// keeps graphs re-rankable without re-probing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaggedEdge {
    pub src: usize,
    pub dst: usize,
    pub lag: usize,
    pub score: f64,
}

impl LaggedEdge {
    pub fn new(src: usize, dst: usize, lag: usize, score: f64) -> Self {
        Self { src, dst, lag, score }
    }

    pub fn is_self_loop(&self) -> bool {
        self.src == self.dst
    }
}

/// A directed graph over `n_vars` variables. Cycles and self-loops are
/// allowed; at most one edge exists per ordered pair.
///
/// Graphs built with [`TemporalGraph::new`] additionally hold at most one
/// direction per unordered pair (the dominant-direction rule applied to
/// predictions). Ground truths of mutually coupled systems may legitimately
/// contain both directions and use [`TemporalGraph::with_bidirected`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TemporalGraph {
    n_vars: usize,
    edges: Vec<LaggedEdge>,
}

impl TemporalGraph {
    /// Build a graph enforcing all invariants, including the
    /// single-direction-per-pair rule.
    pub fn new(n_vars: usize, edges: Vec<LaggedEdge>) -> Result<Self> {
        let graph = Self::with_bidirected(n_vars, edges)?;
        let mutual = graph.mutual_pairs();
        if !mutual.is_empty() {
            return Err(Error::InvalidGraph {
                msg: "both directions present for an unordered pair".into(),
                edges: mutual,
            });
        }
        Ok(graph)
    }

    /// Build a graph that may contain both `(i -> j)` and `(j -> i)`.
    /// All other invariants still apply.
    pub fn with_bidirected(n_vars: usize, edges: Vec<LaggedEdge>) -> Result<Self> {
        let mut seen: HashSet<(usize, usize)> = HashSet::new();
        let mut duplicates = Vec::new();
        for e in &edges {
            if e.src >= n_vars || e.dst >= n_vars {
                return Err(Error::InvalidGraph {
                    msg: format!("edge endpoint out of range for {n_vars} variables"),
                    edges: vec![(e.src, e.dst)],
                });
            }
            if !e.score.is_finite() || e.score < 0.0 {
                return Err(Error::InvalidGraph {
                    msg: format!("edge score {} is not a non-negative finite value", e.score),
                    edges: vec![(e.src, e.dst)],
                });
            }
            if !seen.insert((e.src, e.dst)) {
                duplicates.push((e.src, e.dst));
            }
        }
        if !duplicates.is_empty() {
            return Err(Error::InvalidGraph {
                msg: "duplicate ordered pair".into(),
                edges: duplicates,
            });
        }
        Ok(Self { n_vars, edges })
    }

    /// Empty graph over `n_vars` variables.
    pub fn empty(n_vars: usize) -> Self {
        Self { n_vars, edges: Vec::new() }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn edges(&self) -> &[LaggedEdge] {
        &self.edges
    }

    /// Number of edges m.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, src: usize, dst: usize) -> bool {
        self.edges.iter().any(|e| e.src == src && e.dst == dst)
    }

    pub fn edge(&self, src: usize, dst: usize) -> Option<&LaggedEdge> {
        self.edges.iter().find(|e| e.src == src && e.dst == dst)
    }

    /// Unordered pairs `(i, j)`, `i < j`, for which both directions exist.
    pub fn mutual_pairs(&self) -> Vec<(usize, usize)> {
        let present: HashSet<(usize, usize)> =
            self.edges.iter().map(|e| (e.src, e.dst)).collect();
        let mut out: Vec<(usize, usize)> = present
            .iter()
            .filter(|&&(i, j)| i < j && present.contains(&(j, i)))
            .cloned()
            .collect();
        out.sort_unstable();
        out
    }

    /// Parent sets `Pa(j) = { i : (i -> j) in E }` for every target.
    pub fn parent_sets(&self) -> Vec<BTreeSet<usize>> {
        let mut parents = vec![BTreeSet::new(); self.n_vars];
        for e in &self.edges {
            parents[e.dst].insert(e.src);
        }
        parents
    }

    /// Dense directed adjacency (including the diagonal).
    pub fn adjacency(&self) -> Vec<Vec<bool>> {
        let mut adj = vec![vec![false; self.n_vars]; self.n_vars];
        for e in &self.edges {
            adj[e.src][e.dst] = true;
        }
        adj
    }

    /// Map from ordered pair to lag.
    pub fn lag_map(&self) -> HashMap<(usize, usize), usize> {
        self.edges.iter().map(|e| ((e.src, e.dst), e.lag)).collect()
    }

    /// Copy without self-loop edges.
    pub fn without_self_loops(&self) -> Self {
        Self {
            n_vars: self.n_vars,
            edges: self.edges.iter().filter(|e| !e.is_self_loop()).cloned().collect(),
        }
    }

    /// Edges sorted by descending score, ties by `(src, dst)`.
    fn sorted_edges(&self) -> Vec<LaggedEdge> {
        let mut edges = self.edges.clone();
        edges.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .expect("edge scores are finite")
                .then(a.src.cmp(&b.src))
                .then(a.dst.cmp(&b.dst))
        });
        edges
    }
}

impl PartialEq for TemporalGraph {
    /// Set semantics: same variable count and the same edge set.
    fn eq(&self, other: &Self) -> bool {
        if self.n_vars != other.n_vars || self.edges.len() != other.edges.len() {
            return false;
        }
        let key = |g: &Self| {
            let mut edges = g.edges.clone();
            edges.sort_by_key(|e| (e.src, e.dst));
            edges
        };
        key(self) == key(other)
    }
}

/// Serialized graph document: edges sorted by descending score for
/// determinism; scores keep full f64 round-trip precision.
pub fn save_graph_json<P: AsRef<Path>>(graph: &TemporalGraph, path: P) -> Result<()> {
    let doc = TemporalGraph { n_vars: graph.n_vars, edges: graph.sorted_edges() };
    let text = serde_json::to_string_pretty(&doc)?;
    std::fs::write(path.as_ref(), text + "\n")?;
    Ok(())
}

/// Load a graph and enforce all invariants (single direction included).
pub fn load_graph_json<P: AsRef<Path>>(path: P) -> Result<TemporalGraph> {
    let doc: TemporalGraph = serde_json::from_str(&std::fs::read_to_string(path.as_ref())?)?;
    TemporalGraph::new(doc.n_vars, doc.edges)
}

/// Load a graph permitting mutual pairs (ground truths of mutually coupled
/// systems, e.g. cyclic lattices, contain both directions).
pub fn load_graph_json_bidirected<P: AsRef<Path>>(path: P) -> Result<TemporalGraph> {
    let doc: TemporalGraph = serde_json::from_str(&std::fs::read_to_string(path.as_ref())?)?;
    TemporalGraph::with_bidirected(doc.n_vars, doc.edges)
}
