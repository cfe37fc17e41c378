//! Sparse graphs and the correlated Erdős–Rényi model.

use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected simple graph on `0..n` with sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseGraph {
    adj: Vec<Vec<usize>>,
    /// Hidden correspondence carried by a generated graph, when known.
    pub planted: Option<Vec<usize>>,
}

impl SparseGraph {
    pub fn empty(n: usize) -> Self {
        SparseGraph { adj: vec![Vec::new(); n], planted: None }
    }

    /// Duplicate edges are merged; self-loops and out-of-range ends are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Domain(format!("edge ({u},{v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::Domain(format!("self-loop at {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(SparseGraph { adj, planted: None })
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, list) in self.adj.iter().enumerate() {
            for &v in list {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// The graph with node `u` renamed `perm[u]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<SparseGraph> {
        check_permutation(perm, self.n())?;
        let edges: Vec<_> = self.edges().iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        SparseGraph::from_edges(self.n(), &edges)
    }

    /// Writes one "u v" line per edge with `u < v`.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (u, v) in self.edges() {
            writeln!(w, "{u} {v}")?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(r: R, n: usize) -> Result<SparseGraph> {
        let mut edges = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::Domain(format!("read error: {e}")))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(u)), Some(Ok(v)), None) => edges.push((u, v)),
                _ => return Err(Error::Domain(format!("line {}: expected \"u v\"", i + 1))),
            }
        }
        SparseGraph::from_edges(n, &edges)
    }
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::Domain(format!("permutation has length {}, expected {n}", perm.len())));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::Domain("not a permutation".into()));
        }
    }
    Ok(())
}

/// JSON companion of an edge-list file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSidecar {
    pub n: usize,
    pub lambda: f64,
    pub s: f64,
    pub seed: u64,
    pub pi_star: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct CorrelatedGraphs {
    pub g: SparseGraph,
    /// G′ relabeled so that node u of G′ becomes `pi_star[u]`.
    pub h: SparseGraph,
    pub pi_star: Vec<usize>,
}

/// Parent graph F ~ G(n, λ/(ns)); G and G′ keep each edge of F independently
/// with probability s; H is G′ relabeled by a uniform permutation π*.
pub fn sample_correlated_er<R: Rng + ?Sized>(n: usize, lambda: f64, s: f64, rng: &mut R) -> Result<CorrelatedGraphs> {
    if n < 2 {
        return Err(Error::Domain(format!("need n ≥ 2, got {n}")));
    }
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::Domain(format!("s must lie in (0,1], got {s}")));
    }
    if !(lambda > 0.0) || lambda / n as f64 > s {
        return Err(Error::Domain(format!("need 0 < λ/n ≤ s, got λ = {lambda}, n = {n}")));
    }
    let p = lambda / (n as f64 * s);
    let parent = sample_gnp(n, p, rng);
    let mut g_edges = Vec::new();
    let mut g2_edges = Vec::new();
    for &(u, v) in &parent {
        if s >= 1.0 || rng.random::<f64>() < s {
            g_edges.push((u, v));
        }
        if s >= 1.0 || rng.random::<f64>() < s {
            g2_edges.push((u, v));
        }
    }
    let mut pi_star: Vec<usize> = (0..n).collect();
    pi_star.shuffle(rng);
    let h_edges: Vec<_> = g2_edges.iter().map(|&(u, v)| (pi_star[u], pi_star[v])).collect();
    let g = SparseGraph::from_edges(n, &g_edges)?;
    let mut h = SparseGraph::from_edges(n, &h_edges)?;
    h.planted = Some(pi_star.clone());
    Ok(CorrelatedGraphs { g, h, pi_star })
}

// G(n,p) by geometric skipping over the pairs (v, w), w < v.
fn sample_gnp<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    if p <= 0.0 {
        return edges;
    }
    if p >= 1.0 {
        for v in 1..n {
            for w in 0..v {
                edges.push((w, v));
            }
        }
        return edges;
    }
    let log_q = (-p).ln_1p();
    let mut v = 1usize;
    let mut w: i64 = -1;
    while v < n {
        let u: f64 = 1.0 - rng.random::<f64>();
        let skip = (u.ln() / log_q).floor() as i64;
        w += 1 + skip;
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            edges.push((w as usize, v));
        }
    }
    edges
}
