//! Neighbourhood tree matching for partial graph alignment.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::neighborhood::ball_status;
use crate::error::{Error, Result};
use crate::random_models::SparseGraph;
use crate::tree_matching::WeightTable;

/// Balls larger than this many nodes are skipped.
pub const DEFAULT_NODE_BUDGET: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ntma,
    Ntma2,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignParams {
    /// Echoed into results; the decision rules do not use it.
    pub lambda: f64,
    pub d: u32,
    pub gamma: f64,
    pub node_budget: usize,
}

impl AlignParams {
    pub fn new(lambda: f64, d: u32, gamma: f64) -> Self {
        AlignParams { lambda, d, gamma, node_budget: DEFAULT_NODE_BUDGET }
    }

    fn validate(&self, algorithm: Algorithm) -> Result<()> {
        if !(self.gamma > 1.0) {
            return Err(Error::Domain(format!("γ must exceed 1, got {}", self.gamma)));
        }
        let min_d = if algorithm == Algorithm::Ntma { 2 } else { 1 };
        if self.d < min_d {
            return Err(Error::Domain(format!("depth must be at least {min_d}, got {}", self.d)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub algorithm: Algorithm,
    /// Pairs (u in G, u′ in H) after removing every pair whose u or u′ is repeated.
    pub pairs: Vec<(usize, usize)>,
    /// Pairs passing the criterion before de-duplication.
    pub candidate_pairs: usize,
    /// Node pairs not tested because a ball exceeded the node budget.
    pub skipped_pairs: u64,
    pub n: usize,
    pub params: AlignParams,
    /// Present when the planted permutation of H is known.
    pub overlap: Option<f64>,
    pub error: Option<f64>,
}

/// (overlap, error) of `pairs` against π*: overlap counts u′ = π*(u), error
/// is the remaining fraction |pairs|/n − overlap.
pub fn score(pairs: &[(usize, usize)], pi_star: &[usize], n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 0.0);
    }
    let good = pairs.iter().filter(|&&(u, v)| pi_star.get(u) == Some(&v)).count();
    let overlap = good as f64 / n as f64;
    (overlap, pairs.len() as f64 / n as f64 - overlap)
}

/// Drops every pair that shares its left or right node with another pair.
pub fn strip_duplicates(pairs: &[(usize, usize)], n_left: usize, n_right: usize) -> Vec<(usize, usize)> {
    let mut left = vec![0u32; n_left];
    let mut right = vec![0u32; n_right];
    for &(u, v) in pairs {
        left[u] += 1;
        right[v] += 1;
    }
    pairs.iter().copied().filter(|&(u, v)| left[u] == 1 && right[v] == 1).collect()
}

fn skipped(status_g: &[Option<bool>], status_h: &[Option<bool>]) -> u64 {
    let big_g = status_g.iter().filter(|s| s.is_none()).count() as u64;
    let big_h = status_h.iter().filter(|s| s.is_none()).count() as u64;
    let (n, m) = (status_g.len() as u64, status_h.len() as u64);
    big_g * m + n * big_h - big_g * big_h
}

fn finish(
    algorithm: Algorithm,
    candidates: Vec<(usize, usize)>,
    g: &SparseGraph,
    h: &SparseGraph,
    params: &AlignParams,
    skipped_pairs: u64,
) -> AlignmentResult {
    let pairs = strip_duplicates(&candidates, g.n(), h.n());
    let scored = h.planted.as_ref().map(|pi| score(&pairs, pi, g.n()));
    AlignmentResult {
        algorithm,
        candidate_pairs: candidates.len(),
        pairs,
        skipped_pairs,
        n: g.n(),
        params: *params,
        overlap: scored.map(|s| s.0),
        error: scored.map(|s| s.1),
    }
}

/// NTMA: keep (u,u′) when both depth-d balls are cycle-free and two disjoint
/// neighbour pairs (v,v′), (w,w′) have W_{d−1}(v←u, v′←u′) > γ^{d−1}.
pub fn ntma(g: &SparseGraph, h: &SparseGraph, params: &AlignParams) -> Result<AlignmentResult> {
    params.validate(Algorithm::Ntma)?;
    let d = params.d;
    let status_g = ball_status(g, d, params.node_budget);
    let status_h = ball_status(h, d, params.node_budget);
    let table = WeightTable::compute(g, h, d - 1);
    let threshold = params.gamma.powi(d as i32 - 1);
    let ok_h: Vec<usize> = (0..h.n()).filter(|&v| status_h[v] == Some(true) && h.degree(v) >= 2).collect();
    let candidates: Vec<(usize, usize)> = (0..g.n())
        .into_par_iter()
        .filter(|&u| status_g[u] == Some(true) && g.degree(u) >= 2)
        .flat_map_iter(|u| {
            let mut hits = Vec::new();
            let mut out = Vec::new();
            for &u2 in &ok_h {
                hits.clear();
                for (i, e1) in table.left.out_edges(u).enumerate() {
                    for (j, e2) in table.right.out_edges(u2).enumerate() {
                        if f64::from(table.get(e1, e2)) > threshold {
                            hits.push((i, j));
                        }
                    }
                }
                if has_two_disjoint(&hits) {
                    out.push((u, u2));
                }
            }
            out
        })
        .collect();
    Ok(finish(Algorithm::Ntma, candidates, g, h, params, skipped(&status_g, &status_h)))
}

fn has_two_disjoint(hits: &[(usize, usize)]) -> bool {
    hits.iter().enumerate().any(|(k, &(i, j))| hits[k + 1..].iter().any(|&(a, b)| a != i && b != j))
}

/// NTMA-2: keep (u,u′) when W_d(u,u′) > γ^d and the weight is a maximum of
/// both its row and its column over cycle-free nodes.
pub fn ntma2(g: &SparseGraph, h: &SparseGraph, params: &AlignParams) -> Result<AlignmentResult> {
    params.validate(Algorithm::Ntma2)?;
    let d = params.d;
    let status_g = ball_status(g, d, params.node_budget);
    let status_h = ball_status(h, d, params.node_budget);
    let table = WeightTable::compute(g, h, d - 1);
    let threshold = params.gamma.powi(d as i32);
    let rows: Vec<usize> = (0..g.n()).filter(|&u| status_g[u] == Some(true)).collect();
    let cols: Vec<usize> = (0..h.n()).filter(|&v| status_h[v] == Some(true)).collect();
    let w: Vec<Vec<u32>> = rows.par_iter().map(|&u| cols.iter().map(|&v| table.node_weight(u, v)).collect()).collect();
    let row_max: Vec<u32> = w.iter().map(|r| r.iter().copied().max().unwrap_or(0)).collect();
    let mut col_max = vec![0u32; cols.len()];
    for r in &w {
        for (c, &x) in r.iter().enumerate() {
            col_max[c] = col_max[c].max(x);
        }
    }
    let mut candidates = Vec::new();
    for (i, r) in w.iter().enumerate() {
        for (c, &x) in r.iter().enumerate() {
            if f64::from(x) > threshold && x == row_max[i] && x == col_max[c] {
                candidates.push((rows[i], cols[c]));
            }
        }
    }
    Ok(finish(Algorithm::Ntma2, candidates, g, h, params, skipped(&status_g, &status_h)))
}

pub const ALIGNMENT_CSV_HEADER: &str = "u,u_prime,correct";

/// One row per retained pair; `correct` is 1 when u′ = π*(u).
pub fn alignment_csv(result: &AlignmentResult, pi_star: Option<&[usize]>) -> String {
    let mut out = format!("{ALIGNMENT_CSV_HEADER}\n");
    for &(u, v) in &result.pairs {
        let correct = pi_star.is_some_and(|p| p.get(u) == Some(&v));
        out.push_str(&format!("{u},{v},{}\n", u8::from(correct)));
    }
    out
}

/// Run summary for JSON output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentSummary {
    pub algorithm: Algorithm,
    pub n: usize,
    pub lambda: f64,
    pub s: Option<f64>,
    pub d: u32,
    pub gamma: f64,
    pub overlap: Option<f64>,
    pub error: Option<f64>,
    pub pairs: usize,
    pub skipped_pairs: u64,
    pub seed: Option<u64>,
}

impl AlignmentResult {
    pub fn summary(&self, s: Option<f64>, seed: Option<u64>) -> AlignmentSummary {
        AlignmentSummary {
            algorithm: self.algorithm,
            n: self.n,
            lambda: self.params.lambda,
            s,
            d: self.params.d,
            gamma: self.params.gamma,
            overlap: self.overlap,
            error: self.error,
            pairs: self.pairs.len(),
            skipped_pairs: self.skipped_pairs,
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_examples() {
        let pi = vec![2, 0, 1, 3];
        let all: Vec<_> = pi.iter().enumerate().map(|(u, &v)| (u, v)).collect();
        assert_eq!(score(&all, &pi, 4), (1.0, 0.0));
        assert_eq!(score(&[], &pi, 4), (0.0, 0.0));
        // identity agrees with π* only at 3
        let id: Vec<_> = (0..4).map(|u| (u, u)).collect();
        assert_eq!(score(&id, &pi, 4), (0.25, 0.75));
    }

    #[test]
    fn duplicates_are_stripped() {
        let p = strip_duplicates(&[(0, 1), (0, 2), (3, 3), (4, 3), (5, 6)], 7, 7);
        assert_eq!(p, vec![(5, 6)]);
    }

    #[test]
    fn disjoint_hits() {
        assert!(!has_two_disjoint(&[(0, 0), (0, 1)]));
        assert!(!has_two_disjoint(&[(0, 0), (1, 0)]));
        assert!(has_two_disjoint(&[(0, 1), (1, 0)]));
        assert!(!has_two_disjoint(&[(0, 0)]));
    }

    #[test]
    fn huge_gamma_gives_nothing() {
        let g = SparseGraph::from_edges(7, &[(0, 1), (0, 2), (1, 3), (1, 4), (2, 5), (2, 6)]).unwrap();
        let p = AlignParams::new(2.0, 2, 1e9);
        assert!(ntma(&g, &g, &p).unwrap().pairs.is_empty());
        assert!(ntma2(&g, &g, &p).unwrap().pairs.is_empty());
        assert!(ntma(&g, &g, &AlignParams::new(2.0, 2, 1.0)).is_err());
    }

    #[test]
    fn ntma2_on_identical_tree_keeps_fixed_points() {
        // Binary tree of depth 3; only the root has a unique maximal W_3.
        let edges: Vec<(usize, usize)> = (1..15).map(|v| ((v - 1) / 2, v)).collect();
        let g = SparseGraph::from_edges(15, &edges).unwrap();
        let r = ntma2(&g, &g, &AlignParams::new(2.0, 3, 1.01)).unwrap();
        assert!(r.pairs.iter().all(|&(u, v)| u == v));
        assert!(r.pairs.contains(&(0, 0)));
    }
}
