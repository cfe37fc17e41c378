//! Matching weights W_d by dynamic programming.

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use super::lap::lap_value_u32;
use crate::error::{Error, Result};
use crate::random_models::SparseGraph;
use crate::tree_core::{CanonicalTree, LabeledTree};

/// W_d(t, t′): the largest number of depth-d leaves of a tree embeddable in
/// both `t` and `t2` with all its leaves at depth d.
pub fn matching_weight(t: &LabeledTree, t2: &LabeledTree, d: u32) -> u64 {
    if d == 0 {
        return 1;
    }
    let (Some(a), Some(b)) = (t.prune_to_depth(d), t2.prune_to_depth(d)) else {
        return 0;
    };
    let mut memo = FxHashMap::default();
    canonical_pruned_weight(&a.canonicalize(), &b.canonicalize(), &mut memo)
}

/// W_d on canonical trees.
pub fn matching_weight_canonical(t: &CanonicalTree, t2: &CanonicalTree, d: u32) -> u64 {
    if d == 0 {
        return 1;
    }
    let (Some(a), Some(b)) = (t.prune(d), t2.prune(d)) else {
        return 0;
    };
    let mut memo = FxHashMap::default();
    canonical_pruned_weight(&a, &b, &mut memo)
}

// Pruned trees of equal depth. Identical subtree pairs recur heavily in
// random trees, so results are memoized on the pair of shape ids.
fn canonical_pruned_weight(a: &CanonicalTree, b: &CanonicalTree, memo: &mut FxHashMap<(u64, u64), u64>) -> u64 {
    if a.is_leaf() || b.is_leaf() {
        return 1;
    }
    if let Some(&w) = memo.get(&(a.id(), b.id())) {
        return w;
    }
    let ca: Vec<&CanonicalTree> = a.child_list().collect();
    let cb: Vec<&CanonicalTree> = b.child_list().collect();
    let mut mat = Vec::with_capacity(ca.len() * cb.len());
    for x in &ca {
        for y in &cb {
            mat.push(canonical_pruned_weight(x, y, memo) as u32);
        }
    }
    let w = u64::from(lap_value_u32(&mat, ca.len(), cb.len()));
    memo.insert((a.id(), b.id()), w);
    w
}

/// W_d by a level-by-level table over node pairs of the two pruned trees,
/// without sharing between isomorphic subtrees.
pub fn matching_weight_levels(t: &LabeledTree, t2: &LabeledTree, d: u32) -> u64 {
    if d == 0 {
        return 1;
    }
    let (Some(a), Some(b)) = (t.prune_to_depth(d), t2.prune_to_depth(d)) else {
        return 0;
    };
    pruned_weight(&a, &b, d)
}

// Both trees pruned: every leaf sits at depth d.
fn pruned_weight(a: &LabeledTree, b: &LabeledTree, d: u32) -> u64 {
    let la = a.levels();
    let lb = b.levels();
    let mut pos_a = vec![0usize; a.len()];
    let mut pos_b = vec![0usize; b.len()];
    for level in &la {
        for (i, &u) in level.iter().enumerate() {
            pos_a[u] = i;
        }
    }
    for level in &lb {
        for (i, &u) in level.iter().enumerate() {
            pos_b[u] = i;
        }
    }
    let d = d as usize;
    let mut prev = vec![1u32; la[d].len() * lb[d].len()];
    let mut mat = Vec::new();
    for k in (0..d).rev() {
        let width_next = lb[k + 1].len();
        let mut cur = vec![0u32; la[k].len() * lb[k].len()];
        for (i, &u) in la[k].iter().enumerate() {
            let cu = a.children(u);
            for (j, &v) in lb[k].iter().enumerate() {
                let cv = b.children(v);
                mat.clear();
                for &x in cu {
                    for &y in cv {
                        mat.push(prev[pos_a[x] * width_next + pos_b[y]]);
                    }
                }
                cur[i * lb[k].len() + j] = lap_value_u32(&mat, cu.len(), cv.len());
            }
        }
        prev = cur;
    }
    u64::from(prev[0])
}

/// Undirected adjacency, as needed by the oriented-edge recursion.
pub trait Adjacency {
    fn node_count(&self) -> usize;
    fn adjacent(&self, u: usize) -> Vec<usize>;
}

impl Adjacency for SparseGraph {
    fn node_count(&self) -> usize {
        self.n()
    }
    fn adjacent(&self, u: usize) -> Vec<usize> {
        self.neighbors(u).to_vec()
    }
}

impl Adjacency for LabeledTree {
    fn node_count(&self) -> usize {
        self.len()
    }
    fn adjacent(&self, u: usize) -> Vec<usize> {
        self.neighbors(u).collect()
    }
}

/// Oriented edges in CSR layout: edge `offsets[u] + i` points from `u` to its
/// i-th neighbour.
#[derive(Clone, Debug)]
pub struct OrientedEdges {
    offsets: Vec<usize>,
    head: Vec<u32>,
    reverse: Vec<u32>,
}

impl OrientedEdges {
    pub fn new<G: Adjacency + ?Sized>(g: &G) -> Self {
        let n = g.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut head = Vec::new();
        offsets.push(0);
        for u in 0..n {
            head.extend(g.adjacent(u).into_iter().map(|v| v as u32));
            offsets.push(head.len());
        }
        let mut reverse = vec![0u32; head.len()];
        for u in 0..n {
            for e in offsets[u]..offsets[u + 1] {
                let v = head[e] as usize;
                let back = (offsets[v]..offsets[v + 1])
                    .find(|&f| head[f] as usize == u)
                    .expect("adjacency must be symmetric");
                reverse[e] = back as u32;
            }
        }
        OrientedEdges { offsets, head, reverse }
    }

    pub fn len(&self) -> usize {
        self.head.len()
    }

    pub fn is_empty(&self) -> bool {
        self.head.is_empty()
    }

    /// Id of the edge `from → to`, if the nodes are adjacent.
    pub fn id(&self, from: usize, to: usize) -> Option<usize> {
        (self.offsets[from]..self.offsets[from + 1]).find(|&e| self.head[e] as usize == to)
    }

    pub fn out_edges(&self, u: usize) -> std::ops::Range<usize> {
        self.offsets[u]..self.offsets[u + 1]
    }

    pub fn head(&self, e: usize) -> usize {
        self.head[e] as usize
    }

    /// Edges continuing `e = (v → u)` away from v: all `u → w` with w ≠ v.
    fn continuations(&self, e: usize, buf: &mut Vec<u32>) {
        buf.clear();
        let u = self.head[e] as usize;
        let back = self.reverse[e] as usize;
        buf.extend((self.offsets[u]..self.offsets[u + 1]).filter(|&f| f != back).map(|f| f as u32));
    }
}

/// W_k(u←v, u′←v′) for every pair of oriented edges of two graphs at one depth k.
///
/// The entry for edges `v → u` and `v′ → u′` is the matching weight of the
/// non-backtracking exploration trees rooted at u and u′ that avoid v and v′.
/// On cycle-free neighbourhoods these are the dangling subtrees themselves.
#[derive(Clone, Debug)]
pub struct WeightTable {
    pub depth: u32,
    pub left: OrientedEdges,
    pub right: OrientedEdges,
    values: Vec<u32>,
}

impl WeightTable {
    pub fn compute<G: Adjacency + ?Sized, H: Adjacency + ?Sized>(g: &G, h: &H, depth: u32) -> Self {
        let left = OrientedEdges::new(g);
        let right = OrientedEdges::new(h);
        let (n1, n2) = (left.len(), right.len());
        let mut values = vec![1u32; n1 * n2];
        for _ in 0..depth {
            let prev = values;
            let mut cur = vec![0u32; n1 * n2];
            if n2 > 0 {
                cur.par_chunks_mut(n2).enumerate().for_each_init(
                    || (Vec::new(), Vec::new(), Vec::new()),
                    |(ca, cb, mat), (e1, row)| {
                        left.continuations(e1, ca);
                        if ca.is_empty() {
                            return;
                        }
                        for (e2, slot) in row.iter_mut().enumerate() {
                            right.continuations(e2, cb);
                            if cb.is_empty() {
                                continue;
                            }
                            mat.clear();
                            for &x in ca.iter() {
                                let base = x as usize * n2;
                                for &y in cb.iter() {
                                    mat.push(prev[base + y as usize]);
                                }
                            }
                            *slot = lap_value_u32(mat, ca.len(), cb.len());
                        }
                    },
                );
            }
            values = cur;
        }
        WeightTable { depth, left, right, values }
    }

    pub fn get(&self, e1: usize, e2: usize) -> u32 {
        self.values[e1 * self.right.len() + e2]
    }

    /// W_{k+1} between the full neighbourhoods of `u` and `u2`.
    pub fn node_weight(&self, u: usize, u2: usize) -> u32 {
        let ca: Vec<usize> = self.left.out_edges(u).collect();
        let cb: Vec<usize> = self.right.out_edges(u2).collect();
        let mut mat = Vec::with_capacity(ca.len() * cb.len());
        for &x in &ca {
            for &y in &cb {
                mat.push(self.get(x, y));
            }
        }
        lap_value_u32(&mat, ca.len(), cb.len())
    }
}

/// W_d on the subtree of `t` rooted at `to` with the edge to `from` removed,
/// against the corresponding subtree of `t2`.
pub fn edge_matching_weight(
    t: &LabeledTree,
    (from, to): (usize, usize),
    t2: &LabeledTree,
    (from2, to2): (usize, usize),
    d: u32,
) -> Result<u64> {
    if from >= t.len() || to >= t.len() || !t.are_adjacent(from, to) {
        return Err(Error::Domain(format!("{from} and {to} are not adjacent in the first tree")));
    }
    if from2 >= t2.len() || to2 >= t2.len() || !t2.are_adjacent(from2, to2) {
        return Err(Error::Domain(format!("{from2} and {to2} are not adjacent in the second tree")));
    }
    let table = WeightTable::compute(t, t2, d);
    let e1 = table.left.id(from, to).expect("adjacent");
    let e2 = table.right.id(from2, to2).expect("adjacent");
    Ok(u64::from(table.get(e1, e2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree_core::CanonicalTree;

    fn lt(s: &str) -> LabeledTree {
        LabeledTree::from_canonical(&s.parse::<CanonicalTree>().unwrap())
    }

    #[test]
    fn depth_zero_is_one() {
        assert_eq!(matching_weight(&lt("()"), &lt("((()))"), 0), 1);
    }

    #[test]
    fn depth_one_is_min_degree() {
        assert_eq!(matching_weight(&lt("(()()())"), &lt("(()())"), 1), 2);
        assert_eq!(matching_weight(&lt("(()()())"), &lt("()"), 1), 0);
    }

    #[test]
    fn memoized_matches_level_table() {
        let mut r = crate::random_models::RngStream::new(21, 0).rng();
        let p = crate::random_models::ModelParams::new(2.0, 0.0, 4);
        for _ in 0..30 {
            let a = crate::random_models::sample_gw(&p, &mut r);
            let b = crate::random_models::sample_gw(&p, &mut r);
            for d in 0..5 {
                assert_eq!(matching_weight(&a, &b, d), matching_weight_levels(&a, &b, d));
                assert_eq!(matching_weight(&a, &b, d), matching_weight_canonical(&a.canonicalize(), &b.canonicalize(), d));
            }
        }
    }

    #[test]
    fn small_depth_two_example() {
        assert_eq!(matching_weight(&lt("((())(()))"), &lt("((()))"), 2), 1);
        assert_eq!(matching_weight(&lt("((()())(()))"), &lt("((()())(()()))"), 2), 3);
    }

    #[test]
    fn edge_version_small_cases() {
        // star with 3 leaves; edge from leaf 1 into the centre leaves 2 further leaves
        let a = LabeledTree::from_edges(4, &[(0, 1), (0, 2), (0, 3)], 0).unwrap();
        let b = LabeledTree::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)], 0).unwrap();
        assert_eq!(edge_matching_weight(&a, (1, 0), &b, (2, 0), 0).unwrap(), 1);
        assert_eq!(edge_matching_weight(&a, (1, 0), &b, (2, 0), 1).unwrap(), 2);
        assert!(edge_matching_weight(&a, (1, 2), &b, (2, 0), 1).is_err());
    }

    #[test]
    fn node_weight_matches_rooted() {
        let a = lt("(((()))(()())())");
        let b = lt("((()())(()(())))");
        for d in 1..4 {
            let table = WeightTable::compute(&a, &b, d - 1);
            assert_eq!(u64::from(table.node_weight(0, 0)), matching_weight(&a, &b, d));
        }
    }
}
