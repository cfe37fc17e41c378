//! Balls of a given radius around a node.

use std::collections::VecDeque;

use crate::random_models::SparseGraph;
use crate::tree_core::LabeledTree;

/// The ball 𝓑(center, radius) of a graph.
#[derive(Clone, Debug)]
pub struct Neighborhood {
    pub center: usize,
    pub radius: u32,
    /// Graph nodes of the ball in BFS order; tree node i is `nodes[i]`.
    pub nodes: Vec<usize>,
    /// Set when the induced subgraph on the ball contains a cycle.
    pub cycle_flag: bool,
    /// BFS tree rooted at the center, present only without cycles.
    pub tree: Option<LabeledTree>,
}

/// BFS to depth `radius`. The ball has a cycle iff it induces more than
/// |ball| − 1 edges.
pub fn neighborhood(g: &SparseGraph, center: usize, radius: u32) -> Neighborhood {
    let (nodes, parent, induced) = ball(g, center, radius, usize::MAX).expect("no budget");
    let cycle_flag = induced > nodes.len() - 1;
    let tree = (!cycle_flag).then(|| {
        let mut t = LabeledTree::singleton();
        let mut local = rustc_hash::FxHashMap::default();
        local.insert(center, 0usize);
        for &v in nodes.iter().skip(1) {
            let p = local[&parent[&v]];
            local.insert(v, t.add_child(p));
        }
        t
    });
    Neighborhood { center, radius, nodes, cycle_flag, tree }
}

// Ball nodes in BFS order, BFS parents and the number of induced edges.
// None once the ball grows past `budget` nodes.
type Ball = (Vec<usize>, rustc_hash::FxHashMap<usize, usize>, usize);

fn ball(g: &SparseGraph, center: usize, radius: u32, budget: usize) -> Option<Ball> {
    let mut dist = rustc_hash::FxHashMap::default();
    let mut parent = rustc_hash::FxHashMap::default();
    let mut nodes = vec![center];
    dist.insert(center, 0u32);
    let mut queue = VecDeque::from([center]);
    while let Some(u) = queue.pop_front() {
        let du = dist[&u];
        if du == radius {
            continue;
        }
        for &v in g.neighbors(u) {
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(v) {
                e.insert(du + 1);
                parent.insert(v, u);
                nodes.push(v);
                if nodes.len() > budget {
                    return None;
                }
                queue.push_back(v);
            }
        }
    }
    let induced = nodes.iter().map(|&u| g.neighbors(u).iter().filter(|v| dist.contains_key(v)).count()).sum::<usize>() / 2;
    Some((nodes, parent, induced))
}

/// Per-node ball status: `Some(true)` when cycle-free, `Some(false)` with a
/// cycle, `None` when the ball exceeds `budget` nodes.
pub fn ball_status(g: &SparseGraph, radius: u32, budget: usize) -> Vec<Option<bool>> {
    use rayon::prelude::*;
    (0..g.n())
        .into_par_iter()
        .map(|u| ball(g, u, radius, budget).map(|(nodes, _, induced)| induced == nodes.len() - 1))
        .collect()
}
