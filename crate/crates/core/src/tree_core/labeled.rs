//! Indexed rooted trees with explicit labels.

use std::collections::VecDeque;

use rustc_hash::FxHashMap;

use super::canonical::CanonicalTree;
use crate::error::{Error, Result};

/// A rooted tree over node indices `0..len()`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledTree {
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    depth: Vec<u32>,
    root: usize,
}

impl LabeledTree {
    /// A single root node with index 0.
    pub fn singleton() -> LabeledTree {
        LabeledTree { parent: vec![None], children: vec![Vec::new()], depth: vec![0], root: 0 }
    }

    /// Appends a new child of `p` and returns its index.
    pub fn add_child(&mut self, p: usize) -> usize {
        let v = self.parent.len();
        self.parent.push(Some(p));
        self.children.push(Vec::new());
        self.depth.push(self.depth[p] + 1);
        self.children[p].push(v);
        v
    }

    /// Builds a tree on `n` nodes from an undirected edge list.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], root: usize) -> Result<LabeledTree> {
        if root >= n {
            return Err(Error::Structural(format!("root {root} out of range for {n} nodes")));
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::Structural(format!("edge ({a},{b}) out of range")));
            }
            if a == b {
                return Err(Error::Structural(format!("self-loop at {a}")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        if edges.len() + 1 != n {
            return Err(Error::Structural(format!(
                "{} edges on {n} nodes cannot form a tree",
                edges.len()
            )));
        }
        let mut parent = vec![None; n];
        let mut depth = vec![0u32; n];
        let mut seen = vec![false; n];
        let mut children = vec![Vec::new(); n];
        seen[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if Some(v) == parent[u] {
                    continue;
                }
                if seen[v] {
                    return Err(Error::Structural(format!("cycle through edge ({u},{v})")));
                }
                seen[v] = true;
                parent[v] = Some(u);
                depth[v] = depth[u] + 1;
                children[u].push(v);
                queue.push_back(v);
            }
        }
        if let Some(orphan) = seen.iter().position(|s| !s) {
            return Err(Error::Structural(format!("node {orphan} unreachable from root")));
        }
        Ok(LabeledTree { parent, children, depth, root })
    }

    /// Builds a tree from a parent array; exactly one entry must be `None`.
    pub fn from_parents(parents: &[Option<usize>]) -> Result<LabeledTree> {
        let roots: Vec<usize> = (0..parents.len()).filter(|&i| parents[i].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::Structural(format!("expected one root, found {}", roots.len())));
        }
        let edges: Vec<(usize, usize)> = parents
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|p| (p, i)))
            .collect();
        let t = LabeledTree::from_edges(parents.len(), &edges, roots[0])?;
        if t.parent != parents {
            return Err(Error::Structural("parent array is not consistent with a rooted tree".into()));
        }
        Ok(t)
    }

    /// Expands a canonical tree; children appear in encoding order, indices in BFS order.
    pub fn from_canonical(t: &CanonicalTree) -> LabeledTree {
        let mut out = LabeledTree::singleton();
        let mut queue = VecDeque::from([(t.clone(), 0usize)]);
        while let Some((c, u)) = queue.pop_front() {
            for child in c.child_list() {
                let v = out.add_child(u);
                queue.push_back((child.clone(), v));
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, u: usize) -> Option<usize> {
        self.parent[u]
    }

    pub fn children(&self, u: usize) -> &[usize] {
        &self.children[u]
    }

    pub fn node_depth(&self, u: usize) -> u32 {
        self.depth[u]
    }

    /// Maximum node depth.
    pub fn depth(&self) -> u32 {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    pub fn degree(&self, u: usize) -> usize {
        self.children[u].len() + usize::from(self.parent[u].is_some())
    }

    /// Undirected neighbours of `u`: parent first, then children.
    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.parent[u].into_iter().chain(self.children[u].iter().copied())
    }

    pub fn are_adjacent(&self, u: usize, v: usize) -> bool {
        self.parent[u] == Some(v) || self.parent[v] == Some(u)
    }

    /// Nodes grouped by depth, each level in BFS order.
    pub fn levels(&self) -> Vec<Vec<usize>> {
        let mut levels: Vec<Vec<usize>> = Vec::new();
        for u in self.bfs_order() {
            let k = self.depth[u] as usize;
            if levels.len() <= k {
                levels.resize(k + 1, Vec::new());
            }
            levels[k].push(u);
        }
        levels
    }

    pub fn count_at_depth(&self, k: u32) -> usize {
        self.depth.iter().filter(|&&x| x == k).count()
    }

    pub fn bfs_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.len());
        order.push(self.root);
        let mut i = 0;
        while i < order.len() {
            let u = order[i];
            order.extend_from_slice(&self.children[u]);
            i += 1;
        }
        order
    }

    /// Undirected edges as `(parent, child)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.len()).filter_map(|v| self.parent[v].map(|p| (p, v))).collect()
    }

    pub fn canonicalize(&self) -> CanonicalTree {
        self.canonical_subtree(self.root)
    }

    /// Canonical form of the subtree hanging below `u`.
    pub fn canonical_subtree(&self, u: usize) -> CanonicalTree {
        let mut order = vec![u];
        let mut i = 0;
        while i < order.len() {
            let x = order[i];
            order.extend_from_slice(&self.children[x]);
            i += 1;
        }
        let mut done: FxHashMap<usize, CanonicalTree> = FxHashMap::default();
        for &x in order.iter().rev() {
            let kids = self.children[x].iter().map(|c| done.remove(c).expect("child visited first"));
            let t = CanonicalTree::from_children(kids);
            done.insert(x, t);
        }
        done.remove(&u).expect("root visited")
    }

    /// Canonical forms of all node subtrees at once, indexed by node.
    pub fn canonical_subtrees(&self) -> Vec<CanonicalTree> {
        let mut out: Vec<Option<CanonicalTree>> = vec![None; self.len()];
        for &x in self.bfs_order().iter().rev() {
            let kids = self.children[x].iter().map(|&c| out[c].clone().expect("child visited first"));
            out[x] = Some(CanonicalTree::from_children(kids));
        }
        out.into_iter().map(|t| t.expect("every node reachable")).collect()
    }

    /// Keeps the nodes for which `keep` holds; the kept set must be closed under parents.
    fn restrict(&self, keep: &[bool]) -> LabeledTree {
        let mut out = LabeledTree::singleton();
        let mut map = vec![usize::MAX; self.len()];
        map[self.root] = 0;
        for u in self.bfs_order() {
            for &c in &self.children[u] {
                if keep[c] {
                    map[c] = out.add_child(map[u]);
                }
            }
        }
        out
    }

    /// Drops every node deeper than `d`.
    pub fn truncate(&self, d: u32) -> LabeledTree {
        let keep: Vec<bool> = self.depth.iter().map(|&k| k <= d).collect();
        self.restrict(&keep)
    }

    /// The pruned tree r_d, or `None` when the tree has no node at depth `d`.
    ///
    /// Nodes deeper than `d` are discarded first, then leaves shallower than
    /// `d` are stripped until every leaf sits at depth exactly `d`.
    pub fn prune_to_depth(&self, d: u32) -> Option<LabeledTree> {
        let mut alive = vec![false; self.len()];
        for &u in self.bfs_order().iter().rev() {
            let k = self.depth[u];
            alive[u] = match k.cmp(&d) {
                std::cmp::Ordering::Equal => true,
                std::cmp::Ordering::Greater => false,
                std::cmp::Ordering::Less => self.children[u].iter().any(|&c| alive[c]),
            };
        }
        if !alive[self.root] {
            return None;
        }
        Some(self.restrict(&alive))
    }

    /// The tree with labels permuted: node `u` becomes `perm[u]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<LabeledTree> {
        let n = self.len();
        if perm.len() != n {
            return Err(Error::Domain("permutation length mismatch".into()));
        }
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::Domain("not a permutation".into()));
            }
        }
        let edges: Vec<_> = self.edges().iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        LabeledTree::from_edges(n, &edges, perm[self.root])
    }

    /// The subtree rooted at `to` after deleting the edge to its neighbour `from`.
    pub fn extract(&self, from: usize, to: usize) -> Result<LabeledTree> {
        if !self.are_adjacent(from, to) {
            return Err(Error::Domain(format!("nodes {from} and {to} are not adjacent")));
        }
        let mut out = LabeledTree::singleton();
        let mut stack = vec![(to, from, 0usize)];
        while let Some((u, came_from, image)) = stack.pop() {
            for v in self.neighbors(u) {
                if v != came_from {
                    let w = out.add_child(image);
                    stack.push((v, u, w));
                }
            }
        }
        Ok(out)
    }
}
