//! Unlabeled rooted trees: canonical forms, labeled trees, pruning, counting
//! and enumeration.

mod canonical;
mod counting;
mod labeled;
mod series;

pub use canonical::{interned_count, CanonicalTree};
pub use counting::{
    counts_by_size, enumerate_trees, enumerate_trees_with_guard, estimate_otter, log_phi, phi_eval,
    tree_counts, OtterEstimate, PhiValue, ENUMERATION_GUARD, OTTER_ALPHA,
};
pub(crate) use counting::{compensated_sum, to_f64};
pub use labeled::LabeledTree;
pub use series::PowerSeries;

/// Convenience wrapper over [`LabeledTree::canonicalize`].
pub fn canonicalize(t: &LabeledTree) -> CanonicalTree {
    t.canonicalize()
}

/// Convenience wrapper over [`LabeledTree::prune_to_depth`].
pub fn prune_to_depth(t: &LabeledTree, d: u32) -> Option<LabeledTree> {
    t.prune_to_depth(d)
}
