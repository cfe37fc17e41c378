use proptest::prelude::*;
use treealign::tree_core::{counts_by_size, enumerate_trees, CanonicalTree, LabeledTree};
use treealign::tree_matching::{matching_weight, matching_weight_canonical, matching_weight_levels};

// Parent of node i is choice[i-1] mod i.
fn tree_from_choices(choices: &[usize]) -> LabeledTree {
    let mut parents = vec![None];
    parents.extend(choices.iter().enumerate().map(|(i, c)| Some(c % (i + 1))));
    LabeledTree::from_parents(&parents).unwrap()
}

fn arb_tree(max_nodes: usize) -> impl Strategy<Value = LabeledTree> {
    prop::collection::vec(any::<usize>(), 0..max_nodes).prop_map(|c| tree_from_choices(&c))
}

fn arb_relabeled(max_nodes: usize) -> impl Strategy<Value = (LabeledTree, Vec<usize>)> {
    arb_tree(max_nodes).prop_flat_map(|t| {
        let perm = Just((0..t.len()).collect::<Vec<_>>()).prop_shuffle();
        (Just(t), perm)
    })
}

proptest! {
    #[test]
    fn canonical_form_ignores_labels((t, perm) in arb_relabeled(14)) {
        let (a, b) = (t.canonicalize(), t.relabel(&perm).unwrap().canonicalize());
        // ids are stable only while a handle to the shape is alive
        prop_assert_eq!(a.id(), b.id());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn encoding_roundtrips(t in arb_tree(14)) {
        let c = t.canonicalize();
        let e = c.encoding();
        prop_assert_eq!(e.len() as u64, 2 * c.size());
        prop_assert_eq!(CanonicalTree::parse(&e).unwrap(), c);
    }

    #[test]
    fn pruning_is_idempotent(t in arb_tree(14), d in 0u32..5) {
        let c = t.canonicalize();
        match c.prune(d) {
            Some(p) => {
                prop_assert_eq!(p.prune(d), Some(p.clone()));
                prop_assert!(p.depth() == d);
                prop_assert_eq!(p.nodes_at_depth(d), c.nodes_at_depth(d));
            }
            None => prop_assert!(c.depth() < d),
        }
        prop_assert!(c.truncate(d).depth() <= d);
        prop_assert_eq!(t.prune_to_depth(d).map(|p| p.canonicalize()), c.prune(d));
    }

    #[test]
    fn matching_weight_symmetry_and_bounds(a in arb_tree(12), b in arb_tree(12), d in 0u32..4) {
        let w = matching_weight(&a, &b, d);
        prop_assert_eq!(w, matching_weight(&b, &a, d));
        prop_assert_eq!(w, matching_weight_levels(&a, &b, d));
        prop_assert_eq!(w, matching_weight_canonical(&a.canonicalize(), &b.canonicalize(), d));
        let (ca, cb) = (a.canonicalize(), b.canonicalize());
        if d > 0 {
            prop_assert!(w <= ca.nodes_at_depth(d).min(cb.nodes_at_depth(d)));
        }
    }

    #[test]
    fn self_weight_counts_deepest_level(a in arb_tree(12), d in 1u32..4) {
        prop_assert_eq!(matching_weight(&a, &a, d), a.canonicalize().nodes_at_depth(d));
    }

    #[test]
    fn matching_weight_ignores_labels((a, perm) in arb_relabeled(12), b in arb_tree(12), d in 1u32..4) {
        let r = a.relabel(&perm).unwrap();
        prop_assert_eq!(matching_weight(&a, &b, d), matching_weight(&r, &b, d));
    }
}

#[test]
fn depth_restricted_counts_are_monotone() {
    let full = counts_by_size(None, 14);
    let mut prev = counts_by_size(Some(0), 14);
    for d in 1..14u32 {
        let cur = counts_by_size(Some(d), 14);
        assert!(prev.iter().zip(&cur).all(|(p, c)| p <= c), "depth {d}");
        assert!(cur.iter().zip(&full).all(|(c, f)| c <= f), "depth {d}");
        prev = cur;
    }
    assert_eq!(prev, full);
}

#[test]
fn enumeration_is_duplicate_free_and_complete() {
    for depth in [None, Some(2), Some(3)] {
        let trees = enumerate_trees(9, depth).unwrap();
        let ids: std::collections::BTreeSet<u64> = trees.iter().map(CanonicalTree::id).collect();
        assert_eq!(ids.len(), trees.len());
        let counts = counts_by_size(depth, 9);
        let total: u64 = counts.iter().map(|c| u64::try_from(c).unwrap()).sum();
        assert_eq!(total, trees.len() as u64);
        assert!(trees.iter().all(|t| depth.is_none_or(|d| t.depth() <= d) && t.size() <= 9));
    }
}

#[test]
fn child_order_does_not_matter() {
    let a = CanonicalTree::parse("((())()(()()))").unwrap();
    let kids: Vec<CanonicalTree> = a.child_list().cloned().collect();
    let rev = CanonicalTree::from_children(kids.into_iter().rev());
    assert_eq!(a, rev);
    assert_eq!(a.encoding(), rev.encoding());
}
