//! Hash-consed unlabeled rooted trees.
//!
//! Every distinct shape is stored once. Two handles are equal iff they point
//! at the same interned node, so equality and hashing are O(1).

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering as AtomicOrdering};
use std::sync::{Arc, LazyLock, Weak};

use dashmap::mapref::entry::Entry;
use dashmap::DashMap;
use rustc_hash::{FxBuildHasher, FxHashMap};

use crate::error::{Error, Result};

struct Node {
    id: u64,
    children: Box<[(CanonicalTree, u32)]>,
    size: u64,
    depth: u32,
    degree: u32,
}

/// An interned finite rooted unlabeled tree.
///
/// Children are kept as `(subtree, multiplicity)` groups in ascending
/// encoding order.
#[derive(Clone)]
pub struct CanonicalTree(Arc<Node>);

type Key = Box<[(u64, u32)]>;

struct Interner {
    map: DashMap<Key, Weak<Node>, FxBuildHasher>,
    next_id: AtomicU64,
    purge_at: AtomicUsize,
}

const MIN_PURGE: usize = 1 << 20;

static INTERNER: LazyLock<Interner> = LazyLock::new(|| Interner {
    map: DashMap::with_hasher(FxBuildHasher),
    next_id: AtomicU64::new(1),
    purge_at: AtomicUsize::new(MIN_PURGE),
});

static LEAF: LazyLock<CanonicalTree> = LazyLock::new(|| intern(Vec::new()));

fn intern(groups: Vec<(CanonicalTree, u32)>) -> CanonicalTree {
    let interner = &*INTERNER;
    let key: Key = groups.iter().map(|(c, m)| (c.id(), *m)).collect();
    let node = match interner.map.entry(key) {
        Entry::Occupied(mut e) => match e.get().upgrade() {
            Some(existing) => existing,
            None => {
                let node = build(groups, interner);
                e.insert(Arc::downgrade(&node));
                node
            }
        },
        Entry::Vacant(e) => {
            let node = build(groups, interner);
            e.insert(Arc::downgrade(&node));
            node
        }
    };
    maybe_purge(interner);
    CanonicalTree(node)
}

fn build(groups: Vec<(CanonicalTree, u32)>, interner: &Interner) -> Arc<Node> {
    let mut size = 1u64;
    let mut depth = 0u32;
    let mut degree = 0u32;
    for (c, m) in &groups {
        size += c.size() * u64::from(*m);
        depth = depth.max(c.depth() + 1);
        degree += m;
    }
    Arc::new(Node {
        id: interner.next_id.fetch_add(1, AtomicOrdering::Relaxed),
        children: groups.into_boxed_slice(),
        size,
        depth,
        degree,
    })
}

// Dead entries accumulate as Monte Carlo trials drop their trees.
fn maybe_purge(interner: &Interner) {
    let limit = interner.purge_at.load(AtomicOrdering::Relaxed);
    if interner.map.len() <= limit {
        return;
    }
    if interner
        .purge_at
        .compare_exchange(limit, usize::MAX, AtomicOrdering::AcqRel, AtomicOrdering::Relaxed)
        .is_err()
    {
        return;
    }
    interner.map.retain(|_, w| w.strong_count() > 0);
    let next = (2 * interner.map.len()).max(MIN_PURGE);
    interner.purge_at.store(next, AtomicOrdering::Release);
}

/// Number of shapes currently held by the intern table (live or awaiting purge).
pub fn interned_count() -> usize {
    INTERNER.map.len()
}

impl CanonicalTree {
    /// The trivial tree: a single root.
    pub fn leaf() -> CanonicalTree {
        LEAF.clone()
    }

    /// Builds the tree whose root has the given children, in any order.
    pub fn from_children<I: IntoIterator<Item = CanonicalTree>>(children: I) -> CanonicalTree {
        let mut list: Vec<CanonicalTree> = children.into_iter().collect();
        if list.is_empty() {
            return CanonicalTree::leaf();
        }
        list.sort_unstable();
        let mut groups: Vec<(CanonicalTree, u32)> = Vec::new();
        for c in list {
            match groups.last_mut() {
                Some((last, m)) if *last == c => *m += 1,
                _ => groups.push((c, 1)),
            }
        }
        intern(groups)
    }

    /// Builds a tree from `(child, multiplicity)` groups; zero multiplicities are dropped.
    pub fn from_groups<I: IntoIterator<Item = (CanonicalTree, u32)>>(groups: I) -> CanonicalTree {
        let mut list: Vec<(CanonicalTree, u32)> = groups.into_iter().filter(|g| g.1 > 0).collect();
        if list.is_empty() {
            return CanonicalTree::leaf();
        }
        list.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut groups: Vec<(CanonicalTree, u32)> = Vec::with_capacity(list.len());
        for (c, m) in list {
            match groups.last_mut() {
                Some((last, k)) if *last == c => *k += m,
                _ => groups.push((c, m)),
            }
        }
        intern(groups)
    }

    /// Star with `k` leaf children.
    pub fn star(k: u32) -> CanonicalTree {
        CanonicalTree::from_groups([(CanonicalTree::leaf(), k)])
    }

    pub fn id(&self) -> u64 {
        self.0.id
    }

    pub fn size(&self) -> u64 {
        self.0.size
    }

    pub fn depth(&self) -> u32 {
        self.0.depth
    }

    /// Number of children of the root, counted with multiplicity.
    pub fn degree(&self) -> u32 {
        self.0.degree
    }

    pub fn is_leaf(&self) -> bool {
        self.0.children.is_empty()
    }

    pub fn children(&self) -> &[(CanonicalTree, u32)] {
        &self.0.children
    }

    /// Multiplicity of `child` among the root's children.
    pub fn multiplicity(&self, child: &CanonicalTree) -> u32 {
        self.children()
            .binary_search_by(|(c, _)| c.cmp(child))
            .map(|i| self.children()[i].1)
            .unwrap_or(0)
    }

    /// Children expanded with multiplicity, in ascending encoding order.
    pub fn child_list(&self) -> impl Iterator<Item = &CanonicalTree> + '_ {
        self.children()
            .iter()
            .flat_map(|(c, m)| std::iter::repeat_n(c, *m as usize))
    }

    pub fn encoding(&self) -> String {
        let mut out = String::with_capacity(2 * self.size() as usize);
        self.write_encoding(&mut out);
        out
    }

    fn write_encoding(&self, out: &mut String) {
        out.push('(');
        for c in self.child_list() {
            c.write_encoding(out);
        }
        out.push(')');
    }

    /// Parses the parenthesis encoding. Children may appear in any order.
    pub fn parse(s: &str) -> Result<CanonicalTree> {
        let bytes = s.as_bytes();
        if bytes.first() != Some(&b'(') {
            return Err(Error::Structural(format!("encoding must start with '(': {s:?}")));
        }
        let mut stack: Vec<Vec<CanonicalTree>> = Vec::new();
        let mut done: Option<CanonicalTree> = None;
        for (i, &b) in bytes.iter().enumerate() {
            if done.is_some() {
                return Err(Error::Structural(format!("trailing input at byte {i}")));
            }
            match b {
                b'(' => stack.push(Vec::new()),
                b')' => {
                    let kids = stack
                        .pop()
                        .ok_or_else(|| Error::Structural(format!("unbalanced ')' at byte {i}")))?;
                    let t = CanonicalTree::from_children(kids);
                    match stack.last_mut() {
                        Some(parent) => parent.push(t),
                        None => done = Some(t),
                    }
                }
                _ => return Err(Error::Structural(format!("unexpected byte {b:#x} at {i}"))),
            }
        }
        done.ok_or_else(|| Error::Structural("unbalanced encoding".into()))
    }

    /// Number of nodes at distance exactly `k` from the root.
    pub fn nodes_at_depth(&self, k: u32) -> u64 {
        if k == 0 {
            return 1;
        }
        if k > self.depth() {
            return 0;
        }
        self.children()
            .iter()
            .map(|(c, m)| u64::from(*m) * c.nodes_at_depth(k - 1))
            .sum()
    }

    /// Drops every node deeper than `d`.
    pub fn truncate(&self, d: u32) -> CanonicalTree {
        let mut memo = FxHashMap::default();
        self.truncate_memo(d, &mut memo)
    }

    pub(crate) fn truncate_memo(
        &self,
        d: u32,
        memo: &mut FxHashMap<(u64, u32), CanonicalTree>,
    ) -> CanonicalTree {
        if self.depth() <= d {
            return self.clone();
        }
        if d == 0 {
            return CanonicalTree::leaf();
        }
        if let Some(t) = memo.get(&(self.id(), d)) {
            return t.clone();
        }
        let groups: Vec<_> = self
            .children()
            .iter()
            .map(|(c, m)| (c.truncate_memo(d - 1, memo), *m))
            .collect();
        let t = CanonicalTree::from_groups(groups);
        memo.insert((self.id(), d), t.clone());
        t
    }

    /// The pruned tree r_d: truncate at depth `d`, then repeatedly strip leaves
    /// shallower than `d`. `None` when no node sits at depth `d`.
    pub fn prune(&self, d: u32) -> Option<CanonicalTree> {
        if d == 0 {
            return Some(CanonicalTree::leaf());
        }
        if self.depth() < d {
            return None;
        }
        let groups: Vec<_> = self
            .children()
            .iter()
            .filter_map(|(c, m)| c.prune(d - 1).map(|p| (p, *m)))
            .collect();
        if groups.is_empty() {
            None
        } else {
            Some(CanonicalTree::from_groups(groups))
        }
    }
}

impl PartialEq for CanonicalTree {
    fn eq(&self, other: &Self) -> bool {
        self.0.id == other.0.id
    }
}

impl Eq for CanonicalTree {}

impl Hash for CanonicalTree {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.id.hash(state);
    }
}

/// Lexicographic order of encodings, computed structurally.
///
/// Each child encoding is a single balanced block, so neither of two distinct
/// blocks is a prefix of the other. Comparing encodings therefore reduces to
/// comparing child lists; when one list is a prefix of the other, the longer
/// list continues with '(' where the shorter has ')', so it sorts first.
impl Ord for CanonicalTree {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.0.id == other.0.id {
            return Ordering::Equal;
        }
        let mut a = self.child_list();
        let mut b = other.child_list();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Greater,
                (Some(_), None) => return Ordering::Less,
                (Some(x), Some(y)) => match x.cmp(y) {
                    Ordering::Equal => {}
                    o => return o,
                },
            }
        }
    }
}

impl PartialOrd for CanonicalTree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for CanonicalTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encoding())
    }
}

impl fmt::Display for CanonicalTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encoding())
    }
}

impl std::str::FromStr for CanonicalTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CanonicalTree::parse(s)
    }
}

impl serde::Serialize for CanonicalTree {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.encoding())
    }
}

impl<'de> serde::Deserialize<'de> for CanonicalTree {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        CanonicalTree::parse(&s).map_err(serde::de::Error::custom)
    }
}
