use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;

use super::{check_query, ExclusionStrategy, QueryStats};
use crate::data::{seeded_rng, Dataset, SeededRng};
use crate::error::{input, Error, Result};
use crate::geometry::ExclusionDecision;
use crate::metrics::Metric;

pub const DEFAULT_LEAF_CAPACITY: usize = 32;

/// Candidates examined when looking for the second pivot.
pub const PIVOT_SAMPLE: usize = 100;

const NO_CHILD: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TreeKind {
    Ght,
    Mht,
}

impl TreeKind {
    pub fn name(&self) -> &'static str {
        match self {
            TreeKind::Ght => "ght",
            TreeKind::Mht => "mht",
        }
    }
}

impl fmt::Display for TreeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TreeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ght" => Ok(TreeKind::Ght),
            "mht" => Ok(TreeKind::Mht),
            other => input(format!("unknown tree kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
struct Split {
    /// Slots in the point store.
    pivot1: u32,
    pivot2: u32,
    /// Pivot 1 was inherited from the parent (MHT below the root).
    inherited: bool,
    d_pivots: f64,
    cover1: f64,
    cover2: f64,
    left: u32,
    right: u32,
}

#[derive(Debug, Clone)]
enum Node {
    /// Slots `start..end` of the point store.
    Leaf { start: u32, end: u32 },
    Split(Split),
}

/// A GHT or MHT over a copy of the data, laid out so each leaf is contiguous.
///
/// Built trees are immutable and can be queried from many threads at once.
#[derive(Debug, Clone)]
pub struct HyperplaneTree {
    kind: TreeKind,
    metric: Metric,
    dim: usize,
    leaf_capacity: usize,
    /// Point store, row-major by slot.
    points: Vec<f64>,
    /// Dataset index of each slot.
    ids: Vec<u32>,
    nodes: Vec<Node>,
    root: u32,
}

struct Builder<'a> {
    data: &'a Dataset,
    metric: &'a Metric,
    kind: TreeKind,
    leaf_capacity: usize,
    rng: SeededRng,
    points: Vec<f64>,
    ids: Vec<u32>,
    nodes: Vec<Node>,
}

impl Builder<'_> {
    fn dist(&self, a: u32, b: u32) -> f64 {
        self.metric
            .distance(self.data.row(a as usize), self.data.row(b as usize))
    }

    fn place(&mut self, id: u32) -> u32 {
        let slot = self.ids.len() as u32;
        self.ids.push(id);
        self.points.extend_from_slice(self.data.row(id as usize));
        slot
    }

    fn push(&mut self, node: Node) -> u32 {
        self.nodes.push(node);
        (self.nodes.len() - 1) as u32
    }

    fn leaf(&mut self, members: &[u32]) -> u32 {
        let start = self.ids.len() as u32;
        for &id in members {
            self.place(id);
        }
        let end = self.ids.len() as u32;
        self.push(Node::Leaf { start, end })
    }

    /// Position in `subset` of the point farthest from `from` among a random
    /// sample, falling back to a full scan when the sample is all duplicates.
    fn far_candidate(&mut self, subset: &[u32], from: u32) -> Option<(usize, f64)> {
        let k = subset.len().min(PIVOT_SAMPLE);
        let mut best: Option<(usize, f64)> = None;
        for i in sample(&mut self.rng, subset.len(), k) {
            let d = self.dist(from, subset[i]);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((i, d));
            }
        }
        if best.is_some_and(|(_, d)| d > 0.0) {
            return best;
        }
        subset
            .iter()
            .enumerate()
            .map(|(i, &id)| (i, self.dist(from, id)))
            .find(|&(_, d)| d > 0.0)
    }

    /// Builds the subtree over `subset`. `inherited` is the pivot an MHT child
    /// takes from its parent; it is stored elsewhere and is not in `subset`.
    fn build(&mut self, mut subset: Vec<u32>, inherited: Option<u32>) -> u32 {
        if subset.is_empty() {
            return NO_CHILD;
        }
        if subset.len() <= self.leaf_capacity {
            return self.leaf(&subset);
        }
        let (p1, p1_from_subset) = match inherited {
            Some(p) => (p, false),
            None => {
                let i = self.rng.gen_range(0..subset.len());
                (subset.swap_remove(i), true)
            }
        };
        let Some((i2, d_pivots)) = self.far_candidate(&subset, p1) else {
            // every point coincides with p1: no hyperplane exists
            if p1_from_subset {
                subset.push(p1);
            }
            return self.leaf(&subset);
        };
        let p2 = subset.swap_remove(i2);

        let mut left = Vec::new();
        let mut right = Vec::new();
        let (mut cover1, mut cover2) = (0.0f64, 0.0f64);
        for &s in &subset {
            let d1 = self.dist(s, p1);
            let d2 = self.dist(s, p2);
            if d1 < d2 {
                cover1 = cover1.max(d1);
                left.push(s);
            } else {
                cover2 = cover2.max(d2);
                right.push(s);
            }
        }
        drop(subset);

        let inherited_slot = inherited.map(|p| self.slot_of_pivot(p));
        let slot1 = match inherited_slot {
            Some(s) => s,
            None => self.place(p1),
        };
        let slot2 = self.place(p2);

        let (left_inherit, right_inherit) = match self.kind {
            TreeKind::Ght => (None, None),
            TreeKind::Mht => (Some(p1), Some(p2)),
        };
        let left = self.build(left, left_inherit);
        let right = self.build(right, right_inherit);
        self.push(Node::Split(Split {
            pivot1: slot1,
            pivot2: slot2,
            inherited: inherited.is_some(),
            d_pivots,
            cover1,
            cover2,
            left,
            right,
        }))
    }

    // Inherited pivots were placed by an ancestor; find their slot. Called
    // once per MHT node, and ancestors' pivots are near the end of the store
    // at that point, so search backwards.
    fn slot_of_pivot(&self, id: u32) -> u32 {
        self.ids
            .iter()
            .rposition(|&x| x == id)
            .expect("inherited pivot was placed by an ancestor") as u32
    }
}

impl HyperplaneTree {
    /// Builds a tree over every row of `data`.
    ///
    /// At each node pivot 1 is a uniformly random point (or, in an MHT below
    /// the root, the parent's pivot) and pivot 2 is the point farthest from
    /// it among [`PIVOT_SAMPLE`] random candidates. Subsets of at most
    /// `leaf_capacity` points become leaves, as does any subset whose points
    /// all coincide with pivot 1.
    pub fn build(
        data: &Dataset,
        metric: Metric,
        kind: TreeKind,
        leaf_capacity: usize,
        seed: u64,
    ) -> Result<Self> {
        if data.is_empty() {
            return input("cannot index an empty dataset");
        }
        if leaf_capacity == 0 {
            return input("leaf capacity must be positive");
        }
        if data.len() > NO_CHILD as usize {
            return input("too many points for 32-bit identifiers");
        }
        data.validate_for(&metric)?;

        let mut b = Builder {
            data,
            metric: &metric,
            kind,
            leaf_capacity,
            rng: seeded_rng(seed),
            points: Vec::with_capacity(data.as_flat().len()),
            ids: Vec::with_capacity(data.len()),
            nodes: Vec::new(),
        };
        let all: Vec<u32> = (0..data.len() as u32).collect();
        let root = b.build(all, None);
        let Builder {
            points, ids, nodes, ..
        } = b;
        Ok(HyperplaneTree {
            kind,
            dim: data.dim(),
            metric,
            leaf_capacity,
            points,
            ids,
            nodes,
            root,
        })
    }

    pub fn kind(&self) -> TreeKind {
        self.kind
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn leaf_capacity(&self) -> usize {
        self.leaf_capacity
    }

    /// Number of indexed points.
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> NodeRef<'_> {
        NodeRef {
            tree: self,
            id: self.root,
        }
    }

    /// Longest root-to-node path, counted in edges.
    pub fn depth(&self) -> usize {
        let mut deepest = 0;
        let mut stack = vec![(self.root, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            deepest = deepest.max(depth);
            if let Node::Split(s) = &self.nodes[id as usize] {
                for c in [s.left, s.right] {
                    if c != NO_CHILD {
                        stack.push((c, depth + 1));
                    }
                }
            }
        }
        deepest
    }

    #[inline]
    fn slot(&self, slot: u32) -> &[f64] {
        let i = slot as usize * self.dim;
        &self.points[i..i + self.dim]
    }

    /// Every indexed point within distance `t` of `q`.
    pub fn range_query(&self, q: &[f64], t: f64, strategy: ExclusionStrategy) -> Result<QueryStats> {
        check_query(&self.metric, self.dim, q, t)?;
        strategy.check(&self.metric)?;
        Ok(self.search(q, t, strategy))
    }

    /// Query without argument checks; `q` must be valid for the metric.
    pub(crate) fn search(&self, q: &[f64], t: f64, strategy: ExclusionStrategy) -> QueryStats {
        let mut stats = QueryStats::default();
        let mut results = Vec::new();
        // (node, distance from q to the node's pivot 1 if inherited)
        let mut stack: Vec<(u32, f64)> = vec![(self.root, f64::NAN)];
        while let Some((id, d_inherited)) = stack.pop() {
            match &self.nodes[id as usize] {
                Node::Leaf { start, end } => {
                    for slot in *start..*end {
                        if self.metric.distance(q, self.slot(slot)) <= t {
                            results.push(self.ids[slot as usize] as usize);
                        }
                    }
                    let n = u64::from(end - start);
                    stats.distance_calls += n;
                    stats.leaf_points_scanned += n;
                }
                Node::Split(s) => {
                    stats.nodes_visited += 1;
                    let d1 = if s.inherited {
                        d_inherited
                    } else {
                        stats.distance_calls += 1;
                        let d = self.metric.distance(q, self.slot(s.pivot1));
                        if d <= t {
                            results.push(self.ids[s.pivot1 as usize] as usize);
                        }
                        d
                    };
                    stats.distance_calls += 1;
                    let d2 = self.metric.distance(q, self.slot(s.pivot2));
                    if d2 <= t {
                        results.push(self.ids[s.pivot2 as usize] as usize);
                    }

                    let decision = strategy
                        .exclusion
                        .map_or(ExclusionDecision::NONE, |e| e.decide(d1, d2, s.d_pivots, t));
                    let cover = strategy.use_cover_radius;
                    if s.right != NO_CHILD
                        && !decision.exclude_side_of_p2
                        && !(cover && d2 > s.cover2 + t)
                    {
                        stack.push((s.right, d2));
                    }
                    if s.left != NO_CHILD
                        && !decision.exclude_side_of_p1
                        && !(cover && d1 > s.cover1 + t)
                    {
                        stack.push((s.left, d1));
                    }
                }
            }
        }
        results.sort_unstable();
        stats.results = results;
        stats
    }
}

/// Read-only view of one tree node.
#[derive(Clone, Copy)]
pub struct NodeRef<'a> {
    tree: &'a HyperplaneTree,
    id: u32,
}

impl<'a> NodeRef<'a> {
    fn split(&self) -> Option<&'a Split> {
        match &self.tree.nodes[self.id as usize] {
            Node::Split(s) => Some(s),
            Node::Leaf { .. } => None,
        }
    }

    fn child(&self, id: u32) -> Option<NodeRef<'a>> {
        (id != NO_CHILD).then_some(NodeRef {
            tree: self.tree,
            id,
        })
    }

    pub fn is_leaf(&self) -> bool {
        self.split().is_none()
    }

    /// Dataset indices held by a leaf; empty for internal nodes.
    pub fn leaf_ids(&self) -> Vec<usize> {
        match &self.tree.nodes[self.id as usize] {
            Node::Leaf { start, end } => self.tree.ids[*start as usize..*end as usize]
                .iter()
                .map(|&i| i as usize)
                .collect(),
            Node::Split(_) => Vec::new(),
        }
    }

    /// Dataset indices of the two pivots.
    pub fn pivots(&self) -> Option<(usize, usize)> {
        self.split().map(|s| {
            (
                self.tree.ids[s.pivot1 as usize] as usize,
                self.tree.ids[s.pivot2 as usize] as usize,
            )
        })
    }

    /// Whether pivot 1 belongs to an ancestor.
    pub fn inherits_pivot(&self) -> bool {
        self.split().is_some_and(|s| s.inherited)
    }

    pub fn d_pivots(&self) -> Option<f64> {
        self.split().map(|s| s.d_pivots)
    }

    pub fn cover_radii(&self) -> Option<(f64, f64)> {
        self.split().map(|s| (s.cover1, s.cover2))
    }

    pub fn left(&self) -> Option<NodeRef<'a>> {
        self.split().and_then(|s| self.child(s.left))
    }

    pub fn right(&self) -> Option<NodeRef<'a>> {
        self.split().and_then(|s| self.child(s.right))
    }

    /// Dataset indices of every point stored in this subtree, excluding an
    /// inherited pivot.
    pub fn subtree_ids(&self) -> Vec<usize> {
        let mut out = self.leaf_ids();
        if let Some(s) = self.split() {
            if !s.inherited {
                out.push(self.tree.ids[s.pivot1 as usize] as usize);
            }
            out.push(self.tree.ids[s.pivot2 as usize] as usize);
            for c in [self.left(), self.right()].into_iter().flatten() {
                out.extend(c.subtree_ids());
            }
        }
        out
    }
}

impl fmt::Debug for NodeRef<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NodeRef")
            .field("id", &self.id)
            .field("node", &self.tree.nodes[self.id as usize])
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_uniform;
    use crate::index::linear_scan;

    fn euc(n: usize, dim: usize, seed: u64) -> Dataset {
        gen_uniform(n, dim, seed).unwrap()
    }

    #[test]
    fn single_point_is_a_leaf() {
        let d = euc(1, 3, 1);
        for kind in [TreeKind::Ght, TreeKind::Mht] {
            let t = HyperplaneTree::build(&d, Metric::Euclidean, kind, 32, 0).unwrap();
            assert!(t.root().is_leaf());
            assert_eq!(t.root().pivots(), None);
            let s = t.range_query(d.row(0), 0.0, ExclusionStrategy::hilbert()).unwrap();
            assert_eq!(s.results, vec![0]);
        }
    }

    #[test]
    fn duplicates_collapse_into_one_leaf() {
        let d = Dataset::from_rows(&[[0.5, 0.5]; 2]).unwrap();
        let t = HyperplaneTree::build(&d, Metric::Euclidean, TreeKind::Ght, 1, 0).unwrap();
        assert!(t.root().is_leaf());
        assert_eq!(t.len(), 2);
        let d = Dataset::from_rows(&[[0.25, 0.5]; 100]).unwrap();
        let t = HyperplaneTree::build(&d, Metric::Euclidean, TreeKind::Mht, 4, 0).unwrap();
        let s = t.range_query(&[0.25, 0.5], 0.0, ExclusionStrategy::hilbert()).unwrap();
        assert_eq!(s.results, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn empty_and_bad_arguments() {
        let empty = Dataset::from_flat(2, vec![]).unwrap();
        assert!(HyperplaneTree::build(&empty, Metric::Euclidean, TreeKind::Ght, 8, 0).is_err());
        let d = euc(10, 2, 0);
        assert!(HyperplaneTree::build(&d, Metric::Euclidean, TreeKind::Ght, 0, 0).is_err());
        assert!(HyperplaneTree::build(&d, Metric::JensenShannon, TreeKind::Ght, 8, 0).is_err());
        let t = HyperplaneTree::build(&d, Metric::Manhattan, TreeKind::Ght, 8, 0).unwrap();
        assert!(matches!(
            t.range_query(d.row(0), 0.1, ExclusionStrategy::hilbert()),
            Err(Error::Config(_))
        ));
        assert!(t.range_query(&[0.0], 0.1, ExclusionStrategy::hyperbolic()).is_err());
    }

    #[test]
    fn mht_children_inherit_parent_pivots() {
        let d = euc(2000, 5, 3);
        let t = HyperplaneTree::build(&d, Metric::Euclidean, TreeKind::Mht, 16, 11).unwrap();
        let root = t.root();
        let (a, b) = root.pivots().unwrap();
        assert!(!root.inherits_pivot());
        let left = root.left().unwrap();
        let right = root.right().unwrap();
        assert_eq!(left.pivots().unwrap().0, a);
        assert_eq!(right.pivots().unwrap().0, b);
        assert!(left.inherits_pivot() && right.inherits_pivot());
    }

    #[test]
    fn every_point_stored_once() {
        let d = euc(3000, 4, 8);
        for kind in [TreeKind::Ght, TreeKind::Mht] {
            let t = HyperplaneTree::build(&d, Metric::Euclidean, kind, 10, 2).unwrap();
            let mut ids = t.root().subtree_ids();
            ids.sort_unstable();
            assert_eq!(ids, (0..3000).collect::<Vec<_>>(), "{kind}");
            assert_eq!(t.len(), 3000);
        }
    }

    #[test]
    fn mht_pays_one_distance_per_node() {
        let d = euc(5000, 6, 4);
        for kind in [TreeKind::Ght, TreeKind::Mht] {
            let t = HyperplaneTree::build(&d, Metric::Euclidean, kind, 16, 5).unwrap();
            for i in 0..50 {
                let s = t.range_query(d.row(i), 0.2, ExclusionStrategy::hyperbolic()).unwrap();
                let per_node = match kind {
                    TreeKind::Ght => 2 * s.nodes_visited,
                    TreeKind::Mht => s.nodes_visited + 1,
                };
                assert_eq!(s.distance_calls, per_node + s.leaf_points_scanned, "{kind}");
            }
        }
    }

    #[test]
    fn small_trees_agree_with_scan() {
        let d = euc(1500, 3, 6);
        for kind in [TreeKind::Ght, TreeKind::Mht] {
            let t = HyperplaneTree::build(&d, Metric::Euclidean, kind, 5, 9).unwrap();
            for i in 0..40 {
                let q = d.row(i * 7);
                let expect = linear_scan(&d, &Metric::Euclidean, q, 0.15).unwrap().results;
                for s in ["hyperbolic", "hilbert", "cover", "hilbert-plane", "none"] {
                    let got = t.range_query(q, 0.15, s.parse().unwrap()).unwrap().results;
                    assert_eq!(got, expect, "{kind} {s}");
                }
            }
        }
    }

    #[test]
    fn everything_returned_at_large_radius() {
        let d = euc(700, 4, 1);
        let t = HyperplaneTree::build(&d, Metric::Euclidean, TreeKind::Ght, 8, 1).unwrap();
        let s = t.range_query(&[0.5; 4], 10.0, ExclusionStrategy::hilbert()).unwrap();
        assert_eq!(s.results.len(), 700);
    }

    #[test]
    fn tree_kind_names() {
        assert_eq!("ght".parse::<TreeKind>().unwrap(), TreeKind::Ght);
        assert_eq!(TreeKind::Mht.to_string(), "mht");
        assert!("vpt".parse::<TreeKind>().is_err());
    }
}
