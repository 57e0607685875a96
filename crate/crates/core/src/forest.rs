//! Forest of interval kd-trees: a sorted, pointer-free array of independent
//! trees sharding one logical index.
//!
//! Each member tree tracks the per-dimension [min, max] interval of its live
//! points. The array stays sorted by the trees' median on one key dimension,
//! so the candidate tree for a query is found by binary search with an
//! overlap test per probe. Trees share no state: a rebuild inside one shard
//! never touches another, which caps the cost of any single rebuild at the
//! per-tree capacity.
//!
//! Two query modes: `SingleTree` searches only the candidate tree (cheap, and
//! wrong whenever the true nearest lives in a neighboring shard);
//! `ExactForest` (default) seeds the buffer from the candidate, then visits
//! the remaining trees in order of bounding-box distance, skipping every tree
//! whose box lies beyond the current worst hit — provably equal to a
//! single-tree exact search over the union of points.

use crate::error::{Error, Result};
use crate::knn::{search_exact_into, BestKBuffer, KnnQuery, NeighborHit, TreeMeta};
use crate::pool::{PoolConfig, QueryScratch};
use crate::tree::{KdTree, SplitPolicy, TreeConfig};

/// Sizing law for sharding `n` expected points: `ceil(ln n) + 1` trees, each
/// with capacity `ceil(n / trees)` so the shards cover all `n` points.
pub fn forest_size_plan(n: usize) -> (usize, usize) {
    assert!(n >= 1, "forest_size_plan requires n >= 1");
    let trees = (n as f64).ln().ceil() as usize + 1;
    (trees, n.div_ceil(trees))
}

/// Query mode for [`IntervalForest::knn`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForestKnnMode {
    /// Search only the candidate tree. Not exact across shard boundaries.
    SingleTree,
    /// Exact search over the union of all shards.
    #[default]
    ExactForest,
}

impl ForestKnnMode {
    pub fn label(self) -> &'static str {
        match self {
            ForestKnnMode::SingleTree => "single-tree",
            ForestKnnMode::ExactForest => "exact-forest",
        }
    }
}

/// Construction parameters for an [`IntervalForest`].
#[derive(Debug, Clone, Copy)]
pub struct ForestConfig {
    pub dimensions: usize,
    pub max_k: usize,
    pub tree_count: usize,
    pub per_tree_capacity: usize,
    /// Dimension whose median orders the tree array.
    pub sort_key_dim: usize,
    pub split_policy: SplitPolicy,
    pub rebuild_threshold: f64,
    pub auto_rebuild: bool,
}

impl ForestConfig {
    /// Plans the shard layout for `n` expected points via [`forest_size_plan`].
    pub fn for_expected_points(n: usize, dimensions: usize, max_k: usize) -> Self {
        let (tree_count, per_tree_capacity) = forest_size_plan(n);
        Self::with_plan(tree_count, per_tree_capacity, dimensions, max_k)
    }

    pub fn with_plan(
        tree_count: usize,
        per_tree_capacity: usize,
        dimensions: usize,
        max_k: usize,
    ) -> Self {
        ForestConfig {
            dimensions,
            max_k,
            tree_count,
            per_tree_capacity,
            sort_key_dim: 0,
            split_policy: SplitPolicy::default(),
            rebuild_threshold: 2.0,
            auto_rebuild: true,
        }
    }

    pub fn with_policy(mut self, policy: SplitPolicy) -> Self {
        self.split_policy = policy;
        self
    }

    pub fn with_threshold(mut self, b: f64) -> Self {
        self.rebuild_threshold = b;
        self
    }

    pub fn with_sort_key_dim(mut self, dim: usize) -> Self {
        self.sort_key_dim = dim;
        self
    }

    pub fn with_auto_rebuild(mut self, on: bool) -> Self {
        self.auto_rebuild = on;
        self
    }
}

#[derive(Debug)]
struct ForestTree {
    tree: KdTree,
    open: bool,
    /// Order in which this tree was opened; breaks sort ties.
    open_order: u32,
    /// Construction-time tag; final tiebreaker so the sort order is total.
    slot_tag: u32,
}

/// Sorted, pointer-free array of interval kd-trees.
///
/// Every tree (and its pool) is allocated at construction; "opening" a tree
/// is pure bookkeeping, so no forest operation allocates.
#[derive(Debug)]
pub struct IntervalForest {
    trees: Vec<ForestTree>,
    open_count: usize,
    dimensions: usize,
    max_k: usize,
    per_tree_capacity: usize,
    sort_key_dim: usize,
    total_points: usize,
    next_seq: u64,
    next_open_order: u32,
    order_scratch: Vec<(f64, u32)>,
    query: QueryScratch,
    last_probe_count: u32,
    last_visits: u64,
}

impl IntervalForest {
    pub fn new(config: ForestConfig) -> Result<Self> {
        if config.tree_count == 0 {
            return Err(Error::InvalidConfig("forest needs at least one tree"));
        }
        if config.sort_key_dim >= config.dimensions {
            return Err(Error::InvalidConfig("sort key dimension out of range"));
        }
        // Validate the whole footprint before allocating any shard.
        PoolConfig {
            capacity: config.per_tree_capacity,
            dimensions: config.dimensions,
            max_k: config.max_k,
            forest_trees: config.tree_count,
        }
        .validate()?;
        let tree_config = TreeConfig::new(config.dimensions, config.per_tree_capacity, config.max_k)
            .with_policy(config.split_policy)
            .with_threshold(config.rebuild_threshold)
            .with_auto_rebuild(config.auto_rebuild);
        let trees = (0..config.tree_count)
            .map(|i| {
                Ok(ForestTree {
                    tree: KdTree::new(tree_config)?,
                    open: false,
                    open_order: u32::MAX,
                    slot_tag: i as u32,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(IntervalForest {
            trees,
            open_count: 0,
            dimensions: config.dimensions,
            max_k: config.max_k,
            per_tree_capacity: config.per_tree_capacity,
            sort_key_dim: config.sort_key_dim,
            total_points: 0,
            next_seq: 0,
            next_open_order: 0,
            order_scratch: Vec::with_capacity(config.tree_count),
            query: QueryScratch::new(config.per_tree_capacity, config.max_k),
            last_probe_count: 0,
            last_visits: 0,
        })
    }

    /// Recycles every shard for a fresh run; allocates nothing.
    pub fn reset(&mut self) {
        for ft in &mut self.trees {
            ft.tree.reset();
            ft.open = false;
            ft.open_order = u32::MAX;
        }
        self.open_count = 0;
        self.total_points = 0;
        self.next_seq = 0;
        self.next_open_order = 0;
        self.order_scratch.clear();
        self.query.reset_counters();
        self.last_probe_count = 0;
        self.last_visits = 0;
    }

    pub fn dimensions(&self) -> usize {
        self.dimensions
    }

    pub fn max_k(&self) -> usize {
        self.max_k
    }

    /// Trees currently holding points (opened), i.e. the live prefix of the
    /// sorted array.
    pub fn tree_count(&self) -> usize {
        self.open_count
    }

    /// Trees allocated up front by the plan.
    pub fn planned_tree_count(&self) -> usize {
        self.trees.len()
    }

    pub fn per_tree_capacity(&self) -> usize {
        self.per_tree_capacity
    }

    pub fn sort_key_dim(&self) -> usize {
        self.sort_key_dim
    }

    pub fn total_points(&self) -> usize {
        self.total_points
    }

    /// Read access to an open tree by its current (sorted) index.
    pub fn tree(&self, index: usize) -> Option<&KdTree> {
        (index < self.open_count).then(|| &self.trees[index].tree)
    }

    /// Probes performed by the last candidate-tree binary search.
    pub fn last_probe_count(&self) -> u32 {
        self.last_probe_count
    }

    /// Node visits accumulated by the last forest query.
    pub fn last_visit_count(&self) -> u64 {
        self.last_visits
    }

    pub fn total_rebuild_count(&self) -> u64 {
        self.trees.iter().map(|t| t.tree.rebuild_count()).sum()
    }

    /// Sum over all shards of nodes reinserted by rebuilds.
    pub fn total_rebuild_work(&self) -> u64 {
        self.trees.iter().map(|t| t.tree.rebuild_work_total()).sum()
    }

    /// Largest single rebuild any shard ever performed.
    pub fn max_rebuild_work(&self) -> u64 {
        self.trees.iter().map(|t| t.tree.rebuild_work_max()).max().unwrap_or(0)
    }

    /// Sum of per-shard peak pool usage.
    pub fn peak_pool_used_total(&self) -> usize {
        self.trees.iter().map(|t| t.tree.peak_pool_used()).sum()
    }

    fn check_coords(&self, coords: &[f64]) -> Result<()> {
        if coords.len() != self.dimensions {
            return Err(Error::DimensionMismatch { expected: self.dimensions, got: coords.len() });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoordinate);
        }
        Ok(())
    }

    /// Routes a point to a shard and inserts it with a forest-wide sequence
    /// number. Routing: first open, non-full tree whose key-dimension
    /// interval contains the point (lowest index); otherwise the non-full
    /// tree with the nearest median; otherwise a new tree is opened, up to
    /// the planned count. The receiving tree applies its own rebuild policy;
    /// the array is re-sorted afterwards.
    pub fn add(&mut self, coords: &[f64]) -> Result<u64> {
        self.check_coords(coords)?;
        let key = coords[self.sort_key_dim];
        let mut target: Option<usize> = None;
        for (i, ft) in self.trees[..self.open_count].iter().enumerate() {
            let t = &ft.tree;
            if t.total_count() < self.per_tree_capacity
                && t.live_count() > 0
                && t.interval_min()[self.sort_key_dim] <= key
                && key <= t.interval_max()[self.sort_key_dim]
            {
                target = Some(i);
                break;
            }
        }
        if target.is_none() {
            let mut best: Option<(f64, usize)> = None;
            for (i, ft) in self.trees[..self.open_count].iter().enumerate() {
                if ft.tree.total_count() < self.per_tree_capacity {
                    let d = (ft.tree.medians()[self.sort_key_dim] - key).abs();
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, i));
                    }
                }
            }
            target = best.map(|(_, i)| i);
        }
        let idx = match target {
            Some(i) => i,
            None => {
                if self.open_count == self.trees.len() {
                    return Err(Error::ForestExhausted);
                }
                let slot = &mut self.trees[self.open_count];
                slot.open = true;
                slot.open_order = self.next_open_order;
                self.next_open_order += 1;
                self.open_count += 1;
                self.open_count - 1
            }
        };
        let seq = self.next_seq;
        self.trees[idx].tree.add_with_seq(coords, seq)?;
        self.next_seq += 1;
        self.total_points += 1;
        self.sort_trees();
        Ok(seq)
    }

    /// Re-establishes the array order: non-empty trees ascending by the key
    /// median (opening order breaks ties), empty trees after them, unopened
    /// slots last. In place, no allocation.
    pub fn sort_trees(&mut self) {
        let key = self.sort_key_dim;
        fn class(ft: &ForestTree) -> u8 {
            if !ft.open {
                2
            } else if ft.tree.live_count() == 0 {
                1
            } else {
                0
            }
        }
        self.trees.sort_unstable_by(|a, b| {
            let (ca, cb) = (class(a), class(b));
            ca.cmp(&cb)
                .then_with(|| {
                    if ca == 0 && cb == 0 {
                        a.tree.medians()[key].total_cmp(&b.tree.medians()[key])
                    } else {
                        std::cmp::Ordering::Equal
                    }
                })
                .then(a.open_order.cmp(&b.open_order))
                .then(a.slot_tag.cmp(&b.slot_tag))
        });
    }

    /// Explicitly rebuilds one shard and restores the array order. Returns
    /// the number of nodes rebuilt.
    pub fn rebuild_tree(&mut self, index: usize) -> Result<usize> {
        if index >= self.open_count {
            return Err(Error::InvalidConfig("tree index out of range"));
        }
        let n = self.trees[index].tree.rebuild()?;
        self.sort_trees();
        Ok(n)
    }

    fn nonempty_count(&self) -> usize {
        self.trees[..self.open_count]
            .iter()
            .take_while(|ft| ft.tree.live_count() > 0)
            .count()
    }

    /// Binary search for the first tree whose interval contains `q`
    /// (full-dimensional, inclusive); falls back to the tree with the
    /// nearest key median when no interval contains the query. Also returns
    /// the number of probes the bisection performed.
    pub fn candidate_tree_probed(&self, q: &[f64]) -> Result<(Option<usize>, u32)> {
        self.check_coords(q)?;
        let ne = self.nonempty_count();
        if ne == 0 {
            return Ok((None, 0));
        }
        let key = self.sort_key_dim;
        let mut lo = 0isize;
        let mut hi = ne as isize - 1;
        let mut probes = 0u32;
        while lo <= hi {
            let mid = (lo + hi) / 2;
            probes += 1;
            let tree = &self.trees[mid as usize].tree;
            if interval_overlap(tree, q)? {
                return Ok((Some(mid as usize), probes));
            }
            if q[key] >= tree.medians()[key] {
                lo = mid + 1;
            } else {
                hi = mid - 1;
            }
        }
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, ft) in self.trees[..ne].iter().enumerate() {
            let d = (ft.tree.medians()[key] - q[key]).abs();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        Ok((Some(best), probes))
    }

    /// Candidate tree index for a query; `None` only for an empty forest.
    pub fn candidate_tree(&self, q: &[f64]) -> Result<Option<usize>> {
        self.candidate_tree_probed(q).map(|(idx, _)| idx)
    }

    /// K-nearest-neighbor search across the forest. See the module docs for
    /// the two modes. Hits are ascending by (distance, seq); the count is
    /// `min(k, live points considered)`.
    pub fn knn(&mut self, query: &KnnQuery<'_>, mode: ForestKnnMode) -> Result<&[NeighborHit]> {
        self.check_coords(query.coords)?;
        if query.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1"));
        }
        if query.k > self.max_k {
            return Err(Error::KExceedsMax { k: query.k, max_k: self.max_k });
        }
        let (candidate, probes) = self.candidate_tree_probed(query.coords)?;
        self.last_probe_count = probes;

        let ne = self.nonempty_count();
        let Self {
            ref trees,
            ref mut order_scratch,
            query: ref mut scratch,
            ..
        } = *self;
        scratch.reset_counters();
        let QueryScratch { stack, hits, hit_slots, visits } = scratch;
        let mut buf = BestKBuffer::with_node_slots(hits, hit_slots, query.k);

        if let Some(ci) = candidate {
            let tree = &trees[ci].tree;
            search_exact_into(TreeMeta::of(tree), tree.pool().view(), stack, &mut buf, visits, query.coords);
        }
        if mode == ForestKnnMode::ExactForest {
            order_scratch.clear();
            for (i, ft) in trees[..ne].iter().enumerate() {
                if Some(i) != candidate {
                    order_scratch.push((box_distance_sq_unchecked(&ft.tree, query.coords), i as u32));
                }
            }
            order_scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for &(box_sq, i) in order_scratch.iter() {
                // Everything in this tree (and, since the order is ascending,
                // in every later tree) is at least box_sq away.
                if buf.is_full() && box_sq > buf.worst_key() {
                    break;
                }
                let tree = &trees[i as usize].tree;
                search_exact_into(TreeMeta::of(tree), tree.pool().view(), stack, &mut buf, visits, query.coords);
            }
        }
        let count = buf.finalize_sqrt();
        self.last_visits = self.query.visits;
        Ok(&self.query.hits[..count])
    }

    /// Per-tree summary rows:
    /// `tree_index,live_count,median_key,interval_min_key,interval_max_key,rebuild_count`.
    pub fn write_summary_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "{FOREST_CSV_HEADER}")?;
        let key = self.sort_key_dim;
        for (i, ft) in self.trees[..self.open_count].iter().enumerate() {
            let t = &ft.tree;
            writeln!(
                w,
                "{i},{},{},{},{},{}",
                t.live_count(),
                t.medians()[key],
                t.interval_min()[key],
                t.interval_max()[key],
                t.rebuild_count()
            )?;
        }
        Ok(())
    }
}

/// Header for [`IntervalForest::write_summary_csv`].
pub const FOREST_CSV_HEADER: &str =
    "tree_index,live_count,median_key,interval_min_key,interval_max_key,rebuild_count";

/// Full-dimensional, inclusive bounding-box containment test.
pub fn interval_overlap(tree: &KdTree, q: &[f64]) -> Result<bool> {
    if q.len() != tree.dimensions() {
        return Err(Error::DimensionMismatch { expected: tree.dimensions(), got: q.len() });
    }
    if tree.live_count() == 0 {
        return Err(Error::EmptyTree);
    }
    Ok((0..q.len()).all(|d| tree.interval_min()[d] <= q[d] && q[d] <= tree.interval_max()[d]))
}

/// Euclidean distance from `q` to the tree's interval box (0 inside). Lower
/// bound on the distance to every live point in the tree.
pub fn box_distance(tree: &KdTree, q: &[f64]) -> Result<f64> {
    if q.len() != tree.dimensions() {
        return Err(Error::DimensionMismatch { expected: tree.dimensions(), got: q.len() });
    }
    if tree.live_count() == 0 {
        return Err(Error::EmptyTree);
    }
    Ok(box_distance_sq_unchecked(tree, q).sqrt())
}

fn box_distance_sq_unchecked(tree: &KdTree, q: &[f64]) -> f64 {
    let mut sum = 0.0;
    for ((&qd, &lo), &hi) in q.iter().zip(tree.interval_min()).zip(tree.interval_max()) {
        let excess = if qd < lo {
            lo - qd
        } else if qd > hi {
            qd - hi
        } else {
            0.0
        };
        sum += excess * excess;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::knn_bruteforce;
    use crate::tree::TreeConfig;

    fn forest(trees: usize, cap: usize, dims: usize) -> IntervalForest {
        IntervalForest::new(ForestConfig::with_plan(trees, cap, dims, 8)).unwrap()
    }

    #[test]
    fn size_plan_matches_sizing_laws() {
        assert_eq!(forest_size_plan(64_000), (13, 4924));
        assert_eq!(forest_size_plan(1), (1, 1));
        assert_eq!(forest_size_plan(1000), (8, 125));
    }

    #[test]
    fn first_add_opens_a_tree() {
        let mut f = forest(3, 4, 2);
        assert_eq!(f.tree_count(), 0);
        f.add(&[1.0, 2.0]).unwrap();
        assert_eq!(f.tree_count(), 1);
        assert_eq!(f.total_points(), 1);
        assert!(f.tree(0).unwrap().find(&[1.0, 2.0]).unwrap().is_some());
    }

    #[test]
    fn add_routes_by_key_interval_containment() {
        let mut f = forest(2, 3, 1);
        for x in [0.0, 4.0, 2.0] {
            f.add(&[x]).unwrap(); // fills tree with interval [0, 4]
        }
        for x in [6.0, 10.0] {
            f.add(&[x]).unwrap(); // first tree full, a second opens
        }
        assert_eq!(f.tree_count(), 2);
        f.add(&[7.0]).unwrap(); // contained in the second tree's [6, 10]
        let second = f.tree(1).unwrap();
        assert!(second.find(&[7.0]).unwrap().is_some());
        assert_eq!(f.tree(0).unwrap().live_count(), 3);
    }

    #[test]
    fn filling_a_tree_opens_the_next() {
        let mut f = forest(3, 4, 2);
        for i in 0..4 {
            f.add(&[i as f64, 0.0]).unwrap();
        }
        assert_eq!(f.tree_count(), 1);
        f.add(&[1.5, 0.0]).unwrap();
        assert_eq!(f.tree_count(), 2);
    }

    #[test]
    fn forest_exhausted_when_plan_is_full() {
        let mut f = forest(2, 1, 1);
        f.add(&[0.0]).unwrap();
        f.add(&[5.0]).unwrap();
        assert_eq!(f.add(&[9.0]).unwrap_err(), Error::ForestExhausted);
        assert_eq!(f.total_points(), 2);
    }

    #[test]
    fn trees_sort_ascending_by_median() {
        let mut f = forest(3, 1, 1);
        for x in [5.0, 1.0, 9.0] {
            f.add(&[x]).unwrap();
        }
        let medians: Vec<f64> = (0..3).map(|i| f.tree(i).unwrap().medians()[0]).collect();
        assert_eq!(medians, vec![1.0, 5.0, 9.0]);
        f.sort_trees(); // already sorted: order unchanged
        let again: Vec<f64> = (0..3).map(|i| f.tree(i).unwrap().medians()[0]).collect();
        assert_eq!(again, medians);
    }

    #[test]
    fn equal_medians_keep_opening_order() {
        let mut f = forest(2, 1, 1);
        f.add(&[3.0]).unwrap(); // seq 0 into the first opened tree
        f.add(&[3.0]).unwrap(); // same median, second tree
        let mut seqs = Vec::new();
        f.tree(0).unwrap().for_each_inorder(|_, s| seqs.push(s));
        assert_eq!(seqs, vec![0]);
    }

    #[test]
    fn overlap_is_inclusive_and_full_dimensional() {
        let mut t = KdTree::new(TreeConfig::new(2, 8, 4).with_auto_rebuild(false)).unwrap();
        t.add(&[3.0, 3.0]).unwrap();
        assert!(interval_overlap(&t, &[3.0, 3.0]).unwrap());

        let mut t = KdTree::new(TreeConfig::new(2, 8, 4).with_auto_rebuild(false)).unwrap();
        t.add(&[0.0, 0.0]).unwrap();
        t.add(&[5.0, 5.0]).unwrap();
        assert!(!interval_overlap(&t, &[6.0, 1.0]).unwrap());
        assert!(interval_overlap(&t, &[5.0, 5.0]).unwrap());

        let empty = KdTree::new(TreeConfig::new(2, 8, 4)).unwrap();
        assert_eq!(interval_overlap(&empty, &[0.0, 0.0]).unwrap_err(), Error::EmptyTree);
    }

    #[test]
    fn box_distance_known_values() {
        let mut t = KdTree::new(TreeConfig::new(2, 8, 4).with_auto_rebuild(false)).unwrap();
        t.add(&[0.0, 0.0]).unwrap();
        t.add(&[1.0, 1.0]).unwrap();
        assert_eq!(box_distance(&t, &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(box_distance(&t, &[4.0, 5.0]).unwrap(), 5.0);
    }

    #[test]
    fn box_distance_lower_bounds_point_distances() {
        let mut state = 0xBEEF_u64;
        let mut rng = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let mut t = KdTree::new(TreeConfig::new(2, 16, 4).with_auto_rebuild(false)).unwrap();
            let mut pts = Vec::new();
            for _ in 0..8 {
                let p = [rng() * 10.0, rng() * 10.0];
                pts.push(p);
                t.add(&p).unwrap();
            }
            let q = [rng() * 20.0 - 5.0, rng() * 20.0 - 5.0];
            let bd = box_distance(&t, &q).unwrap();
            let min_d = pts
                .iter()
                .map(|p| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            assert!(bd <= min_d + 1e-12, "box {bd} > min point {min_d}");
        }
    }

    #[test]
    fn candidate_tree_binary_search() {
        let mut f = forest(3, 3, 1);
        for x in [0.0, 2.0, 1.0, 4.0, 6.0, 5.0, 8.0, 10.0, 9.0] {
            f.add(&[x]).unwrap();
        }
        assert_eq!(f.tree_count(), 3);
        for i in 0..3 {
            // Refresh each shard's stored medians to the true column medians
            // (1, 5, 9); relative order is unchanged.
            f.rebuild_tree(i).unwrap();
        }
        // Single probe lands on the middle tree, whose [4, 6] contains 5.
        let (idx, probes) = f.candidate_tree_probed(&[5.0]).unwrap();
        let t = f.tree(idx.unwrap()).unwrap();
        assert!(t.find(&[5.0]).unwrap().is_some());
        assert!(probes <= 2);

        // 3 sits in no interval; medians 1 and 5 tie at distance 2, so the
        // lower-indexed tree wins.
        let (idx, _) = f.candidate_tree_probed(&[3.0]).unwrap();
        assert_eq!(idx.unwrap(), 0);

        let single = {
            let mut f = forest(1, 4, 1);
            f.add(&[1.0]).unwrap();
            f.candidate_tree(&[42.0]).unwrap()
        };
        assert_eq!(single, Some(0));

        let empty = forest(2, 2, 1);
        assert_eq!(empty.candidate_tree(&[0.0]).unwrap(), None);
    }

    #[test]
    fn single_tree_forest_matches_plain_knn() {
        let mut state = 0xACE_u64;
        let mut rng = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut f = forest(1, 32, 2);
        let mut t = KdTree::new(TreeConfig::new(2, 32, 8)).unwrap();
        for _ in 0..20 {
            let p = [rng(), rng()];
            f.add(&p).unwrap();
            t.add(&p).unwrap();
        }
        let q = [0.4, 0.6];
        let expected = t.knn(&KnnQuery::exact(&q, 5)).unwrap().to_vec();
        let got = f.knn(&KnnQuery::exact(&q, 5), ForestKnnMode::ExactForest).unwrap();
        assert_eq!(expected, got);
    }

    #[test]
    fn exact_forest_matches_bruteforce_across_shards() {
        let mut state = 0xF00D_u64;
        let mut rng = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut f = IntervalForest::new(ForestConfig::for_expected_points(200, 3, 8)).unwrap();
        let mut flat = Vec::new();
        for _ in 0..200 {
            let p = [rng(), rng(), rng()];
            flat.extend_from_slice(&p);
            f.add(&p).unwrap();
        }
        assert!(f.tree_count() > 1, "want a real multi-shard instance");
        for _ in 0..25 {
            let q = [rng(), rng(), rng()];
            let expected = knn_bruteforce(3, &flat, &q, 5);
            let got = f.knn(&KnnQuery::exact(&q, 5), ForestKnnMode::ExactForest).unwrap();
            let got_seqs: Vec<u64> = got.iter().map(|h| h.seq).collect();
            let want_seqs: Vec<u64> = expected.iter().map(|h| h.seq).collect();
            assert_eq!(got_seqs, want_seqs);
        }
    }

    #[test]
    fn single_tree_mode_misses_adjacent_shard_neighbor() {
        let mut f = forest(2, 4, 2);
        // Fill the first shard with a wide box whose points are all far from
        // the query, then force the true nearest into the second shard.
        for p in [[0.0, 0.0], [100.0, 0.0], [0.0, 2.0], [100.0, 2.0]] {
            f.add(&p).unwrap();
        }
        for p in [[50.0, 1.0], [51.0, 1.0]] {
            f.add(&p).unwrap();
        }
        assert_eq!(f.tree_count(), 2);
        let q = [50.0, 0.9];
        let single = f.knn(&KnnQuery::exact(&q, 1), ForestKnnMode::SingleTree).unwrap().to_vec();
        assert_eq!(single[0].seq, 0);
        assert!(single[0].distance > 50.0);
        let exact = f.knn(&KnnQuery::exact(&q, 1), ForestKnnMode::ExactForest).unwrap();
        assert_eq!(exact[0].seq, 4);
        assert!((exact[0].distance - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rebuilding_one_shard_leaves_others_untouched() {
        let mut f = forest(3, 8, 2);
        for i in 0..20 {
            f.add(&[(i % 10) as f64, (i / 2) as f64]).unwrap();
        }
        let open = f.tree_count();
        assert!(open >= 2);
        let before: Vec<String> =
            (0..open).map(|i| f.tree(i).unwrap().snapshot_string()).collect();
        let rebuilds_before = f.total_rebuild_count();
        f.rebuild_tree(1).unwrap();
        assert_eq!(f.total_rebuild_count(), rebuilds_before + 1);
        // Only the rebuilt shard may have a new shape; all other snapshots
        // survive byte-identically (the sort can reorder them, not edit them).
        let after: Vec<String> = (0..open).map(|i| f.tree(i).unwrap().snapshot_string()).collect();
        let unchanged = after.iter().filter(|s| before.contains(s)).count();
        assert!(unchanged >= open - 1, "{unchanged} of {open} shards unchanged");
    }

    #[test]
    fn summary_csv_has_row_per_open_tree() {
        let mut f = forest(3, 2, 1);
        for x in [1.0, 2.0, 5.0] {
            f.add(&[x]).unwrap();
        }
        let mut out = Vec::new();
        f.write_summary_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], FOREST_CSV_HEADER);
        assert_eq!(lines.len(), 1 + f.tree_count());
    }

    #[test]
    fn rejects_invalid_config() {
        assert!(IntervalForest::new(ForestConfig::with_plan(0, 4, 2, 4)).is_err());
        assert!(IntervalForest::new(ForestConfig::with_plan(2, 4, 2, 4).with_sort_key_dim(2)).is_err());
    }
}
