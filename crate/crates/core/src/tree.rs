//! The iterative kd-tree: dimension-cycling insert, point search, tombstone
//! delete, recursion-free traversal over parent links, per-dimension column
//! medians, and the threshold-triggered rebuild.
//!
//! Two split policies ship. `NodeSplit` (the default) compares against the
//! resident node's own cycling coordinate — the classic formulation, and the
//! one under which rebuilds actually balance the tree. `GlobalMedian`
//! compares against the tree-level column median of the cycling dimension;
//! it degenerates into chains when the data clusters on one side of the
//! median grid, which the tests pin down deliberately.

use crate::error::{Error, Result};
use crate::pool::{KdNode, NodeId, NodePool, PoolConfig, RangeTask};

/// Rule defining the comparison value during descent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitPolicy {
    /// Compare against the tree-level column median (refreshed at rebuild).
    GlobalMedian,
    /// Compare against the resident node's own cycling coordinate.
    #[default]
    NodeSplit,
}

impl SplitPolicy {
    /// Token used by the CLI and the CSV output.
    pub fn label(self) -> &'static str {
        match self {
            SplitPolicy::GlobalMedian => "global-median",
            SplitPolicy::NodeSplit => "node-split",
        }
    }
}

/// Construction parameters for a [`KdTree`].
#[derive(Debug, Clone, Copy)]
pub struct TreeConfig {
    pub dimensions: usize,
    pub capacity: usize,
    pub max_k: usize,
    pub split_policy: SplitPolicy,
    /// Growth ratio `b` at which a rebuild triggers; must be >= 1.
    pub rebuild_threshold: f64,
    /// When false, rebuilds only happen through explicit `rebuild` calls.
    pub auto_rebuild: bool,
}

impl TreeConfig {
    pub fn new(dimensions: usize, capacity: usize, max_k: usize) -> Self {
        TreeConfig {
            dimensions,
            capacity,
            max_k,
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

    pub fn with_auto_rebuild(mut self, on: bool) -> Self {
        self.auto_rebuild = on;
        self
    }
}

/// Fixed-capacity kd-tree over a [`NodePool`].
#[derive(Debug)]
pub struct KdTree {
    pub(crate) pool: NodePool,
    pub(crate) root: Option<NodeId>,
    live_count: usize,
    total_count: usize,
    pub(crate) medians: Vec<f64>,
    interval_min: Vec<f64>,
    interval_max: Vec<f64>,
    nodes_at_last_rebuild: usize,
    rebuild_threshold: f64,
    pub(crate) split_policy: SplitPolicy,
    auto_rebuild: bool,
    rebuilding: bool,
    rebuild_count: u64,
    rebuild_work_total: u64,
    rebuild_work_max: u64,
    next_seq: u64,
}

impl KdTree {
    pub fn new(config: TreeConfig) -> Result<Self> {
        if !config.rebuild_threshold.is_finite() || config.rebuild_threshold < 1.0 {
            return Err(Error::InvalidConfig("rebuild threshold must be finite and >= 1"));
        }
        let pool = NodePool::new(PoolConfig::new(config.capacity, config.dimensions, config.max_k))?;
        Ok(KdTree {
            pool,
            root: None,
            live_count: 0,
            total_count: 0,
            medians: vec![0.0; config.dimensions],
            interval_min: vec![0.0; config.dimensions],
            interval_max: vec![0.0; config.dimensions],
            nodes_at_last_rebuild: 0,
            rebuild_threshold: config.rebuild_threshold,
            split_policy: config.split_policy,
            auto_rebuild: config.auto_rebuild,
            rebuilding: false,
            rebuild_count: 0,
            rebuild_work_total: 0,
            rebuild_work_max: 0,
            next_seq: 0,
        })
    }

    /// Recycles the tree and its pool for a fresh run; allocates nothing.
    pub fn reset(&mut self) {
        self.pool.reset();
        self.root = None;
        self.live_count = 0;
        self.total_count = 0;
        self.medians.fill(0.0);
        self.interval_min.fill(0.0);
        self.interval_max.fill(0.0);
        self.nodes_at_last_rebuild = 0;
        self.rebuilding = false;
        self.rebuild_count = 0;
        self.rebuild_work_total = 0;
        self.rebuild_work_max = 0;
        self.next_seq = 0;
    }

    pub fn dimensions(&self) -> usize {
        self.pool.dimensions()
    }

    pub fn capacity(&self) -> usize {
        self.pool.capacity()
    }

    pub fn max_k(&self) -> usize {
        self.pool.max_k()
    }

    pub fn live_count(&self) -> usize {
        self.live_count
    }

    pub fn total_count(&self) -> usize {
        self.total_count
    }

    pub fn is_empty(&self) -> bool {
        self.live_count == 0
    }

    pub fn split_policy(&self) -> SplitPolicy {
        self.split_policy
    }

    pub fn rebuild_threshold(&self) -> f64 {
        self.rebuild_threshold
    }

    pub fn is_rebuilding(&self) -> bool {
        self.rebuilding
    }

    pub fn rebuild_count(&self) -> u64 {
        self.rebuild_count
    }

    /// Total nodes reinserted across all rebuilds.
    pub fn rebuild_work_total(&self) -> u64 {
        self.rebuild_work_total
    }

    /// Largest single-rebuild reinsertion count.
    pub fn rebuild_work_max(&self) -> u64 {
        self.rebuild_work_max
    }

    pub fn nodes_at_last_rebuild(&self) -> usize {
        self.nodes_at_last_rebuild
    }

    pub fn root(&self) -> Option<NodeId> {
        self.root
    }

    /// Stored per-dimension column medians (refreshed at rebuild; seeded by
    /// the first insert into an empty tree).
    pub fn medians(&self) -> &[f64] {
        &self.medians
    }

    /// Per-dimension lower bound of the live-point bounding box. Conservative:
    /// deletes do not shrink it, the next rebuild recomputes it tight.
    pub fn interval_min(&self) -> &[f64] {
        &self.interval_min
    }

    pub fn interval_max(&self) -> &[f64] {
        &self.interval_max
    }

    pub fn pool(&self) -> &NodePool {
        &self.pool
    }

    pub fn peak_pool_used(&self) -> usize {
        self.pool.peak_in_use()
    }

    pub(crate) fn check_coords(&self, coords: &[f64]) -> Result<()> {
        if coords.len() != self.dimensions() {
            return Err(Error::DimensionMismatch { expected: self.dimensions(), got: coords.len() });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoordinate);
        }
        Ok(())
    }

    /// Comparison value for descending past `node` at `depth`.
    ///
    /// `GlobalMedian` returns the stored median of the cycling dimension
    /// (every node at a given depth shares it); `NodeSplit` returns the
    /// resident node's own cycling coordinate.
    pub fn split_value(&self, node: NodeId, depth: usize) -> f64 {
        let cd = depth % self.dimensions();
        match self.split_policy {
            SplitPolicy::GlobalMedian => self.medians[cd],
            SplitPolicy::NodeSplit => self.pool.coords_of(node)[cd],
        }
    }

    /// Inserts a point, assigning the next sequence number. May trigger an
    /// automatic rebuild once the growth threshold is reached.
    pub fn add(&mut self, coords: &[f64]) -> Result<u64> {
        let seq = self.next_seq;
        self.add_with_seq(coords, seq)?;
        Ok(seq)
    }

    /// Insert with an externally assigned sequence number (the forest hands
    /// out forest-wide sequence numbers).
    pub(crate) fn add_with_seq(&mut self, coords: &[f64], seq: u64) -> Result<()> {
        self.check_coords(coords)?;
        if self.rebuilding {
            return Err(Error::RebuildInProgress);
        }
        let was_virgin = self.total_count == 0;
        self.insert_raw(coords, seq)?;
        if was_virgin {
            // Median of a single-point column is the point itself. Stored
            // medians otherwise change only at rebuild, when every node is
            // re-descended against them.
            self.medians.copy_from_slice(coords);
        }
        self.next_seq = self.next_seq.max(seq + 1);
        if self.auto_rebuild && self.should_rebuild() {
            if self.nodes_at_last_rebuild == 0 {
                // The first trigger establishes the growth baseline; every
                // later trigger performs a full rebuild.
                self.nodes_at_last_rebuild = self.live_count;
            } else {
                self.rebuild()?;
            }
        }
        Ok(())
    }

    /// Shared descent-and-attach used by inserts and rebuild reinsertion.
    /// No validation, no median seeding, no rebuild trigger.
    fn insert_raw(&mut self, coords: &[f64], seq: u64) -> Result<()> {
        let id = self.pool.take()?;
        self.pool.set_coords(id, coords);
        self.pool.node_mut(id).seq = seq;

        let dims = self.dimensions();
        let mut parent: Option<NodeId> = None;
        let mut go_left = false;
        let mut cur = self.root;
        let mut depth = 0usize;
        while let Some(pid) = cur {
            let cd = depth % dims;
            let split = self.split_value(pid, depth);
            parent = Some(pid);
            go_left = coords[cd] < split;
            let node = self.pool.node(pid);
            cur = if go_left { node.left } else { node.right };
            depth += 1;
        }
        match parent {
            None => self.root = Some(id),
            Some(p) => {
                if go_left {
                    self.pool.node_mut(p).left = Some(id);
                } else {
                    self.pool.node_mut(p).right = Some(id);
                }
                self.pool.node_mut(id).parent = Some(p);
            }
        }

        if self.total_count == 0 {
            self.interval_min.copy_from_slice(coords);
            self.interval_max.copy_from_slice(coords);
        } else {
            for (d, &c) in coords.iter().enumerate() {
                self.interval_min[d] = self.interval_min[d].min(c);
                self.interval_max[d] = self.interval_max[d].max(c);
            }
        }
        self.live_count += 1;
        self.total_count += 1;
        Ok(())
    }

    /// Finds the live node with exactly these coordinates by walking the same
    /// descent path an insert would take. Equal points always share one
    /// descent path (their comparisons agree at every node), so scanning the
    /// whole path and keeping the minimum yields the lowest-seq duplicate —
    /// the shallowest match alone would not, once a midpoint rebuild has
    /// promoted the middle of a tie run above earlier insertions.
    pub fn find(&self, coords: &[f64]) -> Result<Option<NodeId>> {
        self.check_coords(coords)?;
        let dims = self.dimensions();
        let mut best: Option<(u64, NodeId)> = None;
        let mut cur = self.root;
        let mut depth = 0usize;
        while let Some(id) = cur {
            let node = self.pool.node(id);
            if !node.tombstone
                && self.pool.coords_of(id) == coords
                && best.is_none_or(|(s, _)| node.seq < s)
            {
                best = Some((node.seq, id));
            }
            let cd = depth % dims;
            let split = self.split_value(id, depth);
            cur = if coords[cd] < split { node.left } else { node.right };
            depth += 1;
        }
        Ok(best.map(|(_, id)| id))
    }

    /// Tombstones the live node with these coordinates. The node stays in the
    /// structure (searches skip it) until the next rebuild compacts it away;
    /// the interval is deliberately not shrunk.
    pub fn delete(&mut self, coords: &[f64]) -> Result<()> {
        if self.rebuilding {
            return Err(Error::RebuildInProgress);
        }
        match self.find(coords)? {
            Some(id) => {
                self.pool.node_mut(id).tombstone = true;
                self.live_count -= 1;
                Ok(())
            }
            None => Err(Error::NotFound),
        }
    }

    /// Visits every live node in left-root-right order using parent links
    /// only. Returns the number of nodes visited.
    pub fn for_each_inorder<F: FnMut(&[f64], u64)>(&self, mut f: F) -> usize {
        let view = self.pool.view();
        let mut visited = 0usize;
        walk_inorder(view.slots, self.root, |id| {
            let node = view.node(id);
            if !node.tombstone {
                f(view.coords_of(id), node.seq);
                visited += 1;
            }
        });
        visited
    }

    /// Number of nodes on the longest root-to-leaf path (0 for an empty
    /// structure, 1 for a lone root). Tombstoned nodes count: they are still
    /// traversed.
    pub fn depth(&self) -> usize {
        let view = self.pool.view();
        let mut max_depth = 0usize;
        walk_preorder(view.slots, self.root, |_, d| {
            max_depth = max_depth.max(d + 1);
        });
        max_depth
    }

    /// Textbook median of dimension `dim` over all live points: middle
    /// element for odd counts, mean of the two middles for even counts.
    /// Copies the column into the pool's median workspace and insertion-sorts
    /// it there; allocates nothing.
    pub fn column_median(&mut self, dim: usize) -> Result<f64> {
        assert!(dim < self.dimensions(), "column index out of range");
        if self.live_count == 0 {
            return Err(Error::EmptyTree);
        }
        let root = self.root;
        let dims = self.pool.dimensions();
        let pool = &mut self.pool;
        let slots = &pool.slots;
        let coords = &pool.coords;
        let ws = &mut pool.median_ws;
        let mut n = 0usize;
        walk_inorder(slots, root, |id| {
            let node = &slots[id.index()];
            if !node.tombstone {
                ws[n] = coords[id.index() * dims + dim];
                n += 1;
            }
        });
        debug_assert_eq!(n, self.live_count);
        insertion_sort(&mut ws[..n]);
        Ok(median_of_sorted(&ws[..n]))
    }

    /// True when live growth since the last rebuild snapshot has reached the
    /// threshold ratio: `live / max(snapshot, 1) >= b`.
    pub fn should_rebuild(&self) -> bool {
        let prev = self.nodes_at_last_rebuild.max(1) as f64;
        self.live_count as f64 / prev >= self.rebuild_threshold
    }

    /// Tears the tree down and reinserts every live point against freshly
    /// computed medians. `GlobalMedian` reinserts in extracted (in-order)
    /// order; `NodeSplit` reinserts in midpoint order via an explicit range
    /// queue so the result is balanced. Tombstones are compacted away.
    ///
    /// Returns the number of live nodes rebuilt. The C ABI maps errors to the
    /// -1 sentinel.
    pub fn rebuild(&mut self) -> Result<usize> {
        if self.rebuilding {
            return Err(Error::RebuildInProgress);
        }
        if self.total_count == 0 {
            return Ok(0);
        }
        self.rebuilding = true;

        let n = self.extract_live_inorder();
        debug_assert_eq!(n, self.live_count);
        self.recompute_medians_from_scratch(n);
        self.release_all_postorder();
        self.root = None;
        self.live_count = 0;
        self.total_count = 0;
        self.interval_min.fill(0.0);
        self.interval_max.fill(0.0);

        // The scratch buffers move out of the pool for the duration of the
        // reinsertion loop so `insert_raw` can borrow the pool mutably.
        // `mem::take` swaps in empty vectors without allocating.
        let coords_buf = std::mem::take(&mut self.pool.rebuild_coords);
        let seqs_buf = std::mem::take(&mut self.pool.rebuild_seqs);
        let mut order_buf = std::mem::take(&mut self.pool.rebuild_order);
        let mut queue = std::mem::take(&mut self.pool.rebuild_queue);
        let result = self.reinsert_all(&coords_buf, &seqs_buf, &mut order_buf, &mut queue, n);
        self.pool.rebuild_coords = coords_buf;
        self.pool.rebuild_seqs = seqs_buf;
        self.pool.rebuild_order = order_buf;
        self.pool.rebuild_queue = queue;

        if let Err(e) = result {
            self.rebuilding = false;
            return Err(e);
        }
        self.nodes_at_last_rebuild = n;
        self.rebuild_count += 1;
        self.rebuild_work_total += n as u64;
        self.rebuild_work_max = self.rebuild_work_max.max(n as u64);
        self.rebuilding = false;
        Ok(n)
    }

    /// Copies every live point (coords + seq) into the pool's rebuild scratch
    /// in in-order sequence. Returns the live count.
    fn extract_live_inorder(&mut self) -> usize {
        let root = self.root;
        let dims = self.pool.dimensions();
        let pool = &mut self.pool;
        let slots = &pool.slots;
        let coords = &pool.coords;
        let out_coords = &mut pool.rebuild_coords;
        let out_seqs = &mut pool.rebuild_seqs;
        let mut n = 0usize;
        walk_inorder(slots, root, |id| {
            let node = &slots[id.index()];
            if !node.tombstone {
                let base = id.index() * dims;
                out_coords[n * dims..(n + 1) * dims].copy_from_slice(&coords[base..base + dims]);
                out_seqs[n] = node.seq;
                n += 1;
            }
        });
        n
    }

    fn recompute_medians_from_scratch(&mut self, n: usize) {
        let dims = self.dimensions();
        if n == 0 {
            self.medians.fill(0.0);
            return;
        }
        for d in 0..dims {
            let pool = &mut self.pool;
            let src = &pool.rebuild_coords;
            let ws = &mut pool.median_ws;
            for i in 0..n {
                ws[i] = src[i * dims + d];
            }
            insertion_sort(&mut ws[..n]);
            self.medians[d] = median_of_sorted(&ws[..n]);
        }
    }

    /// Returns every structural node (live and tombstoned) to the pool in
    /// post-order, so a node is only released after both its subtrees.
    fn release_all_postorder(&mut self) {
        let Some(root) = self.root else { return };
        let mut cur = post_order_first(&self.pool, root);
        loop {
            let parent = self.pool.node(cur).parent;
            self.pool.release(cur);
            let Some(p) = parent else { break };
            let pn = self.pool.node(p);
            if pn.left == Some(cur) {
                if let Some(r) = pn.right {
                    cur = post_order_first(&self.pool, r);
                    continue;
                }
            }
            cur = p;
        }
    }

    fn reinsert_all(
        &mut self,
        coords: &[f64],
        seqs: &[u64],
        order: &mut [u32],
        queue: &mut std::collections::VecDeque<RangeTask>,
        n: usize,
    ) -> Result<()> {
        let dims = self.dimensions();
        match self.split_policy {
            SplitPolicy::GlobalMedian => {
                for i in 0..n {
                    self.insert_raw(&coords[i * dims..(i + 1) * dims], seqs[i])?;
                }
            }
            SplitPolicy::NodeSplit => {
                for (i, slot) in order[..n].iter_mut().enumerate() {
                    *slot = i as u32;
                }
                queue.clear();
                if n > 0 {
                    queue.push_back(RangeTask { start: 0, end: n as u32, depth: 0 });
                }
                while let Some(task) = queue.pop_front() {
                    let (start, end) = (task.start as usize, task.end as usize);
                    let cd = task.depth as usize % dims;
                    order[start..end].sort_unstable_by(|&a, &b| {
                        coords[a as usize * dims + cd]
                            .total_cmp(&coords[b as usize * dims + cd])
                            .then(seqs[a as usize].cmp(&seqs[b as usize]))
                    });
                    let mid = start + (end - start) / 2;
                    let idx = order[mid] as usize;
                    self.insert_raw(&coords[idx * dims..(idx + 1) * dims], seqs[idx])?;
                    if mid > start {
                        queue.push_back(RangeTask {
                            start: start as u32,
                            end: mid as u32,
                            depth: task.depth + 1,
                        });
                    }
                    if mid + 1 < end {
                        queue.push_back(RangeTask {
                            start: (mid + 1) as u32,
                            end: end as u32,
                            depth: task.depth + 1,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Full structural sweep: parent/child links mutually consistent, node
    /// counts match the bookkeeping, every live point inside the interval.
    pub fn links_consistent(&self) -> bool {
        let view = self.pool.view();
        if let Some(root) = self.root {
            if view.node(root).parent.is_some() {
                return false;
            }
        }
        let mut total = 0usize;
        let mut live = 0usize;
        let mut ok = true;
        walk_preorder(view.slots, self.root, |id, _| {
            total += 1;
            let node = view.node(id);
            if !node.tombstone {
                live += 1;
                for d in 0..view.dimensions {
                    let c = view.coords_of(id)[d];
                    if c < self.interval_min[d] || c > self.interval_max[d] {
                        ok = false;
                    }
                }
            }
            if let Some(l) = node.left {
                if view.node(l).parent != Some(id) {
                    ok = false;
                }
            }
            if let Some(r) = node.right {
                if view.node(r).parent != Some(id) {
                    ok = false;
                }
            }
        });
        ok && total == self.total_count && live == self.live_count
    }

    /// Writes the structural snapshot: one node per line,
    /// `seq,depth,parent_seq,coord_0,...,coord_{D-1},tombstone`, pre-order,
    /// root's parent printed as -1. Coordinates use shortest round-trip
    /// decimals, so equal trees serialize byte-identically.
    pub fn write_snapshot<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        let view = self.pool.view();
        let mut result = Ok(());
        walk_preorder(view.slots, self.root, |id, depth| {
            if result.is_err() {
                return;
            }
            let node = view.node(id);
            let parent_seq = match node.parent {
                Some(p) => view.node(p).seq as i64,
                None => -1,
            };
            result = (|| {
                write!(w, "{},{},{}", node.seq, depth, parent_seq)?;
                for c in view.coords_of(id) {
                    write!(w, ",{c}")?;
                }
                writeln!(w, ",{}", u8::from(node.tombstone))
            })();
        });
        result
    }

    /// Snapshot as a string; handy for golden-file comparisons.
    pub fn snapshot_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_snapshot(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("snapshot is ASCII")
    }
}

/// Advisory estimate of how many rebuilds a single tree of `n` nodes incurs
/// under the default doubling threshold: ceil(ln n).
pub fn estimate_rebuilds(n: usize) -> usize {
    assert!(n >= 1, "estimate_rebuilds requires n >= 1");
    (n as f64).ln().ceil() as usize
}

/// In-order (left-root-right) walk over every structural node, tombstones
/// included, using parent links only — no recursion, no dynamic stack.
pub(crate) fn walk_inorder(slots: &[KdNode], root: Option<NodeId>, mut visit: impl FnMut(NodeId)) {
    enum Phase {
        Descend,
        FromLeft,
        FromRight,
    }
    let Some(mut cur) = root else { return };
    let mut phase = Phase::Descend;
    loop {
        match phase {
            Phase::Descend => {
                if let Some(l) = slots[cur.index()].left {
                    cur = l;
                } else {
                    phase = Phase::FromLeft;
                }
            }
            Phase::FromLeft => {
                visit(cur);
                if let Some(r) = slots[cur.index()].right {
                    cur = r;
                    phase = Phase::Descend;
                } else {
                    phase = Phase::FromRight;
                }
            }
            Phase::FromRight => match slots[cur.index()].parent {
                None => break,
                Some(p) => {
                    phase = if slots[p.index()].left == Some(cur) {
                        Phase::FromLeft
                    } else {
                        Phase::FromRight
                    };
                    cur = p;
                }
            },
        }
    }
}

/// Pre-order walk with depth, same machinery as [`walk_inorder`].
pub(crate) fn walk_preorder(
    slots: &[KdNode],
    root: Option<NodeId>,
    mut visit: impl FnMut(NodeId, usize),
) {
    enum Phase {
        Arrive,
        FromLeft,
        FromRight,
    }
    let Some(mut cur) = root else { return };
    let mut depth = 0usize;
    let mut phase = Phase::Arrive;
    loop {
        match phase {
            Phase::Arrive => {
                visit(cur, depth);
                if let Some(l) = slots[cur.index()].left {
                    cur = l;
                    depth += 1;
                } else {
                    phase = Phase::FromLeft;
                }
            }
            Phase::FromLeft => {
                if let Some(r) = slots[cur.index()].right {
                    cur = r;
                    depth += 1;
                    phase = Phase::Arrive;
                } else {
                    phase = Phase::FromRight;
                }
            }
            Phase::FromRight => match slots[cur.index()].parent {
                None => break,
                Some(p) => {
                    phase = if slots[p.index()].left == Some(cur) {
                        Phase::FromLeft
                    } else {
                        Phase::FromRight
                    };
                    cur = p;
                    depth -= 1;
                }
            },
        }
    }
}

/// Deepest left-spine descendant: the first node of a post-order walk.
fn post_order_first(pool: &NodePool, mut cur: NodeId) -> NodeId {
    loop {
        let node = pool.node(cur);
        if let Some(l) = node.left {
            cur = l;
        } else if let Some(r) = node.right {
            cur = r;
        } else {
            return cur;
        }
    }
}

fn insertion_sort(values: &mut [f64]) {
    for i in 1..values.len() {
        let x = values[i];
        let mut j = i;
        while j > 0 && values[j - 1] > x {
            values[j] = values[j - 1];
            j -= 1;
        }
        values[j] = x;
    }
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}
