//! Exact k-nearest-neighbor and radius search with a bounded best-k buffer,
//! plus the brute-force oracle every exactness test is checked against.
//!
//! Two query modes:
//!
//! * `Exact` (default) — iterative depth-first search over the pool's
//!   pre-allocated stack. Each visited node offers its distance; the far side
//!   of every split is pushed tagged with its axis separation and skipped on
//!   pop once the buffer is full and the separation exceeds the current worst
//!   hit. The separation bounds every point beyond the split under both
//!   split policies, so results are exact.
//! * `PathDescent` — a single root-to-leaf walk. It visits O(depth) nodes and
//!   is only exact by coincidence; it exists to demonstrate what the pruning
//!   buys and as a benchmark baseline.
//!
//! Distances are compared squared throughout and take the square root only
//! when results are emitted. Ties break by insertion sequence number, which
//! makes every result list a deterministic function of the inputs.

use crate::error::{Error, Result};
use crate::pool::{NodeId, PoolView, QueryScratch, SearchFrame};
use crate::tree::{KdTree, SplitPolicy};

/// One search result: the hit point's insertion sequence number and its
/// Euclidean distance from the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborHit {
    pub seq: u64,
    pub distance: f64,
}

/// Search mode for [`KnnQuery`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KnnMode {
    #[default]
    Exact,
    PathDescent,
}

impl KnnMode {
    pub fn label(self) -> &'static str {
        match self {
            KnnMode::Exact => "exact",
            KnnMode::PathDescent => "path-descent",
        }
    }
}

/// A k-nearest-neighbor query: coordinates, requested neighbor count, mode.
#[derive(Debug, Clone, Copy)]
pub struct KnnQuery<'a> {
    pub coords: &'a [f64],
    pub k: usize,
    pub mode: KnnMode,
}

impl<'a> KnnQuery<'a> {
    pub fn new(coords: &'a [f64], k: usize, mode: KnnMode) -> Self {
        KnnQuery { coords, k, mode }
    }

    pub fn exact(coords: &'a [f64], k: usize) -> Self {
        Self::new(coords, k, KnnMode::Exact)
    }

    pub fn path_descent(coords: &'a [f64], k: usize) -> Self {
        Self::new(coords, k, KnnMode::PathDescent)
    }
}

/// `true` when `a` orders strictly before `b` under (distance, seq).
#[inline]
fn hit_better(a: NeighborHit, b: NeighborHit) -> bool {
    a.distance < b.distance || (a.distance == b.distance && a.seq < b.seq)
}

/// Bounded best-k buffer over caller-provided storage.
///
/// Below `k` entries every offer is accepted; at `k` an offer replaces the
/// current worst entry iff it orders strictly before it under
/// (distance, seq). The worst entry is tracked exactly after every call.
#[derive(Debug)]
pub struct BestKBuffer<'a> {
    hits: &'a mut [NeighborHit],
    node_slots: Option<&'a mut [u32]>,
    filled: usize,
    k: usize,
    worst: usize,
}

impl<'a> BestKBuffer<'a> {
    /// `storage.len()` must be at least `k`; `k` must be at least 1.
    pub fn new(storage: &'a mut [NeighborHit], k: usize) -> Self {
        assert!(k >= 1 && k <= storage.len(), "best-k storage smaller than k");
        BestKBuffer { hits: storage, node_slots: None, filled: 0, k, worst: 0 }
    }

    /// Variant that also records which pool slot produced each hit, so the
    /// search can annotate result nodes afterwards.
    pub(crate) fn with_node_slots(
        storage: &'a mut [NeighborHit],
        node_slots: &'a mut [u32],
        k: usize,
    ) -> Self {
        assert!(k >= 1 && k <= storage.len() && k <= node_slots.len());
        BestKBuffer { hits: storage, node_slots: Some(node_slots), filled: 0, k, worst: 0 }
    }

    pub fn len(&self) -> usize {
        self.filled
    }

    pub fn is_empty(&self) -> bool {
        self.filled == 0
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_full(&self) -> bool {
        self.filled == self.k
    }

    /// Current worst entry under (distance, seq), if any.
    pub fn worst(&self) -> Option<NeighborHit> {
        (self.filled > 0).then(|| self.hits[self.worst])
    }

    /// Comparison key a candidate must beat once the buffer is full.
    pub(crate) fn worst_key(&self) -> f64 {
        if self.is_full() {
            self.hits[self.worst].distance
        } else {
            f64::INFINITY
        }
    }

    /// Offers a candidate; returns whether it was kept.
    pub fn offer(&mut self, hit: NeighborHit) -> bool {
        self.offer_tracked(hit, u32::MAX)
    }

    pub(crate) fn offer_tracked(&mut self, hit: NeighborHit, slot: u32) -> bool {
        if self.filled < self.k {
            self.hits[self.filled] = hit;
            if let Some(slots) = self.node_slots.as_deref_mut() {
                slots[self.filled] = slot;
            }
            if self.filled == 0 || hit_better(self.hits[self.worst], hit) {
                self.worst = self.filled;
            }
            self.filled += 1;
            true
        } else if hit_better(hit, self.hits[self.worst]) {
            self.hits[self.worst] = hit;
            if let Some(slots) = self.node_slots.as_deref_mut() {
                slots[self.worst] = slot;
            }
            self.worst = 0;
            for i in 1..self.filled {
                if hit_better(self.hits[self.worst], self.hits[i]) {
                    self.worst = i;
                }
            }
            true
        } else {
            false
        }
    }

    /// Sorts the kept entries ascending by (distance, seq) and returns them.
    pub fn sorted(&mut self) -> &[NeighborHit] {
        self.sort_in_place();
        &self.hits[..self.filled]
    }

    fn sort_in_place(&mut self) {
        match self.node_slots.as_deref_mut() {
            None => self.hits[..self.filled].sort_unstable_by(|a, b| {
                a.distance.total_cmp(&b.distance).then(a.seq.cmp(&b.seq))
            }),
            Some(slots) => {
                // Insertion sort keeps the slot array in step with the hits.
                for i in 1..self.filled {
                    let h = self.hits[i];
                    let s = slots[i];
                    let mut j = i;
                    while j > 0 && hit_better(h, self.hits[j - 1]) {
                        self.hits[j] = self.hits[j - 1];
                        slots[j] = slots[j - 1];
                        j -= 1;
                    }
                    self.hits[j] = h;
                    slots[j] = s;
                }
            }
        }
    }

    /// Search-side finalization: sort, then map the squared working keys to
    /// reported distances. Returns the hit count.
    pub(crate) fn finalize_sqrt(&mut self) -> usize {
        self.sort_in_place();
        for hit in &mut self.hits[..self.filled] {
            hit.distance = hit.distance.sqrt();
        }
        self.filled
    }
}

/// Euclidean distance between two points of the same dimensionality.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    Ok(dist_sq(a, b).sqrt())
}

#[inline]
pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        sum += d * d;
    }
    sum
}

/// Immutable tree parameters a search needs.
#[derive(Clone, Copy)]
pub(crate) struct TreeMeta<'a> {
    pub root: Option<NodeId>,
    pub medians: &'a [f64],
    pub policy: SplitPolicy,
    pub dims: usize,
}

impl<'a> TreeMeta<'a> {
    pub(crate) fn of(tree: &'a KdTree) -> Self {
        TreeMeta {
            root: tree.root,
            medians: &tree.medians,
            policy: tree.split_policy,
            dims: tree.dimensions(),
        }
    }

    #[inline]
    fn split_at(&self, view: &PoolView<'_>, node: NodeId, depth: usize) -> f64 {
        let cd = depth % self.dims;
        match self.policy {
            SplitPolicy::GlobalMedian => self.medians[cd],
            SplitPolicy::NodeSplit => view.coords_of(node)[cd],
        }
    }
}

/// Exact best-k DFS. Offers into `buf` without resetting it, so a forest
/// search can carry one buffer across several trees.
pub(crate) fn search_exact_into(
    meta: TreeMeta<'_>,
    view: PoolView<'_>,
    stack: &mut Vec<SearchFrame>,
    buf: &mut BestKBuffer<'_>,
    visits: &mut u64,
    q: &[f64],
) {
    let Some(root) = meta.root else { return };
    stack.clear();
    stack.push(SearchFrame { node: root.0, depth: 0, sep_sq: 0.0 });
    while let Some(frame) = stack.pop() {
        if buf.is_full() && frame.sep_sq > buf.worst_key() {
            continue;
        }
        let mut cur = NodeId(frame.node);
        let mut depth = frame.depth as usize;
        loop {
            *visits += 1;
            let node = view.node(cur);
            if !node.tombstone {
                let key = dist_sq(q, view.coords_of(cur));
                buf.offer_tracked(NeighborHit { seq: node.seq, distance: key }, cur.0);
            }
            let cd = depth % meta.dims;
            let split = meta.split_at(&view, cur, depth);
            let diff = q[cd] - split;
            let (near, far) =
                if q[cd] < split { (node.left, node.right) } else { (node.right, node.left) };
            if let Some(f) = far {
                stack.push(SearchFrame { node: f.0, depth: depth as u32 + 1, sep_sq: diff * diff });
            }
            match near {
                Some(n) => {
                    cur = n;
                    depth += 1;
                }
                None => break,
            }
        }
    }
}

/// Single root-to-leaf descent offering every node on the path.
pub(crate) fn search_path_descent_into(
    meta: TreeMeta<'_>,
    view: PoolView<'_>,
    buf: &mut BestKBuffer<'_>,
    visits: &mut u64,
    q: &[f64],
) {
    let mut cur = meta.root;
    let mut depth = 0usize;
    while let Some(id) = cur {
        *visits += 1;
        let node = view.node(id);
        if !node.tombstone {
            let key = dist_sq(q, view.coords_of(id));
            buf.offer_tracked(NeighborHit { seq: node.seq, distance: key }, id.0);
        }
        let cd = depth % meta.dims;
        let split = meta.split_at(&view, id, depth);
        cur = if q[cd] < split { node.left } else { node.right };
        depth += 1;
    }
}

/// Radius collection into the scratch hit buffer. Inclusion is evaluated in
/// squared space (`dist_sq <= radius^2`). Errors when more points fall inside
/// the radius than the buffer holds.
#[allow(clippy::too_many_arguments)]
fn search_radius_into(
    meta: TreeMeta<'_>,
    view: PoolView<'_>,
    stack: &mut Vec<SearchFrame>,
    hits: &mut [NeighborHit],
    hit_slots: &mut [u32],
    visits: &mut u64,
    q: &[f64],
    radius_sq: f64,
) -> Result<usize> {
    let Some(root) = meta.root else { return Ok(0) };
    let mut found = 0usize;
    stack.clear();
    stack.push(SearchFrame { node: root.0, depth: 0, sep_sq: 0.0 });
    while let Some(frame) = stack.pop() {
        if frame.sep_sq > radius_sq {
            continue;
        }
        let mut cur = NodeId(frame.node);
        let mut depth = frame.depth as usize;
        loop {
            *visits += 1;
            let node = view.node(cur);
            if !node.tombstone {
                let key = dist_sq(q, view.coords_of(cur));
                if key <= radius_sq {
                    if found == hits.len() {
                        return Err(Error::ResultOverflow);
                    }
                    hits[found] = NeighborHit { seq: node.seq, distance: key };
                    hit_slots[found] = cur.0;
                    found += 1;
                }
            }
            let cd = depth % meta.dims;
            let split = meta.split_at(&view, cur, depth);
            let diff = q[cd] - split;
            let (near, far) =
                if q[cd] < split { (node.left, node.right) } else { (node.right, node.left) };
            if let Some(f) = far {
                stack.push(SearchFrame { node: f.0, depth: depth as u32 + 1, sep_sq: diff * diff });
            }
            match near {
                Some(n) => {
                    cur = n;
                    depth += 1;
                }
                None => break,
            }
        }
    }
    Ok(found)
}

fn sort_radius_hits(hits: &mut [NeighborHit], hit_slots: &mut [u32], found: usize) {
    for i in 1..found {
        let h = hits[i];
        let s = hit_slots[i];
        let mut j = i;
        while j > 0 && hit_better(h, hits[j - 1]) {
            hits[j] = hits[j - 1];
            hit_slots[j] = hit_slots[j - 1];
            j -= 1;
        }
        hits[j] = h;
        hit_slots[j] = s;
    }
    for hit in &mut hits[..found] {
        hit.distance = hit.distance.sqrt();
    }
}

impl KdTree {
    fn validate_query(&self, coords: &[f64], k: usize) -> Result<()> {
        self.check_coords(coords)?;
        if self.is_rebuilding() {
            return Err(Error::RebuildInProgress);
        }
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1"));
        }
        if k > self.max_k() {
            return Err(Error::KExceedsMax { k, max_k: self.max_k() });
        }
        Ok(())
    }

    /// K-nearest-neighbor search using the pool's embedded scratch. The hit
    /// nodes' `distance_to_neighbor` annotations are refreshed.
    ///
    /// Returns the hits ascending by (distance, seq); the count is
    /// `min(k, live_count)`. An empty tree yields an empty slice.
    pub fn knn(&mut self, query: &KnnQuery<'_>) -> Result<&[NeighborHit]> {
        self.validate_query(query.coords, query.k)?;
        let dims = self.dimensions();
        let meta = TreeMeta {
            root: self.root,
            medians: &self.medians,
            policy: self.split_policy,
            dims,
        };
        let (view, scratch) = self.pool.split_for_search();
        let count = run_knn(meta, view, scratch, query);
        // Annotate the result nodes now the search borrows are done.
        for i in 0..count {
            let slot = self.pool.scratch.hit_slots[i];
            let d = self.pool.scratch.hits[i].distance;
            self.pool.slots[slot as usize].distance_to_neighbor = d;
        }
        Ok(&self.pool.scratch.hits[..count])
    }

    /// K-nearest-neighbor search over caller-provided scratch, leaving the
    /// tree untouched. Multiple readers may search the same tree
    /// concurrently provided each brings its own scratch.
    pub fn knn_with_scratch<'s>(
        &self,
        scratch: &'s mut QueryScratch,
        query: &KnnQuery<'_>,
    ) -> Result<&'s [NeighborHit]> {
        self.validate_query(query.coords, query.k)?;
        if scratch.hits.len() < query.k {
            return Err(Error::KExceedsMax { k: query.k, max_k: scratch.hits.len() });
        }
        let meta = TreeMeta::of(self);
        let view = self.pool.view();
        let count = run_knn(meta, view, scratch, query);
        Ok(&scratch.hits[..count])
    }

    /// All live points within `radius` of `q` (inclusive, evaluated in
    /// squared space), ascending by (distance, seq). Errors with
    /// `ResultOverflow` when more than `max_k` points qualify.
    pub fn knn_radius(&mut self, q: &[f64], radius: f64) -> Result<&[NeighborHit]> {
        self.check_coords(q)?;
        if self.is_rebuilding() {
            return Err(Error::RebuildInProgress);
        }
        if !radius.is_finite() || radius <= 0.0 {
            return Err(Error::InvalidRadius);
        }
        let dims = self.dimensions();
        let meta = TreeMeta {
            root: self.root,
            medians: &self.medians,
            policy: self.split_policy,
            dims,
        };
        let (view, scratch) = self.pool.split_for_search();
        scratch.reset_counters();
        let QueryScratch { stack, hits, hit_slots, visits } = scratch;
        let found =
            search_radius_into(meta, view, stack, hits, hit_slots, visits, q, radius * radius)?;
        sort_radius_hits(hits, hit_slots, found);
        for i in 0..found {
            let slot = self.pool.scratch.hit_slots[i];
            let d = self.pool.scratch.hits[i].distance;
            self.pool.slots[slot as usize].distance_to_neighbor = d;
        }
        Ok(&self.pool.scratch.hits[..found])
    }

    /// Node visits recorded by the last search that used the embedded scratch.
    pub fn last_visit_count(&self) -> u64 {
        self.pool.scratch_visits()
    }
}

fn run_knn(
    meta: TreeMeta<'_>,
    view: PoolView<'_>,
    scratch: &mut QueryScratch,
    query: &KnnQuery<'_>,
) -> usize {
    scratch.reset_counters();
    let QueryScratch { stack, hits, hit_slots, visits } = scratch;
    let mut buf = BestKBuffer::with_node_slots(hits, hit_slots, query.k);
    match query.mode {
        KnnMode::Exact => search_exact_into(meta, view, stack, &mut buf, visits, query.coords),
        KnnMode::PathDescent => search_path_descent_into(meta, view, &mut buf, visits, query.coords),
    }
    buf.finalize_sqrt()
}

/// Ground-truth oracle: computes every distance, orders by (distance, seq),
/// returns the first `min(k, n)`. Sequence numbers are the point indices.
pub fn knn_bruteforce(dims: usize, coords: &[f64], q: &[f64], k: usize) -> Vec<NeighborHit> {
    assert_eq!(coords.len() % dims, 0, "flat coordinate buffer length");
    let n = coords.len() / dims;
    let seqs: Vec<u64> = (0..n as u64).collect();
    knn_bruteforce_with_seqs(dims, coords, &seqs, q, k)
}

/// Oracle variant with explicit sequence numbers (for point sets that went
/// through deletions or forest-wide numbering).
pub fn knn_bruteforce_with_seqs(
    dims: usize,
    coords: &[f64],
    seqs: &[u64],
    q: &[f64],
    k: usize,
) -> Vec<NeighborHit> {
    assert_eq!(q.len(), dims);
    let n = coords.len() / dims;
    assert_eq!(seqs.len(), n);
    let mut all: Vec<NeighborHit> = (0..n)
        .map(|i| NeighborHit {
            seq: seqs[i],
            distance: dist_sq(q, &coords[i * dims..(i + 1) * dims]),
        })
        .collect();
    all.sort_unstable_by(|a, b| a.distance.total_cmp(&b.distance).then(a.seq.cmp(&b.seq)));
    all.truncate(k.min(n));
    for hit in &mut all {
        hit.distance = hit.distance.sqrt();
    }
    all
}

/// Header for the per-hit CSV export used in oracle diffing.
pub const HITS_CSV_HEADER: &str = "query_id,rank,seq,distance";

/// Writes one `query_id,rank,seq,distance` line per hit.
pub fn write_hits_csv<W: std::io::Write>(
    w: &mut W,
    query_id: u64,
    hits: &[NeighborHit],
) -> std::io::Result<()> {
    for (rank, hit) in hits.iter().enumerate() {
        writeln!(w, "{query_id},{rank},{},{}", hit.seq, hit.distance)?;
    }
    Ok(())
}
