//! Fixed-capacity node pool.
//!
//! All storage an index will ever need — node slots, the coordinate store,
//! the free list, and every scratch workspace (median sorting, rebuild
//! extraction, traversal stack, result buffer) — is acquired in one place,
//! [`NodePool::new`], and never grows afterwards. [`NodePool::reset`] recycles
//! the pool for another run; dropping it releases everything at once.
//!
//! Slots are dispensed by a bump watermark plus a LIFO free list, which makes
//! slot-assignment traces a deterministic function of the operation sequence.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::knn::NeighborHit;

/// Hard ceiling on the bytes a single configuration may reserve (1 GiB).
pub const POOL_BYTE_CEILING: usize = 1 << 30;

/// Sizing for a pool. All sizes are fixed for the pool's lifetime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolConfig {
    /// Maximum number of nodes the pool can hold.
    pub capacity: usize,
    /// Coordinate dimensionality D.
    pub dimensions: usize,
    /// Largest KNN result set that will ever be requested.
    pub max_k: usize,
    /// Number of trees a forest will allocate with this per-tree config
    /// (0 = single-tree mode). Only used to validate the total footprint.
    pub forest_trees: usize,
}

impl PoolConfig {
    pub fn new(capacity: usize, dimensions: usize, max_k: usize) -> Self {
        PoolConfig { capacity, dimensions, max_k, forest_trees: 0 }
    }

    /// Approximate bytes one pool with this config will reserve.
    fn footprint_bytes(&self) -> Option<usize> {
        let coord_store = self.capacity.checked_mul(self.dimensions)?.checked_mul(8)?;
        // Slots, free list, median workspace, rebuild scratch, stack, results.
        let per_slot = std::mem::size_of::<KdNode>() + 4 + 8 + 8 + 4 + 12 + std::mem::size_of::<SearchFrame>();
        let slot_side = self.capacity.checked_mul(per_slot)?;
        let results = self.max_k.checked_mul(std::mem::size_of::<NeighborHit>())?;
        // Rebuild scratch holds a second full coordinate copy.
        coord_store
            .checked_mul(2)?
            .checked_add(slot_side)?
            .checked_add(results)
    }

    pub fn validate(&self) -> Result<()> {
        if self.capacity == 0 {
            return Err(Error::InvalidConfig("capacity must be at least 1"));
        }
        if self.dimensions == 0 {
            return Err(Error::InvalidConfig("dimensions must be at least 1"));
        }
        if self.max_k == 0 {
            return Err(Error::InvalidConfig("max_k must be at least 1"));
        }
        let per_pool = self.footprint_bytes().ok_or(Error::CapacityOverflow)?;
        let total = per_pool
            .checked_mul(self.forest_trees.max(1))
            .ok_or(Error::CapacityOverflow)?;
        if total > POOL_BYTE_CEILING {
            return Err(Error::CapacityOverflow);
        }
        Ok(())
    }
}

/// Handle to a pool slot. Only meaningful for the pool that issued it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) u32);

impl NodeId {
    /// Slot index inside the pool.
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Pool-resident tree node.
///
/// Coordinates are not stored inline: slot `i` owns the fixed region
/// `[i * D, (i + 1) * D)` of the pool's coordinate store, so the node's data
/// reference is implicit in its slot id.
#[derive(Debug, Clone)]
pub struct KdNode {
    pub left: Option<NodeId>,
    pub right: Option<NodeId>,
    pub parent: Option<NodeId>,
    /// Insertion sequence number; unique within one index instance.
    pub seq: u64,
    /// Distance annotation written when this node is returned by a KNN search.
    pub distance_to_neighbor: f64,
    /// Deletion mark; tombstoned nodes stay in the structure until the next
    /// rebuild compacts them away.
    pub tombstone: bool,
    /// True while the slot sits on the free list.
    pub(crate) released: bool,
}

impl Default for KdNode {
    fn default() -> Self {
        KdNode {
            left: None,
            right: None,
            parent: None,
            seq: 0,
            distance_to_neighbor: 0.0,
            tombstone: false,
            released: false,
        }
    }
}

/// Pending index range for the midpoint-order rebuild queue.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RangeTask {
    pub start: u32,
    pub end: u32,
    pub depth: u32,
}

/// One frame of the explicit depth-first search stack: a subtree root plus
/// the squared axis separation between the query and the split that guards it.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SearchFrame {
    pub node: u32,
    pub depth: u32,
    pub sep_sq: f64,
}

/// Per-query scratch: explicit traversal stack, best-k storage, and the
/// visit counter.
///
/// The pool embeds one scratch set; additional concurrent readers construct
/// their own with [`QueryScratch::new`] at setup time and pass it to the
/// `*_with_scratch` search entry points.
#[derive(Debug)]
pub struct QueryScratch {
    pub(crate) stack: Vec<SearchFrame>,
    pub(crate) hits: Vec<NeighborHit>,
    pub(crate) hit_slots: Vec<u32>,
    pub(crate) visits: u64,
}

impl QueryScratch {
    /// Allocates a scratch set able to serve an index with `capacity` nodes
    /// and result sets up to `max_k`. Call once at setup time.
    pub fn new(capacity: usize, max_k: usize) -> Self {
        QueryScratch {
            stack: Vec::with_capacity(capacity),
            hits: vec![NeighborHit { seq: 0, distance: 0.0 }; max_k],
            hit_slots: vec![0; max_k],
            visits: 0,
        }
    }

    /// Node visits recorded by the last search run on this scratch.
    pub fn visits(&self) -> u64 {
        self.visits
    }

    pub(crate) fn reset_counters(&mut self) {
        self.stack.clear();
        self.visits = 0;
    }
}

/// Fixed-capacity storage pool; see the module docs for the lifecycle.
#[derive(Debug)]
pub struct NodePool {
    config: PoolConfig,
    pub(crate) slots: Vec<KdNode>,
    pub(crate) coords: Vec<f64>,
    free_list: Vec<u32>,
    watermark: usize,
    in_use: usize,
    peak_in_use: usize,
    take_count: u64,
    release_count: u64,
    // Scratch workspaces, all sized at construction.
    pub(crate) median_ws: Vec<f64>,
    pub(crate) rebuild_coords: Vec<f64>,
    pub(crate) rebuild_seqs: Vec<u64>,
    pub(crate) rebuild_order: Vec<u32>,
    pub(crate) rebuild_queue: VecDeque<RangeTask>,
    pub(crate) scratch: QueryScratch,
}

impl NodePool {
    /// Acquires all storage for the pool. The only operation in the library
    /// that takes memory from the allocator.
    pub fn new(config: PoolConfig) -> Result<Self> {
        config.validate()?;
        let cap = config.capacity;
        let dims = config.dimensions;
        Ok(NodePool {
            config,
            slots: vec![KdNode::default(); cap],
            coords: vec![0.0; cap * dims],
            free_list: Vec::with_capacity(cap),
            watermark: 0,
            in_use: 0,
            peak_in_use: 0,
            take_count: 0,
            release_count: 0,
            median_ws: vec![0.0; cap],
            rebuild_coords: vec![0.0; cap * dims],
            rebuild_seqs: vec![0; cap],
            rebuild_order: vec![0; cap],
            rebuild_queue: VecDeque::with_capacity(cap),
            scratch: QueryScratch::new(cap, config.max_k),
        })
    }

    /// Marks every slot free and zeroes the scratch spaces so the pool can be
    /// recycled for another run. Idempotent; allocates nothing.
    pub fn reset(&mut self) {
        for slot in &mut self.slots {
            *slot = KdNode::default();
        }
        self.coords.fill(0.0);
        self.free_list.clear();
        self.watermark = 0;
        self.in_use = 0;
        self.peak_in_use = 0;
        self.take_count = 0;
        self.release_count = 0;
        self.median_ws.fill(0.0);
        self.rebuild_coords.fill(0.0);
        self.rebuild_seqs.fill(0);
        self.rebuild_order.fill(0);
        self.rebuild_queue.clear();
        self.scratch.reset_counters();
    }

    /// Dispenses an unused slot: LIFO free list first, then the watermark.
    pub fn take(&mut self) -> Result<NodeId> {
        let idx = if let Some(idx) = self.free_list.pop() {
            idx
        } else if self.watermark < self.config.capacity {
            let idx = self.watermark as u32;
            self.watermark += 1;
            idx
        } else {
            return Err(Error::PoolExhausted);
        };
        self.slots[idx as usize] = KdNode::default();
        let base = idx as usize * self.config.dimensions;
        self.coords[base..base + self.config.dimensions].fill(0.0);
        self.in_use += 1;
        self.peak_in_use = self.peak_in_use.max(self.in_use);
        self.take_count += 1;
        Ok(NodeId(idx))
    }

    /// Returns a slot to the free list; storage stays with the pool.
    ///
    /// Panics on a foreign reference or a double return — those are contract
    /// violations, not recoverable conditions.
    pub fn release(&mut self, id: NodeId) {
        let idx = id.index();
        assert!(idx < self.watermark, "release of a slot this pool never issued");
        assert!(!self.slots[idx].released, "double release of pool slot {idx}");
        self.slots[idx].released = true;
        self.free_list.push(id.0);
        self.in_use -= 1;
        self.release_count += 1;
    }

    pub fn capacity(&self) -> usize {
        self.config.capacity
    }

    pub fn dimensions(&self) -> usize {
        self.config.dimensions
    }

    pub fn max_k(&self) -> usize {
        self.config.max_k
    }

    pub fn config(&self) -> &PoolConfig {
        &self.config
    }

    /// Slots ever handed out.
    pub fn watermark(&self) -> usize {
        self.watermark
    }

    /// Slots currently in use.
    pub fn in_use(&self) -> usize {
        self.in_use
    }

    /// Slots currently available without growing.
    pub fn free_slots(&self) -> usize {
        self.config.capacity - self.in_use
    }

    /// High-water mark of simultaneously used slots.
    pub fn peak_in_use(&self) -> usize {
        self.peak_in_use
    }

    /// Lifetime count of `take` calls.
    pub fn take_count(&self) -> u64 {
        self.take_count
    }

    /// Lifetime count of `release` calls.
    pub fn release_count(&self) -> u64 {
        self.release_count
    }

    pub fn node(&self, id: NodeId) -> &KdNode {
        &self.slots[id.index()]
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> &mut KdNode {
        &mut self.slots[id.index()]
    }

    /// Coordinates stored for the given slot.
    pub fn coords_of(&self, id: NodeId) -> &[f64] {
        let base = id.index() * self.config.dimensions;
        &self.coords[base..base + self.config.dimensions]
    }

    pub(crate) fn set_coords(&mut self, id: NodeId, coords: &[f64]) {
        let base = id.index() * self.config.dimensions;
        self.coords[base..base + self.config.dimensions].copy_from_slice(coords);
    }

    /// Read-only view plus the embedded scratch, split so a search can walk
    /// the slots while filling the scratch.
    pub(crate) fn split_for_search(&mut self) -> (PoolView<'_>, &mut QueryScratch) {
        (
            PoolView { slots: &self.slots, coords: &self.coords, dimensions: self.config.dimensions },
            &mut self.scratch,
        )
    }

    pub(crate) fn view(&self) -> PoolView<'_> {
        PoolView { slots: &self.slots, coords: &self.coords, dimensions: self.config.dimensions }
    }

    pub(crate) fn scratch_visits(&self) -> u64 {
        self.scratch.visits
    }
}

/// Borrowed read-only view of the slot and coordinate stores.
#[derive(Clone, Copy)]
pub(crate) struct PoolView<'a> {
    pub slots: &'a [KdNode],
    pub coords: &'a [f64],
    pub dimensions: usize,
}

impl<'a> PoolView<'a> {
    pub fn node(&self, id: NodeId) -> &'a KdNode {
        &self.slots[id.index()]
    }

    pub fn coords_of(&self, id: NodeId) -> &'a [f64] {
        let base = id.index() * self.dimensions;
        &self.coords[base..base + self.dimensions]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(capacity: usize) -> PoolConfig {
        PoolConfig::new(capacity, 2, 4)
    }

    #[test]
    fn alloc_fresh_pool() {
        let pool = NodePool::new(cfg(8)).unwrap();
        assert_eq!(pool.capacity(), 8);
        assert_eq!(pool.watermark(), 0);
        assert_eq!(pool.in_use(), 0);
        assert_eq!(pool.free_slots(), 8);
    }

    #[test]
    fn alloc_rejects_zero_capacity() {
        assert_eq!(NodePool::new(cfg(0)).unwrap_err(), Error::InvalidConfig("capacity must be at least 1"));
        assert_eq!(
            NodePool::new(PoolConfig::new(4, 0, 1)).unwrap_err(),
            Error::InvalidConfig("dimensions must be at least 1")
        );
        assert_eq!(
            NodePool::new(PoolConfig::new(4, 2, 0)).unwrap_err(),
            Error::InvalidConfig("max_k must be at least 1")
        );
    }

    #[test]
    fn alloc_at_paper_scale() {
        let pool = NodePool::new(PoolConfig::new(64_000, 3, 30)).unwrap();
        assert_eq!(pool.capacity(), 64_000);
        assert_eq!(pool.dimensions(), 3);
    }

    #[test]
    fn alloc_rejects_ceiling_overflow() {
        let cfg = PoolConfig::new(usize::MAX / 16, 3, 1);
        assert_eq!(NodePool::new(cfg).unwrap_err(), Error::CapacityOverflow);
        let big = PoolConfig::new(1 << 24, 1 << 10, 1);
        assert_eq!(NodePool::new(big).unwrap_err(), Error::CapacityOverflow);
    }

    #[test]
    fn take_dispenses_distinct_slots_until_exhausted() {
        let mut pool = NodePool::new(cfg(2)).unwrap();
        let a = pool.take().unwrap();
        let b = pool.take().unwrap();
        assert_ne!(a, b);
        assert_eq!(pool.take().unwrap_err(), Error::PoolExhausted);
        assert_eq!(pool.in_use() + pool.free_slots(), pool.capacity());
    }

    #[test]
    fn release_feeds_lifo_free_list() {
        let mut pool = NodePool::new(cfg(8)).unwrap();
        let ids: Vec<NodeId> = (0..6).map(|_| pool.take().unwrap()).collect();
        pool.release(ids[5]);
        pool.release(ids[2]);
        // LIFO: the most recently released slot is reused first, before the
        // watermark advances.
        assert_eq!(pool.take().unwrap(), ids[2]);
        assert_eq!(pool.take().unwrap(), ids[5]);
        assert_eq!(pool.watermark(), 6);
    }

    #[test]
    #[should_panic(expected = "never issued")]
    fn release_of_never_taken_slot_panics() {
        let mut pool = NodePool::new(cfg(4)).unwrap();
        pool.release(NodeId(3));
    }

    #[test]
    #[should_panic(expected = "double release")]
    fn double_release_panics() {
        let mut pool = NodePool::new(cfg(4)).unwrap();
        let id = pool.take().unwrap();
        pool.release(id);
        pool.release(id);
    }

    #[test]
    fn reset_is_idempotent_and_clears_state() {
        let mut pool = NodePool::new(cfg(8)).unwrap();
        for _ in 0..5 {
            pool.take().unwrap();
        }
        assert_eq!(pool.in_use(), 5);
        pool.reset();
        assert_eq!(pool.watermark(), 0);
        assert_eq!(pool.in_use(), 0);
        assert_eq!(pool.free_slots(), 8);
        pool.reset();
        assert_eq!(pool.watermark(), 0);
        assert_eq!(pool.in_use(), 0);
    }

    #[test]
    fn conservation_after_mixed_operations() {
        let mut pool = NodePool::new(cfg(16)).unwrap();
        let mut held = Vec::new();
        for step in 0..64 {
            if step % 3 == 2 && !held.is_empty() {
                pool.release(held.pop().unwrap());
            } else if let Ok(id) = pool.take() {
                held.push(id);
            }
            assert_eq!(pool.in_use() + pool.free_slots(), pool.capacity());
        }
    }

    #[test]
    fn coords_are_copied_per_slot() {
        let mut pool = NodePool::new(cfg(4)).unwrap();
        let a = pool.take().unwrap();
        let b = pool.take().unwrap();
        pool.set_coords(a, &[1.5, -2.5]);
        pool.set_coords(b, &[3.0, 4.0]);
        assert_eq!(pool.coords_of(a), &[1.5, -2.5]);
        assert_eq!(pool.coords_of(b), &[3.0, 4.0]);
    }
}
