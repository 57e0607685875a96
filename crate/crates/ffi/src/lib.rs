//! C ABI for the kdforest spatial index.
//!
//! Conventions:
//!
//! * Handles (`KdfTree`, `KdfForest`) are opaque; create with `kdf_*_new`,
//!   destroy exactly once with `kdf_*_free`. Freeing a null handle is a no-op.
//! * Every fallible call returns a [`KdfStatus`]; outputs go through pointer
//!   arguments. Null pointers yield `KDF_STATUS_NULL_POINTER`, never a crash.
//! * Coordinates cross the boundary as `(const double*, len)` pairs; hit
//!   buffers as caller-owned `KdfNeighbor` arrays.
//! * `kdf_tree_rebuild` follows the C convention of the underlying design:
//!   it returns the number of nodes rebuilt, or -1 on any failure.
//!
//! The header `include/kdforest.h` is regenerated by cbindgen on every build.

use kdforest::error::Error;
use kdforest::forest::{forest_size_plan, ForestConfig, ForestKnnMode, IntervalForest};
use kdforest::knn::{KnnMode, KnnQuery, NeighborHit};
use kdforest::tree::{estimate_rebuilds, KdTree, SplitPolicy, TreeConfig};

/// Opaque tree handle.
pub struct KdfTree {
    inner: KdTree,
}

/// Opaque forest handle.
pub struct KdfForest {
    inner: IntervalForest,
}

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    CapacityOverflow = 4,
    PoolExhausted = 5,
    DimensionMismatch = 6,
    NonFiniteCoordinate = 7,
    RebuildInProgress = 8,
    NotFound = 9,
    EmptyTree = 10,
    KExceedsMax = 11,
    ResultOverflow = 12,
    InvalidRadius = 13,
    ForestExhausted = 14,
}

/// Split policy selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdfSplitPolicy {
    GlobalMedian = 0,
    NodeSplit = 1,
}

/// Tree query mode.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdfKnnMode {
    Exact = 0,
    PathDescent = 1,
}

/// Forest query mode.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdfForestMode {
    SingleTree = 0,
    ExactForest = 1,
}

/// One search hit: insertion sequence number and Euclidean distance.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdfNeighbor {
    pub seq: u64,
    pub distance: f64,
}

fn status_of(err: Error) -> KdfStatus {
    match err {
        Error::InvalidConfig(_) => KdfStatus::InvalidConfig,
        Error::CapacityOverflow => KdfStatus::CapacityOverflow,
        Error::PoolExhausted => KdfStatus::PoolExhausted,
        Error::DimensionMismatch { .. } => KdfStatus::DimensionMismatch,
        Error::NonFiniteCoordinate => KdfStatus::NonFiniteCoordinate,
        Error::RebuildInProgress => KdfStatus::RebuildInProgress,
        Error::NotFound => KdfStatus::NotFound,
        Error::EmptyTree => KdfStatus::EmptyTree,
        Error::KExceedsMax { .. } => KdfStatus::KExceedsMax,
        Error::ResultOverflow => KdfStatus::ResultOverflow,
        Error::InvalidRadius => KdfStatus::InvalidRadius,
        Error::ForestExhausted => KdfStatus::ForestExhausted,
    }
}

fn policy_of(p: KdfSplitPolicy) -> SplitPolicy {
    match p {
        KdfSplitPolicy::GlobalMedian => SplitPolicy::GlobalMedian,
        KdfSplitPolicy::NodeSplit => SplitPolicy::NodeSplit,
    }
}

/// SAFETY: caller promises `ptr` is either null or valid for `len` reads.
unsafe fn coords_arg<'a>(ptr: *const f64, len: usize) -> Option<&'a [f64]> {
    if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

/// Copies up to `cap` hits into the caller's buffer; reports truncation.
unsafe fn copy_hits(
    hits: &[NeighborHit],
    out: *mut KdfNeighbor,
    cap: usize,
    out_len: *mut usize,
) -> KdfStatus {
    if out.is_null() || out_len.is_null() {
        return KdfStatus::NullPointer;
    }
    let n = hits.len().min(cap);
    for (i, hit) in hits[..n].iter().enumerate() {
        *out.add(i) = KdfNeighbor { seq: hit.seq, distance: hit.distance };
    }
    *out_len = n;
    if hits.len() > cap {
        KdfStatus::ResultOverflow
    } else {
        KdfStatus::Ok
    }
}

/// Creates a tree index. All storage is acquired here; every later call on
/// the handle is allocation-free.
///
/// # Safety
/// `out` must be a valid pointer to a `KdfTree*` slot.
#[no_mangle]
pub unsafe extern "C" fn kdf_tree_new(
    dimensions: usize,
    capacity: usize,
    max_k: usize,
    policy: KdfSplitPolicy,
    rebuild_threshold: f64,
    auto_rebuild: bool,
    out: *mut *mut KdfTree,
) -> KdfStatus {
    if out.is_null() {
        return KdfStatus::NullPointer;
    }
    let config = TreeConfig::new(dimensions, capacity, max_k)
        .with_policy(policy_of(policy))
        .with_threshold(rebuild_threshold)
        .with_auto_rebuild(auto_rebuild);
    match KdTree::new(config) {
        Ok(tree) => {
            *out = Box::into_raw(Box::new(KdfTree { inner: tree }));
            KdfStatus::Ok
        }
        Err(e) => {
            *out = std::ptr::null_mut();
            status_of(e)
        }
    }
}

/// Releases a tree handle. Null is a no-op; freeing the same handle twice is
/// a caller contract violation.
///
/// # Safety
/// `tree` must be null or a pointer previously returned by [`kdf_tree_new`]
/// that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn kdf_tree_free(tree: *mut KdfTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Recycles the index for a fresh run without touching the allocator.
///
/// # Safety
/// `tree` must be a live handle from [`kdf_tree_new`].
#[no_mangle]
pub unsafe extern "C" fn kdf_tree_reset(tree: *mut KdfTree) -> KdfStatus {
    match tree.as_mut() {
        Some(t) => {
            t.inner.reset();
            KdfStatus::Ok
        }
        None => KdfStatus::NullPointer,
    }
}

/// Inserts a point. `out_seq` (optional) receives the assigned sequence
/// number.
///
/// # Safety
/// `tree` must be a live handle; `coords` valid for `coords_len` reads;
/// `out_seq` null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn kdf_tree_add(
    tree: *mut KdfTree,
    coords: *const f64,
    coords_len: usize,
    out_seq: *mut u64,
) -> KdfStatus {
    let Some(t) = tree.as_mut() else { return KdfStatus::NullPointer };
    let Some(coords) = coords_arg(coords, coords_len) else { return KdfStatus::NullPointer };
    match t.inner.add(coords) {
        Ok(seq) => {
            if !out_seq.is_null() {
                *out_seq = seq;
            }
            KdfStatus::Ok
        }
        Err(e) => status_of(e),
    }
}

/// Tombstones the live point with exactly these coordinates.
///
/// # Safety
/// `tree` must be a live handle; `coords` valid for `coords_len` reads.
#[no_mangle]
pub unsafe extern "C" fn kdf_tree_delete(
    tree: *mut KdfTree,
    coords: *const f64,
    coords_len: usize,
) -> KdfStatus {
    let Some(t) = tree.as_mut() else { return KdfStatus::NullPointer };
    let Some(coords) = coords_arg(coords, coords_len) else { return KdfStatus::NullPointer };
    match t.inner.delete(coords) {
        Ok(()) => KdfStatus::Ok,
        Err(e) => status_of(e),
    }
}

/// Point lookup. Writes whether a live match exists and, if so, its sequence
/// number.
///
/// # Safety
/// `tree` live handle; `coords` valid for `coords_len` reads; `out_found`
/// valid for one write; `out_seq` null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn kdf_tree_contains(
    tree: *const KdfTree,
    coords: *const f64,
    coords_len: usize,
    out_found: *mut bool,
    out_seq: *mut u64,
) -> KdfStatus {
    let Some(t) = tree.as_ref() else { return KdfStatus::NullPointer };
    let Some(coords) = coords_arg(coords, coords_len) else { return KdfStatus::NullPointer };
    if out_found.is_null() {
        return KdfStatus::NullPointer;
    }
    match t.inner.find(coords) {
        Ok(hit) => {
            *out_found = hit.is_some();
            if let Some(id) = hit {
                if !out_seq.is_null() {
                    *out_seq = t.inner.pool().node(id).seq;
                }
            }
            KdfStatus::Ok
        }
        Err(e) => status_of(e),
    }
}

/// Rebuilds the tree balanced against fresh medians. Returns the number of
/// live nodes rebuilt, or -1 on any failure (including a null handle).
///
/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kdf_tree_rebuild(tree: *mut KdfTree) -> i64 {
    match tree.as_mut() {
        Some(t) => match t.inner.rebuild() {
            Ok(n) => n as i64,
            Err(_) => -1,
        },
        None => -1,
    }
}

/// K-nearest-neighbor search. Hits are written ascending by
/// (distance, seq); `*out_len` receives the count, `min(k, live points)`.
///
/// # Safety
/// `tree` live handle; `query` valid for `query_len` reads; `out_hits` valid
/// for `out_cap` writes; `out_len` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn kdf_tree_knn(
    tree: *mut KdfTree,
    query: *const f64,
    query_len: usize,
    k: usize,
    mode: KdfKnnMode,
    out_hits: *mut KdfNeighbor,
    out_cap: usize,
    out_len: *mut usize,
) -> KdfStatus {
    let Some(t) = tree.as_mut() else { return KdfStatus::NullPointer };
    let Some(q) = coords_arg(query, query_len) else { return KdfStatus::NullPointer };
    let mode = match mode {
        KdfKnnMode::Exact => KnnMode::Exact,
        KdfKnnMode::PathDescent => KnnMode::PathDescent,
    };
    match t.inner.knn(&KnnQuery::new(q, k, mode)) {
        Ok(hits) => {
            let hits = hits.to_vec();
            copy_hits(&hits, out_hits, out_cap, out_len)
        }
        Err(e) => status_of(e),
    }
}

/// All live points within `radius` (inclusive), ascending by (distance, seq).
///
/// # Safety
/// Same contracts as [`kdf_tree_knn`].
#[no_mangle]
pub unsafe extern "C" fn kdf_tree_knn_radius(
    tree: *mut KdfTree,
    query: *const f64,
    query_len: usize,
    radius: f64,
    out_hits: *mut KdfNeighbor,
    out_cap: usize,
    out_len: *mut usize,
) -> KdfStatus {
    let Some(t) = tree.as_mut() else { return KdfStatus::NullPointer };
    let Some(q) = coords_arg(query, query_len) else { return KdfStatus::NullPointer };
    match t.inner.knn_radius(q, radius) {
        Ok(hits) => {
            let hits = hits.to_vec();
            copy_hits(&hits, out_hits, out_cap, out_len)
        }
        Err(e) => status_of(e),
    }
}

/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kdf_tree_live_count(tree: *const KdfTree) -> usize {
    tree.as_ref().map_or(0, |t| t.inner.live_count())
}

/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kdf_tree_total_count(tree: *const KdfTree) -> usize {
    tree.as_ref().map_or(0, |t| t.inner.total_count())
}

/// Nodes on the longest root-to-leaf path.
///
/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kdf_tree_depth(tree: *const KdfTree) -> usize {
    tree.as_ref().map_or(0, |t| t.inner.depth())
}

/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kdf_tree_rebuild_count(tree: *const KdfTree) -> u64 {
    tree.as_ref().map_or(0, |t| t.inner.rebuild_count())
}

/// Node visits recorded by the last search on this handle.
///
/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kdf_tree_visit_count(tree: *const KdfTree) -> u64 {
    tree.as_ref().map_or(0, |t| t.inner.last_visit_count())
}

/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kdf_tree_max_k(tree: *const KdfTree) -> usize {
    tree.as_ref().map_or(0, |t| t.inner.max_k())
}

/// Advisory rebuild-count estimate for a single tree of `n` nodes.
#[no_mangle]
pub extern "C" fn kdf_estimate_rebuilds(n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    estimate_rebuilds(n)
}

/// Sharding plan for `n` expected points: tree count and per-tree capacity.
///
/// # Safety
/// `out_trees` and `out_capacity` must be valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn kdf_forest_size_plan(
    n: usize,
    out_trees: *mut usize,
    out_capacity: *mut usize,
) -> KdfStatus {
    if out_trees.is_null() || out_capacity.is_null() {
        return KdfStatus::NullPointer;
    }
    if n == 0 {
        return KdfStatus::InvalidArgument;
    }
    let (trees, capacity) = forest_size_plan(n);
    *out_trees = trees;
    *out_capacity = capacity;
    KdfStatus::Ok
}

/// Creates a forest with an explicit shard plan.
///
/// # Safety
/// `out` must be a valid pointer to a `KdfForest*` slot.
#[no_mangle]
pub unsafe extern "C" fn kdf_forest_new(
    dimensions: usize,
    max_k: usize,
    tree_count: usize,
    per_tree_capacity: usize,
    sort_key_dim: usize,
    policy: KdfSplitPolicy,
    rebuild_threshold: f64,
    auto_rebuild: bool,
    out: *mut *mut KdfForest,
) -> KdfStatus {
    if out.is_null() {
        return KdfStatus::NullPointer;
    }
    let config = ForestConfig::with_plan(tree_count, per_tree_capacity, dimensions, max_k)
        .with_sort_key_dim(sort_key_dim)
        .with_policy(policy_of(policy))
        .with_threshold(rebuild_threshold)
        .with_auto_rebuild(auto_rebuild);
    match IntervalForest::new(config) {
        Ok(forest) => {
            *out = Box::into_raw(Box::new(KdfForest { inner: forest }));
            KdfStatus::Ok
        }
        Err(e) => {
            *out = std::ptr::null_mut();
            status_of(e)
        }
    }
}

/// Creates a forest sized by [`kdf_forest_size_plan`] for `expected_points`.
///
/// # Safety
/// `out` must be a valid pointer to a `KdfForest*` slot.
#[no_mangle]
pub unsafe extern "C" fn kdf_forest_new_for_points(
    expected_points: usize,
    dimensions: usize,
    max_k: usize,
    out: *mut *mut KdfForest,
) -> KdfStatus {
    if out.is_null() {
        return KdfStatus::NullPointer;
    }
    if expected_points == 0 {
        return KdfStatus::InvalidArgument;
    }
    match IntervalForest::new(ForestConfig::for_expected_points(expected_points, dimensions, max_k))
    {
        Ok(forest) => {
            *out = Box::into_raw(Box::new(KdfForest { inner: forest }));
            KdfStatus::Ok
        }
        Err(e) => {
            *out = std::ptr::null_mut();
            status_of(e)
        }
    }
}

/// Releases a forest handle. Null is a no-op.
///
/// # Safety
/// `forest` must be null or a pointer previously returned by a forest
/// constructor that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn kdf_forest_free(forest: *mut KdfForest) {
    if !forest.is_null() {
        drop(Box::from_raw(forest));
    }
}

/// Routes a point to a shard and inserts it with a forest-wide sequence
/// number.
///
/// # Safety
/// `forest` live handle; `coords` valid for `coords_len` reads; `out_seq`
/// null or valid for one write.
#[no_mangle]
pub unsafe extern "C" fn kdf_forest_add(
    forest: *mut KdfForest,
    coords: *const f64,
    coords_len: usize,
    out_seq: *mut u64,
) -> KdfStatus {
    let Some(f) = forest.as_mut() else { return KdfStatus::NullPointer };
    let Some(coords) = coords_arg(coords, coords_len) else { return KdfStatus::NullPointer };
    match f.inner.add(coords) {
        Ok(seq) => {
            if !out_seq.is_null() {
                *out_seq = seq;
            }
            KdfStatus::Ok
        }
        Err(e) => status_of(e),
    }
}

/// Forest k-nearest-neighbor search; see the tree variant for buffer
/// semantics.
///
/// # Safety
/// Same contracts as [`kdf_tree_knn`].
#[no_mangle]
pub unsafe extern "C" fn kdf_forest_knn(
    forest: *mut KdfForest,
    query: *const f64,
    query_len: usize,
    k: usize,
    mode: KdfForestMode,
    out_hits: *mut KdfNeighbor,
    out_cap: usize,
    out_len: *mut usize,
) -> KdfStatus {
    let Some(f) = forest.as_mut() else { return KdfStatus::NullPointer };
    let Some(q) = coords_arg(query, query_len) else { return KdfStatus::NullPointer };
    let mode = match mode {
        KdfForestMode::SingleTree => ForestKnnMode::SingleTree,
        KdfForestMode::ExactForest => ForestKnnMode::ExactForest,
    };
    match f.inner.knn(&KnnQuery::exact(q, k), mode) {
        Ok(hits) => {
            let hits = hits.to_vec();
            copy_hits(&hits, out_hits, out_cap, out_len)
        }
        Err(e) => status_of(e),
    }
}

/// Open (point-holding) trees.
///
/// # Safety
/// `forest` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kdf_forest_tree_count(forest: *const KdfForest) -> usize {
    forest.as_ref().map_or(0, |f| f.inner.tree_count())
}

/// # Safety
/// `forest` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kdf_forest_total_points(forest: *const KdfForest) -> usize {
    forest.as_ref().map_or(0, |f| f.inner.total_points())
}

/// Rebuilds performed across all shards.
///
/// # Safety
/// `forest` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kdf_forest_rebuild_count(forest: *const KdfForest) -> u64 {
    forest.as_ref().map_or(0, |f| f.inner.total_rebuild_count())
}

/// Candidate-search probes used by the last forest query.
///
/// # Safety
/// `forest` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kdf_forest_probe_count(forest: *const KdfForest) -> u32 {
    forest.as_ref().map_or(0, |f| f.inner.last_probe_count())
}
