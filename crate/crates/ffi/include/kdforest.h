#ifndef KDFOREST_H
#define KDFOREST_H

/* Generated by cbindgen from kdforest-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Forest query mode.
 */
typedef enum KdfForestMode {
  KdfForestMode_SingleTree = 0,
  KdfForestMode_ExactForest = 1,
} KdfForestMode;

/**
 * Tree query mode.
 */
typedef enum KdfKnnMode {
  KdfKnnMode_Exact = 0,
  KdfKnnMode_PathDescent = 1,
} KdfKnnMode;

/**
 * Split policy selector.
 */
typedef enum KdfSplitPolicy {
  KdfSplitPolicy_GlobalMedian = 0,
  KdfSplitPolicy_NodeSplit = 1,
} KdfSplitPolicy;

/**
 * Status code returned by every fallible entry point.
 */
typedef enum KdfStatus {
  KdfStatus_Ok = 0,
  KdfStatus_NullPointer = 1,
  KdfStatus_InvalidArgument = 2,
  KdfStatus_InvalidConfig = 3,
  KdfStatus_CapacityOverflow = 4,
  KdfStatus_PoolExhausted = 5,
  KdfStatus_DimensionMismatch = 6,
  KdfStatus_NonFiniteCoordinate = 7,
  KdfStatus_RebuildInProgress = 8,
  KdfStatus_NotFound = 9,
  KdfStatus_EmptyTree = 10,
  KdfStatus_KExceedsMax = 11,
  KdfStatus_ResultOverflow = 12,
  KdfStatus_InvalidRadius = 13,
  KdfStatus_ForestExhausted = 14,
} KdfStatus;

/**
 * Opaque forest handle.
 */
typedef struct KdfForest KdfForest;

/**
 * Opaque tree handle.
 */
typedef struct KdfTree KdfTree;

/**
 * One search hit: insertion sequence number and Euclidean distance.
 */
typedef struct KdfNeighbor {
  uint64_t seq;
  double distance;
} KdfNeighbor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a tree index. All storage is acquired here; every later call on
 * the handle is allocation-free.
 *
 * # Safety
 * `out` must be a valid pointer to a `KdfTree*` slot.
 */
enum KdfStatus kdf_tree_new(size_t dimensions,
                            size_t capacity,
                            size_t max_k,
                            enum KdfSplitPolicy policy,
                            double rebuild_threshold,
                            bool auto_rebuild,
                            struct KdfTree **out);

/**
 * Releases a tree handle. Null is a no-op; freeing the same handle twice is
 * a caller contract violation.
 *
 * # Safety
 * `tree` must be null or a pointer previously returned by [`kdf_tree_new`]
 * that has not been freed yet.
 */
void kdf_tree_free(struct KdfTree *tree);

/**
 * Recycles the index for a fresh run without touching the allocator.
 *
 * # Safety
 * `tree` must be a live handle from [`kdf_tree_new`].
 */
enum KdfStatus kdf_tree_reset(struct KdfTree *tree);

/**
 * Inserts a point. `out_seq` (optional) receives the assigned sequence
 * number.
 *
 * # Safety
 * `tree` must be a live handle; `coords` valid for `coords_len` reads;
 * `out_seq` null or valid for one write.
 */
enum KdfStatus kdf_tree_add(struct KdfTree *tree,
                            const double *coords,
                            size_t coords_len,
                            uint64_t *out_seq);

/**
 * Tombstones the live point with exactly these coordinates.
 *
 * # Safety
 * `tree` must be a live handle; `coords` valid for `coords_len` reads.
 */
enum KdfStatus kdf_tree_delete(struct KdfTree *tree, const double *coords, size_t coords_len);

/**
 * Point lookup. Writes whether a live match exists and, if so, its sequence
 * number.
 *
 * # Safety
 * `tree` live handle; `coords` valid for `coords_len` reads; `out_found`
 * valid for one write; `out_seq` null or valid for one write.
 */
enum KdfStatus kdf_tree_contains(const struct KdfTree *tree,
                                 const double *coords,
                                 size_t coords_len,
                                 bool *out_found,
                                 uint64_t *out_seq);

/**
 * Rebuilds the tree balanced against fresh medians. Returns the number of
 * live nodes rebuilt, or -1 on any failure (including a null handle).
 *
 * # Safety
 * `tree` must be null or a live handle.
 */
int64_t kdf_tree_rebuild(struct KdfTree *tree);

/**
 * K-nearest-neighbor search. Hits are written ascending by
 * (distance, seq); `*out_len` receives the count, `min(k, live points)`.
 *
 * # Safety
 * `tree` live handle; `query` valid for `query_len` reads; `out_hits` valid
 * for `out_cap` writes; `out_len` valid for one write.
 */
enum KdfStatus kdf_tree_knn(struct KdfTree *tree,
                            const double *query,
                            size_t query_len,
                            size_t k,
                            enum KdfKnnMode mode,
                            struct KdfNeighbor *out_hits,
                            size_t out_cap,
                            size_t *out_len);

/**
 * All live points within `radius` (inclusive), ascending by (distance, seq).
 *
 * # Safety
 * Same contracts as [`kdf_tree_knn`].
 */
enum KdfStatus kdf_tree_knn_radius(struct KdfTree *tree,
                                   const double *query,
                                   size_t query_len,
                                   double radius,
                                   struct KdfNeighbor *out_hits,
                                   size_t out_cap,
                                   size_t *out_len);

/**
 * # Safety
 * `tree` must be null or a live handle.
 */
size_t kdf_tree_live_count(const struct KdfTree *tree);

/**
 * # Safety
 * `tree` must be null or a live handle.
 */
size_t kdf_tree_total_count(const struct KdfTree *tree);

/**
 * Nodes on the longest root-to-leaf path.
 *
 * # Safety
 * `tree` must be null or a live handle.
 */
size_t kdf_tree_depth(const struct KdfTree *tree);

/**
 * # Safety
 * `tree` must be null or a live handle.
 */
uint64_t kdf_tree_rebuild_count(const struct KdfTree *tree);

/**
 * Node visits recorded by the last search on this handle.
 *
 * # Safety
 * `tree` must be null or a live handle.
 */
uint64_t kdf_tree_visit_count(const struct KdfTree *tree);

/**
 * # Safety
 * `tree` must be null or a live handle.
 */
size_t kdf_tree_max_k(const struct KdfTree *tree);

/**
 * Advisory rebuild-count estimate for a single tree of `n` nodes.
 */
size_t kdf_estimate_rebuilds(size_t n);

/**
 * Sharding plan for `n` expected points: tree count and per-tree capacity.
 *
 * # Safety
 * `out_trees` and `out_capacity` must be valid for one write each.
 */
enum KdfStatus kdf_forest_size_plan(size_t n, size_t *out_trees, size_t *out_capacity);

/**
 * Creates a forest with an explicit shard plan.
 *
 * # Safety
 * `out` must be a valid pointer to a `KdfForest*` slot.
 */
enum KdfStatus kdf_forest_new(size_t dimensions,
                              size_t max_k,
                              size_t tree_count,
                              size_t per_tree_capacity,
                              size_t sort_key_dim,
                              enum KdfSplitPolicy policy,
                              double rebuild_threshold,
                              bool auto_rebuild,
                              struct KdfForest **out);

/**
 * Creates a forest sized by [`kdf_forest_size_plan`] for `expected_points`.
 *
 * # Safety
 * `out` must be a valid pointer to a `KdfForest*` slot.
 */
enum KdfStatus kdf_forest_new_for_points(size_t expected_points,
                                         size_t dimensions,
                                         size_t max_k,
                                         struct KdfForest **out);

/**
 * Releases a forest handle. Null is a no-op.
 *
 * # Safety
 * `forest` must be null or a pointer previously returned by a forest
 * constructor that has not been freed yet.
 */
void kdf_forest_free(struct KdfForest *forest);

/**
 * Routes a point to a shard and inserts it with a forest-wide sequence
 * number.
 *
 * # Safety
 * `forest` live handle; `coords` valid for `coords_len` reads; `out_seq`
 * null or valid for one write.
 */
enum KdfStatus kdf_forest_add(struct KdfForest *forest,
                              const double *coords,
                              size_t coords_len,
                              uint64_t *out_seq);

/**
 * Forest k-nearest-neighbor search; see the tree variant for buffer
 * semantics.
 *
 * # Safety
 * Same contracts as [`kdf_tree_knn`].
 */
enum KdfStatus kdf_forest_knn(struct KdfForest *forest,
                              const double *query,
                              size_t query_len,
                              size_t k,
                              enum KdfForestMode mode,
                              struct KdfNeighbor *out_hits,
                              size_t out_cap,
                              size_t *out_len);

/**
 * Open (point-holding) trees.
 *
 * # Safety
 * `forest` must be null or a live handle.
 */
size_t kdf_forest_tree_count(const struct KdfForest *forest);

/**
 * # Safety
 * `forest` must be null or a live handle.
 */
size_t kdf_forest_total_points(const struct KdfForest *forest);

/**
 * Rebuilds performed across all shards.
 *
 * # Safety
 * `forest` must be null or a live handle.
 */
uint64_t kdf_forest_rebuild_count(const struct KdfForest *forest);

/**
 * Candidate-search probes used by the last forest query.
 *
 * # Safety
 * `forest` must be null or a live handle.
 */
uint32_t kdf_forest_probe_count(const struct KdfForest *forest);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KDFOREST_H */
