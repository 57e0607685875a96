//! Deterministic, recursion-free, exact k-nearest-neighbor spatial index.
//!
//! The library is built around three layers:
//!
//! * [`pool`] — a fixed-capacity node pool. All storage is acquired once when
//!   an index is constructed; every operation after that runs without touching
//!   the allocator (auditable via [`audit::CountingAlloc`]).
//! * [`tree`] + [`knn`] — an iterative kd-tree (no recursion, no dynamic
//!   stacks) with dimension-cycling inserts, tombstone deletes,
//!   threshold-triggered rebuilds, and exact k-NN / radius search with a
//!   bounded best-k buffer. A brute-force oracle ships alongside for
//!   verification.
//! * [`forest`] — a forest of interval kd-trees: a sorted, pointer-free array
//!   of independent trees sharding one logical index so that no single rebuild
//!   ever touches more than one shard.
//!
//! [`bench`] drives the whole stack from the `kdforest` binary: build/KNN
//! benchmarks, forest-vs-single-tree rebuild accounting, and a `verify`
//! scenario that checks the exactness and memory-discipline guarantees.

pub mod audit;
pub mod bench;
pub mod error;
pub mod forest;
pub mod knn;
pub mod pool;
pub mod tree;

pub use error::{Error, Result};
pub use forest::{forest_size_plan, ForestConfig, ForestKnnMode, IntervalForest};
pub use knn::{euclidean_distance, knn_bruteforce, BestKBuffer, KnnMode, KnnQuery, NeighborHit};
pub use pool::{KdNode, NodeId, NodePool, PoolConfig, QueryScratch};
pub use tree::{estimate_rebuilds, KdTree, SplitPolicy, TreeConfig};
