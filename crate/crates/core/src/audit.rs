//! Allocation-counting global allocator for memory-discipline audits.
//!
//! The index promises that after construction (`NodePool::new` and friends)
//! no operation touches the allocator. Test binaries and the CLI make that
//! promise checkable by registering [`CountingAlloc`] as the global allocator:
//!
//! ```ignore
//! #[global_allocator]
//! static ALLOC: kdforest::audit::CountingAlloc = kdforest::audit::CountingAlloc;
//! ```
//!
//! and then comparing [`allocation_count`] snapshots around the audited
//! operation sequence. [`bytes_in_use`] doubles as a leak check: after every
//! pool has been dropped, the delta against the pre-construction snapshot
//! must be zero.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicI64, AtomicU64, Ordering};

static ALLOCATIONS: AtomicU64 = AtomicU64::new(0);
static DEALLOCATIONS: AtomicU64 = AtomicU64::new(0);
static BYTES_IN_USE: AtomicI64 = AtomicI64::new(0);

/// Drop-in wrapper around the system allocator that counts every call.
pub struct CountingAlloc;

unsafe impl GlobalAlloc for CountingAlloc {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let ptr = System.alloc(layout);
        if !ptr.is_null() {
            ALLOCATIONS.fetch_add(1, Ordering::Relaxed);
            BYTES_IN_USE.fetch_add(layout.size() as i64, Ordering::Relaxed);
        }
        ptr
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        DEALLOCATIONS.fetch_add(1, Ordering::Relaxed);
        BYTES_IN_USE.fetch_sub(layout.size() as i64, Ordering::Relaxed);
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let out = System.realloc(ptr, layout, new_size);
        if !out.is_null() {
            ALLOCATIONS.fetch_add(1, Ordering::Relaxed);
            BYTES_IN_USE.fetch_add(new_size as i64 - layout.size() as i64, Ordering::Relaxed);
        }
        out
    }
}

/// Total successful allocator acquisitions (alloc + realloc) so far.
pub fn allocation_count() -> u64 {
    ALLOCATIONS.load(Ordering::Relaxed)
}

/// Total deallocations so far.
pub fn deallocation_count() -> u64 {
    DEALLOCATIONS.load(Ordering::Relaxed)
}

/// Net bytes currently held from the allocator.
///
/// Only meaningful when [`CountingAlloc`] is the registered global allocator;
/// otherwise all counters stay at zero.
pub fn bytes_in_use() -> i64 {
    BYTES_IN_USE.load(Ordering::Relaxed)
}
