//! Heap allocation tracking for the memory-footprint measurements.
//!
//! Binaries that want measured peaks install the tracker:
//!
//! ```ignore
//! #[global_allocator]
//! static ALLOC: trak::mem::TrackingAllocator = trak::mem::TrackingAllocator;
//! ```
//!
//! When no tracker is installed the counters stay at zero and
//! [`instrumentation_active`] reports `false`; measurement consumers then
//! fall back to predicted-only output, flagged as such.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);
static ACTIVE: AtomicBool = AtomicBool::new(false);

/// A [`System`] wrapper that counts live heap bytes and their high-water
/// mark.
pub struct TrackingAllocator;

fn on_alloc(size: usize) {
    ACTIVE.store(true, Ordering::Relaxed);
    let now = CURRENT.fetch_add(size, Ordering::Relaxed) + size;
    PEAK.fetch_max(now, Ordering::Relaxed);
}

fn on_dealloc(size: usize) {
    CURRENT.fetch_sub(size, Ordering::Relaxed);
}

unsafe impl GlobalAlloc for TrackingAllocator {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc(layout);
        if !p.is_null() {
            on_alloc(layout.size());
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        on_dealloc(layout.size());
    }

    unsafe fn alloc_zeroed(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc_zeroed(layout);
        if !p.is_null() {
            on_alloc(layout.size());
        }
        p
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let p = System.realloc(ptr, layout, new_size);
        if !p.is_null() {
            on_dealloc(layout.size());
            on_alloc(new_size);
        }
        p
    }
}

/// Whether a tracking allocator has observed any allocation in this process.
pub fn instrumentation_active() -> bool {
    ACTIVE.load(Ordering::Relaxed)
}

/// Live tracked heap bytes.
pub fn current_bytes() -> u64 {
    CURRENT.load(Ordering::Relaxed) as u64
}

/// High-water mark since the last [`reset_peak`].
pub fn peak_bytes() -> u64 {
    PEAK.load(Ordering::Relaxed) as u64
}

/// Reset the high-water mark to the current live amount.
pub fn reset_peak() {
    PEAK.store(CURRENT.load(Ordering::Relaxed), Ordering::Relaxed);
}

/// Measure the extra peak heap a closure allocates beyond its starting
/// point. Returns `(result, Some(extra_peak_bytes))`, or `None` when no
/// tracker is installed.
pub fn measure_peak<T>(f: impl FnOnce() -> T) -> (T, Option<u64>) {
    if !instrumentation_active() {
        let out = f();
        // The closure itself may have been the first tracked allocation.
        if !instrumentation_active() {
            return (out, None);
        }
        return (out, Some(peak_bytes()));
    }
    reset_peak();
    let baseline = current_bytes();
    let out = f();
    let peak = peak_bytes();
    (out, Some(peak.saturating_sub(baseline)))
}
