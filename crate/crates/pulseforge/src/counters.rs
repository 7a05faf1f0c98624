//! Thread-local operation counters.
//!
//! The whole point of the approximate propagator pipeline is to replace
//! matrix exponentials by a fixed, small number of matrix products, so the
//! library counts every call on the general-multiply path, every matrix
//! exponential, every sub-propagator evaluation, and every phase-pattern
//! computation. Counters are thread-local: a worker thread that computes on
//! behalf of a coordinator should fold its delta back with [`add`].

use std::cell::Cell;

#[derive(Default)]
struct CellCounts {
    matmul: Cell<u64>,
    expm: Cell<u64>,
    subprop: Cell<u64>,
    phase_pattern: Cell<u64>,
}

thread_local! {
    static COUNTS: CellCounts = CellCounts::default();
}

/// Snapshot of the operation counters for the current thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OpCounts {
    /// General O(N^3) matrix-matrix multiplications.
    pub matmul: u64,
    /// Full matrix exponentials.
    pub expm: u64,
    /// Sub-propagator evaluations (any backend).
    pub subprop: u64,
    /// Phase-pattern (diagonal phase vector) computations.
    pub phase_pattern: u64,
}

impl OpCounts {
    /// Counts accumulated since an earlier snapshot.
    pub fn since(&self, earlier: &OpCounts) -> OpCounts {
        OpCounts {
            matmul: self.matmul - earlier.matmul,
            expm: self.expm - earlier.expm,
            subprop: self.subprop - earlier.subprop,
            phase_pattern: self.phase_pattern - earlier.phase_pattern,
        }
    }
}

/// Current counter values for this thread.
pub fn snapshot() -> OpCounts {
    COUNTS.with(|c| OpCounts {
        matmul: c.matmul.get(),
        expm: c.expm.get(),
        subprop: c.subprop.get(),
        phase_pattern: c.phase_pattern.get(),
    })
}

/// Fold a delta measured on another thread into this thread's counters.
pub fn add(delta: OpCounts) {
    COUNTS.with(|c| {
        c.matmul.set(c.matmul.get() + delta.matmul);
        c.expm.set(c.expm.get() + delta.expm);
        c.subprop.set(c.subprop.get() + delta.subprop);
        c.phase_pattern.set(c.phase_pattern.get() + delta.phase_pattern);
    });
}

pub(crate) fn record_matmul() {
    COUNTS.with(|c| c.matmul.set(c.matmul.get() + 1));
}

pub(crate) fn record_expm() {
    COUNTS.with(|c| c.expm.set(c.expm.get() + 1));
}

pub(crate) fn record_subprop() {
    COUNTS.with(|c| c.subprop.set(c.subprop.get() + 1));
}

pub(crate) fn record_phase_pattern() {
    COUNTS.with(|c| c.phase_pattern.set(c.phase_pattern.get() + 1));
}
