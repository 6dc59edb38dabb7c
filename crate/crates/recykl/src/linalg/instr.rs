use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

/// Thread-safe operation counters shared by all kernels of one run.
#[derive(Debug, Default)]
pub struct Instrumentation {
    matvecs: AtomicU64,
    precond_apps: AtomicU64,
    reduced_assemblies: AtomicU64,
}

/// A point-in-time copy of the counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub matvecs: u64,
    pub precond_apps: u64,
    pub reduced_assemblies: u64,
}

impl Counts {
    pub fn since(self, earlier: Counts) -> Counts {
        Counts {
            matvecs: self.matvecs - earlier.matvecs,
            precond_apps: self.precond_apps - earlier.precond_apps,
            reduced_assemblies: self.reduced_assemblies - earlier.reduced_assemblies,
        }
    }
}

impl Instrumentation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_matvec(&self) {
        self.matvecs.fetch_add(1, Ordering::Relaxed);
    }

    pub fn record_matvecs(&self, count: u64) {
        self.matvecs.fetch_add(count, Ordering::Relaxed);
    }

    pub fn record_precond(&self) {
        self.precond_apps.fetch_add(1, Ordering::Relaxed);
    }

    /// Called by every routine that materializes a dense reduced matrix `YᵀAY`.
    pub fn record_reduced_assembly(&self) {
        self.reduced_assemblies.fetch_add(1, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> Counts {
        Counts {
            matvecs: self.matvecs.load(Ordering::Relaxed),
            precond_apps: self.precond_apps.load(Ordering::Relaxed),
            reduced_assemblies: self.reduced_assemblies.load(Ordering::Relaxed),
        }
    }
}
