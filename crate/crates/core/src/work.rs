//! Instrumented work counters for acquisition scoring.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

/// Thread-safe counters incremented while a strategy scores candidates.
#[derive(Debug, Default)]
pub struct WorkCounters {
    forwards: AtomicU64,
    gradient_steps: AtomicU64,
    eval_forwards: AtomicU64,
    distance_evals: AtomicU64,
}

impl WorkCounters {
    pub fn new() -> Self {
        Self::default()
    }

    /// Full-model forward passes over a candidate.
    pub fn add_forwards(&self, n: u64) {
        self.forwards.fetch_add(n, Ordering::Relaxed);
    }

    /// Single gradient steps on a cloned head.
    pub fn add_gradient_steps(&self, n: u64) {
        self.gradient_steps.fetch_add(n, Ordering::Relaxed);
    }

    /// Output-layer forwards over cached evaluation activations.
    pub fn add_eval_forwards(&self, n: u64) {
        self.eval_forwards.fetch_add(n, Ordering::Relaxed);
    }

    pub fn add_distance_evals(&self, n: u64) {
        self.distance_evals.fetch_add(n, Ordering::Relaxed);
    }

    pub fn snapshot(&self, candidates: usize) -> WorkCounts {
        WorkCounts {
            candidates: candidates as u64,
            forwards: self.forwards.load(Ordering::Relaxed),
            gradient_steps: self.gradient_steps.load(Ordering::Relaxed),
            eval_forwards: self.eval_forwards.load(Ordering::Relaxed),
            distance_evals: self.distance_evals.load(Ordering::Relaxed),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkCounts {
    pub candidates: u64,
    pub forwards: u64,
    pub gradient_steps: u64,
    pub eval_forwards: u64,
    pub distance_evals: u64,
}

impl WorkCounts {
    pub fn total(&self) -> u64 {
        self.forwards + self.gradient_steps + self.eval_forwards + self.distance_evals
    }

    /// Total work units per scored candidate.
    pub fn per_candidate(&self) -> f64 {
        if self.candidates == 0 {
            0.0
        } else {
            self.total() as f64 / self.candidates as f64
        }
    }
}
