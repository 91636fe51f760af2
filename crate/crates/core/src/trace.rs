//! Per-run iteration traces.
//!
//! A record is retained every `eval_stride` iterations (plus the start and
//! the final iterate). `phi` and `grad_map_norm` on retained records are
//! exact diagnostics whose oracle cost is charged to the run's separate
//! diagnostics counters, never to the counters the acceptance identities
//! are checked against. `grad_map_norm` is NaN when it cannot be evaluated
//! exactly (streaming mode).

use crate::counters::OracleCounters;
use crate::error::{Result, VrError};
use crate::vector::Vector;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: u64,
    pub epoch: u64,
    pub in_super_epoch: bool,
    pub phi: f64,
    /// `||G_eta(x_iter)||`; NaN when not evaluated.
    pub grad_map_norm: f64,
    pub sfo: u64,
    pub sfo_paper: u64,
    pub po: u64,
    pub wall_ms: f64,
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Ran the full iteration budget.
    MaxIters,
    /// Exactly evaluated gradient-mapping norm fell below the target.
    EarlyStop,
    /// A candidate survived a super epoch and was certified a local minimum.
    Certified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub final_x: Vector,
    /// Iterate with the smallest evaluated gradient-mapping norm.
    pub best_x: Vector,
    /// Smallest evaluated gradient-mapping norm (NaN if never evaluated).
    pub best_grad_map_norm: f64,
    /// Iteration at which `best_grad_map_norm` was observed.
    pub best_iter: u64,
    /// Iterate sampled uniformly (seeded) from the run's iteration budget —
    /// the point the expectation guarantees actually speak about. `None`
    /// for drivers without the random-iterate guarantee, or when an early
    /// stop ended the run before the sampled index.
    pub sampled_x: Option<Vector>,
    pub sampled_iter: Option<u64>,
    pub counters: OracleCounters,
    /// Oracle usage of trace diagnostics (gradient-mapping evaluations,
    /// in-run certification, function values).
    pub diag_counters: OracleCounters,
    pub termination: Termination,
    /// Smallest-eigenvalue estimate at the certified point, when the
    /// saddle-escaping driver terminated by certification.
    pub lambda_min_est: Option<f64>,
}

impl RunTrace {
    /// Checks the structural trace invariants: strictly increasing
    /// iteration indices, nondecreasing counters, and `best_grad_map_norm`
    /// equal to the minimum evaluated norm.
    pub fn validate(&self) -> Result<()> {
        let mut best = f64::INFINITY;
        let mut saw_eval = false;
        for w in self.records.windows(2) {
            if w[1].iter <= w[0].iter {
                return Err(VrError::contract(format!(
                    "trace iterations not strictly increasing at {}",
                    w[1].iter
                )));
            }
            if w[1].sfo < w[0].sfo || w[1].sfo_paper < w[0].sfo_paper || w[1].po < w[0].po {
                return Err(VrError::contract(format!(
                    "trace counters decreased at iteration {}",
                    w[1].iter
                )));
            }
        }
        for r in &self.records {
            if r.grad_map_norm.is_finite() {
                saw_eval = true;
                best = best.min(r.grad_map_norm);
            }
        }
        if saw_eval {
            if self.best_grad_map_norm != best {
                return Err(VrError::contract(format!(
                    "best_grad_map_norm {} != min over records {}",
                    self.best_grad_map_norm, best
                )));
            }
        } else if !self.best_grad_map_norm.is_nan() {
            return Err(VrError::contract(
                "best_grad_map_norm set without any evaluated record",
            ));
        }
        Ok(())
    }

    /// First retained iteration whose evaluated norm is at most `eps`.
    pub fn first_iter_below(&self, eps: f64) -> Option<u64> {
        self.records
            .iter()
            .find(|r| r.grad_map_norm.is_finite() && r.grad_map_norm <= eps)
            .map(|r| r.iter)
    }
}
