//! Shared trace-building skeleton for the drivers.

use std::time::Instant;

use crate::counters::OracleCounters;
use crate::error::Result;
use crate::problem::CompositeProblem;
use crate::prox::gradient_mapping;
use crate::trace::{RunTrace, Termination, TraceRecord};
use crate::vector::Vector;

/// Evaluates and retains trace records every `eval_stride` iterations.
/// All evaluation cost (exact `Phi`, exact gradient-mapping norm, the prox
/// inside it) lands on the internal diagnostics counter lane.
pub(crate) struct Recorder<'a> {
    problem: &'a CompositeProblem,
    eta: f64,
    stride: u64,
    timing: bool,
    start: Instant,
    records: Vec<TraceRecord>,
    best: Option<(f64, Vector, u64)>,
    pub(crate) diag: OracleCounters,
}

impl<'a> Recorder<'a> {
    pub fn new(problem: &'a CompositeProblem, eta: f64, stride: u64, timing: bool) -> Self {
        Recorder {
            problem,
            eta,
            stride,
            timing,
            start: Instant::now(),
            records: Vec::new(),
            best: None,
            diag: OracleCounters::new(),
        }
    }

    /// Records iff the iteration is on the stride grid and not yet recorded.
    /// Returns the evaluated gradient-mapping norm when a record was taken.
    pub fn maybe_record(
        &mut self,
        iter: u64,
        epoch: u64,
        in_super_epoch: bool,
        x: &Vector,
        main: &OracleCounters,
    ) -> Result<Option<f64>> {
        if iter % self.stride != 0 || self.already_recorded(iter) {
            return Ok(None);
        }
        self.record(iter, epoch, in_super_epoch, x, main).map(Some)
    }

    /// Unconditionally records (used for the initial and final iterates).
    pub fn force_record(
        &mut self,
        iter: u64,
        epoch: u64,
        in_super_epoch: bool,
        x: &Vector,
        main: &OracleCounters,
    ) -> Result<()> {
        if !self.already_recorded(iter) {
            self.record(iter, epoch, in_super_epoch, x, main)?;
        }
        Ok(())
    }

    fn already_recorded(&self, iter: u64) -> bool {
        self.records.last().map(|r| r.iter) == Some(iter)
    }

    fn record(
        &mut self,
        iter: u64,
        epoch: u64,
        in_super_epoch: bool,
        x: &Vector,
        main: &OracleCounters,
    ) -> Result<f64> {
        let phi = self.problem.evaluate_phi(x)?;
        self.diag.charge_fn_eval();
        let grad_map_norm = if self.problem.is_streaming() {
            f64::NAN
        } else {
            let (_, norm) = gradient_mapping(self.problem, x, self.eta, None, &mut self.diag)?;
            norm
        };
        if grad_map_norm.is_finite() {
            let better = match &self.best {
                Some((b, _, _)) => grad_map_norm < *b,
                None => true,
            };
            if better {
                self.best = Some((grad_map_norm, x.clone(), iter));
            }
        }
        let wall_ms = if self.timing {
            self.start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        self.records.push(TraceRecord {
            iter,
            epoch,
            in_super_epoch,
            phi,
            grad_map_norm,
            sfo: main.sfo,
            sfo_paper: main.sfo_paper,
            po: main.po,
            wall_ms,
        });
        Ok(grad_map_norm)
    }

    pub fn into_trace(
        self,
        final_x: Vector,
        sampled: Option<(Vector, u64)>,
        counters: OracleCounters,
        termination: Termination,
        lambda_min_est: Option<f64>,
    ) -> RunTrace {
        let (best_grad_map_norm, best_x, best_iter) = match self.best {
            Some((norm, x, iter)) => (norm, x, iter),
            None => (f64::NAN, final_x.clone(), 0),
        };
        let (sampled_x, sampled_iter) = match sampled {
            Some((x, iter)) => (Some(x), Some(iter)),
            None => (None, None),
        };
        RunTrace {
            records: self.records,
            final_x,
            best_x,
            best_grad_map_norm,
            best_iter,
            sampled_x,
            sampled_iter,
            counters,
            diag_counters: self.diag,
            termination,
            lambda_min_est,
        }
    }
}
