//! Drivers and theorem-derived parameter schedules.
//!
//! Five drivers share one trace/accounting skeleton: proximal gradient
//! descent, proximal SGD, ProxSVRG+, SSRGD (first-order variant), and the
//! perturbed saddle-escaping SSRGD. Parameter schedules instantiate each
//! convergence theorem's explicit constants for a given problem and target
//! accuracy; every derived quantity stays overridable on the returned
//! [`AlgoParams`].

mod drivers;
mod recorder;

pub use drivers::{run_proxgd, run_proxsgd, run_proxsvrg_plus, run_ssrgd, run_ssrgd_saddle};
pub(crate) use recorder::Recorder;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VrError};
use crate::estimators::RunRng;
use crate::problem::CompositeProblem;
use crate::vector::Vector;

/// Full configuration of one algorithm run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgoParams {
    /// Step size `eta`.
    pub eta: f64,
    /// Minibatch size `b` (inner iterations).
    pub b: usize,
    /// Batch size `B` (epoch anchors).
    pub big_b: usize,
    /// Epoch length `m`.
    pub m: usize,
    /// Total inner-iteration budget (schedules round this up to whole epochs).
    pub max_iters: u64,
    /// First-order target accuracy.
    pub epsilon: f64,
    /// Second-order target (saddle-escaping driver only).
    pub delta: f64,
    /// Perturbation radius; 0 disables perturbation.
    pub r: f64,
    /// Super-epoch escape threshold on the function-value decrease.
    pub f_thres: f64,
    /// Super-epoch length cap.
    pub t_thres: u64,
    pub seed: u64,
    /// Trace thinning: diagnostics are evaluated every `eval_stride` iterations.
    pub eval_stride: u64,
    /// Stop first-order drivers once an exactly evaluated gradient-mapping
    /// norm at a trace point is at most `epsilon`. Off by default so the
    /// oracle-counter identities of complete runs hold.
    pub early_stop: bool,
    /// Record wall-clock times in the trace (the only nondeterministic field).
    pub record_timing: bool,
}

impl Default for AlgoParams {
    fn default() -> Self {
        AlgoParams {
            eta: 0.1,
            b: 1,
            big_b: 1,
            m: 1,
            max_iters: 1000,
            epsilon: 0.0,
            delta: 0.0,
            r: 0.0,
            f_thres: 0.0,
            t_thres: 0,
            seed: 0,
            eval_stride: 1,
            early_stop: false,
            record_timing: true,
        }
    }
}

impl AlgoParams {
    pub fn validate(&self, problem: &CompositeProblem) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(VrError::config("eta", "must be positive and finite"));
        }
        if self.b == 0 {
            return Err(VrError::config("b", "minibatch size must be >= 1"));
        }
        if self.m == 0 {
            return Err(VrError::config("m", "epoch length must be >= 1"));
        }
        if self.big_b == 0 {
            return Err(VrError::config("B", "batch size must be >= 1"));
        }
        if !problem.is_streaming() && self.big_b > problem.n() {
            return Err(VrError::config(
                "B",
                format!("batch size {} exceeds n = {}", self.big_b, problem.n()),
            ));
        }
        if self.max_iters == 0 {
            return Err(VrError::config("max_iters", "must be >= 1"));
        }
        if self.eval_stride == 0 {
            return Err(VrError::config("eval_stride", "must be >= 1"));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(VrError::config("epsilon", "must be nonnegative and finite"));
        }
        if !(self.delta >= 0.0) || !(self.r >= 0.0) {
            return Err(VrError::config("delta/r", "must be nonnegative"));
        }
        Ok(())
    }
}

/// Which theorem's parameter setting to instantiate. The `a` variants are
/// the finite-sum cases (`B = n`); the `b` variants use the bounded-variance
/// batch rule and also cover the online form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TheoremSchedule {
    T1a,
    T1b,
    T2a,
    T2b,
    T3a,
    T3b,
    T4a,
    T4b,
    T5,
}

impl TheoremSchedule {
    pub const ALL: [TheoremSchedule; 9] = [
        TheoremSchedule::T1a,
        TheoremSchedule::T1b,
        TheoremSchedule::T2a,
        TheoremSchedule::T2b,
        TheoremSchedule::T3a,
        TheoremSchedule::T3b,
        TheoremSchedule::T4a,
        TheoremSchedule::T4b,
        TheoremSchedule::T5,
    ];

    /// The driver this schedule is meant for.
    pub fn algorithm(self) -> &'static str {
        match self {
            TheoremSchedule::T1a
            | TheoremSchedule::T1b
            | TheoremSchedule::T3a
            | TheoremSchedule::T3b => "prox_svrg_plus",
            TheoremSchedule::T2a
            | TheoremSchedule::T2b
            | TheoremSchedule::T4a
            | TheoremSchedule::T4b => "ssrgd",
            TheoremSchedule::T5 => "ssrgd_saddle",
        }
    }
}

impl std::fmt::Display for TheoremSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TheoremSchedule::T1a => "t1a",
            TheoremSchedule::T1b => "t1b",
            TheoremSchedule::T2a => "t2a",
            TheoremSchedule::T2b => "t2b",
            TheoremSchedule::T3a => "t3a",
            TheoremSchedule::T3b => "t3b",
            TheoremSchedule::T4a => "t4a",
            TheoremSchedule::T4b => "t4b",
            TheoremSchedule::T5 => "t5",
        };
        f.write_str(s)
    }
}

fn require(value: Option<f64>, name: &str, theorem: TheoremSchedule) -> Result<f64> {
    value.ok_or_else(|| {
        VrError::config(
            name,
            format!("problem does not declare {name}, required by schedule {theorem}"),
        )
    })
}

/// `Phi(x0) - Phi*`, requiring a declared or cached optimal value.
fn initial_gap(problem: &CompositeProblem, x0: &Vector) -> Result<f64> {
    let phi_star = problem.phi_star().ok_or_else(|| {
        VrError::config(
            "phi_star",
            "schedule needs the optimal value; declare it or run the reference-optimum solver first",
        )
    })?;
    let phi0 = problem.evaluate_phi(x0)?;
    if !phi0.is_finite() {
        return Err(VrError::contract(
            "x0 is outside the feasible set (Phi(x0) is infinite)",
        ));
    }
    Ok((phi0 - phi_star).max(0.0))
}

fn ceil_to_u64(v: f64, name: &str) -> Result<u64> {
    if !v.is_finite() {
        return Err(VrError::config(name, format!("non-finite value {v}")));
    }
    Ok(v.max(0.0).ceil() as u64)
}

fn round_up_to_epochs(t: u64, m: usize) -> u64 {
    let m = m as u64;
    let epochs = t.div_ceil(m).max(1);
    epochs * m
}

/// Batch rule `min(n, ceil(c / eps_term))`; in streaming mode the component
/// count does not cap the batch.
fn bounded_variance_batch(problem: &CompositeProblem, raw: f64, name: &str) -> Result<usize> {
    let b = ceil_to_u64(raw, name)?.max(1);
    if problem.is_streaming() {
        Ok(b as usize)
    } else {
        Ok((b as usize).min(problem.n()))
    }
}

/// Instantiates one theorem's parameter table for `problem` at accuracy
/// `epsilon` (and `delta` for the local-minimum schedule), starting from `x0`.
///
/// `zeta` is the failure probability behind the single log factor
/// `Lambda = ln(4 d / zeta)` that stands in for every hidden logarithmic
/// constant of the local-minimum theorem; it defaults to 0.1.
/// `b_override` replaces the default minibatch size (`ceil(B^(2/3))` for the
/// ProxSVRG+ schedules, `ceil(sqrt(B))` for the SSRGD ones); the epoch
/// length then follows the theorem's coupling (`m = ceil(sqrt(b))` or `m = b`).
pub fn default_params(
    theorem: TheoremSchedule,
    problem: &CompositeProblem,
    x0: &Vector,
    epsilon: f64,
    delta: Option<f64>,
    zeta: Option<f64>,
    b_override: Option<usize>,
) -> Result<AlgoParams> {
    use TheoremSchedule::*;
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(VrError::config("epsilon", "must be positive and finite"));
    }
    let n = problem.n();
    let l = problem.l();
    let finite_sum_only = |theorem: TheoremSchedule| -> Result<()> {
        if problem.is_streaming() {
            Err(VrError::config(
                "schedule",
                format!("{theorem} sets B = n and needs finite-sum mode; use the b-variant online"),
            ))
        } else {
            Ok(())
        }
    };

    let mut params = AlgoParams {
        epsilon,
        ..AlgoParams::default()
    };

    match theorem {
        T1a | T1b | T3a | T3b => {
            // ProxSVRG+ schedules: m = ceil(sqrt(b)), eta = 1/(3L).
            let big_b = match theorem {
                T1a | T3a => {
                    finite_sum_only(theorem)?;
                    n
                }
                T1b => {
                    let sigma = require(problem.sigma(), "sigma", theorem)?;
                    bounded_variance_batch(problem, 2.0 * sigma * sigma / (epsilon * epsilon), "B")?
                }
                T3b => {
                    let sigma = require(problem.sigma(), "sigma", theorem)?;
                    let mu = require(problem.mu(), "mu", theorem)?;
                    bounded_variance_batch(problem, sigma * sigma / (mu * epsilon), "B")?
                }
                _ => unreachable!(),
            };
            let b = b_override
                .unwrap_or_else(|| ((big_b as f64).powf(2.0 / 3.0).ceil() as usize).max(1));
            let m = (b as f64).sqrt().ceil() as usize;
            let eta = 1.0 / (3.0 * l);
            let gap = initial_gap(problem, x0)?;
            let t0 = match theorem {
                T1a | T1b => ceil_to_u64(12.0 * l * gap / (epsilon * epsilon), "T")?,
                T3a | T3b => {
                    let mu = require(problem.mu(), "mu", theorem)?;
                    ceil_to_u64((3.0 * l / mu) * (2.0 * gap / epsilon).ln(), "T")?
                }
                _ => unreachable!(),
            };
            params.big_b = big_b;
            params.b = b;
            params.m = m.max(1);
            params.eta = eta;
            params.max_iters = round_up_to_epochs(t0, params.m);
        }
        T2a | T2b | T4a | T4b => {
            // SSRGD schedules: m = b, eta = 1/(2L).
            let big_b = match theorem {
                T2a | T4a => {
                    finite_sum_only(theorem)?;
                    n
                }
                T2b => {
                    let sigma = require(problem.sigma(), "sigma", theorem)?;
                    bounded_variance_batch(problem, 2.0 * sigma * sigma / (epsilon * epsilon), "B")?
                }
                T4b => {
                    let sigma = require(problem.sigma(), "sigma", theorem)?;
                    let mu = require(problem.mu(), "mu", theorem)?;
                    bounded_variance_batch(problem, sigma * sigma / (mu * epsilon), "B")?
                }
                _ => unreachable!(),
            };
            let b = b_override.unwrap_or_else(|| ((big_b as f64).sqrt().ceil() as usize).max(1));
            let eta = 1.0 / (2.0 * l);
            let gap = initial_gap(problem, x0)?;
            let t0 = match theorem {
                T2a | T2b => ceil_to_u64(8.0 * l * gap / (epsilon * epsilon), "T")?,
                T4a | T4b => {
                    let mu = require(problem.mu(), "mu", theorem)?;
                    ceil_to_u64((2.0 * l / mu) * (2.0 * gap / epsilon).ln(), "T")?
                }
                _ => unreachable!(),
            };
            params.big_b = big_b;
            params.b = b;
            params.m = b;
            params.eta = eta;
            params.max_iters = round_up_to_epochs(t0, params.m);
        }
        T5 => {
            let delta = delta.ok_or_else(|| {
                VrError::config(
                    "delta",
                    "the local-minimum schedule needs a second-order target",
                )
            })?;
            if !(delta > 0.0) {
                return Err(VrError::config("delta", "must be positive"));
            }
            let rho = require(problem.rho(), "rho", theorem)?;
            let zeta = zeta.unwrap_or(0.1);
            if !(zeta > 0.0 && zeta < 1.0) {
                return Err(VrError::config("zeta", "must lie in (0, 1)"));
            }
            let lambda = (4.0 * problem.dim() as f64 / zeta).ln();
            let big_b = if problem.is_streaming() {
                let sigma = require(problem.sigma(), "sigma", theorem)?;
                bounded_variance_batch(problem, lambda * sigma * sigma / (epsilon * epsilon), "B")?
            } else {
                n
            };
            let b = b_override.unwrap_or_else(|| ((big_b as f64).sqrt().ceil() as usize).max(1));
            let eta = 1.0 / (4.0 * lambda * l);
            let r = (delta.powi(3) / (rho * rho * epsilon)).min(delta.powf(1.5) / (rho * l.sqrt()))
                / (lambda * lambda);
            let f_thres = delta.powi(3) / (2.0 * lambda.powi(3) * rho * rho);
            let t_thres = ceil_to_u64(lambda / (eta * delta), "t_thres")?.max(1);
            params.big_b = big_b;
            params.b = b;
            params.m = b;
            params.eta = eta;
            params.delta = delta;
            params.r = r;
            params.f_thres = f_thres;
            params.t_thres = t_thres;
            // The theorem's epoch-count bound is astronomically loose at desk
            // scale; cap the run and leave the cap overridable.
            params.max_iters = 200_000;
        }
    }
    params.eval_stride = (params.max_iters / 1000).max(1);
    Ok(params)
}

/// The random-stop device of the saddle-escaping driver: walking inner steps
/// `k = 1..m`, break at step `k` with probability `1/(m-k+1)`. The resulting
/// break index is uniform on `{1..m}` (telescoping product).
pub fn random_stop_index(rng: &mut RunRng, m: usize) -> usize {
    debug_assert!(m >= 1);
    for k in 1..m {
        if rng.flip(1.0 / (m - k + 1) as f64) {
            return k;
        }
    }
    m
}
