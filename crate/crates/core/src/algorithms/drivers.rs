//! The algorithm drivers.
//!
//! Every driver is single-threaded and deterministic: one seeded
//! [`RunRng`] owns all stochastic choices, iterates are produced through
//! the same shared prox-step kernel, and the trace diagnostics run on a
//! separate counter lane. Degenerate parameter choices collapse the
//! stochastic drivers onto proximal gradient descent bitwise (`m = 1,
//! b = B = n` for ProxSVRG+; `b = B = n, m = 1` for SSRGD; `b = n` for
//! proximal SGD).

use log::warn;

use crate::algorithms::{random_stop_index, AlgoParams, Recorder};
use crate::counters::OracleCounters;
use crate::diagnostics::{verify_local_minimum_detailed, Verdict};
use crate::error::{Result, VrError};
use crate::estimators::{
    anchor_gradient, sample_minibatch, sample_uniform_ball, sarah_estimator, svrg_estimator, RunRng,
};
use crate::problem::CompositeProblem;
use crate::prox::ProxSpec;
use crate::trace::{RunTrace, Termination};
use crate::vector::Vector;

/// Perturbed phase of the saddle-escaping driver. `active` is the
/// containing `Option`; the fields are the pre-perturbation anchor, its
/// function value, and the iteration at which the phase began.
#[derive(Debug, Clone)]
pub struct SuperEpochState {
    pub x_tilde: Vector,
    pub f_tilde: f64,
    pub t_init: u64,
}

/// `x <- prox_{eta h}(x - eta v)`, charging one PO call.
fn prox_step(
    h: &ProxSpec,
    x: &Vector,
    v: &Vector,
    eta: f64,
    counters: &mut OracleCounters,
) -> Result<Vector> {
    let inner = x.step(eta, v);
    let out = h.prox(&inner, eta)?;
    counters.charge_po();
    Ok(out)
}

fn start_run(
    problem: &CompositeProblem,
    params: &AlgoParams,
    x0: &Vector,
) -> Result<(Vector, OracleCounters, RunRng)> {
    params.validate(problem)?;
    x0.check_dim(problem.dim())?;
    x0.ensure_finite("x0")?;
    Ok((
        x0.clone(),
        OracleCounters::new(),
        RunRng::seed_from_u64(params.seed),
    ))
}

/// Captures the uniformly random iterate the expectation guarantees refer
/// to: an index drawn uniformly from `{0 .. max_iters - 1}` (iterate
/// *before* step `index + 1`). Drawing it is the first use of the run's
/// random stream.
struct IterateSampler {
    target: u64,
    captured: Option<Vector>,
}

impl IterateSampler {
    fn new(rng: &mut RunRng, budget: u64, x0: &Vector) -> Self {
        let target = rng.uniform_index(budget as usize) as u64;
        IterateSampler {
            target,
            captured: (target == 0).then(|| x0.clone()),
        }
    }

    fn observe(&mut self, t: u64, x: &Vector) {
        if t == self.target && self.captured.is_none() {
            self.captured = Some(x.clone());
        }
    }

    fn into_parts(self) -> Option<(Vector, u64)> {
        self.captured.map(|x| (x, self.target))
    }
}

/// Deterministic proximal gradient descent:
/// `x_t = prox_{eta h}(x_{t-1} - eta grad f(x_{t-1}))`.
///
/// Stops at the iteration budget, or as soon as an iterate with
/// `||G_eta|| <= epsilon` has been certified by its own step (free: the
/// step from `x` yields `||G_eta(x)|| = ||x - x^+||/eta` exactly). Set
/// `epsilon = 0` to disable the early exit.
pub fn run_proxgd(
    problem: &CompositeProblem,
    params: &AlgoParams,
    x0: &Vector,
) -> Result<RunTrace> {
    if problem.is_streaming() {
        return Err(VrError::UnsupportedOperation(
            "proximal gradient descent needs exact gradients (finite-sum mode)".into(),
        ));
    }
    let (mut x, mut counters, _rng) = start_run(problem, params, x0)?;
    let mut recorder = Recorder::new(
        problem,
        params.eta,
        params.eval_stride,
        params.record_timing,
    );
    recorder.force_record(0, 0, false, &x, &counters)?;
    let mut termination = Termination::MaxIters;
    let mut t: u64 = 0;
    while t < params.max_iters {
        let g = problem.full_gradient(&x, &mut counters)?;
        let next = prox_step(problem.h(), &x, &g, params.eta, &mut counters)?;
        let gnorm = x.dist(&next) / params.eta;
        x = next;
        t += 1;
        recorder.maybe_record(t, t.saturating_sub(1), false, &x, &counters)?;
        if params.epsilon > 0.0 && gnorm <= params.epsilon {
            termination = Termination::EarlyStop;
            break;
        }
    }
    recorder.force_record(t, t.saturating_sub(1), false, &x, &counters)?;
    Ok(recorder.into_trace(x, None, counters, termination, None))
}

/// Proximal stochastic gradient descent with a fixed minibatch size.
pub fn run_proxsgd(
    problem: &CompositeProblem,
    params: &AlgoParams,
    x0: &Vector,
) -> Result<RunTrace> {
    let (mut x, mut counters, mut rng) = start_run(problem, params, x0)?;
    let mut sampler = IterateSampler::new(&mut rng, params.max_iters, &x);
    let mut recorder = Recorder::new(
        problem,
        params.eta,
        params.eval_stride,
        params.record_timing,
    );
    recorder.force_record(0, 0, false, &x, &counters)?;
    let mut termination = Termination::MaxIters;
    let mut t: u64 = 0;
    while t < params.max_iters {
        let batch = sample_minibatch(&mut rng, problem.n(), params.b, problem.is_streaming())?;
        let g = problem.component_gradient_batch(&x, &batch, &mut counters)?;
        x = prox_step(problem.h(), &x, &g, params.eta, &mut counters)?;
        t += 1;
        sampler.observe(t, &x);
        if let Some(norm) = recorder.maybe_record(t, t.saturating_sub(1), false, &x, &counters)? {
            if params.early_stop && params.epsilon > 0.0 && norm <= params.epsilon {
                termination = Termination::EarlyStop;
                break;
            }
        }
    }
    recorder.force_record(t, t.saturating_sub(1), false, &x, &counters)?;
    Ok(recorder.into_trace(x, sampler.into_parts(), counters, termination, None))
}

/// ProxSVRG+: epochs of `m` inner steps sharing one anchor gradient of
/// batch size `B`; inner steps use the SVRG difference estimator.
///
/// The trace records `||G_eta||` at every `eval_stride`-th iterate. Two
/// solution reports come back: the seeded uniformly sampled iterate (the
/// point the expectation guarantee speaks about) and the best recorded
/// iterate, which lower-bounds it.
pub fn run_proxsvrg_plus(
    problem: &CompositeProblem,
    params: &AlgoParams,
    x0: &Vector,
) -> Result<RunTrace> {
    let (mut x, mut counters, mut rng) = start_run(problem, params, x0)?;
    let bound = 1.0 / ((1.0 + 2.0 * params.m as f64 / (params.b as f64).sqrt()) * problem.l());
    if params.eta > bound * (1.0 + 1e-12) {
        warn!(
            "ProxSVRG+ step size {:.3e} exceeds the analyzed bound {:.3e}",
            params.eta, bound
        );
    }
    let mut sampler = IterateSampler::new(&mut rng, params.max_iters, &x);
    let mut recorder = Recorder::new(
        problem,
        params.eta,
        params.eval_stride,
        params.record_timing,
    );
    recorder.force_record(0, 0, false, &x, &counters)?;
    let mut termination = Termination::MaxIters;
    let mut t: u64 = 0;
    let mut epoch: u64 = 0;
    'outer: while t < params.max_iters {
        let anchor = anchor_gradient(problem, &x, params.big_b, &mut rng, &mut counters)?;
        for _k in 1..=params.m {
            let batch = sample_minibatch(&mut rng, problem.n(), params.b, problem.is_streaming())?;
            let v = svrg_estimator(problem, &x, &anchor, &batch, &mut counters)?;
            x = prox_step(problem.h(), &x, &v, params.eta, &mut counters)?;
            t += 1;
            sampler.observe(t, &x);
            if let Some(norm) = recorder.maybe_record(t, epoch, false, &x, &counters)? {
                if params.early_stop && params.epsilon > 0.0 && norm <= params.epsilon {
                    termination = Termination::EarlyStop;
                    break 'outer;
                }
            }
            if t >= params.max_iters {
                break 'outer;
            }
        }
        epoch += 1;
    }
    recorder.force_record(t, epoch, false, &x, &counters)?;
    Ok(recorder.into_trace(x, sampler.into_parts(), counters, termination, None))
}

/// SSRGD, first-order variant: epochs anchored at `x_{sm}` with the SARAH
/// recursive estimator on the inner steps and no super-epoch logic.
pub fn run_ssrgd(problem: &CompositeProblem, params: &AlgoParams, x0: &Vector) -> Result<RunTrace> {
    let (mut x, mut counters, mut rng) = start_run(problem, params, x0)?;
    let bound = 1.0 / ((1.0 + ((params.m as f64 - 1.0) / params.b as f64).sqrt()) * problem.l());
    if params.eta > bound * (1.0 + 1e-12) {
        warn!(
            "SSRGD step size {:.3e} exceeds the analyzed bound {:.3e}",
            params.eta, bound
        );
    }
    let mut sampler = IterateSampler::new(&mut rng, params.max_iters, &x);
    let mut recorder = Recorder::new(
        problem,
        params.eta,
        params.eval_stride,
        params.record_timing,
    );
    recorder.force_record(0, 0, false, &x, &counters)?;
    let mut termination = Termination::MaxIters;
    let mut t: u64 = 0;
    let mut epoch: u64 = 0;
    'outer: while t < params.max_iters {
        let anchor = anchor_gradient(problem, &x, params.big_b, &mut rng, &mut counters)?;
        let mut v = anchor.g;
        for _k in 1..=params.m {
            let next = prox_step(problem.h(), &x, &v, params.eta, &mut counters)?;
            let batch = sample_minibatch(&mut rng, problem.n(), params.b, problem.is_streaming())?;
            v = sarah_estimator(problem, &next, &x, &v, &batch, &mut counters)?;
            x = next;
            t += 1;
            sampler.observe(t, &x);
            if let Some(norm) = recorder.maybe_record(t, epoch, false, &x, &counters)? {
                if params.early_stop && params.epsilon > 0.0 && norm <= params.epsilon {
                    termination = Termination::EarlyStop;
                    break 'outer;
                }
            }
            if t >= params.max_iters {
                break 'outer;
            }
        }
        epoch += 1;
    }
    recorder.force_record(t, epoch, false, &x, &counters)?;
    Ok(recorder.into_trace(x, sampler.into_parts(), counters, termination, None))
}

/// Full SSRGD with super epochs, for escaping strict saddle points of a
/// smooth problem (`h == 0`).
///
/// Control flow follows the algorithm listing verbatim. At the start of an
/// epoch, outside a super epoch, the current estimator value (carried from
/// the previous epoch's break point) is tested against `epsilon`; when it
/// is small the point is perturbed inside a ball of radius `r` and a super
/// epoch begins. Inner steps are plain gradient steps (the identity prox,
/// still charged as a PO call) with SARAH updates. A super epoch exits
/// early on a function decrease of `f_thres` (escaped); a super epoch that
/// instead survives `t_thres` iterations promotes its pre-perturbation
/// anchor to a candidate, which is certified by the diagnostics
/// eigen-solver; a `yes` verdict ends the run with that candidate.
/// Normal epochs stop at a uniformly random inner step (the random-stop
/// device), whose break point seeds the next epoch.
///
/// `r = 0` disables the perturbation (the state machine still runs), which
/// is the documented contrast mode. Function-value evaluations for the
/// stop condition are free in the oracle model and tallied in
/// `counters.fn_evals`. In streaming mode certification is impossible
/// (no exact gradients), so runs end only at the iteration budget.
pub fn run_ssrgd_saddle(
    problem: &CompositeProblem,
    params: &AlgoParams,
    x0: &Vector,
) -> Result<RunTrace> {
    if !problem.h().is_zero() {
        return Err(VrError::UnsupportedOperation(
            "saddle-escaping SSRGD requires a smooth problem (h == 0)".into(),
        ));
    }
    if problem.rho().is_none() {
        return Err(VrError::config(
            "rho",
            "saddle-escaping SSRGD needs a declared Hessian-Lipschitz constant",
        ));
    }
    if !(params.epsilon > 0.0) {
        return Err(VrError::config("epsilon", "must be positive"));
    }
    if !(params.delta > 0.0) {
        return Err(VrError::config("delta", "must be positive"));
    }
    if !(params.f_thres > 0.0) {
        return Err(VrError::config("f_thres", "must be positive"));
    }
    if params.t_thres == 0 {
        return Err(VrError::config("t_thres", "must be >= 1"));
    }
    let (mut x, mut counters, mut rng) = start_run(problem, params, x0)?;
    let mut recorder = Recorder::new(
        problem,
        params.eta,
        params.eval_stride,
        params.record_timing,
    );
    recorder.force_record(0, 0, false, &x, &counters)?;

    let mut super_state: Option<SuperEpochState> = None;
    // estimator value carried across the epoch boundary; none before the
    // first anchor exists
    let mut carried_v: Option<Vector> = None;
    let mut termination = Termination::MaxIters;
    let mut certified: Option<(Vector, f64)> = None;
    let mut t: u64 = 0;
    let mut epoch: u64 = 0;

    'outer: while t < params.max_iters {
        if super_state.is_none() {
            if let Some(cv) = &carried_v {
                if cv.norm() <= params.epsilon {
                    let x_tilde = x.clone();
                    let f_tilde = problem.evaluate_f(&x_tilde)?;
                    counters.charge_fn_eval();
                    if params.r > 0.0 {
                        let xi = sample_uniform_ball(&mut rng, problem.dim(), params.r)?;
                        x = x.plus(&xi);
                        x.ensure_finite("perturbation")?;
                    }
                    super_state = Some(SuperEpochState {
                        x_tilde,
                        f_tilde,
                        t_init: t,
                    });
                }
            }
        }
        let anchor = anchor_gradient(problem, &x, params.big_b, &mut rng, &mut counters)?;
        let mut v = anchor.g;
        let stop_k = if super_state.is_none() {
            Some(random_stop_index(&mut rng, params.m))
        } else {
            None
        };
        for k in 1..=params.m {
            let next = prox_step(problem.h(), &x, &v, params.eta, &mut counters)?;
            let batch = sample_minibatch(&mut rng, problem.n(), params.b, problem.is_streaming())?;
            v = sarah_estimator(problem, &next, &x, &v, &batch, &mut counters)?;
            x = next;
            t += 1;
            recorder.maybe_record(t, epoch, super_state.is_some(), &x, &counters)?;
            if let Some(state) = &super_state {
                let fx = problem.evaluate_f(&x)?;
                counters.charge_fn_eval();
                if state.f_tilde - fx >= params.f_thres {
                    // escaped the saddle: enough descent
                    super_state = None;
                    break;
                } else if t - state.t_init >= params.t_thres {
                    // survived the super epoch: certify the candidate
                    if !problem.is_streaming() {
                        let (verdict, est) = verify_local_minimum_detailed(
                            problem,
                            &state.x_tilde,
                            params.epsilon,
                            params.delta,
                            &mut recorder.diag,
                        )?;
                        if verdict == Verdict::Yes {
                            let lambda = est.map(|e| e.lambda_min_est).unwrap_or(f64::NAN);
                            certified = Some((state.x_tilde.clone(), lambda));
                            termination = Termination::Certified;
                            super_state = None;
                            break 'outer;
                        }
                    }
                    super_state = None;
                    break;
                }
            } else if Some(k) == stop_k {
                break;
            }
            if t >= params.max_iters {
                break 'outer;
            }
        }
        carried_v = Some(v.clone());
        epoch += 1;
    }

    recorder.force_record(t, epoch, super_state.is_some(), &x, &counters)?;
    let (final_x, lambda) = match certified {
        Some((x_tilde, lambda)) => (x_tilde, Some(lambda)),
        None => (x, None),
    };
    Ok(recorder.into_trace(final_x, None, counters, termination, lambda))
}
