//! Independent verification oracles.
//!
//! Everything here is a check on the rest of the library, not part of any
//! algorithm's oracle budget: finite-difference gradient checks,
//! finite-difference Hessian-vector products, shifted power iteration for
//! the smallest Hessian eigenvalue, exact/Monte-Carlo gradient variance,
//! and `(epsilon, delta)`-local-minimum certification. Callers pass the
//! run's *diagnostics* counter lane; acceptance identities are checked
//! against the main lane only.

use crate::counters::OracleCounters;
use crate::error::{Result, VrError};
use crate::estimators::RunRng;
use crate::problem::CompositeProblem;
use crate::vector::Vector;

/// Fixed seed for the power-iteration start vector; the estimate is a
/// deterministic function of `(problem, x, tol, max_iters)`.
const EIG_INIT_SEED: u64 = 0x9e37_79b9_7f4a_7c15;

/// Default finite-difference step: balances truncation against rounding.
pub fn default_fd_step(x: &Vector) -> f64 {
    1e-5 * (1.0 + x.norm())
}

/// Result of the smallest-eigenvalue solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigEstimate {
    pub lambda_min_est: f64,
    /// `||H v - lambda v|| / ||v||` for the returned pair.
    pub residual: f64,
    pub iterations: usize,
    /// False when the residual tolerance was not met within `max_iters`.
    pub converged: bool,
}

/// Compares the analytic gradient of `f` against central differences,
/// coordinate by coordinate. Returns the maximum relative error
/// `max_j |fd_j - g_j| / max(1, ||g||_inf)`.
pub fn check_gradient(
    problem: &CompositeProblem,
    x: &Vector,
    h_fd: f64,
    counters: &mut OracleCounters,
) -> Result<f64> {
    if !(h_fd > 0.0) || !h_fd.is_finite() {
        return Err(VrError::contract("finite-difference step must be positive"));
    }
    x.check_dim(problem.dim())?;
    let analytic = problem.full_gradient(x, counters)?;
    let scale = analytic.norm_inf().max(1.0);
    let mut worst = 0.0f64;
    let mut probe = x.clone();
    for j in 0..x.dim() {
        probe.as_mut_slice()[j] = x[j] + h_fd;
        let fp = problem.evaluate_f(&probe)?;
        probe.as_mut_slice()[j] = x[j] - h_fd;
        let fm = problem.evaluate_f(&probe)?;
        probe.as_mut_slice()[j] = x[j];
        counters.fn_evals += 2;
        let fd = (fp - fm) / (2.0 * h_fd);
        worst = worst.max((fd - analytic[j]).abs() / scale);
    }
    Ok(worst)
}

/// Hessian-vector product `grad^2 f(x) v` via central differences of the
/// gradient along the normalized direction:
/// `(grad f(x + h v^) - grad f(x - h v^)) / (2h) * ||v||`.
pub fn hessian_vector(
    problem: &CompositeProblem,
    x: &Vector,
    v: &Vector,
    h_fd: f64,
    counters: &mut OracleCounters,
) -> Result<Vector> {
    if !(h_fd > 0.0) || !h_fd.is_finite() {
        return Err(VrError::contract("finite-difference step must be positive"));
    }
    x.check_dim(problem.dim())?;
    v.check_dim(problem.dim())?;
    let norm = v.norm();
    if norm == 0.0 {
        return Err(VrError::contract(
            "hessian_vector requires a nonzero direction",
        ));
    }
    let mut plus = x.clone();
    plus.axpy(h_fd / norm, v);
    let mut minus = x.clone();
    minus.axpy(-h_fd / norm, v);
    let gp = problem.full_gradient(&plus, counters)?;
    let gm = problem.full_gradient(&minus, counters)?;
    let mut hv = gp.minus(&gm);
    hv.scale(norm / (2.0 * h_fd));
    hv.ensure_finite("hessian_vector")?;
    Ok(hv)
}

/// Smallest Hessian eigenvalue at `x` by power iteration on the shifted
/// operator `cI - grad^2 f(x)` with `c = 1.1 L`, driven by finite-difference
/// Hessian-vector products. Requires a smooth problem (`h == 0`).
pub fn min_eigenvalue_estimate(
    problem: &CompositeProblem,
    x: &Vector,
    tol: f64,
    max_iters: usize,
    counters: &mut OracleCounters,
) -> Result<EigEstimate> {
    if !problem.h().is_zero() {
        return Err(VrError::UnsupportedOperation(
            "eigenvalue estimation requires a smooth problem (h == 0)".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(VrError::contract("eigenvalue tolerance must be positive"));
    }
    let d = problem.dim();
    let shift = 1.1 * problem.l();
    let h_fd = default_fd_step(x);

    let mut rng = RunRng::seed_from_u64(EIG_INIT_SEED);
    let mut v = Vector::from_fn(d, |_| rng.standard_normal())?;
    v.scale(1.0 / v.norm());

    let mut best = EigEstimate {
        lambda_min_est: f64::NAN,
        residual: f64::INFINITY,
        iterations: 0,
        converged: false,
    };
    for it in 1..=max_iters {
        let hv = hessian_vector(problem, x, &v, h_fd, counters)?;
        // w = (cI - H) v
        let mut w = v.clone();
        w.scale(shift);
        w.axpy(-1.0, &hv);
        let rayleigh = v.dot(&w); // ||v|| == 1
        let mut resid_vec = w.clone();
        resid_vec.axpy(-rayleigh, &v);
        let residual = resid_vec.norm();
        let lambda_min_est = shift - rayleigh;
        if residual < best.residual {
            best = EigEstimate {
                lambda_min_est,
                residual,
                iterations: it,
                converged: residual <= tol,
            };
        }
        if residual <= tol {
            return Ok(best);
        }
        let wnorm = w.norm();
        if wnorm == 0.0 || !wnorm.is_finite() {
            // shifted operator annihilated the iterate; restart direction
            v = Vector::from_fn(d, |_| rng.standard_normal())?;
            v.scale(1.0 / v.norm());
            continue;
        }
        w.scale(1.0 / wnorm);
        v = w;
    }
    Ok(best)
}

/// Max over `sample_points` of the gradient variance `E_i ||grad f_i(x) - grad f(x)||^2`.
///
/// Finite-sum mode enumerates all components (exact, no Monte Carlo noise);
/// streaming mode uses `draws` sampled components per point with the usual
/// unbiased sample-variance correction.
pub fn estimate_sigma_sq(
    problem: &CompositeProblem,
    sample_points: &[Vector],
    draws: usize,
    rng: &mut RunRng,
    counters: &mut OracleCounters,
) -> Result<f64> {
    if sample_points.is_empty() {
        return Err(VrError::contract("estimate_sigma_sq needs sample points"));
    }
    let n = problem.n();
    let mut worst = 0.0f64;
    for x in sample_points {
        x.check_dim(problem.dim())?;
        let var = if !problem.is_streaming() {
            let mut mean = Vector::zeros(problem.dim());
            let grads: Vec<Vector> = (0..n)
                .map(|i| problem.component_gradient(i, x))
                .collect::<Result<_>>()?;
            for g in &grads {
                mean.axpy(1.0 / n as f64, g);
            }
            counters.charge_sfo(n as u64, n as u64);
            grads.iter().map(|g| g.minus(&mean).norm_sq()).sum::<f64>() / n as f64
        } else {
            if draws < 2 {
                return Err(VrError::contract(
                    "streaming variance estimation needs draws >= 2",
                ));
            }
            let grads: Vec<Vector> = (0..draws)
                .map(|_| problem.component_gradient(rng.uniform_index(n), x))
                .collect::<Result<_>>()?;
            counters.charge_sfo(draws as u64, draws as u64);
            let mut mean = Vector::zeros(problem.dim());
            for g in &grads {
                mean.axpy(1.0 / draws as f64, g);
            }
            grads.iter().map(|g| g.minus(&mean).norm_sq()).sum::<f64>() / (draws as f64 - 1.0)
        };
        worst = worst.max(var);
    }
    Ok(worst)
}

/// Certification verdict for a candidate local minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    /// The eigenvalue estimate landed inside the `delta/4` tolerance band
    /// around `-delta`, or the eigensolver did not converge.
    Undetermined,
}

/// Checks Definition-style local minimality: `||grad f(x)|| <= epsilon` and
/// `lambda_min(grad^2 f(x)) >= -delta`, the latter with a `delta/4` margin.
pub fn verify_local_minimum(
    problem: &CompositeProblem,
    x: &Vector,
    epsilon: f64,
    delta: f64,
    counters: &mut OracleCounters,
) -> Result<Verdict> {
    verify_local_minimum_detailed(problem, x, epsilon, delta, counters).map(|(v, _)| v)
}

/// [`verify_local_minimum`] plus the eigenvalue estimate it was based on
/// (absent when the gradient test already failed).
pub fn verify_local_minimum_detailed(
    problem: &CompositeProblem,
    x: &Vector,
    epsilon: f64,
    delta: f64,
    counters: &mut OracleCounters,
) -> Result<(Verdict, Option<EigEstimate>)> {
    if !problem.h().is_zero() {
        return Err(VrError::UnsupportedOperation(
            "local-minimum certification requires a smooth problem (h == 0)".into(),
        ));
    }
    if epsilon < 0.0 || delta < 0.0 {
        return Err(VrError::contract("epsilon and delta must be nonnegative"));
    }
    let grad = problem.full_gradient(x, counters)?;
    if grad.norm() > epsilon {
        return Ok((Verdict::No, None));
    }
    let margin = delta / 4.0;
    // the floor matches the finite-difference HVP resolution
    let tol = (delta / 8.0).max(1e-7);
    let est = min_eigenvalue_estimate(problem, x, tol, 20_000, counters)?;
    if !est.converged {
        return Ok((Verdict::Undetermined, Some(est)));
    }
    let verdict = if est.lambda_min_est >= -delta + margin {
        Verdict::Yes
    } else if est.lambda_min_est <= -delta - margin {
        Verdict::No
    } else {
        Verdict::Undetermined
    };
    Ok((verdict, Some(est)))
}
