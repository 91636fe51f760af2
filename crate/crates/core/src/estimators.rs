//! Minibatch sampling, the variance-reduced gradient estimators, and
//! perturbation-ball sampling.
//!
//! # RNG contract
//!
//! Every stochastic choice in this crate flows through [`RunRng`], a named,
//! versioned generator: **ChaCha8 seeded via `seed_from_u64`** (as shipped by
//! `rand_chacha` 0.3). The same seed produces the same sample sequence on
//! every platform; changing the generator, the seeding, or the order in
//! which drivers consume draws is a breaking change to trace reproducibility.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::counters::OracleCounters;
use crate::error::{Result, VrError};
use crate::problem::CompositeProblem;
use crate::vector::Vector;

/// The run-owned random stream. See the module docs for the fixed algorithm.
#[derive(Debug, Clone)]
pub struct RunRng {
    inner: ChaCha8Rng,
}

impl RunRng {
    pub fn seed_from_u64(seed: u64) -> Self {
        RunRng {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform_index(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    /// Uniform draw from `[0, 1)`.
    pub fn uniform01(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Bernoulli event with probability `p`.
    pub fn flip(&mut self, p: f64) -> bool {
        self.inner.gen::<f64>() < p
    }
}

/// Epoch anchor: the reference point and the batch gradient computed there
/// (`x_tilde^s` with `g^s`, or `x_{sm}` with `v_{sm}`).
#[derive(Debug, Clone)]
pub struct Anchor {
    pub x_tilde: Vector,
    pub g: Vector,
}

/// Draws a minibatch of `b` component indices.
///
/// Indices are i.i.d. uniform with replacement. The one exception is
/// `b == n` in finite-sum mode, which returns the deterministic full pass
/// `[0, n)`: that is the paper's degenerate exact case (the estimators
/// telescope exactly and the drivers collapse to proximal gradient descent).
pub fn sample_minibatch(
    rng: &mut RunRng,
    n: usize,
    b: usize,
    streaming: bool,
) -> Result<Vec<usize>> {
    if b == 0 {
        return Err(VrError::contract("minibatch size must be >= 1"));
    }
    if n == 0 {
        return Err(VrError::contract("component count must be >= 1"));
    }
    if !streaming && b == n {
        return Ok((0..n).collect());
    }
    Ok((0..b).map(|_| rng.uniform_index(n)).collect())
}

/// SVRG-style estimator: `(1/b) sum_{i in I_b} (grad f_i(x) - grad f_i(x_tilde)) + g`.
/// Unbiased given an exact anchor. Charges `2b` raw SFO, `b` paper SFO.
pub fn svrg_estimator(
    problem: &CompositeProblem,
    x: &Vector,
    anchor: &Anchor,
    batch: &[usize],
    counters: &mut OracleCounters,
) -> Result<Vector> {
    if batch.is_empty() {
        return Err(VrError::contract("empty minibatch"));
    }
    x.check_dim(problem.dim())?;
    let v = gradient_difference_average(problem, x, &anchor.x_tilde, batch, &anchor.g)?;
    counters.charge_sfo(2 * batch.len() as u64, batch.len() as u64);
    Ok(v)
}

/// SARAH-style recursive estimator:
/// `(1/b) sum_{i in I_b} (grad f_i(x_t) - grad f_i(x_prev)) + v_prev`.
/// Charges `2b` raw SFO, `b` paper SFO.
pub fn sarah_estimator(
    problem: &CompositeProblem,
    x_t: &Vector,
    x_prev: &Vector,
    v_prev: &Vector,
    batch: &[usize],
    counters: &mut OracleCounters,
) -> Result<Vector> {
    if batch.is_empty() {
        return Err(VrError::contract("empty minibatch"));
    }
    x_t.check_dim(problem.dim())?;
    let v = gradient_difference_average(problem, x_t, x_prev, batch, v_prev)?;
    counters.charge_sfo(2 * batch.len() as u64, batch.len() as u64);
    Ok(v)
}

/// Shared kernel: `(1/b) sum_{i} (grad f_i(a) - grad f_i(b)) + base`.
///
/// The per-component difference is accumulated term by term, so when
/// `a == b` bitwise the correction vanishes exactly and the estimator
/// returns `base` unchanged.
fn gradient_difference_average(
    problem: &CompositeProblem,
    a: &Vector,
    b: &Vector,
    batch: &[usize],
    base: &Vector,
) -> Result<Vector> {
    let d = problem.dim();
    let mut acc = vec![0.0; d];
    let mut ga = vec![0.0; d];
    let mut gb = vec![0.0; d];
    for &i in batch {
        let grad_a = problem.component_gradient(i, a)?;
        let grad_b = problem.component_gradient(i, b)?;
        ga.copy_from_slice(grad_a.as_slice());
        gb.copy_from_slice(grad_b.as_slice());
        for j in 0..d {
            acc[j] += ga[j] - gb[j];
        }
    }
    let inv_b = 1.0 / batch.len() as f64;
    let mut v = Vector::zeros(d);
    for j in 0..d {
        v.as_mut_slice()[j] = acc[j] * inv_b + base[j];
    }
    v.ensure_finite("gradient estimator")?;
    Ok(v)
}

/// Batch gradient at an epoch anchor.
///
/// `B == n` in finite-sum mode computes the exact full gradient; otherwise
/// `B` components are drawn with replacement. Charges `B` to both counters.
pub fn anchor_gradient(
    problem: &CompositeProblem,
    x: &Vector,
    big_b: usize,
    rng: &mut RunRng,
    counters: &mut OracleCounters,
) -> Result<Anchor> {
    if big_b == 0 {
        return Err(VrError::contract("anchor batch size must be >= 1"));
    }
    let n = problem.n();
    if !problem.is_streaming() && big_b > n {
        return Err(VrError::contract(format!(
            "anchor batch size {big_b} exceeds n = {n} in finite-sum mode"
        )));
    }
    let g = if !problem.is_streaming() && big_b == n {
        problem.full_gradient(x, counters)?
    } else {
        let indices: Vec<usize> = (0..big_b).map(|_| rng.uniform_index(n)).collect();
        problem.component_gradient_batch(x, &indices, counters)?
    };
    Ok(Anchor {
        x_tilde: x.clone(),
        g,
    })
}

/// Uniform sample from the Euclidean ball of radius `r` about the origin:
/// direction from a normalized Gaussian, radius `r * U^(1/d)`.
pub fn sample_uniform_ball(rng: &mut RunRng, d: usize, r: f64) -> Result<Vector> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(VrError::contract(format!(
            "ball radius must be positive and finite, got {r}"
        )));
    }
    if d == 0 {
        return Err(VrError::contract("dimension must be >= 1"));
    }
    let mut dir = Vector::zeros(d);
    loop {
        for v in dir.as_mut_slice() {
            *v = rng.standard_normal();
        }
        let norm = dir.norm();
        if norm > 0.0 && norm.is_finite() {
            dir.scale(1.0 / norm);
            break;
        }
    }
    let radius = r * rng.uniform01().powf(1.0 / d as f64);
    dir.scale(radius);
    dir.ensure_finite("sample_uniform_ball")?;
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{ProblemKind, SmoothOracle};
    use crate::prox::ProxSpec;
    use std::sync::Arc;

    /// f_i(x) = 0.5 (a_i^T x - y_i)^2 in tiny dimensions, for enumeration.
    struct TinyLs {
        rows: Vec<Vec<f64>>,
        y: Vec<f64>,
    }

    impl SmoothOracle for TinyLs {
        fn dim(&self) -> usize {
            self.rows[0].len()
        }
        fn component_count(&self) -> usize {
            self.rows.len()
        }
        fn component_value(&self, i: usize, x: &[f64]) -> f64 {
            let r: f64 = self.rows[i].iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - self.y[i];
            0.5 * r * r
        }
        fn component_gradient_into(&self, i: usize, x: &[f64], out: &mut [f64]) {
            let r: f64 = self.rows[i].iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - self.y[i];
            for (o, a) in out.iter_mut().zip(&self.rows[i]) {
                *o = r * a;
            }
        }
    }

    fn tiny_problem(n: usize, d: usize, seed: u64) -> CompositeProblem {
        let mut rng = RunRng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.standard_normal()).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let l = rows
            .iter()
            .map(|r| r.iter().map(|a| a * a).sum::<f64>())
            .fold(0.0f64, f64::max);
        CompositeProblem::new(
            ProblemKind::Custom,
            Arc::new(TinyLs { rows, y }),
            ProxSpec::Zero,
            l.max(1e-9),
        )
        .unwrap()
    }

    fn rand_x(d: usize, seed: u64) -> Vector {
        let mut rng = RunRng::seed_from_u64(seed);
        Vector::from_fn(d, |_| rng.standard_normal()).unwrap()
    }

    /// All batches of size b over [0, n) with replacement, in lexicographic order.
    fn all_batches(n: usize, b: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..b {
            let mut next = Vec::with_capacity(out.len() * n);
            for prefix in &out {
                for i in 0..n {
                    let mut p = prefix.clone();
                    p.push(i);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }

    #[test]
    fn minibatch_contracts() {
        let mut rng = RunRng::seed_from_u64(1);
        assert!(sample_minibatch(&mut rng, 10, 0, false).is_err());
        // n = 1: every index is 0
        let batch = sample_minibatch(&mut rng, 1, 7, true).unwrap();
        assert!(batch.iter().all(|&i| i == 0));
        // b = n finite-sum: deterministic full pass
        let batch = sample_minibatch(&mut rng, 5, 5, false).unwrap();
        assert_eq!(batch, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn minibatch_deterministic_under_seed() {
        let mut a = RunRng::seed_from_u64(123);
        let mut b = RunRng::seed_from_u64(123);
        let x = sample_minibatch(&mut a, 100, 5, false).unwrap();
        let y = sample_minibatch(&mut b, 100, 5, false).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn minibatch_frequencies_concentrate() {
        // n = 10, 1e5 draws: each frequency within 5 sigma of 1e4.
        let mut rng = RunRng::seed_from_u64(7);
        let draws = sample_minibatch(&mut rng, 10, 100_000, false).unwrap();
        let mut freq = [0usize; 10];
        for i in draws {
            freq[i] += 1;
        }
        let sigma = (100_000.0f64 * 0.1 * 0.9).sqrt();
        for (i, &f) in freq.iter().enumerate() {
            assert!((f as f64 - 10_000.0).abs() <= 5.0 * sigma, "index {i}: {f}");
        }
    }

    #[test]
    fn svrg_returns_anchor_gradient_at_anchor_point() {
        let p = tiny_problem(6, 3, 11);
        let x = rand_x(3, 4);
        let mut c = OracleCounters::new();
        let mut rng = RunRng::seed_from_u64(2);
        let anchor = anchor_gradient(&p, &x, 6, &mut rng, &mut c).unwrap();
        let batch = vec![3, 1, 1];
        let v = svrg_estimator(&p, &x, &anchor, &batch, &mut c).unwrap();
        assert_eq!(v, anchor.g);
    }

    #[test]
    fn svrg_exhaustive_unbiasedness() {
        // exact anchor (B = n): averaging the estimator over all batches
        // recovers the full gradient.
        for (n, b) in [(6usize, 2usize), (5, 1), (4, 3)] {
            let p = tiny_problem(n, 2, 21 + n as u64);
            let x_tilde = rand_x(2, 31);
            let x = rand_x(2, 32);
            let mut c = OracleCounters::new();
            let mut rng = RunRng::seed_from_u64(3);
            let anchor = anchor_gradient(&p, &x_tilde, n, &mut rng, &mut c).unwrap();
            let full = p.full_gradient(&x, &mut c).unwrap();

            let batches = all_batches(n, b);
            let mut mean = Vector::zeros(2);
            for batch in &batches {
                let v = svrg_estimator(&p, &x, &anchor, batch, &mut c).unwrap();
                mean.axpy(1.0 / batches.len() as f64, &v);
            }
            assert!(
                mean.dist(&full) <= 1e-12 * (1.0 + full.norm()),
                "n={n} b={b}: {:e}",
                mean.dist(&full)
            );
        }
    }

    #[test]
    fn svrg_enumerated_variance_within_smoothness_bound() {
        // E||v - grad f(x)||^2 <= (L^2/b) ||x - x_tilde||^2 with exact anchor.
        for b in [1usize, 2] {
            let n = 6;
            let p = tiny_problem(n, 2, 77);
            let x_tilde = rand_x(2, 41);
            let x = rand_x(2, 42);
            let mut c = OracleCounters::new();
            let mut rng = RunRng::seed_from_u64(4);
            let anchor = anchor_gradient(&p, &x_tilde, n, &mut rng, &mut c).unwrap();
            let full = p.full_gradient(&x, &mut c).unwrap();

            let batches = all_batches(n, b);
            let mut second_moment = 0.0;
            for batch in &batches {
                let v = svrg_estimator(&p, &x, &anchor, batch, &mut c).unwrap();
                second_moment += v.minus(&full).norm_sq();
            }
            second_moment /= batches.len() as f64;
            let bound = p.l() * p.l() / b as f64 * x.minus(&x_tilde).norm_sq();
            assert!(
                second_moment <= bound + 1e-10,
                "b={b}: {second_moment:e} > {bound:e}"
            );
        }
    }

    #[test]
    fn sarah_returns_previous_estimate_at_zero_displacement() {
        let p = tiny_problem(5, 3, 9);
        let x = rand_x(3, 8);
        let v_prev = rand_x(3, 9);
        let mut c = OracleCounters::new();
        let v = sarah_estimator(&p, &x, &x, &v_prev, &[4, 0], &mut c).unwrap();
        assert_eq!(v, v_prev);
        assert_eq!(c.sfo, 4);
        assert_eq!(c.sfo_paper, 2);
    }

    #[test]
    fn sarah_one_step_enumerated_variance_bound() {
        // From an exact previous estimate, the one-step recursion obeys
        // E||v_t - grad f(x_t)||^2 <= (L^2/b) ||x_t - x_prev||^2.
        let n = 6;
        let b = 2;
        let p = tiny_problem(n, 2, 55);
        let x_prev = rand_x(2, 51);
        let x_t = rand_x(2, 52);
        let mut c = OracleCounters::new();
        let v_prev = p.full_gradient(&x_prev, &mut c).unwrap();
        let full_t = p.full_gradient(&x_t, &mut c).unwrap();

        let batches = all_batches(n, b);
        let mut second_moment = 0.0;
        for batch in &batches {
            let v = sarah_estimator(&p, &x_t, &x_prev, &v_prev, batch, &mut c).unwrap();
            second_moment += v.minus(&full_t).norm_sq();
        }
        second_moment /= batches.len() as f64;
        let bound = p.l() * p.l() / b as f64 * x_t.minus(&x_prev).norm_sq();
        assert!(second_moment <= bound + 1e-10);
    }

    #[test]
    fn sarah_conditional_bias_is_previous_error() {
        // E[v_t] - grad f(x_t) = v_prev - grad f(x_prev), by enumeration.
        let n = 5;
        let b = 2;
        let p = tiny_problem(n, 2, 66);
        let x_prev = rand_x(2, 61);
        let x_t = rand_x(2, 62);
        let v_prev = rand_x(2, 63); // deliberately not the true gradient
        let mut c = OracleCounters::new();
        let full_t = p.full_gradient(&x_t, &mut c).unwrap();
        let full_prev = p.full_gradient(&x_prev, &mut c).unwrap();

        let batches = all_batches(n, b);
        let mut mean = Vector::zeros(2);
        for batch in &batches {
            let v = sarah_estimator(&p, &x_t, &x_prev, &v_prev, batch, &mut c).unwrap();
            mean.axpy(1.0 / batches.len() as f64, &v);
        }
        let bias = mean.minus(&full_t);
        let expected = v_prev.minus(&full_prev);
        assert!(bias.dist(&expected) <= 1e-12 * (1.0 + expected.norm()));
    }

    #[test]
    fn anchor_full_batch_is_exact() {
        let p = tiny_problem(6, 3, 13);
        let x = rand_x(3, 14);
        let mut c1 = OracleCounters::new();
        let mut c2 = OracleCounters::new();
        let mut rng = RunRng::seed_from_u64(5);
        let anchor = anchor_gradient(&p, &x, 6, &mut rng, &mut c1).unwrap();
        let full = p.full_gradient(&x, &mut c2).unwrap();
        assert_eq!(anchor.g, full);
        assert_eq!(c1.sfo, 6);
        assert_eq!(c1.sfo_paper, 6);
    }

    #[test]
    fn anchor_subsampled_enumerated_mean_and_variance() {
        // B = 2 over n = 6: enumerate all 36 draws. Mean is the full
        // gradient; variance is (1/B) * mean_i ||grad f_i - grad f||^2.
        let n = 6;
        let big_b = 2;
        let p = tiny_problem(n, 2, 99);
        let x = rand_x(2, 91);
        let mut c = OracleCounters::new();
        let full = p.full_gradient(&x, &mut c).unwrap();

        let mut mean = Vector::zeros(2);
        let mut second_moment = 0.0;
        let draws = all_batches(n, big_b);
        for batch in &draws {
            let g = p.component_gradient_batch(&x, batch, &mut c).unwrap();
            mean.axpy(1.0 / draws.len() as f64, &g);
            second_moment += g.minus(&full).norm_sq();
        }
        second_moment /= draws.len() as f64;

        let mut per_component = 0.0;
        for i in 0..n {
            per_component += p.component_gradient(i, &x).unwrap().minus(&full).norm_sq();
        }
        per_component /= n as f64;
        let expected_var = per_component / big_b as f64;

        assert!(mean.dist(&full) <= 1e-12 * (1.0 + full.norm()));
        assert!(
            (second_moment - expected_var).abs() <= 1e-12 * (1.0 + expected_var),
            "{second_moment:e} vs {expected_var:e}"
        );
    }

    #[test]
    fn ball_samples_stay_inside() {
        let mut rng = RunRng::seed_from_u64(17);
        for _ in 0..1000 {
            let xi = sample_uniform_ball(&mut rng, 4, 0.37).unwrap();
            assert!(xi.norm() <= 0.37 * (1.0 + 1e-12));
        }
        assert!(sample_uniform_ball(&mut rng, 4, 0.0).is_err());
        assert!(sample_uniform_ball(&mut rng, 4, -1.0).is_err());
    }

    #[test]
    fn ball_volume_ratio_in_3d() {
        // P(||xi|| <= r/2) = (1/2)^3 within 5 sigma over 1e5 draws.
        let mut rng = RunRng::seed_from_u64(18);
        let n = 100_000;
        let mut hits = 0usize;
        for _ in 0..n {
            if sample_uniform_ball(&mut rng, 3, 2.0).unwrap().norm() <= 1.0 {
                hits += 1;
            }
        }
        let p = 0.125;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        let phat = hits as f64 / n as f64;
        assert!((phat - p).abs() <= 5.0 * sigma, "phat = {phat}");
    }

    #[test]
    fn ball_1d_is_uniform_interval_ks() {
        // d = 1: uniform on [-r, r]. One-sample KS test, p > 0.001.
        let mut rng = RunRng::seed_from_u64(19);
        let n = 100_000;
        let r = 1.5;
        let mut samples: Vec<f64> = (0..n)
            .map(|_| sample_uniform_ball(&mut rng, 1, r).unwrap()[0])
            .collect();
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut d_stat = 0.0f64;
        for (i, &s) in samples.iter().enumerate() {
            let cdf = ((s + r) / (2.0 * r)).clamp(0.0, 1.0);
            let hi = (i + 1) as f64 / n as f64 - cdf;
            let lo = cdf - i as f64 / n as f64;
            d_stat = d_stat.max(hi).max(lo);
        }
        // asymptotic Kolmogorov p-value: 2 sum_k (-1)^(k-1) exp(-2 k^2 n D^2)
        let lambda = (n as f64).sqrt() * d_stat;
        let mut pval = 0.0;
        for k in 1i32..=100 {
            let term =
                2.0 * (-1.0f64).powi(k - 1) * (-2.0 * (k as f64 * lambda).powi(2)).exp();
            pval += term;
        }
        assert!(pval > 0.001, "KS D = {d_stat}, p = {pval}");
    }
}
