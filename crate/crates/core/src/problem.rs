//! Composite problems `Phi(x) = f(x) + h(x)` with component-gradient oracles.
//!
//! `f` is a finite sum `(1/n) sum_i f_i(x)` of smooth (possibly nonconvex)
//! components with analytic gradients; `h` is a structured convex nonsmooth
//! term with a closed-form prox. A problem built in streaming mode models the
//! online form: the component set still exists behind the sampler, but exact
//! full gradients are not available to algorithms.

use std::sync::{Arc, OnceLock};

use crate::counters::OracleCounters;
use crate::error::{Result, VrError};
use crate::prox::ProxSpec;
use crate::vector::Vector;

/// Analytic value/gradient oracle for the smooth components `f_i`.
///
/// Implementations must be deterministic pure functions of `(i, x)`;
/// problems are shared read-only across concurrent runs.
pub trait SmoothOracle: Send + Sync {
    fn dim(&self) -> usize;
    fn component_count(&self) -> usize;
    fn component_value(&self, i: usize, x: &[f64]) -> f64;
    /// Writes `grad f_i(x)` into `out` (len == dim).
    fn component_gradient_into(&self, i: usize, x: &[f64], out: &mut [f64]);
}

/// Which recipe produced the problem; used by the reference-optimum solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    QuadraticL1,
    RobustRegression,
    QuarticSaddle,
    PlQuadratic,
    Custom,
}

/// A composite objective with declared smoothness constants.
#[derive(Clone)]
pub struct CompositeProblem {
    oracle: Arc<dyn SmoothOracle>,
    h: ProxSpec,
    kind: ProblemKind,
    n: usize,
    dim: usize,
    streaming: bool,
    /// Average-smoothness constant (`E_i ||grad f_i(x) - grad f_i(y)||^2 <= L^2 ||x-y||^2`).
    l: f64,
    mu: Option<f64>,
    sigma: Option<f64>,
    rho: Option<f64>,
    phi_star: Arc<OnceLock<f64>>,
    x_star: Arc<OnceLock<Vector>>,
}

impl std::fmt::Debug for CompositeProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompositeProblem")
            .field("kind", &self.kind)
            .field("n", &self.n)
            .field("dim", &self.dim)
            .field("streaming", &self.streaming)
            .field("l", &self.l)
            .field("mu", &self.mu)
            .field("sigma", &self.sigma)
            .field("rho", &self.rho)
            .field("phi_star", &self.phi_star.get())
            .finish()
    }
}

impl CompositeProblem {
    pub fn new(
        kind: ProblemKind,
        oracle: Arc<dyn SmoothOracle>,
        h: ProxSpec,
        l: f64,
    ) -> Result<Self> {
        let n = oracle.component_count();
        let dim = oracle.dim();
        if n == 0 {
            return Err(VrError::contract("component count must be positive"));
        }
        if dim == 0 {
            return Err(VrError::contract("dimension must be positive"));
        }
        if !(l > 0.0) || !l.is_finite() {
            return Err(VrError::config("L", "must be positive and finite"));
        }
        h.validate(dim)?;
        Ok(CompositeProblem {
            oracle,
            h,
            kind,
            n,
            dim,
            streaming: false,
            l,
            mu: None,
            sigma: None,
            rho: None,
            phi_star: Arc::new(OnceLock::new()),
            x_star: Arc::new(OnceLock::new()),
        })
    }

    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        if !(mu > 0.0) || mu > self.l {
            return Err(VrError::config("mu", "requires 0 < mu <= L"));
        }
        self.mu = Some(mu);
        Ok(self)
    }

    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(VrError::config("sigma", "must be nonnegative and finite"));
        }
        self.sigma = Some(sigma);
        Ok(self)
    }

    pub fn with_rho(mut self, rho: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(VrError::config("rho", "must be positive and finite"));
        }
        self.rho = Some(rho);
        Ok(self)
    }

    pub fn with_phi_star(self, phi_star: f64) -> Self {
        let _ = self.phi_star.set(phi_star);
        self
    }

    /// Marks the problem as online: algorithms lose access to exact full
    /// gradients, and anchors of any size are drawn with replacement.
    pub fn into_streaming(mut self) -> Self {
        self.streaming = true;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> &ProxSpec {
        &self.h
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn is_streaming(&self) -> bool {
        self.streaming
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn mu(&self) -> Option<f64> {
        self.mu
    }

    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    pub fn rho(&self) -> Option<f64> {
        self.rho
    }

    pub fn phi_star(&self) -> Option<f64> {
        self.phi_star.get().copied()
    }

    /// Caches the optimal value once known (reference-optimum solver).
    pub fn set_phi_star(&self, phi_star: f64) {
        let _ = self.phi_star.set(phi_star);
    }

    pub fn with_x_star(self, x_star: Vector) -> Self {
        let _ = self.x_star.set(x_star);
        self
    }

    pub fn x_star(&self) -> Option<&Vector> {
        self.x_star.get()
    }

    pub fn set_x_star(&self, x_star: Vector) {
        let _ = self.x_star.set(x_star);
    }

    /// Raw oracle access: `f_i(x)`. Uncounted; batch operations and
    /// estimators do the SFO accounting.
    pub fn component_value(&self, i: usize, x: &Vector) -> Result<f64> {
        self.check_component(i)?;
        x.check_dim(self.dim)?;
        Ok(self.oracle.component_value(i, x.as_slice()))
    }

    /// Raw oracle access: `grad f_i(x)`. Uncounted.
    pub fn component_gradient(&self, i: usize, x: &Vector) -> Result<Vector> {
        self.check_component(i)?;
        x.check_dim(self.dim)?;
        let mut out = Vector::zeros(self.dim);
        self.oracle
            .component_gradient_into(i, x.as_slice(), out.as_mut_slice());
        out.ensure_finite("component_gradient")?;
        Ok(out)
    }

    fn check_component(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(VrError::contract(format!(
                "component index {i} out of range (n = {})",
                self.n
            )))
        }
    }

    /// Smooth part `f(x) = (1/n) sum_i f_i(x)`. Free in the oracle model.
    pub fn evaluate_f(&self, x: &Vector) -> Result<f64> {
        x.check_dim(self.dim)?;
        let mut acc = 0.0;
        for i in 0..self.n {
            acc += self.oracle.component_value(i, x.as_slice());
        }
        let f = acc / self.n as f64;
        if f.is_finite() {
            Ok(f)
        } else {
            Err(VrError::NumericOverflow(format!("f(x) = {f}")))
        }
    }

    /// `Phi(x) = f(x) + h(x)`. May be `+inf` when `x` is outside an
    /// indicator set; the smooth part must be finite.
    pub fn evaluate_phi(&self, x: &Vector) -> Result<f64> {
        Ok(self.evaluate_f(x)? + self.h.value(x))
    }

    /// Exact full gradient `(1/n) sum_i grad f_i(x)`; finite-sum mode only.
    /// Charges `n` to both SFO counters.
    pub fn full_gradient(&self, x: &Vector, counters: &mut OracleCounters) -> Result<Vector> {
        if self.streaming {
            return Err(VrError::UnsupportedOperation(
                "full gradient is unavailable in streaming mode".into(),
            ));
        }
        x.check_dim(self.dim)?;
        let mut acc = Vector::zeros(self.dim);
        let mut buf = vec![0.0; self.dim];
        for i in 0..self.n {
            self.oracle
                .component_gradient_into(i, x.as_slice(), &mut buf);
            for (a, g) in acc.as_mut_slice().iter_mut().zip(&buf) {
                *a += g;
            }
        }
        acc.scale(1.0 / self.n as f64);
        counters.charge_sfo(self.n as u64, self.n as u64);
        acc.ensure_finite("full_gradient")?;
        Ok(acc)
    }

    /// Minibatch average `(1/|I|) sum_{i in I} grad f_i(x)`.
    /// Charges `|I|` to both SFO counters.
    pub fn component_gradient_batch(
        &self,
        x: &Vector,
        indices: &[usize],
        counters: &mut OracleCounters,
    ) -> Result<Vector> {
        if indices.is_empty() {
            return Err(VrError::contract("empty minibatch"));
        }
        x.check_dim(self.dim)?;
        let mut acc = Vector::zeros(self.dim);
        let mut buf = vec![0.0; self.dim];
        for &i in indices {
            self.check_component(i)?;
            self.oracle
                .component_gradient_into(i, x.as_slice(), &mut buf);
            for (a, g) in acc.as_mut_slice().iter_mut().zip(&buf) {
                *a += g;
            }
        }
        acc.scale(1.0 / indices.len() as f64);
        counters.charge_sfo(indices.len() as u64, indices.len() as u64);
        acc.ensure_finite("component_gradient_batch")?;
        Ok(acc)
    }
}
