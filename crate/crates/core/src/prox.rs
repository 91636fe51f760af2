//! Closed-form proximal operators and the gradient-mapping criterion.
//!
//! `prox_{eta h}(x) = argmin_y { h(y) + ||y - x||^2 / (2 eta) }` for the
//! structured nonsmooth terms supported here: the zero function, a weighted
//! l1 norm, and box/ball indicator functions. The gradient mapping
//! `G_eta(x) = (x - prox_{eta h}(x - eta grad f(x))) / eta` is the
//! stationarity measure for composite problems; it reduces to the ordinary
//! gradient when `h` vanishes.

use crate::counters::OracleCounters;
use crate::error::{Result, VrError};
use crate::problem::CompositeProblem;
use crate::vector::Vector;

/// Relative slack for indicator-set membership tests. Radial projection
/// rounds: `||x * (R/||x||)||` can exceed `R` by a few ulps.
const FEASIBILITY_SLACK: f64 = 1e-12;

/// The structured convex nonsmooth term `h`.
#[derive(Debug, Clone, PartialEq)]
pub enum ProxSpec {
    /// `h == 0`.
    Zero,
    /// `h(x) = lambda * ||x||_1`.
    L1 { lambda: f64 },
    /// Indicator of the box `{x : lo <= x <= hi}` (componentwise).
    BoxIndicator { lo: Vector, hi: Vector },
    /// Indicator of the Euclidean ball of the given radius about the origin.
    BallIndicator { radius: f64 },
}

impl ProxSpec {
    pub fn l1(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(VrError::config("lambda", "l1 weight must be >= 0"));
        }
        Ok(ProxSpec::L1 { lambda })
    }

    pub fn box_indicator(lo: Vector, hi: Vector) -> Result<Self> {
        if lo.dim() != hi.dim() {
            return Err(VrError::DimensionMismatch {
                expected: lo.dim(),
                got: hi.dim(),
            });
        }
        if lo.iter().zip(hi.iter()).any(|(a, b)| a > b) {
            return Err(VrError::config("box", "requires lo <= hi componentwise"));
        }
        Ok(ProxSpec::BoxIndicator { lo, hi })
    }

    pub fn ball_indicator(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(VrError::config("radius", "ball radius must be positive"));
        }
        Ok(ProxSpec::BallIndicator { radius })
    }

    /// Dimension compatibility check used at problem construction.
    pub(crate) fn validate(&self, dim: usize) -> Result<()> {
        if let ProxSpec::BoxIndicator { lo, .. } = self {
            lo.check_dim(dim)?;
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ProxSpec::Zero)
    }

    /// `h(x)`: 0 inside indicator sets, `+inf` outside.
    pub fn value(&self, x: &Vector) -> f64 {
        match self {
            ProxSpec::Zero => 0.0,
            ProxSpec::L1 { lambda } => lambda * x.norm_l1(),
            ProxSpec::BoxIndicator { lo, hi } => {
                let inside = x
                    .iter()
                    .zip(lo.iter().zip(hi.iter()))
                    .all(|(v, (a, b))| *v >= a - slack(*a) && *v <= b + slack(*b));
                if inside {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxSpec::BallIndicator { radius } => {
                if x.norm() <= radius * (1.0 + FEASIBILITY_SLACK) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `prox_{eta h}(x)`: identity, componentwise soft-threshold, box clip,
    /// or radial projection. Points already feasible are returned unchanged.
    pub fn prox(&self, x: &Vector, eta: f64) -> Result<Vector> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(VrError::contract(format!(
                "prox step size must be positive and finite, got {eta}"
            )));
        }
        let out = match self {
            ProxSpec::Zero => x.clone(),
            ProxSpec::L1 { lambda } => {
                let t = eta * lambda;
                Vector::from_fn(x.dim(), |j| soft_threshold(x[j], t))?
            }
            ProxSpec::BoxIndicator { lo, hi } => {
                x.check_dim(lo.dim())?;
                Vector::from_fn(x.dim(), |j| x[j].clamp(lo[j], hi[j]))?
            }
            ProxSpec::BallIndicator { radius } => {
                let norm = x.norm();
                if norm <= *radius {
                    x.clone()
                } else {
                    let mut y = x.clone();
                    y.scale(radius / norm);
                    y
                }
            }
        };
        out.ensure_finite("prox")?;
        Ok(out)
    }
}

fn slack(bound: f64) -> f64 {
    FEASIBILITY_SLACK * (1.0 + bound.abs())
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Gradient mapping `G_eta(x)` and its Euclidean norm.
///
/// Needs the exact gradient: either the caller supplies a precomputed
/// `grad f(x)` or (finite-sum mode) the full gradient is computed here,
/// charged to `counters` together with the single prox application.
pub fn gradient_mapping(
    problem: &CompositeProblem,
    x: &Vector,
    eta: f64,
    grad: Option<&Vector>,
    counters: &mut OracleCounters,
) -> Result<(Vector, f64)> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(VrError::contract(format!(
            "gradient mapping step size must be positive and finite, got {eta}"
        )));
    }
    x.check_dim(problem.dim())?;
    let owned;
    let g = match grad {
        Some(g) => {
            g.check_dim(problem.dim())?;
            g
        }
        None => {
            if problem.is_streaming() {
                return Err(VrError::UnsupportedOperation(
                    "gradient mapping in streaming mode needs a supplied gradient".into(),
                ));
            }
            owned = problem.full_gradient(x, counters)?;
            &owned
        }
    };
    let inner = x.step(eta, g);
    let p = problem.h().prox(&inner, eta)?;
    counters.charge_po();
    let mut gmap = x.minus(&p);
    gmap.scale(1.0 / eta);
    gmap.ensure_finite("gradient_mapping")?;
    let norm = gmap.norm();
    Ok((gmap, norm))
}
