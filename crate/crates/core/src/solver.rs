//! Deep-cut ellipsoid method with a certified lower bound.
//!
//! The feasible minimizer is assumed to lie in the starting ellipsoid. Objective cuts are
//! taken at the best attained level, so every kept ellipsoid still holds the minimizer, and
//! `f(c) - sqrt(g'Pg)` at any feasible center is a valid lower bound on the optimum.
//!
//! The shape is kept as a factor `J` with `P = J J'`. Updating `J` by a rank-one factor
//! keeps `P` positive definite however elongated the ellipsoid gets, where the textbook
//! downdate of `P` itself loses definiteness to cancellation after many deep cuts.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

/// What the oracle reports at a query point.
pub(crate) enum Cut {
    /// The point is feasible. `value` is the objective there with subgradient `grad`;
    /// `attained <= value` is the best objective the oracle can certify as reached by some
    /// feasible point it knows about (often `value` itself).
    Objective { value: f64, attained: f64, grad: Vector },
    /// The point violates a constraint `c(z) <= 0` by `violation > 0`, with subgradient of `c`.
    /// `attained` is as above (`f64::INFINITY` when the oracle knows no feasible value).
    Constraint { violation: f64, grad: Vector, attained: f64 },
}

#[derive(Clone, Debug)]
pub(crate) struct Minimum {
    /// Best attained objective (`f64::INFINITY` if no feasible point was met).
    pub upper: f64,
    /// Certified lower bound on the optimum.
    pub lower: f64,
    /// Center at which `upper` was reported.
    pub argmin: Option<Vector>,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) enum Verdict {
    Continue,
    Stop,
}

/// Minimizes over the ellipsoid `{z : (z-c)' P^{-1} (z-c) <= 1}`.
///
/// `stop` is consulted after each step with the current `(upper, lower)` bracket.
pub(crate) fn minimize<F, S>(
    mut center: Vector,
    shape: Matrix,
    max_iter: usize,
    mut oracle: F,
    mut stop: S,
) -> Result<Minimum>
where
    F: FnMut(&Vector) -> Result<Cut>,
    S: FnMut(f64, f64) -> Verdict,
{
    let d = center.len();
    let mut factor = shape
        .cholesky()
        .ok_or_else(|| Error::Internal("starting ellipsoid is not positive definite".into()))?
        .unpack();
    let mut out = Minimum {
        upper: f64::INFINITY,
        lower: f64::NEG_INFINITY,
        argmin: None,
        iterations: 0,
        converged: false,
    };
    let df = d as f64;
    while out.iterations < max_iter {
        out.iterations += 1;
        let (grad, alpha) = match oracle(&center)? {
            Cut::Objective { value, attained, grad } => {
                if attained < out.upper {
                    out.upper = attained;
                    out.argmin = Some(center.clone());
                }
                let width = (factor.transpose() * &grad).norm();
                out.lower = out.lower.max(value - width);
                if width <= 1e-300 || !width.is_finite() {
                    out.lower = out.lower.max(value.min(out.upper));
                    out.converged = true;
                    return Ok(out);
                }
                let alpha = (value - out.upper) / width;
                if alpha >= 1.0 {
                    out.lower = out.upper;
                    out.converged = true;
                    return Ok(out);
                }
                (grad, alpha.max(0.0))
            }
            Cut::Constraint { violation, grad, attained } => {
                if attained < out.upper {
                    out.upper = attained;
                    out.argmin = None;
                }
                let width = (factor.transpose() * &grad).norm();
                if width <= 1e-300 || !width.is_finite() {
                    return Err(Error::SolverFailure {
                        message: "degenerate constraint cut".into(),
                        lower: out.lower,
                        upper: out.upper,
                    });
                }
                let alpha = violation / width;
                if alpha >= 1.0 {
                    if out.upper.is_finite() {
                        // Everything left is infeasible: the best point found is optimal.
                        out.lower = out.upper;
                        out.converged = true;
                        return Ok(out);
                    }
                    return Err(Error::SolverFailure {
                        message: "feasible region excluded from search ellipsoid".into(),
                        lower: out.lower,
                        upper: out.upper,
                    });
                }
                (grad, alpha)
            }
        };
        if let Verdict::Stop = stop(out.upper, out.lower) {
            out.converged = true;
            return Ok(out);
        }
        if d == 1 {
            // Interval bisection: the general update is singular for d = 1.
            let r = factor[(0, 0)].abs();
            let (lo, hi) = if grad[0] > 0.0 {
                (center[0] - r, center[0] - alpha * r)
            } else {
                (center[0] + alpha * r, center[0] + r)
            };
            center[0] = 0.5 * (lo + hi);
            factor[(0, 0)] = 0.5 * (hi - lo);
            continue;
        }
        let a = factor.transpose() * &grad;
        let a = &a / a.norm();
        let b = &factor * &a;
        let step = (1.0 + df * alpha) / (df + 1.0);
        center -= &b * step;
        let scale = df * df * (1.0 - alpha * alpha) / (df * df - 1.0);
        let shrink = 2.0 * (1.0 + df * alpha) / ((df + 1.0) * (1.0 + alpha));
        // P' = scale J (I - shrink a a') J', and (I - beta a a')^2 = I - shrink a a'.
        let beta = 1.0 - (1.0 - shrink).max(0.0).sqrt();
        factor -= (&b * a.transpose()) * beta;
        factor *= scale.sqrt();
    }
    Ok(out)
}

#[cfg(test)]
/// Stops once the bracket is narrower than `rel * |upper| + abs`.
pub(crate) fn gap_rule(rel: f64, abs: f64) -> impl FnMut(f64, f64) -> Verdict {
    move |upper, lower| {
        if upper.is_finite() && upper - lower <= rel * upper.abs() + abs {
            Verdict::Stop
        } else {
            Verdict::Continue
        }
    }
}
