//! Dense primal simplex for `max <u, y>` over `{y : A y <= b}` with `b > 0`.
//!
//! The origin is strictly feasible, so the slack basis is a valid start and no phase one
//! is needed. Free variables are split as `y = p - q`. Pivots follow the largest reduced
//! cost for a while and then switch to Bland's rule, which prevents cycling.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

/// Returns the optimal value and a maximizing vertex.
pub(crate) fn maximize_linear(a: &Matrix, b: &Vector, u: &Vector) -> Result<(f64, Vector)> {
    let (v, y, _) = maximize_linear_dual(a, b, u)?;
    Ok((v, y))
}

/// Like [`maximize_linear`], also returning optimal multipliers `lambda >= 0` with
/// `A^T lambda = u` and `b^T lambda` equal to the optimal value.
pub(crate) fn maximize_linear_dual(a: &Matrix, b: &Vector, u: &Vector) -> Result<(f64, Vector, Vector)> {
    let (m, n) = a.shape();
    let cols = 2 * n + m;
    let width = cols + 1;
    let mut t = vec![0.0; (m + 1) * width];
    for i in 0..m {
        for j in 0..n {
            t[i * width + j] = a[(i, j)];
            t[i * width + n + j] = -a[(i, j)];
        }
        t[i * width + 2 * n + i] = 1.0;
        t[i * width + cols] = b[i];
    }
    // Reduced costs live in the last row.
    let obj = m * width;
    for j in 0..n {
        t[obj + j] = u[j];
        t[obj + n + j] = -u[j];
    }
    let mut basis: Vec<usize> = (0..m).map(|i| 2 * n + i).collect();
    let scale = u.amax().max(1e-300);
    let tol = 1e-12;
    let max_pivots = 50 * (m + cols);
    let dantzig_pivots = 2 * (m + cols);
    for pivot in 0..max_pivots {
        // Largest reduced cost first, then Bland's rule, which cannot cycle.
        let entering = if pivot < dantzig_pivots {
            (0..cols).filter(|&j| t[obj + j] > tol * scale).max_by(|&i, &j| t[obj + i].total_cmp(&t[obj + j]))
        } else {
            (0..cols).find(|&j| t[obj + j] > tol * scale)
        };
        let Some(e) = entering else {
            let mut y = Vector::zeros(n);
            for (i, &var) in basis.iter().enumerate() {
                let val = t[i * width + cols];
                if var < n {
                    y[var] += val;
                } else if var < 2 * n {
                    y[var - n] -= val;
                }
            }
            // The reduced cost of slack i is minus its multiplier.
            let lambda = Vector::from_fn(m, |i, _| (-t[obj + 2 * n + i]).max(0.0));
            return Ok((u.dot(&y), y, lambda));
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let coef = t[i * width + e];
            if coef > tol {
                let ratio = t[i * width + cols] / coef;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-15 * lr.abs().max(1.0)
                            || (ratio <= lr + 1e-15 * lr.abs().max(1.0) && basis[i] < basis[li])
                        {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
        }
        let Some((r, _)) = leave else {
            return Err(Error::InvalidInput("polytope is unbounded in the requested direction".into()));
        };
        let piv = t[r * width + e];
        for k in 0..width {
            t[r * width + k] /= piv;
        }
        for i in 0..=m {
            if i == r {
                continue;
            }
            let f = t[i * width + e];
            if f != 0.0 {
                for k in 0..width {
                    t[i * width + k] -= f * t[r * width + k];
                }
            }
        }
        basis[r] = e;
    }
    Err(Error::SolverFailure { message: "simplex pivot limit reached".into(), lower: f64::NAN, upper: f64::NAN })
}
