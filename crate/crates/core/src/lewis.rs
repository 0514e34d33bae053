//! The determinant-maximization program
//!
//! ```text
//! maximize det(A)^{1/n}   subject to   A symmetric positive semidefinite,  l~_K(A) <= 1
//! ```
//!
//! solved by a deep-cut ellipsoid method over symmetric matrices, and its variational
//! certificate `tr(A^{-1} T) <= 2n` for test matrices with `l~_K(T) = 1`.
//!
//! Every positive-definite query `A` yields the feasible point `A / l~_K(A)`, so the best
//! rescaled objective is an attained value at every step; together with the method's lower
//! bound this gives a certified optimality gap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::body::{ConvexBody, COMBINATOR_TOL};
use crate::ellnorm::{ell_tilde, ell_tilde_subgradient};
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::solver::{self, Cut, Verdict};

/// Default relative optimality target for dimension `n`.
pub fn default_eps(n: usize) -> f64 {
    (1.0 / (36.0 * (n as f64).powi(4))).min(1e-4)
}

/// Largest admissible target for dimension `n`.
pub fn max_eps(n: usize) -> f64 {
    1.0 / (36.0 * (n as f64).powi(4))
}

#[derive(Clone, Debug)]
pub struct LewisConfig {
    /// Relative optimality target on `det(A)^{1/n}`; `None` uses [`default_eps`].
    pub eps: Option<f64>,
    /// Feasibility slack of the final rescale.
    pub feas_tol: f64,
    /// Relative tolerance of gauge evaluations inside the sign-vector sweep.
    pub gauge_tol: f64,
}

impl Default for LewisConfig {
    fn default() -> Self {
        LewisConfig { eps: None, feas_tol: 1e-8, gauge_tol: COMBINATOR_TOL }
    }
}

/// One test matrix of the optimality certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct DualTest {
    pub label: String,
    /// `tr(A^{-1} T)` with `T` normalized to `l~_K(T) = 1`.
    pub trace: f64,
}

#[derive(Clone, Debug)]
pub struct LewisSolution {
    pub a: Matrix,
    /// `det(A)^{1/n}`.
    pub objective: f64,
    /// `l~_K(A)`, within `[1 - feas_tol, 1]`.
    pub ell_value: f64,
    pub eps_target: f64,
    /// Certified relative gap `1 - objective / optimum` upper bound.
    pub gap_bound: f64,
    pub dual_cert: Vec<DualTest>,
    pub iterations: usize,
    /// Best objective after each improving step; nondecreasing.
    pub objective_trace: Vec<f64>,
}

/// Symmetric matrices as vectors with off-diagonal entries weighted by sqrt 2, so the
/// Euclidean norm of the parameters is the Frobenius norm of the matrix.
struct SymParams {
    n: usize,
}

impl SymParams {
    fn dim(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    fn to_matrix(&self, p: &Vector) -> Matrix {
        let mut a = Matrix::zeros(self.n, self.n);
        let mut k = 0;
        for i in 0..self.n {
            for j in i..self.n {
                let v = if i == j { p[k] } else { p[k] / std::f64::consts::SQRT_2 };
                a[(i, j)] = v;
                a[(j, i)] = v;
                k += 1;
            }
        }
        a
    }

    fn from_matrix(&self, a: &Matrix) -> Vector {
        let mut p = Vector::zeros(self.dim());
        let mut k = 0;
        for i in 0..self.n {
            for j in i..self.n {
                p[k] = if i == j { a[(i, j)] } else { 0.5 * (a[(i, j)] + a[(j, i)]) * std::f64::consts::SQRT_2 };
                k += 1;
            }
        }
        p
    }

    /// Gradient in parameter space of the linear functional `H -> <G, H>`.
    fn gradient(&self, g: &Matrix) -> Vector {
        let mut p = Vector::zeros(self.dim());
        let mut k = 0;
        for i in 0..self.n {
            for j in i..self.n {
                p[k] = if i == j { g[(i, i)] } else { (g[(i, j)] + g[(j, i)]) / std::f64::consts::SQRT_2 };
                k += 1;
            }
        }
        p
    }
}

/// Solves the program with the default configuration and target `eps`.
pub fn solve_lewis(body: &ConvexBody, eps: f64) -> Result<LewisSolution> {
    solve_lewis_with(body, &LewisConfig { eps: Some(eps), ..LewisConfig::default() })
}

pub fn solve_lewis_with(body: &ConvexBody, cfg: &LewisConfig) -> Result<LewisSolution> {
    let n = body.dim();
    let eps = cfg.eps.unwrap_or_else(|| default_eps(n));
    if !(eps > 0.0 && eps <= max_eps(n)) {
        return invalid(format!("eps must lie in (0, {:e}] for n = {n}, got {eps}", max_eps(n)));
    }
    if !body.is_symmetric() {
        return invalid("the Lewis program needs a symmetric body");
    }
    let params = SymParams { n };
    let d = params.dim();
    let nf = n as f64;
    let identity = Matrix::identity(n, n);
    // The search runs over P = unit * A, which makes it invariant under scaling the body.
    let unit = ell_tilde(body, &identity)?.value;
    let start = &identity / unit;
    // l~(A) <= 1 forces ||A||_F <= sqrt(2) r_out, so this ball holds the feasible set.
    let radius = 2.0 * body.r_out() * unit + identity.norm();
    let mut best = start.clone();
    // Objective values below are -log det(P) + n log l~(A), which differ from those of A
    // by the constant n log(unit).
    let mut best_value = 0.0;
    let objective_of = |v: f64| (-v / nf).exp() / unit;
    let mut trace = vec![objective_of(best_value)];
    let mut failure: Option<Error> = None;
    let max_iter = 100 * d * (d + 1) + 2000;
    let res = solver::minimize(
        params.from_matrix(&identity),
        Matrix::identity(d, d) * (radius * radius),
        max_iter,
        |p| {
            let pm = params.to_matrix(p);
            let a = &pm / unit;
            let (vals, vecs) = linalg::sym_eigen(&pm);
            let floor = 1e-10 * vals[n - 1].abs().max(f64::MIN_POSITIVE);
            if vals[0] < floor {
                let v = vecs.column(0);
                let g = -(&v * v.transpose());
                return Ok(Cut::Constraint { violation: floor - vals[0], grad: params.gradient(&g), attained: f64::INFINITY });
            }
            let log_det: f64 = vals.iter().map(|v| v.ln()).sum();
            let (ell, g_ell) = match ell_tilde_subgradient(body, &a, cfg.gauge_tol) {
                Ok(r) => r,
                Err(e) => {
                    failure = Some(e.clone());
                    return Err(e);
                }
            };
            let rescaled = -log_det + nf * ell.ln();
            if rescaled < best_value {
                best_value = rescaled;
                best = &a / ell;
                trace.push(objective_of(best_value));
            }
            if ell > 1.0 {
                return Ok(Cut::Constraint { violation: ell - 1.0, grad: params.gradient(&(g_ell / unit)), attained: best_value });
            }
            let inv = &vecs * Matrix::from_diagonal(&vals.map(|v| 1.0 / v)) * vecs.transpose();
            Ok(Cut::Objective { value: -log_det, attained: best_value, grad: params.gradient(&(-inv)) })
        },
        |upper, lower| {
            if upper.is_finite() && 1.0 - (-(upper - lower) / nf).exp() <= eps {
                Verdict::Stop
            } else {
                Verdict::Continue
            }
        },
    );
    let res = match res {
        Ok(r) => r,
        Err(e) => return Err(failure.unwrap_or(e)),
    };
    let gap_bound = 1.0 - (-(best_value - res.lower).max(0.0) / nf).exp();
    if gap_bound > eps {
        return Err(Error::SolverFailure {
            message: format!("Lewis program reached its iteration cap with relative gap {gap_bound:e}"),
            lower: objective_of(best_value),
            upper: objective_of(res.lower),
        });
    }
    let (a, ell_value) = rescale_feasible(body, &best, cfg.feas_tol)?;
    let objective = a.determinant().powf(1.0 / nf);
    let mut sol = LewisSolution {
        a,
        objective,
        ell_value,
        eps_target: eps,
        gap_bound,
        dual_cert: Vec::new(),
        iterations: res.iterations,
        objective_trace: trace,
    };
    sol.dual_cert = certify_lewis(body, &sol, n + 1)?.tests;
    Ok(sol)
}

/// Rescales `a` so `l~_K(a)` lies in `[1 - tol, 1]`.
fn rescale_feasible(body: &ConvexBody, a: &Matrix, tol: f64) -> Result<(Matrix, f64)> {
    let mut a = a.clone();
    for _ in 0..8 {
        let ell = ell_tilde(body, &a)?.value;
        if ell <= 1.0 && ell >= 1.0 - tol {
            return Ok((a, ell));
        }
        a /= ell * (1.0 + 0.25 * tol);
    }
    Err(Error::Internal("could not rescale the Lewis solution onto the constraint".into()))
}

/// Result of [`certify_lewis`].
#[derive(Clone, Debug)]
pub struct LewisCertificate {
    pub tests: Vec<DualTest>,
    /// Largest `tr(A^{-1} T)` over the family (0 for an empty family).
    pub max_trace: f64,
    /// The certificate threshold `2n`.
    pub bound: f64,
    /// The sharper threshold `n (1 + 6 n^2 sqrt(eps))` for the solution's target.
    pub strict_bound: f64,
    pub pass: bool,
}

/// Test matrix number `k` of the deterministic family, before normalization.
fn test_matrix(n: usize, k: usize, net: &[Vector]) -> (String, Matrix) {
    if k == 0 {
        return ("identity".into(), Matrix::identity(n, n));
    }
    let k = k - 1;
    if k < net.len() {
        let v = &net[k];
        let label = if k < n { format!("rank-one:axis-{k}") } else { format!("rank-one:net-{}", k - n) };
        return (label, v * v.transpose());
    }
    let k = k - net.len();
    let mut rng = ChaCha8Rng::seed_from_u64(0x4c65_7769_735f_7465 ^ ((n as u64) << 32) ^ k as u64);
    let raw = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (format!("random-symmetric:{k}"), linalg::symmetrize(&raw))
}

/// Evaluates `tr(A^{-1} T)` on the first `trials` matrices of a fixed family: the identity,
/// rank-one `v v^T` for the coordinate axes and a fixed direction net, then symmetric
/// matrices with entries from a seeded generator. Each `T` is scaled to `l~_K(T) = 1`.
pub fn certify_lewis(body: &ConvexBody, sol: &LewisSolution, trials: usize) -> Result<LewisCertificate> {
    let n = body.dim();
    let nf = n as f64;
    let inv = linalg::inverse(&sol.a)?;
    let net_size = (trials.saturating_sub(1) / 2).max(n);
    let net: Vec<Vector> = {
        let full = linalg::direction_net(n, net_size - n);
        // Keep one of each +-pair of axes, then the random directions.
        let mut out: Vec<Vector> = (0..n).map(|i| full[2 * i].clone()).collect();
        out.extend(full.into_iter().skip(2 * n));
        out
    };
    let mut tests = Vec::with_capacity(trials);
    for k in 0..trials {
        let (label, t) = test_matrix(n, k, &net);
        let ell = ell_tilde(body, &t)?.value;
        let trace = (&inv * (&t / ell)).trace();
        tests.push(DualTest { label, trace });
    }
    let max_trace = tests.iter().map(|t| t.trace).fold(0.0, f64::max);
    let bound = 2.0 * nf;
    Ok(LewisCertificate {
        tests,
        max_trace,
        bound,
        strict_bound: nf * (1.0 + 6.0 * nf * nf * sol.eps_target.sqrt()),
        pass: max_trace <= bound,
    })
}
