//! The sign-vector norm `l~_K(A) = 2^-n * sum_x ||A x||_K` over `x in {-1,1}^n`, its
//! polar-body variant, and a quadrature estimate of the Gaussian `l`-norm for tests.
//!
//! Sign vectors are visited in Gray-code order so consecutive products `A x` differ by one
//! column. The sweep is cut into fixed blocks; each block restarts its product from
//! scratch and block sums are added in block order, so the result does not depend on how
//! many threads evaluate the blocks.

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::body::{ConvexBody, COMBINATOR_TOL};
use crate::error::{invalid, Error, Result};
use crate::linalg::{Matrix, Vector};

/// Largest dimension accepted by the exact sweep.
pub const N_MAX: usize = 16;

const BLOCK: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct EllNormValue {
    pub value: f64,
    pub n: usize,
    /// Number of sign vectors covered (always `2^n`).
    pub terms: u64,
    pub body_id: u64,
    pub matrix_id: u64,
}

fn matrix_id(a: &Matrix) -> u64 {
    let mut h = crate::body::Fnv::new();
    h.matrix(a);
    h.0
}

fn check(body: &ConvexBody, a: &Matrix) -> Result<usize> {
    let n = body.dim();
    if a.nrows() != n || a.ncols() != n {
        return invalid("matrix shape does not match the body's dimension");
    }
    if !body.is_symmetric() {
        return invalid("the sign-vector norm needs a symmetric body");
    }
    if n > N_MAX {
        return Err(Error::BudgetExceeded { what: format!("sign-vector sweep in dimension {n}"), limit: N_MAX as u64 });
    }
    Ok(n)
}

/// Sign vector number `k` of the Gray sweep; coordinate 0 is always `+1`.
fn sign_vector(n: usize, k: usize) -> Vector {
    let gray = k ^ (k >> 1);
    Vector::from_fn(n, |i, _| if i > 0 && (gray >> (i - 1)) & 1 == 1 { -1.0 } else { 1.0 })
}

/// Sums `f(A x)` over half of the sign vectors (`x_0 = +1`), which covers all of them for
/// an even `f`. Returns the sum and, if requested, `sum_x grad f(A x) x^T`.
fn sweep(
    n: usize,
    a: &Matrix,
    with_grad: bool,
    f: &(dyn Fn(&Vector) -> Result<(f64, Vector)> + Sync),
) -> Result<(f64, Matrix)> {
    let half = 1usize << (n - 1);
    let blocks = half.div_ceil(BLOCK);
    let parts: Vec<Result<(f64, Matrix)>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * BLOCK;
            let end = (start + BLOCK).min(half);
            let mut x = sign_vector(n, start);
            let mut y = a * &x;
            let mut sum = 0.0;
            let mut grad = if with_grad { Matrix::zeros(n, n) } else { Matrix::zeros(0, 0) };
            for k in start..end {
                if k > start {
                    let bit = k.trailing_zeros() as usize + 1;
                    let s = x[bit];
                    x[bit] = -s;
                    y.axpy(-2.0 * s, &a.column(bit), 1.0);
                }
                let (v, w) = f(&y)?;
                sum += v;
                if with_grad {
                    grad.ger(1.0, &w, &x, 1.0);
                }
            }
            Ok((sum, grad))
        })
        .collect();
    let mut total = 0.0;
    let mut grad = if with_grad { Matrix::zeros(n, n) } else { Matrix::zeros(0, 0) };
    for part in parts {
        let (s, g) = part?;
        total += s;
        if with_grad {
            grad += g;
        }
    }
    let scale = 1.0 / half as f64;
    Ok((total * scale, grad * scale))
}

fn value(body: &ConvexBody, a: &Matrix, v: f64) -> EllNormValue {
    EllNormValue { value: v, n: body.dim(), terms: 1u64 << body.dim(), body_id: body.fingerprint(), matrix_id: matrix_id(a) }
}

/// `l~_K(A)`: the mean of `||A x||_K` over all sign vectors.
pub fn ell_tilde(body: &ConvexBody, a: &Matrix) -> Result<EllNormValue> {
    let n = check(body, a)?;
    let (v, _) = sweep(n, a, false, &|y| Ok((body.gauge_eval(y, COMBINATOR_TOL)?.value, Vector::zeros(0))))?;
    Ok(value(body, a, v))
}

/// `l~_{K*}(B)`: the mean of `h_K(B x)` over all sign vectors.
pub fn ell_tilde_polar(body: &ConvexBody, b: &Matrix) -> Result<EllNormValue> {
    let n = check(body, b)?;
    let (v, _) = sweep(n, b, false, &|y| Ok((body.support_eval(y, COMBINATOR_TOL)?.value, Vector::zeros(0))))?;
    Ok(value(body, b, v))
}

/// `l~_K(A)` with a subgradient `G = 2^-n sum_x w(Ax) x^T`, where `w` is a gauge subgradient,
/// so `l~_K(A + H) >= l~_K(A) + <G, H>` for every `H`.
pub(crate) fn ell_tilde_subgradient(body: &ConvexBody, a: &Matrix, rel_tol: f64) -> Result<(f64, Matrix)> {
    let n = check(body, a)?;
    sweep(n, a, true, &|y| {
        let e = body.gauge_eval(y, rel_tol)?;
        Ok((e.value, e.subgradient))
    })
}

fn first_primes(k: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(k);
    let mut c = 2u64;
    while out.len() < k {
        if out.iter().all(|p| c % p != 0) {
            out.push(c);
        }
        c += 1;
    }
    out
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0 / base as f64;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f /= base as f64;
    }
    r
}

/// Quadrature estimate of `l_K(A) = (E ||A g||_K^2)^{1/2}` for a standard Gaussian `g`,
/// using the first `nodes` Halton points mapped through the Gaussian quantile function.
/// Intended as a test oracle.
pub fn ell_gauss_estimate(body: &ConvexBody, a: &Matrix, nodes: usize) -> Result<f64> {
    let n = body.dim();
    if a.nrows() != n || a.ncols() != n {
        return invalid("matrix shape does not match the body's dimension");
    }
    if nodes < 256 {
        return invalid("at least 256 quadrature nodes are required");
    }
    if a.amax() == 0.0 {
        return Ok(0.0);
    }
    let primes = first_primes(n);
    let normal = Normal::standard();
    let squares: Vec<Result<f64>> = (1..=nodes as u64)
        .into_par_iter()
        .map(|i| {
            let g = Vector::from_fn(n, |j, _| normal.inverse_cdf(radical_inverse(i, primes[j])));
            let v = body.gauge(&(a * g))?;
            Ok(v * v)
        })
        .collect();
    let mut total = 0.0;
    for s in squares {
        total += s?;
    }
    Ok((total / nodes as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eye(n: usize) -> Matrix {
        Matrix::identity(n, n)
    }

    #[test]
    fn closed_form_values() {
        for n in 1..=6 {
            let s = (n as f64).sqrt();
            let cube = ConvexBody::cube(n, 1.0).unwrap();
            let ball = ConvexBody::ball(n, 1.0).unwrap();
            let cross = ConvexBody::cross_polytope(n, 1.0).unwrap();
            assert!((ell_tilde(&cube, &eye(n)).unwrap().value - 1.0).abs() < 1e-14);
            assert!((ell_tilde(&ball, &eye(n)).unwrap().value - s).abs() < 1e-13);
            assert!((ell_tilde(&cross, &eye(n)).unwrap().value - n as f64).abs() < 1e-13);
            assert!((ell_tilde_polar(&ball, &eye(n)).unwrap().value - s).abs() < 1e-13);
            assert!((ell_tilde_polar(&cube, &eye(n)).unwrap().value - n as f64).abs() < 1e-13);
            assert!((ell_tilde_polar(&ball, &(eye(n) * s)).unwrap().value - n as f64).abs() < 1e-12);
            assert_eq!(ell_tilde(&ball, &eye(n)).unwrap().terms, 1u64 << n);
        }
        let ball = ConvexBody::ball(2, 1.0).unwrap();
        let d = Matrix::from_diagonal(&Vector::from_vec(vec![3.0, 4.0]));
        assert!((ell_tilde(&ball, &d).unwrap().value - 5.0).abs() < 1e-14);
    }

    #[test]
    fn gray_sweep_matches_direct_enumeration() {
        let n = 11;
        let a = Matrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 5) as f64 - 1.7 + if i == j { 4.0 } else { 0.0 });
        let body = ConvexBody::lp_ball(n, 3.0, 1.3).unwrap();
        let fast = ell_tilde(&body, &a).unwrap().value;
        let mut direct = 0.0;
        for mask in 0..(1u32 << n) {
            let x = Vector::from_fn(n, |i, _| if (mask >> i) & 1 == 1 { -1.0 } else { 1.0 });
            direct += body.gauge(&(&a * x)).unwrap();
        }
        direct /= (1u32 << n) as f64;
        assert!((fast - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn subgradient_inequality_holds() {
        let body = ConvexBody::cube(3, 1.0).unwrap();
        let a = Matrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, 0.8, 0.1, 0.0, 0.1, 1.2]);
        let (v, g) = ell_tilde_subgradient(&body, &a, 1e-12).unwrap();
        for k in 0..5 {
            let h = Matrix::from_fn(3, 3, |i, j| (((i + 2 * j + k) % 4) as f64 - 1.5) * 0.3);
            let moved = ell_tilde(&body, &(&a + &h)).unwrap().value;
            assert!(moved >= v + g.dot(&h) - 1e-12);
        }
    }

    #[test]
    fn gaussian_estimate_of_ball() {
        for n in 2..=5 {
            let ball = ConvexBody::ball(n, 1.0).unwrap();
            let est = ell_gauss_estimate(&ball, &eye(n), 4096).unwrap();
            assert!((est / (n as f64).sqrt() - 1.0).abs() < 0.02, "n={n} est={est}");
        }
        let ball = ConvexBody::ball(3, 1.0).unwrap();
        assert_eq!(ell_gauss_estimate(&ball, &Matrix::zeros(3, 3), 4096).unwrap(), 0.0);
    }
}
