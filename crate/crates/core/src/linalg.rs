//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted ascending.
/// Eigenvector signs are fixed so the largest-magnitude entry of each is positive.
pub fn sym_eigen(a: &Matrix) -> (Vector, Matrix) {
    let n = a.nrows();
    let sym = symmetrize(a);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let values = Vector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = Matrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(i).clone_owned();
        let mut pivot = 0;
        for r in 1..n {
            if col[r].abs() > col[pivot].abs() + 1e-12 {
                pivot = r;
            }
        }
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(k, &col);
    }
    (values, vectors)
}

pub fn symmetrize(a: &Matrix) -> Matrix {
    (a + a.transpose()) * 0.5
}

/// Principal square root of a symmetric positive semidefinite matrix.
pub fn sym_sqrt(a: &Matrix) -> Matrix {
    let (vals, vecs) = sym_eigen(a);
    let d = Matrix::from_diagonal(&vals.map(|v| v.max(0.0).sqrt()));
    symmetrize(&(&vecs * d * vecs.transpose()))
}

pub fn inverse(a: &Matrix) -> Result<Matrix> {
    if a.nrows() != a.ncols() {
        return invalid("matrix must be square");
    }
    match a.clone().try_inverse() {
        Some(inv) if inv.iter().all(|v| v.is_finite()) => Ok(inv),
        _ => invalid("matrix is singular"),
    }
}

/// Smallest and largest singular values.
pub fn singular_range(a: &Matrix) -> (f64, f64) {
    let sv = a.clone().singular_values();
    let lo = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = sv.iter().cloned().fold(0.0, f64::max);
    (lo, hi)
}

/// log det of a symmetric positive-definite matrix, `None` if not positive definite.
pub fn log_det_spd(a: &Matrix) -> Option<f64> {
    let chol = nalgebra::Cholesky::new(symmetrize(a))?;
    let l = chol.l();
    Some((0..a.nrows()).map(|i| 2.0 * l[(i, i)].ln()).sum())
}

/// Volume of the Euclidean unit ball in dimension `n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let mut v = [1.0, 2.0];
    if n < 2 {
        return v[n];
    }
    let mut k = 2;
    while k <= n {
        let next = v[(k - 2) % 2] * 2.0 * std::f64::consts::PI / k as f64;
        v[k % 2] = next;
        k += 1;
    }
    v[n % 2]
}

/// A fixed direction net: the 2n signed axes followed by `extra` pseudo-random unit
/// vectors from a fixed seed. Identical on every call.
pub fn direction_net(n: usize, extra: usize) -> Vec<Vector> {
    let mut out = Vec::with_capacity(2 * n + extra);
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = Vector::zeros(n);
            e[i] = s;
            out.push(e);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d65_6c6c_6970_7365 ^ n as u64);
    while out.len() < 2 * n + extra {
        let v = Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let norm = v.norm();
        if norm > 1e-3 && norm <= 1.0 {
            out.push(v / norm);
        }
    }
    out
}

/// Identity-scaled check that every entry is finite.
pub fn all_finite(a: &Matrix) -> bool {
    a.iter().all(|v| v.is_finite())
}
