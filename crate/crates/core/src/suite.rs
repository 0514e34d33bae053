//! Fixed benchmark bodies shared by the calibration example and the acceptance tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::body::ConvexBody;
use crate::covering::{covering_certificate, CoveringBound, DEFAULT_CELL_BUDGET};
use crate::ellipsoid::Ellipsoid;
use crate::error::Result;
use crate::linalg::{self, Matrix, Vector};

/// A symmetric polytope `{x : |<a_j, x>| <= 1}` with `pairs` seeded random normals plus
/// the coordinate axes, so it is bounded.
pub fn random_symmetric_polytope(n: usize, pairs: usize, seed: u64) -> Result<ConvexBody> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 40));
    let m = pairs + n;
    let mut rows = Matrix::zeros(2 * m, n);
    for j in 0..m {
        let a = if j < n {
            let mut e = Vector::zeros(n);
            e[j] = rng.random_range(0.6..1.4);
            e
        } else {
            Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
        };
        rows.row_mut(2 * j).copy_from(&a.transpose());
        rows.row_mut(2 * j + 1).copy_from(&(-a).transpose());
    }
    ConvexBody::h_polytope(rows, Vector::from_element(2 * m, 1.0))
}

/// The ellipsoid `R diag(1, .., n) R^T B` for a seeded rotation `R`.
pub fn skewed_ellipsoid(n: usize, aspect: f64, seed: u64) -> Result<ConvexBody> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 40));
    let raw = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let q = raw.qr().q();
    let d = Vector::from_fn(n, |i, _| if n == 1 { 1.0 } else { 1.0 + (aspect - 1.0) * i as f64 / (n - 1) as f64 });
    let a = &q * Matrix::from_diagonal(&d) * q.transpose();
    ConvexBody::ellipsoid(linalg::symmetrize(&a))
}

/// The calibration suite in dimension `n`: cube, cross-polytope, `l_1.5` and `l_3` balls,
/// three random symmetric polytopes and two skewed ellipsoids with aspect up to `n`.
pub fn calibration_suite(n: usize) -> Result<Vec<(String, ConvexBody)>> {
    let mut out = vec![
        ("cube".to_string(), ConvexBody::cube(n, 1.0)?),
        ("cross-polytope".to_string(), ConvexBody::cross_polytope(n, 1.0)?),
        ("l1.5-ball".to_string(), ConvexBody::lp_ball(n, 1.5, 1.0)?),
        ("l3-ball".to_string(), ConvexBody::lp_ball(n, 3.0, 1.0)?),
    ];
    for s in 0..3u64 {
        out.push((format!("polytope-{s}"), random_symmetric_polytope(n, n + 2, 0x5eed_0000 + s)?));
    }
    out.push(("ellipsoid-mid".to_string(), skewed_ellipsoid(n, 0.5 * (1.0 + n as f64), 0xe11)?));
    out.push(("ellipsoid-max".to_string(), skewed_ellipsoid(n, n as f64, 0xe12)?));
    Ok(out)
}

/// The volume benchmark in dimension `n`: cube, cross-polytope, ball and two skewed
/// ellipsoids, each with its exact volume.
pub fn volume_cases(n: usize) -> Result<Vec<(String, ConvexBody, f64)>> {
    let ball = linalg::unit_ball_volume(n);
    let factorial: f64 = (1..=n).map(|i| i as f64).product();
    let e1 = skewed_ellipsoid(n, 2.0, 0xe21)?;
    let e2 = skewed_ellipsoid(n, n as f64 + 1.0, 0xe22)?;
    let d1: f64 = (0..n).map(|i| if n == 1 { 1.0 } else { 1.0 + i as f64 / (n - 1) as f64 }).product();
    let d2: f64 = (0..n).map(|i| if n == 1 { 1.0 } else { 1.0 + n as f64 * i as f64 / (n - 1) as f64 }).product();
    Ok(vec![
        ("cube".to_string(), ConvexBody::cube(n, 1.0)?, 2f64.powi(n as i32)),
        ("cross-polytope".to_string(), ConvexBody::cross_polytope(n, 1.0)?, 2f64.powi(n as i32) / factorial),
        ("ball".to_string(), ConvexBody::ball(n, 1.0)?, ball),
        ("ellipsoid-a".to_string(), e1, ball * d1),
        ("ellipsoid-b".to_string(), e2, ball * d2),
    ])
}

/// Five fixed maps with condition number at most 10.
pub fn test_maps(n: usize) -> Vec<Matrix> {
    (0..5u64)
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xa77_1ce0 + s + ((n as u64) << 40));
            loop {
                let m = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)) + Matrix::identity(n, n);
                let (lo, hi) = linalg::singular_range(&m);
                if lo > 0.0 && hi / lo <= 10.0 {
                    return m;
                }
            }
        })
        .collect()
}

/// The covering certificate of `(K, E)` at the default resolution; see
/// [`covering_certificate`].
pub fn certificate(body: &ConvexBody, e: &Ellipsoid) -> Result<CoveringBound> {
    covering_certificate(body, e, None, DEFAULT_CELL_BUDGET)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_is_symmetric_and_deterministic() {
        for n in 2..=4 {
            let a = calibration_suite(n).unwrap();
            let b = calibration_suite(n).unwrap();
            assert_eq!(a.len(), 9);
            for ((na, ka), (_, kb)) in a.iter().zip(&b) {
                assert!(ka.is_symmetric(), "{na}");
                assert_eq!(ka.fingerprint(), kb.fingerprint());
            }
            for m in test_maps(n) {
                let (lo, hi) = linalg::singular_range(&m);
                assert!(hi / lo <= 10.0);
            }
        }
    }
}
