//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use mellipsoid::lattice::{LatticeBasis, ENUM_TOL, TIE_TOL};
use mellipsoid::linalg::{self, Matrix, Vector};
use mellipsoid::volume::TilingSpec;
use mellipsoid::{ConvexBody, Ellipsoid};

pub fn v(xs: &[f64]) -> Vector {
    Vector::from_vec(xs.to_vec())
}

pub fn axis(n: usize, i: usize) -> Vector {
    let mut e = Vector::zeros(n);
    e[i] = 1.0;
    e
}

/// Every integer vector in the box `lo..=hi`, in lexicographic order.
pub fn integer_box(lo: &[i64], hi: &[i64]) -> Vec<Vec<i64>> {
    let n = lo.len();
    let mut out = Vec::new();
    let mut z = lo.to_vec();
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return out;
    }
    loop {
        out.push(z.clone());
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if z[k] < hi[k] {
                z[k] += 1;
                for j in k + 1..n {
                    z[j] = lo[j];
                }
                break;
            }
        }
    }
}

/// Coefficient box containing every lattice point of `center + G B`, from
/// `|z_i - (B^{-T} c)_i| <= ||row_i(B^{-T} G)||`.
fn coefficient_bounds(l: &LatticeBasis, center: &Vector, shape: &Matrix) -> (Vec<i64>, Vec<i64>) {
    let dual = linalg::inverse(&l.basis().transpose()).unwrap();
    let mid = &dual * center;
    let spread = &dual * shape;
    let n = l.dim();
    let mut lo = vec![0; n];
    let mut hi = vec![0; n];
    for i in 0..n {
        let r = spread.row(i).norm();
        lo[i] = (mid[i] - r).floor() as i64 - 1;
        hi[i] = (mid[i] + r).ceil() as i64 + 1;
    }
    (lo, hi)
}

/// Lattice points of `center + E` by scanning a coefficient box.
pub fn brute_ellipsoid(l: &LatticeBasis, e: &Ellipsoid, center: &Vector) -> Vec<Vec<i64>> {
    let (lo, hi) = coefficient_bounds(l, center, e.matrix());
    integer_box(&lo, &hi)
        .into_iter()
        .filter(|z| e.gauge(&(l.point(z) - center)) <= 1.0 + ENUM_TOL)
        .collect()
}

/// Radius of a ball containing the body, from its bounding box.
pub fn outer_radius(body: &ConvexBody) -> f64 {
    let n = body.dim();
    let widest = (0..n)
        .map(|i| body.support(&axis(n, i)).unwrap().max(body.support(&-axis(n, i)).unwrap()))
        .fold(0.0, f64::max);
    widest * (n as f64).sqrt()
}

/// Lattice points of `center + K` by scanning the coefficient box of the circumscribed ball.
pub fn brute_body(l: &LatticeBasis, body: &ConvexBody, center: &Vector) -> Vec<Vec<i64>> {
    let n = l.dim();
    let shape = Matrix::identity(n, n) * outer_radius(body);
    let (lo, hi) = coefficient_bounds(l, center, &shape);
    integer_box(&lo, &hi)
        .into_iter()
        .filter(|z| body.gauge(&(l.point(z) - center)).unwrap() <= 1.0 + ENUM_TOL)
        .collect()
}

/// The minimum of `f` over nonempty `candidates` with the lexicographically smallest
/// coefficients among near-ties.
pub fn brute_min(candidates: &[Vec<i64>], f: impl Fn(&[i64]) -> f64) -> (f64, Vec<i64>) {
    let vals: Vec<f64> = candidates.iter().map(|z| f(z)).collect();
    let best = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let z = candidates
        .iter()
        .zip(&vals)
        .filter(|(_, &v)| v <= best * (1.0 + TIE_TOL))
        .map(|(z, _)| z.clone())
        .min()
        .expect("nonempty candidates");
    (f(&z), z)
}

/// Shortest nonzero vector by scanning the coefficient box of a ball of radius `radius`,
/// which must contain a shortest vector.
pub fn brute_svp(l: &LatticeBasis, body: &ConvexBody, radius: f64) -> (f64, Vec<i64>) {
    let n = l.dim();
    let (lo, hi) = coefficient_bounds(l, &Vector::zeros(n), &(Matrix::identity(n, n) * radius));
    let cands: Vec<Vec<i64>> = integer_box(&lo, &hi).into_iter().filter(|z| z.iter().any(|&c| c != 0)).collect();
    brute_min(&cands, |z| body.gauge(&l.point(z)).unwrap())
}

/// Closest vector to `x` by scanning the coefficient box of the ball of radius `radius`
/// around `x`.
pub fn brute_cvp(l: &LatticeBasis, body: &ConvexBody, x: &Vector, radius: f64) -> (f64, Vec<i64>) {
    let n = l.dim();
    let (lo, hi) = coefficient_bounds(l, x, &(Matrix::identity(n, n) * radius));
    let cands = integer_box(&lo, &hi);
    brute_min(&cands, |z| body.gauge(&(l.point(z) - x)).unwrap())
}

/// Outcome of deciding one tile by brute force.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TileVerdict {
    Meets,
    Misses,
    /// The smallest gauge found is within `BOUNDARY_BAND` of 1: the tile touches the
    /// boundary, and the tolerance of the tile test decides it either way.
    Boundary,
    Unsure,
}

pub const BOUNDARY_BAND: f64 = 1e-6;

/// Decides whether the tile `{c + H t : t in [-1,1]^n}` meets `{g < 1 - tau}` by a
/// separating hyperplane at the center, dense sampling, separation from gauge
/// subgradients and a projected subgradient descent, in that order.
pub fn brute_tile(body: &ConvexBody, tiling: &TilingSpec, z: &[i64], tau: f64) -> TileVerdict {
    let n = body.dim();
    let level = 1.0 - tau;
    let c = tiling.tile_center(z);
    let h = tiling.half_edges();
    let point = |t: &Vector| &c + &h * t;
    // The tile misses the open body when some u has <u, y> >= level h_K(u) on the whole
    // tile. The margin below is concave in u.
    let margin = |u: &Vector| -> f64 {
        let hu = body.support(u).unwrap();
        u.dot(&c) - (h.transpose() * u).abs().sum() - level * hu
    };
    // Far tiles are settled by the subgradient at the center.
    let center = body.gauge_eval(&c, 1e-12).unwrap();
    if center.value < level {
        return TileVerdict::Meets;
    }
    if margin(&center.subgradient) >= 0.0 {
        return TileVerdict::Misses;
    }
    let steps = if n <= 2 { 8 } else { 4 };
    let mut best = (f64::INFINITY, Vector::zeros(n));
    let lo = vec![0; n];
    let hi = vec![steps as i64; n];
    for idx in integer_box(&lo, &hi) {
        let t = Vector::from_iterator(n, idx.iter().map(|&k| -1.0 + 2.0 * k as f64 / steps as f64));
        let g = body.gauge(&point(&t)).unwrap();
        if g < level {
            return TileVerdict::Meets;
        }
        if g < best.0 {
            best = (g, t);
        }
    }
    let subgradient = |t: &Vector| body.gauge_eval(&point(t), 1e-12).unwrap().subgradient;
    // At a kink of the boundary no single subgradient separates, so combinations of the
    // subgradients around the point are searched pairwise.
    let separated = |t: &Vector| -> bool {
        let mut cands = vec![subgradient(t)];
        for i in 0..n {
            for s in [-1e-6, 1e-6] {
                let mut p = t.clone();
                p[i] = (p[i] + s).clamp(-1.0, 1.0);
                cands.push(subgradient(&p));
            }
        }
        if cands.iter().any(|u| margin(u) >= 0.0) {
            return true;
        }
        for i in 0..cands.len() {
            for j in i + 1..cands.len() {
                let mix = |w: f64| &cands[i] * (1.0 - w) + &cands[j] * w;
                let (mut a, mut b) = (0.0f64, 1.0f64);
                let g = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..60 {
                    let (x1, x2) = (b - g * (b - a), a + g * (b - a));
                    if margin(&mix(x1)) < margin(&mix(x2)) {
                        a = x1;
                    } else {
                        b = x2;
                    }
                }
                if margin(&mix(0.5 * (a + b))) >= 0.0 {
                    return true;
                }
            }
        }
        false
    };
    if separated(&best.1) {
        return TileVerdict::Misses;
    }
    // Projected subgradient descent on t: a slowly decaying step, then a polishing phase
    // whose step shrinks geometrically from 1e-2 to 1e-8.
    let rounds = 3000;
    let polish = 4000;
    let mut t = best.1.clone();
    let mut best_g = best.0;
    let mut best_t = t.clone();
    for k in 0..rounds + polish {
        if k == rounds {
            t = best_t.clone();
        }
        let ev = body.gauge_eval(&point(&t), 1e-12).unwrap();
        if ev.value < level {
            return TileVerdict::Meets;
        }
        if ev.value < best_g {
            best_g = ev.value;
            best_t = t.clone();
        }
        let gt = h.transpose() * &ev.subgradient;
        let norm = gt.norm();
        if norm == 0.0 {
            break;
        }
        let step = if k < rounds {
            0.5 / (1.0 + k as f64).sqrt()
        } else {
            1e-2 * 1e-6f64.powf((k - rounds) as f64 / polish as f64)
        };
        t = (&t - gt * (step / norm)).map(|x| x.clamp(-1.0, 1.0));
    }
    if separated(&best_t) {
        return TileVerdict::Misses;
    }
    // Last resort for near-tangent tiles: a fine grid.
    let fine = if n <= 2 { 64 } else { 24 };
    for idx in integer_box(&vec![0; n], &vec![fine as i64; n]) {
        let t = Vector::from_iterator(n, idx.iter().map(|&k| -1.0 + 2.0 * k as f64 / fine as f64));
        let g = body.gauge(&point(&t)).unwrap();
        if g < level {
            return TileVerdict::Meets;
        }
        if g < best_g {
            best_g = g;
            best_t = t;
        }
    }
    if separated(&best_t) {
        return TileVerdict::Misses;
    }
    if std::env::var_os("TILE_DEBUG").is_some() {
        eprintln!("unsettled tile {z:?}: best gauge {best_g:.12}");
    }
    if best_g <= 1.0 + BOUNDARY_BAND {
        TileVerdict::Boundary
    } else {
        TileVerdict::Unsure
    }
}

/// Index box of the tiles that can meet the body, from its support in the dual directions
/// of the tiling axes.
pub fn tile_box(body: &ConvexBody, tiling: &TilingSpec) -> (Vec<i64>, Vec<i64>) {
    let n = body.dim();
    let h = tiling.half_edges();
    let dual = linalg::inverse(&h).unwrap();
    let mut lo = vec![0; n];
    let mut hi = vec![0; n];
    for i in 0..n {
        let w = dual.row(i).transpose();
        let top = body.support(&w).unwrap();
        let bottom = -body.support(&-w).unwrap();
        // Coordinate along the half-edge i is 2 (z_i + s_i) for s_i in [0, 1).
        lo[i] = (0.5 * bottom).floor() as i64 - 1;
        hi[i] = (0.5 * top).floor() as i64 + 1;
    }
    (lo, hi)
}

/// Relative closeness for floats.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}
