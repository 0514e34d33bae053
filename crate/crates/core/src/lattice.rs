//! Lattice points in ellipsoids and convex bodies, and shortest / closest vectors under a
//! body's gauge.
//!
//! Ellipsoids are enumerated exactly by branch and bound on a triangular factor. A convex
//! body is covered by translates of an ellipsoid centred on a parallelepiped tiling, each
//! translate is enumerated, and the union is filtered by membership.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::body::ConvexBody;
use crate::ellipsoid::Ellipsoid;
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::milman::{m_ellipsoid_general, MilmanConfig};
use crate::volume::inscribed_parallelepiped;

/// Relative slack on the unit level used by every membership decision in this module.
pub const ENUM_TOL: f64 = 1e-10;

/// Two gauge values within this relative distance are ties, broken lexicographically.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct LatticeBasis {
    /// Generators as rows.
    basis: Matrix,
    gram: Matrix,
    /// Upper-triangular `R` with `basis^T = Q R`.
    orth: Matrix,
}

impl LatticeBasis {
    pub fn new(basis: Matrix) -> Result<Self> {
        let n = basis.nrows();
        if n == 0 || basis.ncols() != n || !linalg::all_finite(&basis) {
            return invalid("a lattice basis must be a finite square matrix");
        }
        let scale: f64 = basis.row_iter().map(|r| r.norm()).product();
        if !(basis.determinant().abs() > 1e-12 * scale) {
            return invalid("lattice basis rows are linearly dependent");
        }
        let gram = &basis * basis.transpose();
        let orth = basis.transpose().qr().r();
        Ok(LatticeBasis { basis, gram, orth })
    }

    /// `Z^n`.
    pub fn integer(n: usize) -> Self {
        Self::new(Matrix::identity(n, n)).expect("identity basis")
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn orthogonalization(&self) -> &Matrix {
        &self.orth
    }

    /// The lattice point `sum_i z_i b_i`.
    pub fn point(&self, z: &[i64]) -> Vector {
        let c = Vector::from_iterator(z.len(), z.iter().map(|&v| v as f64));
        self.basis.transpose() * c
    }

    /// Coefficients of `x` in the basis (not rounded).
    pub fn coordinates(&self, x: &Vector) -> Result<Vector> {
        Ok(linalg::inverse(&self.basis.transpose())? * x)
    }
}

/// Parses `n` rows of `n` numbers; blank lines and lines starting with `#` are skipped.
pub fn parse_lattice_file(text: &str) -> Result<LatticeBasis> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", k + 1))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::Parse("lattice file has no rows".into()));
    }
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!("lattice file must hold {n} rows of {n} numbers")));
    }
    LatticeBasis::new(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticePoint {
    pub coefficients: Vec<i64>,
    pub point: Vector,
}

#[derive(Clone, Debug)]
pub struct EnumConfig {
    pub max_points: u64,
    /// Cap on ellipsoid translates in a body enumeration.
    pub max_translates: u64,
}

impl Default for EnumConfig {
    fn default() -> Self {
        EnumConfig { max_points: 10_000_000, max_translates: 1_000_000 }
    }
}

/// All `v` in the lattice with `|A^{-1}(v - center)| <= 1`, ordered lexicographically by
/// coefficients.
pub fn enum_ellipsoid(l: &LatticeBasis, e: &Ellipsoid, center: &Vector, cfg: &EnumConfig) -> Result<Vec<LatticePoint>> {
    let mut out = Vec::new();
    enum_ellipsoid_into(l, e, center, cfg.max_points, &mut |z| {
        out.push(z.to_vec());
    })?;
    out.sort();
    Ok(out.into_iter().map(|z| LatticePoint { point: l.point(&z), coefficients: z }).collect())
}

fn enum_ellipsoid_into(
    l: &LatticeBasis,
    e: &Ellipsoid,
    center: &Vector,
    budget: u64,
    sink: &mut dyn FnMut(&[i64]),
) -> Result<u64> {
    let n = l.dim();
    if e.dim() != n || center.len() != n {
        return invalid("ellipsoid, center and lattice dimensions differ");
    }
    if e.center().amax() != 0.0 {
        return invalid("pass the translation as `center`, not inside the ellipsoid");
    }
    // |A^{-1}(B^T z - c)| = |R z - Q^T w| with A^{-1} B^T = Q R and w = A^{-1} c.
    let g = e.inverse() * l.basis.transpose();
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let target = q.transpose() * (e.inverse() * center);
    let mut z = vec![0i64; n];
    let mut found = 0u64;
    // Residual budget after fixing coordinates k+1..n-1.
    fn rec(
        k: usize,
        r: &Matrix,
        target: &Vector,
        remaining: f64,
        z: &mut Vec<i64>,
        found: &mut u64,
        budget: u64,
        sink: &mut dyn FnMut(&[i64]),
    ) -> Result<()> {
        let n = z.len();
        let mut shift = target[k];
        for j in k + 1..n {
            shift -= r[(k, j)] * z[j] as f64;
        }
        let rkk = r[(k, k)];
        let width = remaining.max(0.0).sqrt() / rkk.abs();
        let mid = shift / rkk;
        let lo = (mid - width - 1e-9).ceil() as i64;
        let hi = (mid + width + 1e-9).floor() as i64;
        for v in lo..=hi {
            let dev = rkk * v as f64 - shift;
            let rest = remaining - dev * dev;
            if rest < 0.0 {
                continue;
            }
            z[k] = v;
            if k == 0 {
                *found += 1;
                if *found > budget {
                    return Err(Error::BudgetExceeded { what: "lattice points".into(), limit: budget });
                }
                sink(z);
            } else {
                rec(k - 1, r, target, rest, z, found, budget, sink)?;
            }
        }
        z[k] = 0;
        Ok(())
    }
    rec(n - 1, &r, &target, 1.0 + ENUM_TOL, &mut z, &mut found, budget, sink)?;
    Ok(found)
}

/// All lattice points of `center + K`, covering it by translates of `E` (which should be an
/// M-ellipsoid of `K`). Points are ordered lexicographically by coefficients.
pub fn enum_body(
    l: &LatticeBasis,
    body: &ConvexBody,
    center: &Vector,
    e: &Ellipsoid,
    cfg: &EnumConfig,
) -> Result<Vec<LatticePoint>> {
    let n = l.dim();
    if body.dim() != n || e.dim() != n || center.len() != n {
        return invalid("body, ellipsoid and lattice dimensions differ");
    }
    let tiling = inscribed_parallelepiped(e)?;
    let half = tiling.half_edges();
    let to_tile = linalg::inverse(&half)?;
    // Tiles are offsets from `center`, so their index range covers the bounding box of K.
    let mut lo = vec![i64::MAX; n];
    let mut hi = vec![i64::MIN; n];
    for mask in 0..1usize << n {
        let mut corner = Vector::zeros(n);
        for i in 0..n {
            let mut u = Vector::zeros(n);
            u[i] = if (mask >> i) & 1 == 1 { -1.0 } else { 1.0 };
            corner[i] += u[i] * body.support(&u)?;
        }
        let t = &to_tile * corner;
        for i in 0..n {
            lo[i] = lo[i].min((0.5 * t[i]).floor() as i64 - 1);
            hi[i] = hi[i].max((0.5 * t[i]).floor() as i64 + 1);
        }
    }
    let widths: Vec<u64> = (0..n).map(|i| (hi[i] - lo[i] + 1) as u64).collect();
    let total = widths.iter().try_fold(1u64, |a, &w| a.checked_mul(w)).unwrap_or(u64::MAX);
    if total > cfg.max_translates {
        return Err(Error::BudgetExceeded { what: "ellipsoid translates".into(), limit: cfg.max_translates });
    }
    let mut slack: f64 = 0.0;
    for mask in 0..1usize << n {
        let s = Vector::from_fn(n, |i, _| if (mask >> i) & 1 == 1 { -1.0 } else { 1.0 });
        slack = slack.max(body.gauge(&(&half * s))?);
    }
    let level = 1.0 + ENUM_TOL;
    let parts: Vec<Result<Vec<Vec<i64>>>> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut rest = idx;
            let z: Vec<i64> = (0..n)
                .map(|i| {
                    let k = lo[i] + (rest % widths[i]) as i64;
                    rest /= widths[i];
                    k
                })
                .collect();
            let c = tiling.tile_center(&z);
            // Skip tiles certified to miss center + K.
            if body.gauge(&c)? - slack > level {
                return Ok(Vec::new());
            }
            let mut pts = Vec::new();
            enum_ellipsoid_into(l, e, &(center + c), cfg.max_points, &mut |w| pts.push(w.to_vec()))?;
            let mut keep = Vec::new();
            for w in pts {
                if body.gauge(&(l.point(&w) - center))? <= level {
                    keep.push(w);
                }
            }
            Ok(keep)
        })
        .collect();
    let mut set = BTreeSet::new();
    for p in parts {
        set.extend(p?);
        if set.len() as u64 > cfg.max_points {
            return Err(Error::BudgetExceeded { what: "lattice points".into(), limit: cfg.max_points });
        }
    }
    Ok(set.into_iter().map(|z| LatticePoint { point: l.point(&z), coefficients: z }).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSolution {
    pub coefficients: Vec<i64>,
    pub vector: Vector,
    /// Gauge of the vector (SVP) or of its offset from the target (CVP).
    pub value: f64,
    /// Scalings at which the search enumerated.
    pub scales: Vec<f64>,
}

/// Keeps the smallest value, breaking near-ties by the lexicographically smallest
/// coefficients.
fn better(value: f64, z: &[i64], best: &Option<(f64, Vec<i64>)>) -> bool {
    match best {
        None => true,
        Some((bv, bz)) => {
            if value < bv * (1.0 - TIE_TOL) {
                true
            } else if value <= bv * (1.0 + TIE_TOL) {
                z < bz.as_slice()
            } else {
                false
            }
        }
    }
}

/// An M-ellipsoid of a symmetric body for the covering enumeration.
pub fn covering_ellipsoid(body: &ConvexBody) -> Result<Ellipsoid> {
    Ok(m_ellipsoid_general(body, &MilmanConfig::default())?.0)
}

fn shortest_euclidean(l: &LatticeBasis, cfg: &EnumConfig) -> Result<f64> {
    let n = l.dim();
    let mut r = l.orth.diagonal().iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
    // Any basis vector bounds the search from above; start below it and double.
    let cap = l.basis.row_iter().map(|row| row.norm()).fold(f64::INFINITY, f64::min);
    r = r.min(cap);
    loop {
        let e = Ellipsoid::unit_ball(n).scaled(r)?;
        let pts = enum_ellipsoid(l, &e, &Vector::zeros(n), cfg)?;
        let best = pts.iter().filter(|p| p.coefficients.iter().any(|&c| c != 0)).map(|p| p.point.norm()).fold(f64::INFINITY, f64::min);
        if best.is_finite() {
            return Ok(best);
        }
        r *= 2.0;
    }
}

/// Shortest nonzero lattice vector under the gauge of a symmetric body.
pub fn svp(l: &LatticeBasis, body: &ConvexBody, cfg: &EnumConfig) -> Result<LatticeSolution> {
    let e = covering_ellipsoid(body)?;
    svp_with(l, body, &e, cfg)
}

/// [`svp`] with a given covering ellipsoid `E` of the body.
pub fn svp_with(l: &LatticeBasis, body: &ConvexBody, e: &Ellipsoid, cfg: &EnumConfig) -> Result<LatticeSolution> {
    let n = l.dim();
    if body.dim() != n {
        return invalid("body and lattice dimensions differ");
    }
    if !body.is_symmetric() {
        return invalid("svp needs a symmetric body");
    }
    let zero = Vector::zeros(n);
    let nonzero = |pts: &[LatticePoint]| pts.iter().any(|p| p.coefficients.iter().any(|&c| c != 0));
    let mu = shortest_euclidean(l, cfg)?;
    // No nonzero point has gauge below mu / r_out.
    let mut lo = mu / body.r_out();
    let mut scales = Vec::new();
    let mut s = lo;
    loop {
        scales.push(s);
        let pts = enum_body(l, &scaled(body, s)?, &zero, &e.scaled(s)?, cfg)?;
        if nonzero(&pts) {
            break;
        }
        lo = s;
        s *= 2.0;
    }
    let mut hi = s;
    while hi - lo > 0.01 * hi {
        let mid = 0.5 * (lo + hi);
        scales.push(mid);
        let pts = enum_body(l, &scaled(body, mid)?, &zero, &e.scaled(mid)?, cfg)?;
        if nonzero(&pts) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let pts = enum_body(l, &scaled(body, hi)?, &zero, &e.scaled(hi)?, cfg)?;
    let mut best: Option<(f64, Vec<i64>)> = None;
    for p in pts.iter().filter(|p| p.coefficients.iter().any(|&c| c != 0)) {
        let g = body.gauge(&p.point)?;
        if better(g, &p.coefficients, &best) {
            best = Some((g, p.coefficients.clone()));
        }
    }
    let (value, coefficients) = best.ok_or_else(|| Error::Internal("shortest-vector search lost its witness".into()))?;
    Ok(LatticeSolution { vector: l.point(&coefficients), coefficients, value, scales })
}

fn scaled(body: &ConvexBody, s: f64) -> Result<ConvexBody> {
    let n = body.dim();
    body.apply_linear(&(Matrix::identity(n, n) * s))
}

/// Closest lattice vector to `x` under the gauge of a symmetric body, provided the
/// distance is at most `gamma_cap` times the shortest-vector length.
pub fn cvp(l: &LatticeBasis, body: &ConvexBody, x: &Vector, gamma_cap: f64, cfg: &EnumConfig) -> Result<LatticeSolution> {
    let e = covering_ellipsoid(body)?;
    cvp_with(l, body, x, gamma_cap, &e, cfg)
}

pub fn cvp_with(
    l: &LatticeBasis,
    body: &ConvexBody,
    x: &Vector,
    gamma_cap: f64,
    e: &Ellipsoid,
    cfg: &EnumConfig,
) -> Result<LatticeSolution> {
    let n = l.dim();
    if body.dim() != n || x.len() != n {
        return invalid("body, target and lattice dimensions differ");
    }
    if !(gamma_cap > 0.0) {
        return invalid("gamma cap must be positive");
    }
    let lambda = svp_with(l, body, e, cfg)?.value;
    let mut scales = Vec::new();
    let mut j = -4i32;
    loop {
        let d = lambda * 2f64.powi(j);
        let gamma = d / lambda;
        if gamma > gamma_cap {
            return Err(Error::GammaCapExceeded { required: gamma, cap: gamma_cap });
        }
        scales.push(d);
        let pts = enum_body(l, &scaled(body, d)?, x, &e.scaled(d)?, cfg)?;
        if !pts.is_empty() {
            let mut best: Option<(f64, Vec<i64>)> = None;
            for p in &pts {
                let g = body.gauge(&(&p.point - x))?;
                if better(g, &p.coefficients, &best) {
                    best = Some((g, p.coefficients.clone()));
                }
            }
            let (value, coefficients) = best.expect("non-empty enumeration");
            return Ok(LatticeSolution { vector: l.point(&coefficients), coefficients, value, scales });
        }
        j += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_vec(xs.to_vec())
    }

    /// Every coefficient vector in `[-r, r]^n`.
    fn coefficient_box(n: usize, r: i64) -> Vec<Vec<i64>> {
        let side = (2 * r + 1) as usize;
        (0..side.pow(n as u32))
            .map(|mut idx| {
                (0..n)
                    .map(|_| {
                        let c = (idx % side) as i64 - r;
                        idx /= side;
                        c
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn disc_points_of_the_integer_lattice() {
        let z2 = LatticeBasis::integer(2);
        let origin = Vector::zeros(2);
        let pts = enum_ellipsoid(&z2, &Ellipsoid::unit_ball(2).scaled(2.0).unwrap(), &origin, &EnumConfig::default()).unwrap();
        let brute: Vec<Vec<i64>> = coefficient_box(2, 2).into_iter().filter(|z| z[0] * z[0] + z[1] * z[1] <= 4).collect();
        assert_eq!(pts.len(), 13);
        let mut sorted = brute.clone();
        sorted.sort();
        assert_eq!(pts.iter().map(|p| p.coefficients.clone()).collect::<Vec<_>>(), sorted);

        let pts = enum_ellipsoid(&z2, &Ellipsoid::unit_ball(2).scaled(0.5).unwrap(), &origin, &EnumConfig::default()).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].coefficients, vec![0, 0]);

        let two = LatticeBasis::new(Matrix::identity(2, 2) * 2.0).unwrap();
        let pts = enum_ellipsoid(&two, &Ellipsoid::unit_ball(2), &v(&[1.0, 1.0]), &EnumConfig::default()).unwrap();
        assert!(pts.is_empty());
    }

    #[test]
    fn point_budget_is_enforced() {
        let z2 = LatticeBasis::integer(2);
        let cfg = EnumConfig { max_points: 5, ..EnumConfig::default() };
        let e = Ellipsoid::unit_ball(2).scaled(2.0).unwrap();
        assert!(matches!(enum_ellipsoid(&z2, &e, &Vector::zeros(2), &cfg), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn body_enumeration_examples() {
        let cube = ConvexBody::cube(2, 1.5).unwrap();
        let e = covering_ellipsoid(&cube).unwrap();
        let pts = enum_body(&LatticeBasis::integer(2), &cube, &Vector::zeros(2), &e, &EnumConfig::default()).unwrap();
        assert_eq!(pts.len(), 9);
        assert!(pts.iter().all(|p| p.coefficients.iter().all(|c| c.abs() <= 1)));

        let ball = ConvexBody::ball(3, 1.0).unwrap();
        let e = covering_ellipsoid(&ball).unwrap();
        let pts = enum_body(&LatticeBasis::integer(3), &ball, &Vector::zeros(3), &e, &EnumConfig::default()).unwrap();
        assert_eq!(pts.len(), 7);
    }

    #[test]
    fn translated_body_matches_brute_force() {
        let basis = LatticeBasis::new(Matrix::from_row_slice(2, 2, &[1.0, 0.2, -0.3, 0.9])).unwrap();
        let body = ConvexBody::cross_polytope(2, 1.7).unwrap();
        let e = covering_ellipsoid(&body).unwrap();
        let center = v(&[0.31, -0.45]);
        let pts = enum_body(&basis, &body, &center, &e, &EnumConfig::default()).unwrap();
        let brute: Vec<Vec<i64>> = coefficient_box(2, 5)
            .into_iter()
            .filter(|z| body.gauge(&(basis.point(z) - &center)).unwrap() <= 1.0 + ENUM_TOL)
            .collect();
        let mut sorted = brute;
        sorted.sort();
        assert_eq!(pts.iter().map(|p| p.coefficients.clone()).collect::<Vec<_>>(), sorted);
    }

    #[test]
    fn far_translate_keeps_every_point() {
        let basis = LatticeBasis::new(Matrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.7])).unwrap();
        let ball = ConvexBody::ball(2, 1.0).unwrap();
        let e = covering_ellipsoid(&ball).unwrap();
        let center = v(&[0.0, -2.66]);
        let pts = enum_body(&basis, &ball, &center, &e, &EnumConfig::default()).unwrap();
        let mut brute: Vec<Vec<i64>> = coefficient_box(2, 8)
            .into_iter()
            .filter(|z| (basis.point(z) - &center).norm() <= 1.0 + ENUM_TOL)
            .collect();
        brute.sort();
        assert_eq!(pts.iter().map(|p| p.coefficients.clone()).collect::<Vec<_>>(), brute);
    }

    #[test]
    fn shortest_vectors() {
        for n in 2..=3 {
            let s = svp(&LatticeBasis::integer(n), &ConvexBody::ball(n, 1.0).unwrap(), &EnumConfig::default()).unwrap();
            assert!((s.value - 1.0).abs() < 1e-12);
            let mut expect = vec![0i64; n];
            expect[0] = -1;
            assert_eq!(s.coefficients, expect);
        }
        let s = svp(&LatticeBasis::integer(2), &ConvexBody::cube(2, 1.0).unwrap(), &EnumConfig::default()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        let hex = LatticeBasis::new(Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 3f64.sqrt() / 2.0])).unwrap();
        let s = svp(&hex, &ConvexBody::ball(2, 1.0).unwrap(), &EnumConfig::default()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closest_vectors() {
        let z2 = LatticeBasis::integer(2);
        let c = cvp(&z2, &ConvexBody::cube(2, 1.0).unwrap(), &v(&[0.4, 0.4]), 4.0, &EnumConfig::default()).unwrap();
        assert_eq!(c.coefficients, vec![0, 0]);
        assert!((c.value - 0.4).abs() < 1e-12);
        let c = cvp(&z2, &ConvexBody::ball(2, 1.0).unwrap(), &v(&[0.5, 0.0]), 4.0, &EnumConfig::default()).unwrap();
        assert_eq!(c.coefficients, vec![0, 0]);
        assert!((c.value - 0.5).abs() < 1e-12);
        let c = cvp(
            &LatticeBasis::integer(3),
            &ConvexBody::ball(3, 1.0).unwrap(),
            &v(&[0.2, 0.7, -0.4]),
            4.0,
            &EnumConfig::default(),
        )
        .unwrap();
        assert_eq!(c.coefficients, vec![0, 1, 0]);
    }

    #[test]
    fn gamma_cap_is_enforced() {
        let z2 = LatticeBasis::integer(2);
        let r = cvp(&z2, &ConvexBody::ball(2, 1.0).unwrap(), &v(&[0.5, 0.5]), 0.1, &EnumConfig::default());
        assert!(matches!(r, Err(Error::GammaCapExceeded { .. })));
    }

    #[test]
    fn lattice_files() {
        let l = parse_lattice_file("# hexagonal\n1 0\n0.5, 0.8660254037844386\n\n").unwrap();
        assert_eq!(l.dim(), 2);
        assert!((l.gram()[(1, 1)] - 1.0).abs() < 1e-12);
        assert!(parse_lattice_file("1 0\n0 1 2\n").is_err());
        assert!(parse_lattice_file("1 2\n2 4\n").is_err());
        assert!(parse_lattice_file("1 x\n0 1\n").is_err());
        let z = l.coordinates(&l.point(&[3, -2])).unwrap();
        assert!((z[0] - 3.0).abs() < 1e-12 && (z[1] + 2.0).abs() < 1e-12);
    }
}
