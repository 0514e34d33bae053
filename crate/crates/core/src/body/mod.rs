//! Convex bodies as an evaluable term algebra.
//!
//! A [`ConvexBody`] is an immutable tree whose leaves have closed-form gauge and support
//! functions and whose inner nodes are intersections, convex hulls, linear images and
//! difference bodies. Every body carries radii `r_in <= r_out` of origin-centred
//! Euclidean balls it sits between.

mod eval;
mod file;
mod normalize;

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::linalg::{self, Matrix, Vector};

pub use eval::{gauge_by_bisection, Evaluation};
pub(crate) use eval::{Mode, Program};
pub use file::{parse_body_file, BodySpec};
pub use normalize::{normalize_position, NormalizeConfig, Normalized};

/// Condition-number cap for linear maps accepted by [`ConvexBody::apply_linear`].
pub const MAX_CONDITION: f64 = 1e12;

/// Relative tolerance of combinator evaluations.
pub const COMBINATOR_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum BodyKind {
    Ball { radius: f64 },
    /// The image `A * B` of the unit ball, with `A` symmetric positive definite.
    Ellipsoid { matrix: Matrix, inverse: Matrix },
    CubeLinf { scale: f64 },
    CrossPolytopeL1 { scale: f64 },
    LpBall { p: f64, q: f64, scale: f64 },
    /// `{x : <a_i, x> <= b_i}` with every `b_i > 0`.
    HPolytope { rows: Matrix, offsets: Vector },
    Intersection(ConvexBody, ConvexBody),
    Hull(ConvexBody, ConvexBody),
    LinearImage { map: Matrix, inverse: Matrix, inner: ConvexBody },
    DifferenceBody(ConvexBody),
}

#[derive(Debug)]
struct Node {
    kind: BodyKind,
    dim: usize,
    r_in: f64,
    r_out: f64,
    symmetric: bool,
    depth: usize,
    gauge_aux: usize,
    support_aux: usize,
}

/// A convex body with the origin in its interior. Cheap to clone.
#[derive(Clone)]
pub struct ConvexBody(Arc<Node>);

impl PartialEq for ConvexBody {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.dim == other.0.dim && self.0.kind == other.0.kind)
    }
}

impl fmt::Debug for ConvexBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(n={}, r_in={:.4}, r_out={:.4})", self.kind_name(), self.0.dim, self.0.r_in, self.0.r_out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Inside,
    Outside,
    Boundary,
}

fn check_scalar(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return invalid(format!("{name} must be finite and positive, got {v}"));
    }
    Ok(())
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        return invalid("dimension must be at least 1");
    }
    Ok(())
}

impl ConvexBody {
    fn build(kind: BodyKind, dim: usize, r_in: f64, r_out: f64, symmetric: bool) -> Result<Self> {
        if !(r_in > 0.0 && r_in.is_finite() && r_out.is_finite() && r_in <= r_out * (1.0 + 1e-12)) {
            return invalid(format!("sandwich radii out of range: r_in={r_in}, r_out={r_out}"));
        }
        let (depth, gauge_aux, support_aux) = match &kind {
            BodyKind::Intersection(l, r) => (
                1 + l.depth().max(r.depth()),
                l.0.gauge_aux + r.0.gauge_aux,
                dim + l.0.support_aux + r.0.support_aux,
            ),
            BodyKind::Hull(l, r) => (
                1 + l.depth().max(r.depth()),
                dim + l.0.gauge_aux + r.0.gauge_aux,
                l.0.support_aux + r.0.support_aux,
            ),
            BodyKind::LinearImage { inner, .. } => (1 + inner.depth(), inner.0.gauge_aux, inner.0.support_aux),
            BodyKind::DifferenceBody(inner) => {
                let gauge = if inner.is_symmetric() { inner.0.gauge_aux } else { dim + 2 * inner.0.gauge_aux };
                (1 + inner.depth(), gauge, 2 * inner.0.support_aux)
            }
            _ => (0, 0, 0),
        };
        Ok(ConvexBody(Arc::new(Node {
            kind,
            dim,
            r_in: r_in.min(r_out),
            r_out,
            symmetric,
            depth,
            gauge_aux,
            support_aux,
        })))
    }

    pub fn ball(n: usize, radius: f64) -> Result<Self> {
        check_dim(n)?;
        check_scalar("radius", radius)?;
        Self::build(BodyKind::Ball { radius }, n, radius, radius, true)
    }

    /// The ellipsoid `A * B` for a symmetric positive-definite `A`.
    pub fn ellipsoid(a: Matrix) -> Result<Self> {
        let n = a.nrows();
        check_dim(n)?;
        if a.ncols() != n || !linalg::all_finite(&a) {
            return invalid("ellipsoid matrix must be square and finite");
        }
        if (&a - a.transpose()).amax() > 1e-12 * a.amax().max(1.0) {
            return invalid("ellipsoid matrix must be symmetric");
        }
        let a = linalg::symmetrize(&a);
        let (vals, _) = linalg::sym_eigen(&a);
        let (lo, hi) = (vals[0], vals[n - 1]);
        if !(lo > 0.0) || hi / lo > MAX_CONDITION {
            return invalid("ellipsoid matrix must be positive definite and well conditioned");
        }
        let inverse = linalg::symmetrize(&linalg::inverse(&a)?);
        Self::build(BodyKind::Ellipsoid { matrix: a, inverse }, n, lo, hi, true)
    }

    /// The ellipsoid `G * B` for any invertible `G`, stored through its symmetric factor.
    pub fn ellipsoid_from_map(g: &Matrix) -> Result<Self> {
        let (lo, hi) = linalg::singular_range(g);
        if g.nrows() != g.ncols() || !(lo > 0.0) || hi / lo > MAX_CONDITION {
            return invalid("ellipsoid map must be square, invertible and well conditioned");
        }
        Self::ellipsoid(linalg::sym_sqrt(&(g * g.transpose())))
    }

    pub fn cube(n: usize, scale: f64) -> Result<Self> {
        check_dim(n)?;
        check_scalar("scale", scale)?;
        Self::build(BodyKind::CubeLinf { scale }, n, scale, scale * (n as f64).sqrt(), true)
    }

    pub fn cross_polytope(n: usize, scale: f64) -> Result<Self> {
        check_dim(n)?;
        check_scalar("scale", scale)?;
        Self::build(BodyKind::CrossPolytopeL1 { scale }, n, scale / (n as f64).sqrt(), scale, true)
    }

    /// `{x : ||x||_p <= scale}` for `1 < p < inf`.
    pub fn lp_ball(n: usize, p: f64, scale: f64) -> Result<Self> {
        check_dim(n)?;
        check_scalar("scale", scale)?;
        if !(p.is_finite() && p > 1.0) {
            return invalid(format!("lp-ball exponent must satisfy 1 < p < inf, got {p}"));
        }
        let q = p / (p - 1.0);
        let factor = (n as f64).powf(0.5 - 1.0 / p);
        let (r_in, r_out) = if p >= 2.0 { (scale, scale * factor) } else { (scale * factor, scale) };
        Self::build(BodyKind::LpBall { p, q, scale }, n, r_in, r_out, true)
    }

    /// `{x : rows * x <= offsets}`; offsets must be positive and the polytope bounded.
    pub fn h_polytope(rows: Matrix, offsets: Vector) -> Result<Self> {
        let (m, n) = rows.shape();
        check_dim(n)?;
        if offsets.len() != m || m == 0 {
            return invalid("h-polytope needs one positive offset per row");
        }
        if !linalg::all_finite(&rows) || offsets.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return invalid("h-polytope offsets must be finite and positive (origin in the interior)");
        }
        let mut r_in = f64::INFINITY;
        for i in 0..m {
            let norm = rows.row(i).norm();
            if norm == 0.0 {
                return invalid("h-polytope rows must be nonzero");
            }
            r_in = r_in.min(offsets[i] / norm);
        }
        let mut corner = 0.0;
        for j in 0..n {
            let mut extent: f64 = 0.0;
            for s in [1.0, -1.0] {
                let mut e = Vector::zeros(n);
                e[j] = s;
                let (v, _) = crate::lp::maximize_linear(&rows, &offsets, &e)?;
                extent = extent.max(v);
            }
            corner += extent * extent;
        }
        let symmetric = (0..m).all(|i| {
            (0..m).any(|k| {
                let tol = 1e-12 * (rows.row(i).amax() + offsets[i]);
                (offsets[k] - offsets[i]).abs() <= tol
                    && (0..n).all(|j| (rows[(k, j)] + rows[(i, j)]).abs() <= tol)
            })
        });
        Self::build(BodyKind::HPolytope { rows, offsets }, n, r_in, corner.sqrt(), symmetric)
    }

    pub fn intersection(left: &ConvexBody, right: &ConvexBody) -> Result<Self> {
        if left.dim() != right.dim() {
            return invalid("intersection operands differ in dimension");
        }
        Self::build(
            BodyKind::Intersection(left.clone(), right.clone()),
            left.dim(),
            left.r_in().min(right.r_in()),
            left.r_out().min(right.r_out()),
            left.is_symmetric() && right.is_symmetric(),
        )
    }

    /// Convex hull of the union of two bodies.
    pub fn hull(left: &ConvexBody, right: &ConvexBody) -> Result<Self> {
        if left.dim() != right.dim() {
            return invalid("hull operands differ in dimension");
        }
        Self::build(
            BodyKind::Hull(left.clone(), right.clone()),
            left.dim(),
            left.r_in().max(right.r_in()),
            left.r_out().max(right.r_out()),
            left.is_symmetric() && right.is_symmetric(),
        )
    }

    /// The image `M * K`. Leaves that stay closed under linear maps are folded.
    pub fn apply_linear(&self, m: &Matrix) -> Result<Self> {
        let n = self.dim();
        if m.nrows() != n || m.ncols() != n || !linalg::all_finite(m) {
            return invalid("linear map must be a finite square matrix of the body's dimension");
        }
        let (lo, hi) = linalg::singular_range(m);
        if !(lo > 0.0) || hi / lo > MAX_CONDITION {
            return invalid("linear map is singular or too ill-conditioned");
        }
        let is_scalar = {
            let c = m[(0, 0)];
            (m - Matrix::identity(n, n) * c).amax() == 0.0 && c > 0.0
        };
        match &self.0.kind {
            BodyKind::Ball { radius } if is_scalar => Self::ball(n, radius * m[(0, 0)]),
            BodyKind::Ball { radius } => Self::ellipsoid_from_map(&(m * *radius)),
            BodyKind::Ellipsoid { matrix, .. } => Self::ellipsoid_from_map(&(m * matrix)),
            BodyKind::HPolytope { rows, offsets } => Self::h_polytope(rows * linalg::inverse(m)?, offsets.clone()),
            BodyKind::LinearImage { map, inner, .. } => inner.apply_linear(&(m * map)),
            _ => {
                let inverse = linalg::inverse(m)?;
                Self::build(
                    BodyKind::LinearImage { map: m.clone(), inverse, inner: self.clone() },
                    n,
                    lo * self.r_in(),
                    hi * self.r_out(),
                    self.is_symmetric(),
                )
            }
        }
    }

    /// The Minkowski difference `K - K`, always symmetric.
    pub fn difference_body(&self) -> Result<Self> {
        Self::build(
            BodyKind::DifferenceBody(self.clone()),
            self.dim(),
            2.0 * self.r_in(),
            2.0 * self.r_out(),
            true,
        )
    }

    /// Returns the body itself if symmetric, otherwise its difference body.
    pub fn symmetrized(&self) -> Result<Self> {
        if self.is_symmetric() {
            Ok(self.clone())
        } else {
            self.difference_body()
        }
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }
    pub fn r_in(&self) -> f64 {
        self.0.r_in
    }
    pub fn r_out(&self) -> f64 {
        self.0.r_out
    }
    pub fn is_symmetric(&self) -> bool {
        self.0.symmetric
    }
    pub fn kind(&self) -> &BodyKind {
        &self.0.kind
    }
    /// Height of the term tree (leaves have depth 0).
    pub fn depth(&self) -> usize {
        self.0.depth
    }

    pub fn kind_name(&self) -> &'static str {
        match self.0.kind {
            BodyKind::Ball { .. } => "ball",
            BodyKind::Ellipsoid { .. } => "ellipsoid",
            BodyKind::CubeLinf { .. } => "cube",
            BodyKind::CrossPolytopeL1 { .. } => "cross-polytope",
            BodyKind::LpBall { .. } => "lp-ball",
            BodyKind::HPolytope { .. } => "h-polytope",
            BodyKind::Intersection(..) => "intersection",
            BodyKind::Hull(..) => "hull",
            BodyKind::LinearImage { .. } => "linear-image",
            BodyKind::DifferenceBody(..) => "difference-body",
        }
    }

    /// The Minkowski functional `inf {s >= 0 : x in sK}`.
    pub fn gauge(&self, x: &Vector) -> Result<f64> {
        Ok(self.gauge_eval(x, COMBINATOR_TOL)?.value)
    }

    /// Gauge with a certified lower bound and a subgradient (a point of the polar body).
    pub fn gauge_eval(&self, x: &Vector, rel_tol: f64) -> Result<Evaluation> {
        self.check_arg(x)?;
        eval::evaluate(self, Mode::Gauge, x, rel_tol)
    }

    /// The support function `sup {<u, y> : y in K}`.
    pub fn support(&self, u: &Vector) -> Result<f64> {
        Ok(self.support_eval(u, COMBINATOR_TOL)?.value)
    }

    /// Support value with a certified lower bound and a near-maximizing point of the body.
    pub fn support_eval(&self, u: &Vector, rel_tol: f64) -> Result<Evaluation> {
        self.check_arg(u)?;
        eval::evaluate(self, Mode::Support, u, rel_tol)
    }

    pub fn membership(&self, x: &Vector, tol: f64) -> Result<Membership> {
        if !(tol > 0.0) {
            return invalid("membership tolerance must be positive");
        }
        let g = self.gauge(x)?;
        Ok(if g <= 1.0 - tol {
            Membership::Inside
        } else if g >= 1.0 + tol {
            Membership::Outside
        } else {
            Membership::Boundary
        })
    }

    fn check_arg(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim() {
            return invalid(format!("vector has length {}, body dimension is {}", x.len(), self.dim()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return invalid("vector has non-finite entries");
        }
        Ok(())
    }

    /// A stable 64-bit fingerprint of the term tree, used as a provenance handle in reports.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::new();
        self.hash_into(&mut h);
        h.0
    }

    fn hash_into(&self, h: &mut Fnv) {
        h.str(self.kind_name());
        h.u64(self.dim() as u64);
        match &self.0.kind {
            BodyKind::Ball { radius } => h.f64(*radius),
            BodyKind::Ellipsoid { matrix, .. } => h.matrix(matrix),
            BodyKind::CubeLinf { scale } | BodyKind::CrossPolytopeL1 { scale } => h.f64(*scale),
            BodyKind::LpBall { p, scale, .. } => {
                h.f64(*p);
                h.f64(*scale)
            }
            BodyKind::HPolytope { rows, offsets } => {
                h.matrix(rows);
                offsets.iter().for_each(|v| h.f64(*v))
            }
            BodyKind::Intersection(l, r) | BodyKind::Hull(l, r) => {
                l.hash_into(h);
                r.hash_into(h)
            }
            BodyKind::LinearImage { map, inner, .. } => {
                h.matrix(map);
                inner.hash_into(h)
            }
            BodyKind::DifferenceBody(inner) => inner.hash_into(h),
        }
    }
}

/// FNV-1a, used for stable fingerprints.
pub(crate) struct Fnv(pub u64);

impl Fnv {
    pub fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }
    pub fn bytes(&mut self, b: &[u8]) {
        for byte in b {
            self.0 ^= *byte as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }
    pub fn u64(&mut self, v: u64) {
        self.bytes(&v.to_le_bytes())
    }
    pub fn f64(&mut self, v: f64) {
        self.u64(v.to_bits())
    }
    pub fn str(&mut self, s: &str) {
        self.bytes(s.as_bytes())
    }
    pub fn matrix(&mut self, m: &Matrix) {
        self.u64(m.nrows() as u64);
        self.u64(m.ncols() as u64);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                self.f64(m[(i, j)]);
            }
        }
    }
}

#[cfg(test)]
mod tests;
