//! Gauge and support evaluation.
//!
//! Both functions of a term tree are written as the minimum over auxiliary split variables
//! of one jointly convex function of the argument and the splits. A hull node contributes
//! the split of the gauge inf-convolution `g_L(y) + g_R(x - y)`, an intersection node the
//! split of the support inf-convolution `h_L(v) + h_R(u - v)`, and an asymmetric difference
//! body the point `y` in `max(g_K(y), g_K(y - x))`. Everything else is closed form, so a
//! single cutting-plane solve over all splits evaluates any tree with exact leaf
//! subgradients and a certified lower bound.

use super::{BodyKind, ConvexBody};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::solver::{self, Cut, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    Gauge,
    Support,
}

/// A function value with a certified lower bound and a subgradient at the argument.
///
/// For gauges the subgradient is a point of the polar body; for supports it is a point of
/// the body attaining the support value up to the bracket width.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub value: f64,
    pub lower: f64,
    pub subgradient: Vector,
}

/// A compiled view of a body in one evaluation mode.
pub(crate) struct Program<'a> {
    body: &'a ConvexBody,
    mode: Mode,
}

impl<'a> Program<'a> {
    pub fn new(body: &'a ConvexBody, mode: Mode) -> Self {
        Program { body, mode }
    }

    pub fn aux_dim(&self) -> usize {
        aux_count(self.body, self.mode)
    }

    /// Evaluates the joint function and writes its subgradient with respect to the argument
    /// into `gx` and with respect to the splits into `gaux`.
    pub fn eval(&self, x: &[f64], aux: &[f64], gx: &mut [f64], gaux: &mut [f64]) -> Result<f64> {
        eval_node(self.body, self.mode, x, aux, gx, gaux)
    }

    /// Diagonal of a search ellipsoid that contains an optimal split whenever the optimal
    /// value is at most `bound`.
    pub fn aux_shape(&self, bound: f64) -> Vector {
        let mut blocks = Vec::new();
        aux_radii(self.body, self.mode, bound, &mut blocks);
        let k = blocks.len().max(1) as f64;
        let mut diag = Vec::with_capacity(self.aux_dim());
        for (len, r) in blocks {
            let r = r * 1.01 + 1e-300;
            diag.extend(std::iter::repeat(k * r * r).take(len));
        }
        Vector::from_vec(diag)
    }
}

fn aux_count(body: &ConvexBody, mode: Mode) -> usize {
    match mode {
        Mode::Gauge => body.0.gauge_aux,
        Mode::Support => body.0.support_aux,
    }
}

fn aux_radii(body: &ConvexBody, mode: Mode, bound: f64, out: &mut Vec<(usize, f64)>) {
    let n = body.dim();
    match (&body.0.kind, mode) {
        (BodyKind::Hull(l, r), Mode::Gauge) => {
            out.push((n, l.r_out() * bound));
            aux_radii(l, mode, bound, out);
            aux_radii(r, mode, bound, out);
        }
        (BodyKind::Intersection(l, r), Mode::Support) => {
            out.push((n, bound / l.r_in()));
            aux_radii(l, mode, bound, out);
            aux_radii(r, mode, bound, out);
        }
        (BodyKind::Hull(l, r), Mode::Support) | (BodyKind::Intersection(l, r), Mode::Gauge) => {
            aux_radii(l, mode, bound, out);
            aux_radii(r, mode, bound, out);
        }
        (BodyKind::LinearImage { inner, .. }, _) => aux_radii(inner, mode, bound, out),
        (BodyKind::DifferenceBody(inner), Mode::Gauge) => {
            if inner.is_symmetric() {
                aux_radii(inner, mode, 2.0 * bound, out);
            } else {
                out.push((n, inner.r_out() * bound));
                aux_radii(inner, mode, bound, out);
                aux_radii(inner, mode, bound, out);
            }
        }
        (BodyKind::DifferenceBody(inner), Mode::Support) => {
            aux_radii(inner, mode, bound, out);
            aux_radii(inner, mode, bound, out);
        }
        _ => {}
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn mat_vec(m: &Matrix, x: &[f64], out: &mut [f64]) {
    for i in 0..m.nrows() {
        let mut s = 0.0;
        for j in 0..m.ncols() {
            s += m[(i, j)] * x[j];
        }
        out[i] = s;
    }
}

fn mat_t_vec(m: &Matrix, x: &[f64], out: &mut [f64]) {
    for j in 0..m.ncols() {
        let mut s = 0.0;
        for i in 0..m.nrows() {
            s += m[(i, j)] * x[i];
        }
        out[j] = s;
    }
}

/// Gauge of `{x : ||x||_p <= 1}` with gradient, computed with max-scaling for stability.
fn lp_norm(x: &[f64], p: f64, g: &mut [f64]) -> f64 {
    let m = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m == 0.0 {
        g.iter_mut().for_each(|v| *v = 0.0);
        return 0.0;
    }
    let s: f64 = x.iter().map(|v| (v.abs() / m).powf(p)).sum();
    let denom = s.powf((p - 1.0) / p);
    for (gi, xi) in g.iter_mut().zip(x) {
        *gi = sign(*xi) * (xi.abs() / m).powf(p - 1.0) / denom;
    }
    m * s.powf(1.0 / p)
}

fn leaf_gauge(kind: &BodyKind, x: &[f64], g: &mut [f64]) -> Result<f64> {
    let n = x.len();
    Ok(match kind {
        BodyKind::Ball { radius } => {
            let r = norm(x);
            for i in 0..n {
                g[i] = if r > 0.0 { x[i] / (r * radius) } else { 0.0 };
            }
            r / radius
        }
        BodyKind::Ellipsoid { inverse, .. } => {
            let mut w = vec![0.0; n];
            mat_vec(inverse, x, &mut w);
            let r = norm(&w);
            if r > 0.0 {
                mat_vec(inverse, &w, g);
                g.iter_mut().for_each(|v| *v /= r);
            } else {
                g.iter_mut().for_each(|v| *v = 0.0);
            }
            r
        }
        BodyKind::CubeLinf { scale } => {
            let mut k = 0;
            for i in 1..n {
                if x[i].abs() > x[k].abs() {
                    k = i;
                }
            }
            g.iter_mut().for_each(|v| *v = 0.0);
            g[k] = sign(x[k]) / scale;
            x[k].abs() / scale
        }
        BodyKind::CrossPolytopeL1 { scale } => {
            for i in 0..n {
                g[i] = sign(x[i]) / scale;
            }
            x.iter().map(|v| v.abs()).sum::<f64>() / scale
        }
        BodyKind::LpBall { p, scale, .. } => {
            let v = lp_norm(x, *p, g);
            g.iter_mut().for_each(|gi| *gi /= scale);
            v / scale
        }
        BodyKind::HPolytope { rows, offsets } => {
            let mut best = f64::NEG_INFINITY;
            let mut k = 0;
            for i in 0..rows.nrows() {
                let mut s = 0.0;
                for j in 0..n {
                    s += rows[(i, j)] * x[j];
                }
                let v = s / offsets[i];
                if v > best {
                    best = v;
                    k = i;
                }
            }
            for j in 0..n {
                g[j] = rows[(k, j)] / offsets[k];
            }
            best.max(0.0)
        }
        _ => return Err(Error::Internal("leaf_gauge called on a combinator".into())),
    })
}

fn leaf_support(kind: &BodyKind, u: &[f64], g: &mut [f64]) -> Result<f64> {
    let n = u.len();
    Ok(match kind {
        BodyKind::Ball { radius } => {
            let r = norm(u);
            for i in 0..n {
                g[i] = if r > 0.0 { radius * u[i] / r } else { 0.0 };
            }
            radius * r
        }
        BodyKind::Ellipsoid { matrix, .. } => {
            let mut w = vec![0.0; n];
            mat_vec(matrix, u, &mut w);
            let r = norm(&w);
            if r > 0.0 {
                mat_vec(matrix, &w, g);
                g.iter_mut().for_each(|v| *v /= r);
            } else {
                g.iter_mut().for_each(|v| *v = 0.0);
            }
            r
        }
        BodyKind::CubeLinf { scale } => {
            for i in 0..n {
                g[i] = scale * sign(u[i]);
            }
            scale * u.iter().map(|v| v.abs()).sum::<f64>()
        }
        BodyKind::CrossPolytopeL1 { scale } => {
            let mut k = 0;
            for i in 1..n {
                if u[i].abs() > u[k].abs() {
                    k = i;
                }
            }
            g.iter_mut().for_each(|v| *v = 0.0);
            g[k] = scale * sign(u[k]);
            scale * u[k].abs()
        }
        BodyKind::LpBall { q, scale, .. } => {
            let v = lp_norm(u, *q, g);
            g.iter_mut().for_each(|gi| *gi *= scale);
            v * scale
        }
        BodyKind::HPolytope { rows, offsets } => {
            let uv = Vector::from_column_slice(u);
            if uv.amax() == 0.0 {
                g.iter_mut().for_each(|v| *v = 0.0);
                return Ok(0.0);
            }
            let (v, y) = crate::lp::maximize_linear(rows, offsets, &uv)?;
            g.copy_from_slice(y.as_slice());
            v
        }
        _ => return Err(Error::Internal("leaf_support called on a combinator".into())),
    })
}

fn eval_node(body: &ConvexBody, mode: Mode, x: &[f64], aux: &[f64], gx: &mut [f64], gaux: &mut [f64]) -> Result<f64> {
    let n = x.len();
    match (&body.0.kind, mode) {
        (BodyKind::Intersection(l, r), Mode::Gauge) | (BodyKind::Hull(l, r), Mode::Support) => {
            let (al, ar) = aux.split_at(aux_count(l, mode));
            let (gal, gar) = gaux.split_at_mut(al.len());
            let mut gr = vec![0.0; n];
            let vl = eval_node(l, mode, x, al, gx, gal)?;
            let vr = eval_node(r, mode, x, ar, &mut gr, gar)?;
            if vl >= vr {
                gar.iter_mut().for_each(|v| *v = 0.0);
                Ok(vl)
            } else {
                gal.iter_mut().for_each(|v| *v = 0.0);
                gx.copy_from_slice(&gr);
                Ok(vr)
            }
        }
        (BodyKind::Hull(l, r), Mode::Gauge) | (BodyKind::Intersection(l, r), Mode::Support) => {
            let (y, rest) = aux.split_at(n);
            let (al, ar) = rest.split_at(aux_count(l, mode));
            let (gy, grest) = gaux.split_at_mut(n);
            let (gal, gar) = grest.split_at_mut(al.len());
            let vl = eval_node(l, mode, y, al, gy, gal)?;
            let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
            let vr = eval_node(r, mode, &z, ar, gx, gar)?;
            for i in 0..n {
                gy[i] -= gx[i];
            }
            Ok(vl + vr)
        }
        (BodyKind::LinearImage { map, inverse, inner }, _) => {
            let mut xi = vec![0.0; n];
            let mut gi = vec![0.0; n];
            match mode {
                Mode::Gauge => mat_vec(inverse, x, &mut xi),
                Mode::Support => mat_t_vec(map, x, &mut xi),
            }
            let v = eval_node(inner, mode, &xi, aux, &mut gi, gaux)?;
            match mode {
                Mode::Gauge => mat_t_vec(inverse, &gi, gx),
                Mode::Support => mat_vec(map, &gi, gx),
            }
            Ok(v)
        }
        (BodyKind::DifferenceBody(inner), Mode::Gauge) if inner.is_symmetric() => {
            let v = eval_node(inner, mode, x, aux, gx, gaux)?;
            gx.iter_mut().for_each(|g| *g *= 0.5);
            gaux.iter_mut().for_each(|g| *g *= 0.5);
            Ok(0.5 * v)
        }
        (BodyKind::DifferenceBody(inner), Mode::Gauge) => {
            let k = aux_count(inner, mode);
            let (y, rest) = aux.split_at(n);
            let (a1, a2) = rest.split_at(k);
            let (gy, grest) = gaux.split_at_mut(n);
            let (ga1, ga2) = grest.split_at_mut(k);
            let mut g2 = vec![0.0; n];
            let v1 = eval_node(inner, mode, y, a1, gy, ga1)?;
            let z: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
            let v2 = eval_node(inner, mode, &z, a2, &mut g2, ga2)?;
            if v1 >= v2 {
                gx.iter_mut().for_each(|g| *g = 0.0);
                ga2.iter_mut().for_each(|g| *g = 0.0);
                Ok(v1)
            } else {
                gy.copy_from_slice(&g2);
                for i in 0..n {
                    gx[i] = -g2[i];
                }
                ga1.iter_mut().for_each(|g| *g = 0.0);
                Ok(v2)
            }
        }
        (BodyKind::DifferenceBody(inner), Mode::Support) => {
            let k = aux_count(inner, mode);
            let (a1, a2) = aux.split_at(k);
            let (ga1, ga2) = gaux.split_at_mut(k);
            let mut g2 = vec![0.0; n];
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let v1 = eval_node(inner, mode, x, a1, gx, ga1)?;
            let v2 = eval_node(inner, mode, &neg, a2, &mut g2, ga2)?;
            for i in 0..n {
                gx[i] -= g2[i];
            }
            Ok(v1 + v2)
        }
        (kind, Mode::Gauge) => leaf_gauge(kind, x, gx),
        (kind, Mode::Support) => leaf_support(kind, x, gx),
    }
}

/// Direct evaluation of a split-free body.
fn direct(body: &ConvexBody, mode: Mode, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut g = vec![0.0; x.len()];
    let v = eval_node(body, mode, x, &[], &mut g, &mut [])?;
    Ok((v, g))
}

/// Exact answers for a hull gauge (or intersection support) whose optimal split is trivial:
/// if the subgradient of one side is feasible for the other side's dual, that side's value
/// is the answer.
fn vertex_shortcut(body: &ConvexBody, mode: Mode, x: &[f64]) -> Result<Option<(f64, Vec<f64>)>> {
    let (l, r) = match (&body.0.kind, mode) {
        (BodyKind::Hull(l, r), Mode::Gauge) | (BodyKind::Intersection(l, r), Mode::Support) => (l, r),
        _ => return Ok(None),
    };
    let dual = match mode {
        Mode::Gauge => Mode::Support,
        Mode::Support => Mode::Gauge,
    };
    if aux_count(l, mode) > 0 || aux_count(r, mode) > 0 {
        return Ok(None);
    }
    for (this, other) in [(l, r), (r, l)] {
        if aux_count(other, dual) > 0 {
            continue;
        }
        let (v, g) = direct(this, mode, x)?;
        let (check, _) = direct(other, dual, &g)?;
        if check <= 1.0 {
            return Ok(Some((v, g)));
        }
    }
    Ok(None)
}

/// Gauge of `K - K` for an H-polytope `K = {A y <= b}` as one linear program: the largest
/// `s` with `s x = a - c` for `a, c` in `K`, that is `A a <= b` and `A (a - s x) <= b`.
/// With multipliers `mu` on the second block, `-A^T mu / s` is a point of the polar body
/// attaining the gauge.
fn difference_polytope_gauge(body: &ConvexBody, mode: Mode, x: &Vector) -> Result<Option<Evaluation>> {
    let (rows, offsets) = match (&body.0.kind, mode) {
        (BodyKind::DifferenceBody(inner), Mode::Gauge) => match &inner.0.kind {
            BodyKind::HPolytope { rows, offsets } => (rows, offsets),
            _ => return Ok(None),
        },
        _ => return Ok(None),
    };
    let (m, n) = rows.shape();
    let ax = rows * x;
    let a = Matrix::from_fn(2 * m, n + 1, |i, j| match (i < m, j < n) {
        (_, true) => rows[(i % m, j)],
        (true, false) => 0.0,
        (false, false) => -ax[i - m],
    });
    let b = Vector::from_fn(2 * m, |i, _| offsets[i % m]);
    let mut goal = Vector::zeros(n + 1);
    goal[n] = 1.0;
    let (s, _, lambda) = crate::lp::maximize_linear_dual(&a, &b, &goal)?;
    if !(s > 0.0 && s.is_finite()) {
        return Ok(None);
    }
    let mu = lambda.rows(m, m);
    let subgradient = -(rows.transpose() * mu) / s;
    let value = 1.0 / s;
    Ok(Some(Evaluation { value, lower: value, subgradient }))
}

pub(super) fn evaluate(body: &ConvexBody, mode: Mode, x: &Vector, rel_tol: f64) -> Result<Evaluation> {
    // Peel top-level linear images so the shortcut below sees the node underneath.
    if let BodyKind::LinearImage { map, inverse, inner } = &body.0.kind {
        let e = match mode {
            Mode::Gauge => evaluate(inner, mode, &(inverse * x), rel_tol)?,
            Mode::Support => evaluate(inner, mode, &(map.transpose() * x), rel_tol)?,
        };
        let subgradient = match mode {
            Mode::Gauge => inverse.transpose() * e.subgradient,
            Mode::Support => map * e.subgradient,
        };
        return Ok(Evaluation { subgradient, ..e });
    }
    // An intersection gauge (hull support) is the larger of the two sides, and the sides
    // share no auxiliary variables, so each is evaluated on its own.
    if let (BodyKind::Intersection(l, r), Mode::Gauge) | (BodyKind::Hull(l, r), Mode::Support) = (&body.0.kind, mode) {
        if aux_count(l, mode) + aux_count(r, mode) > 0 {
            let el = evaluate(l, mode, x, rel_tol)?;
            let er = evaluate(r, mode, x, rel_tol)?;
            let lower = el.lower.max(er.lower);
            let top = if el.value >= er.value { el } else { er };
            return Ok(Evaluation { lower, ..top });
        }
    }
    let xs = x.as_slice();
    let prog = Program::new(body, mode);
    let d = prog.aux_dim();
    if d == 0 {
        let (v, g) = direct(body, mode, xs)?;
        return Ok(Evaluation { value: v, lower: v, subgradient: Vector::from_vec(g) });
    }
    let n = xs.len();
    if x.amax() == 0.0 {
        return Ok(Evaluation { value: 0.0, lower: 0.0, subgradient: Vector::zeros(n) });
    }
    if let Some(e) = difference_polytope_gauge(body, mode, x)? {
        return Ok(e);
    }
    if let Some((v, g)) = vertex_shortcut(body, mode, xs)? {
        return Ok(Evaluation { value: v, lower: v, subgradient: Vector::from_vec(g) });
    }
    let mut gx = vec![0.0; n];
    let mut gaux = vec![0.0; d];
    let start = vec![0.0; d];
    let bound = prog.eval(xs, &start, &mut gx, &mut gaux)?;
    let shape = Matrix::from_diagonal(&prog.aux_shape(bound));
    let max_iter = 1000 + 100 * d * (d + 1);
    let res = solver::minimize(
        Vector::zeros(d),
        shape,
        max_iter,
        |aux| {
            let mut g = Vector::zeros(d);
            let mut gxl = vec![0.0; n];
            let v = prog.eval(xs, aux.as_slice(), &mut gxl, g.as_mut_slice())?;
            Ok(Cut::Objective { value: v, attained: v, grad: g })
        },
        |upper, lower| {
            if upper - lower <= rel_tol * upper {
                Verdict::Stop
            } else {
                Verdict::Continue
            }
        },
    )?;
    let lower = res.lower.max(0.0);
    if !res.converged && res.upper - lower > 1e-6 * res.upper {
        return Err(Error::SolverFailure {
            message: format!("{} evaluation did not converge", if mode == Mode::Gauge { "gauge" } else { "support" }),
            lower,
            upper: res.upper,
        });
    }
    let best = res.argmin.unwrap_or_else(|| Vector::zeros(d));
    let v = prog.eval(xs, best.as_slice(), &mut gx, &mut gaux)?;
    Ok(Evaluation { value: v, lower: lower.min(v), subgradient: Vector::from_vec(gx) })
}

/// Gauge by bisection on a membership predicate, bracketed by `[|x|/r_out, |x|/r_in]`.
///
/// Works for any convex body described only by membership; `rel_tol` is the relative width
/// of the final bracket and the midpoint is returned.
pub fn gauge_by_bisection<F>(x: &Vector, r_in: f64, r_out: f64, rel_tol: f64, mut member: F) -> f64
where
    F: FnMut(&Vector) -> bool,
{
    let len = x.norm();
    if len == 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (len / r_out, len / r_in);
    while hi - lo > rel_tol * lo {
        let mid = 0.5 * (lo + hi);
        if member(&(x / mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
