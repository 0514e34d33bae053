//! The M-ellipsoid iteration.
//!
//! Each round computes a Lewis transform `A_i` of the current body, clamps the body between
//! `r_in A_i B` and `r_out A_i B`, and maps the result back to a position where the inner
//! ellipsoid is the unit ball. The body term grows by a hull, an intersection and a linear
//! image per round; nothing is approximated.

use crate::body::{normalize_position, ConvexBody, NormalizeConfig};
use crate::covering::{covering_product_bound, CoveringBound};
use crate::ellipsoid::Ellipsoid;
use crate::ellnorm::{ell_tilde, ell_tilde_polar};
use crate::error::{invalid, Error, Result};
use crate::lewis::{self, LewisConfig, LewisSolution};
use crate::linalg::{self, Matrix};

/// `log2` iterated `i` times, clamped below at 2 after every step.
pub fn iter_log(n: usize, i: usize) -> f64 {
    let mut v = n as f64;
    for _ in 0..i {
        v = v.log2().max(2.0);
    }
    v
}

/// Number of rounds plus one: `1 + min{i >= 1 : log2^(i) n <= 2}` with the unclamped logs.
pub fn iteration_count(n: usize) -> usize {
    let mut v = n as f64;
    let mut i = 0;
    loop {
        i += 1;
        v = v.log2();
        if v <= 2.0 {
            return i + 1;
        }
    }
}

#[derive(Clone, Debug)]
pub struct MilmanConfig {
    /// Lewis accuracy for every round; `None` uses [`lewis::default_eps`].
    pub eps: Option<f64>,
    /// Relative slack of the final sandwich check.
    pub tau: f64,
    /// Grid step for the covering certificate; `None` skips it.
    pub covering_step: Option<f64>,
}

impl Default for MilmanConfig {
    fn default() -> Self {
        MilmanConfig { eps: None, tau: 1e-6, covering_step: None }
    }
}

#[derive(Clone, Debug)]
pub struct MilmanStep {
    /// Lewis transform of the round's body, in that body's coordinates.
    pub a: Matrix,
    pub ell_in: f64,
    pub ell_out: f64,
    pub r_in: f64,
    pub r_out: f64,
    pub bm_ratio: f64,
    /// `S_i` with `K_i = S_i K` (identity in the first round).
    pub position: Matrix,
    /// The round's body `K_i = S_i K`.
    pub body: ConvexBody,
    pub lewis: LewisSolution,
}

#[derive(Clone, Debug)]
pub struct MilmanTrace {
    pub n: usize,
    /// Rounds plus one; the loop runs `t - 1` times.
    pub t: usize,
    pub steps: Vec<MilmanStep>,
    pub final_ellipsoid: Option<Ellipsoid>,
    /// The last body `K_T` in the input coordinates.
    pub final_body: Option<ConvexBody>,
    /// Sampled sandwich constant of `E` and `K_T`.
    pub c_f: f64,
    /// Whether `c_f` is within the last round's ratio.
    pub sandwich_ok: bool,
    pub covering: Option<CoveringBound>,
    pub complete: bool,
}

impl MilmanTrace {
    pub(crate) fn new(n: usize, t: usize) -> Self {
        MilmanTrace {
            n,
            t,
            steps: Vec::new(),
            final_ellipsoid: None,
            final_body: None,
            c_f: f64::NAN,
            sandwich_ok: false,
            covering: None,
            complete: false,
        }
    }
}

/// Radii for round `i` given `n`, `l~_{K_i}(A_i)` and `l~_{K_i*}(A_i^{-1})`.
pub(crate) type RadiusRule<'a> = dyn Fn(usize, f64, f64) -> (f64, f64) + 'a;

pub(crate) fn milman_radii(n: usize) -> impl Fn(usize, f64, f64) -> (f64, f64) {
    let s = (n as f64).sqrt();
    move |i, ell_in, ell_out| {
        let a = iter_log(n, i);
        (s / (a * ell_in), a * ell_out / s)
    }
}

/// State after the loop: the last Lewis transform in the coordinates of `K_{T-1}`, the
/// position `S_{T-1}` of those coordinates and `K_T` in them.
pub(crate) struct LoopEnd {
    pub a: Matrix,
    pub ell_in: f64,
    pub r_in: f64,
    pub position: Matrix,
    pub last_body: ConvexBody,
}

pub(crate) fn run_rounds(body: &ConvexBody, eps: Option<f64>, radii: &RadiusRule, trace: &mut MilmanTrace) -> Result<LoopEnd> {
    let n = body.dim();
    let lewis_cfg = LewisConfig { eps, ..LewisConfig::default() };
    let mut current = body.clone();
    let mut position = Matrix::identity(n, n);
    let base_depth = body.depth();
    let mut end = None;
    for i in 1..trace.t {
        let sol = lewis::solve_lewis_with(&current, &lewis_cfg)?;
        let a = sol.a.clone();
        let inv = linalg::inverse(&a)?;
        let ell_in = ell_tilde(&current, &a)?.value;
        let ell_out = ell_tilde_polar(&current, &inv)?.value;
        let (r_in, r_out) = radii(i, ell_in, ell_out);
        if !(r_in > 0.0 && r_out.is_finite() && r_in <= r_out) {
            return Err(Error::Internal(format!("round {i} produced radii r_in = {r_in}, r_out = {r_out}")));
        }
        trace.steps.push(MilmanStep {
            a: a.clone(),
            ell_in,
            ell_out,
            r_in,
            r_out,
            bm_ratio: r_out / r_in,
            position: position.clone(),
            body: current.clone(),
            lewis: sol,
        });
        let outer = ConvexBody::ellipsoid(&a * r_out)?;
        let inner = ConvexBody::ellipsoid(&a * r_in)?;
        let next = ConvexBody::hull(&ConvexBody::intersection(&current, &outer)?, &inner)?;
        if next.depth() > base_depth + 3 * i {
            return Err(Error::Internal(format!("body term depth {} exceeds the round bound", next.depth())));
        }
        if i + 1 == trace.t {
            end = Some(LoopEnd { a, ell_in, r_in, position: position.clone(), last_body: next });
            break;
        }
        let renorm = linalg::inverse(&(&a * r_in))?;
        current = next.apply_linear(&renorm)?;
        position = &renorm * &position;
    }
    end.ok_or_else(|| Error::Internal("the iteration ran no rounds".into()))
}

/// Sampled `c` with `E / c <= K <= c E`.
fn sandwich_constant(body: &ConvexBody, e: &Ellipsoid) -> Result<f64> {
    let n = body.dim();
    let mut c: f64 = 1.0;
    for u in linalg::direction_net(n, 4 * n * n) {
        let gk = body.gauge(&u)?;
        let ge = e.gauge(&u);
        c = c.max(gk / ge).max(ge / gk);
    }
    Ok(c)
}

/// Runs the iteration on a symmetric body in near-John position, filling `trace` as it
/// goes so a failing run still leaves the completed rounds behind.
pub fn m_ellipsoid_with(body: &ConvexBody, cfg: &MilmanConfig, trace: &mut MilmanTrace) -> Result<Ellipsoid> {
    let n = body.dim();
    if n < 2 {
        return invalid("the iteration needs dimension at least 2");
    }
    if !body.is_symmetric() {
        return invalid("m_ellipsoid needs a symmetric body; apply difference_body first");
    }
    *trace = MilmanTrace::new(n, iteration_count(n));
    let radii = milman_radii(n);
    let end = run_rounds(body, cfg.eps, &radii, trace)?;
    let local = Ellipsoid::new(&end.a * ((n as f64).sqrt() / end.ell_in))?;
    let c_f = sandwich_constant(&end.last_body, &local)?;
    let back = linalg::inverse(&end.position)?;
    let e = local.mapped(&back)?;
    let bm_last = trace.steps.last().map(|s| s.bm_ratio).unwrap_or(f64::INFINITY);
    trace.c_f = c_f;
    trace.sandwich_ok = c_f <= bm_last * (1.0 + cfg.tau);
    trace.final_body = Some(end.last_body.apply_linear(&back)?);
    trace.final_ellipsoid = Some(e.clone());
    if let Some(h) = cfg.covering_step {
        trace.covering = Some(covering_product_bound(body, &e, h)?);
    }
    trace.complete = true;
    Ok(e)
}

pub fn m_ellipsoid(body: &ConvexBody, cfg: &MilmanConfig) -> Result<(Ellipsoid, MilmanTrace)> {
    let mut trace = MilmanTrace::new(body.dim(), 0);
    let e = m_ellipsoid_with(body, cfg, &mut trace)?;
    Ok((e, trace))
}

/// The iteration on an arbitrary body: asymmetric bodies are replaced by `K - K`, then
/// the body is normalized, iterated, and the ellipsoid mapped back to input coordinates.
/// The trace refers to the normalized body `T K` with `T` returned alongside.
pub fn m_ellipsoid_general(body: &ConvexBody, cfg: &MilmanConfig) -> Result<(Ellipsoid, MilmanTrace, Matrix)> {
    let sym = if body.is_symmetric() { body.clone() } else { body.difference_body()? };
    let norm = normalize_position(&sym, &NormalizeConfig::default())?;
    let (e, trace) = m_ellipsoid(&norm.body, cfg)?;
    let back = linalg::inverse(&norm.transform)?;
    Ok((e.mapped(&back)?, trace, norm.transform))
}

/// The per-round ratios `r_out / r_in`.
pub fn banach_mazur_diag(trace: &MilmanTrace) -> Result<Vec<f64>> {
    if !trace.complete {
        return invalid("the trace is incomplete");
    }
    Ok(trace.steps.iter().map(|s| s.bm_ratio).collect())
}
