//! Volume estimation by counting parallelepiped tiles.
//!
//! An iteration like the M-ellipsoid one, with radii damped by `eps`, produces a body
//! `K_T` of nearly the same volume together with an ellipsoid `E` inside it. Space is
//! tiled by translates of `eps P`, where `P` is the largest parallelepiped inscribed in
//! `E`, and the tiles meeting the interior of `K_T` are counted by reverse search.
//!
//! Tile `z` is `{ sum_i 2 eps (z_i + s_i) a_i : s in [0,1)^n }` for the semi-axes `a_i`
//! of `P`, so tile `0` contains the origin. The parent of a tile `z != 0` is its neighbor
//! `z - sign(z_i) e_i` for the first coordinate `i` (in the tie-break order) with
//! `z_i != 0` whose tile meets the body. Such a neighbor always exists for a convex body
//! containing the origin, so every counted tile hangs below the root.

use rayon::prelude::*;

use crate::body::{ConvexBody, Mode, Program};
use crate::ellipsoid::Ellipsoid;
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::milman::{iter_log, iteration_count, run_rounds, MilmanStep, MilmanTrace};
use crate::solver::{self, Cut, Verdict};

/// Largest `|ln(estimate / vol)| / (eps n)` over the volume benchmark cases, as measured
/// by `examples/calibrate.rs`.
pub const C_VOL: f64 = 0.366513;

/// Largest `ln(tiles) / (n ln(1 / eps))` over the same cases.
pub const C_COUNT: f64 = 3.593787;

#[derive(Clone, Debug, PartialEq)]
pub struct TilingSpec {
    /// Semi-axes of `P` as columns.
    pub axes: Matrix,
    pub eps: f64,
    pub root_index: Vec<i64>,
    /// Order in which coordinates are scanned by the parent rule.
    pub tie_break_order: Vec<usize>,
}

impl TilingSpec {
    pub fn new(axes: Matrix, eps: f64) -> Result<Self> {
        let n = axes.nrows();
        if n == 0 || axes.ncols() != n || !linalg::all_finite(&axes) {
            return invalid("tiling axes must form a finite square matrix");
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return invalid("tile scale must be positive");
        }
        if axes.determinant().abs() == 0.0 {
            return invalid("tiling axes are linearly dependent");
        }
        Ok(TilingSpec { axes, eps, root_index: vec![0; n], tie_break_order: (0..n).collect() })
    }

    pub fn dim(&self) -> usize {
        self.axes.nrows()
    }

    /// `vol(P) = 2^n |det(axes)|`.
    pub fn parallelepiped_volume(&self) -> f64 {
        2f64.powi(self.dim() as i32) * self.axes.determinant().abs()
    }

    /// `vol(eps P)`.
    pub fn tile_volume(&self) -> f64 {
        self.eps.powi(self.dim() as i32) * self.parallelepiped_volume()
    }

    /// Half-edges of a tile as columns.
    pub fn half_edges(&self) -> Matrix {
        &self.axes * self.eps
    }

    pub fn tile_center(&self, z: &[i64]) -> Vector {
        let t = Vector::from_iterator(z.len(), z.iter().map(|&k| 2.0 * (k as f64 + 0.5)));
        self.half_edges() * t
    }

    /// Index of the tile containing `x`.
    pub fn tile_of(&self, x: &Vector) -> Result<Vec<i64>> {
        let coords = linalg::inverse(&self.half_edges())? * x;
        Ok(coords.iter().map(|c| (0.5 * c).floor() as i64).collect())
    }
}

/// The cube with semi-axes `(eigenvector) * (eigenvalue) / sqrt(n)`, whose vertices all lie
/// on the boundary of `E`; returned as a tiling with `eps = 1`.
pub fn inscribed_parallelepiped(e: &Ellipsoid) -> Result<TilingSpec> {
    let n = e.dim();
    let (vals, vecs) = e.eigen();
    if !(vals[0] > 0.0) || vals[n - 1] / vals[0] > crate::body::MAX_CONDITION {
        return invalid("ellipsoid is too close to singular for a parallelepiped");
    }
    let s = (n as f64).sqrt();
    let axes = Matrix::from_fn(n, n, |i, j| vecs[(i, j)] * vals[j] / s);
    TilingSpec::new(axes, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TileTest {
    Meets,
    Disjoint,
    /// The minimization did not settle; treated as meeting.
    Unresolved,
}

/// Tile-test helper holding the per-tiling constants.
pub struct TileOracle<'a> {
    body: &'a ConvexBody,
    tiling: &'a TilingSpec,
    half: Matrix,
    slack: f64,
    tau: f64,
}

impl<'a> TileOracle<'a> {
    pub fn new(body: &'a ConvexBody, tiling: &'a TilingSpec, tau: f64) -> Result<Self> {
        let n = body.dim();
        if tiling.dim() != n {
            return invalid("tiling dimension does not match the body");
        }
        let half = tiling.half_edges();
        let mut slack: f64 = 0.0;
        for mask in 0..1usize << n {
            let s = Vector::from_fn(n, |i, _| if (mask >> i) & 1 == 1 { -1.0 } else { 1.0 });
            slack = slack.max(body.gauge(&(&half * s))?);
        }
        Ok(TileOracle { body, tiling, half, slack, tau })
    }

    /// Whether the tile meets the interior of the body, decided as
    /// `min over the tile of the gauge < 1 - tau`.
    pub fn test(&self, z: &[i64]) -> Result<TileTest> {
        let level = 1.0 - self.tau;
        let c = self.tiling.tile_center(z);
        let gc = self.body.gauge(&c)?;
        if gc < level {
            return Ok(TileTest::Meets);
        }
        if gc - self.slack >= level {
            return Ok(TileTest::Disjoint);
        }
        self.minimize(&c, gc, level)
    }

    fn minimize(&self, c: &Vector, gc: f64, level: f64) -> Result<TileTest> {
        let n = c.len();
        let prog = Program::new(self.body, Mode::Gauge);
        let m = prog.aux_dim();
        let d = n + m;
        let mut diag = Vector::from_element(d, 2.0 * n as f64);
        if m > 0 {
            let aux = prog.aux_shape(gc + self.slack);
            diag.rows_mut(n, m).copy_from(&(aux * 2.0));
        }
        let mut outcome = None;
        let res = solver::minimize(
            Vector::zeros(d),
            Matrix::from_diagonal(&diag),
            1000 + 100 * d * (d + 1),
            |z| {
                let t = z.rows(0, n);
                let (k, worst) = t.iter().enumerate().fold((0, 0.0), |acc, (i, v)| {
                    if v.abs() > acc.1 {
                        (i, v.abs())
                    } else {
                        acc
                    }
                });
                if worst > 1.0 {
                    let mut grad = Vector::zeros(d);
                    grad[k] = t[k].signum();
                    return Ok(Cut::Constraint { violation: worst - 1.0, grad, attained: f64::INFINITY });
                }
                let x = c + &self.half * t;
                let mut gx = vec![0.0; n];
                let mut grad = Vector::zeros(d);
                let v = prog.eval(x.as_slice(), &z.as_slice()[n..], &mut gx, &mut grad.as_mut_slice()[n..])?;
                let gt = self.half.transpose() * Vector::from_vec(gx);
                grad.rows_mut(0, n).copy_from(&gt);
                Ok(Cut::Objective { value: v, attained: v, grad })
            },
            |upper, lower| {
                if upper < level {
                    outcome = Some(TileTest::Meets);
                    Verdict::Stop
                } else if lower >= level {
                    outcome = Some(TileTest::Disjoint);
                    Verdict::Stop
                } else {
                    Verdict::Continue
                }
            },
        )?;
        Ok(match outcome {
            Some(t) => t,
            None if res.converged && res.lower >= level => TileTest::Disjoint,
            None if res.converged && res.upper < level => TileTest::Meets,
            None => TileTest::Unresolved,
        })
    }

    fn meets(&self, z: &[i64], flagged: &mut u64) -> Result<bool> {
        Ok(match self.test(z)? {
            TileTest::Meets => true,
            TileTest::Disjoint => false,
            TileTest::Unresolved => {
                *flagged += 1;
                true
            }
        })
    }

    /// Parent of a non-root tile under the meeting-neighbor rule.
    pub fn parent(&self, z: &[i64]) -> Result<Option<Vec<i64>>> {
        let mut ignored = 0;
        for &i in &self.tiling.tie_break_order {
            if z[i] != 0 {
                let mut p = z.to_vec();
                p[i] -= z[i].signum();
                if self.meets(&p, &mut ignored)? {
                    return Ok(Some(p));
                }
            }
        }
        Ok(None)
    }

    /// Whether `child = y + s e_j` (moving away from the root) has parent `y`, given that
    /// `y` meets the body.
    fn is_child(&self, child: &[i64], j: usize, flagged: &mut u64) -> Result<bool> {
        if !self.meets(child, flagged)? {
            return Ok(false);
        }
        for &i in &self.tiling.tie_break_order {
            if i == j {
                return Ok(true);
            }
            if child[i] != 0 {
                let mut p = child.to_vec();
                p[i] -= child[i].signum();
                if self.meets(&p, flagged)? {
                    return Ok(false);
                }
            }
        }
        Err(Error::Internal("coordinate missing from the tie-break order".into()))
    }

    /// Children of `y` in the reverse-search tree, in a fixed order.
    fn children(&self, y: &[i64], flagged: &mut u64) -> Result<Vec<Vec<i64>>> {
        let mut out = Vec::new();
        for j in 0..y.len() {
            for s in [1i64, -1] {
                if (y[j] > 0 && s < 0) || (y[j] < 0 && s > 0) {
                    continue;
                }
                let mut w = y.to_vec();
                w[j] += s;
                if self.is_child(&w, j, flagged)? {
                    out.push(w);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct TileConfig {
    /// Interior margin of the tile test.
    pub tau: f64,
    pub max_tiles: u64,
}

impl Default for TileConfig {
    fn default() -> Self {
        TileConfig { tau: 1e-8, max_tiles: 50_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TileCount {
    pub count: u64,
    /// Tiles whose test did not settle and were counted conservatively.
    pub flagged: u64,
}

/// Depth-first walk of the subtree below `root`, calling `visit` on every tile.
fn walk_subtree(oracle: &TileOracle, root: Vec<i64>, budget: u64, visit: &mut dyn FnMut(&[i64])) -> Result<TileCount> {
    let mut count = 0u64;
    let mut flagged = 0u64;
    // Each frame holds a tile's children and the position of the next one to visit.
    let mut stack = vec![(oracle.children(&root, &mut flagged)?, 0usize)];
    visit(&root);
    count += 1;
    while let Some((kids, next)) = stack.last_mut() {
        if *next == kids.len() {
            stack.pop();
            continue;
        }
        let z = kids[*next].clone();
        *next += 1;
        count += 1;
        if count > budget {
            return Err(Error::BudgetExceeded { what: "tile traversal".into(), limit: budget });
        }
        visit(&z);
        let grand = oracle.children(&z, &mut flagged)?;
        stack.push((grand, 0));
    }
    Ok(TileCount { count, flagged })
}

/// Walks the whole tree, with the root's subtrees in parallel. With `collect`, the
/// visited indices are returned in traversal order.
fn walk(body: &ConvexBody, tiling: &TilingSpec, cfg: &TileConfig, collect: bool) -> Result<(TileCount, Vec<Vec<i64>>)> {
    let oracle = TileOracle::new(body, tiling, cfg.tau)?;
    let mut flagged = 0;
    if !oracle.meets(&tiling.root_index, &mut flagged)? {
        return invalid("the root tile does not meet the body");
    }
    let kids = oracle.children(&tiling.root_index, &mut flagged)?;
    let parts: Vec<Result<(TileCount, Vec<Vec<i64>>)>> = kids
        .into_par_iter()
        .map(|k| {
            let mut seen = Vec::new();
            let c = walk_subtree(&oracle, k, cfg.max_tiles, &mut |z| {
                if collect {
                    seen.push(z.to_vec())
                }
            })?;
            Ok((c, seen))
        })
        .collect();
    let mut total = TileCount { count: 1, flagged };
    let mut tiles = if collect { vec![tiling.root_index.clone()] } else { Vec::new() };
    for p in parts {
        let (c, seen) = p?;
        total.count += c.count;
        total.flagged += c.flagged;
        tiles.extend(seen);
    }
    if total.count > cfg.max_tiles {
        return Err(Error::BudgetExceeded { what: "tile traversal".into(), limit: cfg.max_tiles });
    }
    Ok((total, tiles))
}

/// Number of tiles of `tiling` meeting the interior of `body`, by depth-first reverse
/// search from the tile containing the origin. Subtrees of the root are walked in parallel.
pub fn tile_count(body: &ConvexBody, tiling: &TilingSpec, cfg: &TileConfig) -> Result<TileCount> {
    Ok(walk(body, tiling, cfg, false)?.0)
}

/// The tiles counted by [`tile_count`], sorted.
pub fn tile_set(body: &ConvexBody, tiling: &TilingSpec, cfg: &TileConfig) -> Result<Vec<Vec<i64>>> {
    let mut tiles = walk(body, tiling, cfg, true)?.1;
    tiles.sort();
    Ok(tiles)
}

#[derive(Clone, Debug)]
pub struct VolumeConfig {
    /// The constant in the damped radii.
    pub const_c: f64,
    /// Lewis accuracy; `None` uses the default for the dimension.
    pub lewis_eps: Option<f64>,
    pub tiles: TileConfig,
}

impl Default for VolumeConfig {
    fn default() -> Self {
        VolumeConfig { const_c: 1.0, lewis_eps: None, tiles: TileConfig::default() }
    }
}

#[derive(Clone, Debug)]
pub struct VolumeReport {
    pub n: usize,
    pub t: usize,
    pub eps: f64,
    pub steps: Vec<MilmanStep>,
    /// Tiling in the coordinates `S K` of the last round.
    pub tiling: TilingSpec,
    /// `S`.
    pub position: Matrix,
    pub tiles: TileCount,
    /// `vol(P)` in input coordinates.
    pub vol_p: f64,
    /// `vol(eps P)` in input coordinates.
    pub tile_volume: f64,
    pub estimate: f64,
    /// `K_T` in input coordinates.
    pub final_body: ConvexBody,
}

/// `ln(1/eps)`, floored at `ln 2` so the radii stay finite as `eps` approaches 1.
fn log_factor(eps: f64) -> f64 {
    (1.0 / eps).ln().max(std::f64::consts::LN_2)
}

/// Volume estimate `k vol(eps P)` for a symmetric body in near-John position.
pub fn volume_estimate(body: &ConvexBody, eps: f64, cfg: &VolumeConfig) -> Result<VolumeReport> {
    let n = body.dim();
    if n < 2 {
        return invalid("volume estimation needs dimension at least 2");
    }
    if !body.is_symmetric() {
        return invalid("volume estimation needs a symmetric body");
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return invalid("eps must lie in (0, 1]");
    }
    if !(cfg.const_c > 0.0 && cfg.const_c.is_finite()) {
        return invalid("the radius constant must be positive");
    }
    let s = (n as f64).sqrt();
    let damp = cfg.const_c * log_factor(eps).sqrt() / eps;
    let radii = move |i: usize, ell_in: f64, ell_out: f64| {
        let a = iter_log(n, i);
        (s / (damp * a * ell_in), damp * a * ell_out / s)
    };
    let mut trace = MilmanTrace::new(n, iteration_count(n));
    let end = run_rounds(body, cfg.lewis_eps, &radii, &mut trace)?;
    let e = Ellipsoid::new(&end.a * end.r_in)?;
    let mut tiling = inscribed_parallelepiped(&e)?;
    tiling.eps = eps;
    let tiles = tile_count(&end.last_body, &tiling, &cfg.tiles)?;
    let det = end.position.determinant().abs();
    let vol_p = tiling.parallelepiped_volume() / det;
    let tile_volume = tiling.tile_volume() / det;
    let back = linalg::inverse(&end.position)?;
    Ok(VolumeReport {
        n,
        t: trace.t,
        eps,
        steps: trace.steps,
        tiling,
        position: end.position,
        estimate: tiles.count as f64 * tile_volume,
        tiles,
        vol_p,
        tile_volume,
        final_body: end.last_body.apply_linear(&back)?,
    })
}

/// Volume of an arbitrary symmetric body: normalizes, estimates, and undoes the
/// normalization's determinant. Returns the estimate, the report for the normalized
/// body `T K` and `T`.
pub fn volume_of(body: &ConvexBody, eps: f64, cfg: &VolumeConfig) -> Result<(f64, VolumeReport, Matrix)> {
    let norm = crate::body::normalize_position(body, &crate::body::NormalizeConfig::default())?;
    let report = volume_estimate(&norm.body, eps, cfg)?;
    let det = norm.transform.determinant().abs();
    Ok((report.estimate / det, report, norm.transform))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_tiling(n: usize, side: f64) -> TilingSpec {
        TilingSpec::new(Matrix::identity(n, n) * (0.5 * side), 1.0).unwrap()
    }

    #[test]
    fn parallelepiped_in_disc_and_ellipse() {
        let p = inscribed_parallelepiped(&Ellipsoid::unit_ball(2)).unwrap();
        assert!((p.parallelepiped_volume() - 2.0).abs() < 1e-14);
        let e = Ellipsoid::new(Matrix::from_diagonal(&Vector::from_vec(vec![2.0, 3.0]))).unwrap();
        let p = inscribed_parallelepiped(&e).unwrap();
        assert!((p.parallelepiped_volume() - 12.0).abs() < 1e-12);
        for mask in 0..4 {
            let s = Vector::from_fn(2, |i, _| if (mask >> i) & 1 == 1 { -1.0 } else { 1.0 });
            assert!((e.gauge(&(&p.axes * s)) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn aligned_square_has_four_tiles() {
        let cube = ConvexBody::cube(2, 1.0).unwrap();
        let k = tile_count(&cube, &unit_tiling(2, 1.0), &TileConfig::default()).unwrap();
        assert_eq!(k, TileCount { count: 4, flagged: 0 });
    }

    #[test]
    fn tile_indexing() {
        let t = unit_tiling(2, 1.0);
        assert_eq!(t.tile_of(&Vector::from_vec(vec![0.2, -0.3])).unwrap(), vec![0, -1]);
        assert_eq!(t.tile_center(&[0, -1]), Vector::from_vec(vec![0.5, -0.5]));
    }

    #[test]
    fn parent_moves_toward_root() {
        let ball = ConvexBody::ball(2, 3.0).unwrap();
        let t = unit_tiling(2, 1.0);
        let o = TileOracle::new(&ball, &t, 1e-8).unwrap();
        assert_eq!(o.parent(&[2, -1]).unwrap(), Some(vec![1, -1]));
        assert_eq!(o.parent(&[0, 2]).unwrap(), Some(vec![0, 1]));
    }
}
