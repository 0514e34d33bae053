//! Grid volume brackets and the covering certificate `N(K,E) N(E,K)`.
//!
//! Cells of an axis grid anchored at the origin are classified with the triangle
//! inequality for gauges: for a cell with center `c` and half-diagonal offsets `d`,
//! `g(c) - M <= g(x) <= g(c) + M` on the cell, where `M` is the largest gauge of a
//! half-diagonal. Cells with `g(c) - M >= 1` are certified to miss the interior of the
//! body and only those are excluded from the upper count. Cells are inside when `g(c) + M <= 1` or, for
//! the remaining boundary cells, when all corners are inside.

use rayon::prelude::*;

use crate::body::{normalize_position, ConvexBody, NormalizeConfig};
use crate::ellipsoid::Ellipsoid;
use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Vector};

/// Default cap on the number of grid cells.
pub const DEFAULT_CELL_BUDGET: u64 = 100_000_000;

/// Largest `covering_product_bound^{1/n}` over the benchmark suite in dimensions 2 to 5,
/// at the default certificate resolution, as measured by `examples/calibrate.rs`.
pub const BETA_CALIB: f64 = 22.879167;

/// Largest dimension the grid oracle accepts.
pub const GRID_MAX_DIM: usize = 6;

const CELL_BLOCK: u64 = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct VolumeBracket {
    pub lower: f64,
    pub upper: f64,
    pub grid_step: f64,
    /// Cells scanned in the bounding box.
    pub cells_counted: u64,
    pub inside_cells: u64,
    pub touching_cells: u64,
}

impl VolumeBracket {
    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    /// `(upper - lower) / lower`, infinite when the lower bracket is zero.
    pub fn relative_width(&self) -> f64 {
        if self.lower > 0.0 {
            (self.upper - self.lower) / self.lower
        } else {
            f64::INFINITY
        }
    }
}

fn sign_offsets(n: usize, half: f64) -> Vec<Vector> {
    (0..1usize << n)
        .map(|mask| Vector::from_fn(n, |i, _| if (mask >> i) & 1 == 1 { -half } else { half }))
        .collect()
}

/// Number of grid cells `grid_volume` would scan for step `h`.
pub fn grid_cell_count(body: &ConvexBody, h: f64) -> Result<u64> {
    Ok(grid_extent(body, h)?.iter().fold(1u64, |acc, (lo, hi)| acc.saturating_mul((hi - lo) as u64)))
}

/// Per-axis cell index ranges `[lo, hi)` covering the body's bounding box.
fn grid_extent(body: &ConvexBody, h: f64) -> Result<Vec<(i64, i64)>> {
    if !(h > 0.0 && h.is_finite()) {
        return invalid("grid step must be positive and finite");
    }
    let n = body.dim();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut e = Vector::zeros(n);
        e[i] = 1.0;
        let hi = body.support(&e)?;
        let lo = -body.support(&-e)?;
        let lo_idx = (lo / h).floor() as i64 - 1;
        let hi_idx = (hi / h).ceil() as i64 + 1;
        out.push((lo_idx, hi_idx));
    }
    Ok(out)
}

/// Step giving roughly `target_cells` cells over the body's bounding box.
pub fn auto_step(body: &ConvexBody, target_cells: f64) -> Result<f64> {
    let n = body.dim();
    let mut vol = 1.0;
    for i in 0..n {
        let mut e = Vector::zeros(n);
        e[i] = 1.0;
        vol *= body.support(&e)? + body.support(&-e)?;
    }
    Ok((vol / target_cells).powf(1.0 / n as f64))
}

/// Certified bracket on `vol(K)` from the grid of step `h`.
pub fn grid_volume(body: &ConvexBody, h: f64) -> Result<VolumeBracket> {
    grid_volume_with_budget(body, h, DEFAULT_CELL_BUDGET)
}

pub fn grid_volume_with_budget(body: &ConvexBody, h: f64, budget: u64) -> Result<VolumeBracket> {
    let n = body.dim();
    if n > GRID_MAX_DIM {
        return invalid(format!("grid volumes are limited to n <= {GRID_MAX_DIM}"));
    }
    let extent = grid_extent(body, h)?;
    let widths: Vec<u64> = extent.iter().map(|(lo, hi)| (hi - lo) as u64).collect();
    let total = widths.iter().try_fold(1u64, |acc, &w| acc.checked_mul(w)).unwrap_or(u64::MAX);
    if total > budget {
        return Err(Error::BudgetExceeded { what: format!("grid of {total} cells"), limit: budget });
    }
    let corners = sign_offsets(n, 0.5 * h);
    let mut slack: f64 = 0.0;
    for d in &corners {
        slack = slack.max(body.gauge(d)?);
    }
    let blocks = total.div_ceil(CELL_BLOCK);
    let parts: Vec<Result<(u64, u64)>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut inside = 0u64;
            let mut touching = 0u64;
            let mut center = Vector::zeros(n);
            for idx in b * CELL_BLOCK..((b + 1) * CELL_BLOCK).min(total) {
                let mut rest = idx;
                for i in 0..n {
                    let k = extent[i].0 + (rest % widths[i]) as i64;
                    rest /= widths[i];
                    center[i] = (k as f64 + 0.5) * h;
                }
                let g = body.gauge(&center)?;
                // The gauge is at least 1 on the whole cell: it misses the interior.
                if g - slack >= 1.0 {
                    continue;
                }
                touching += 1;
                if g + slack <= 1.0 {
                    inside += 1;
                    continue;
                }
                let mut all_in = true;
                for d in &corners {
                    if body.gauge(&(&center + d))? > 1.0 {
                        all_in = false;
                        break;
                    }
                }
                if all_in {
                    inside += 1;
                }
            }
            Ok((inside, touching))
        })
        .collect();
    let (mut inside, mut touching) = (0u64, 0u64);
    for p in parts {
        let (i, t) = p?;
        inside += i;
        touching += t;
    }
    let cell = h.powi(n as i32);
    Ok(VolumeBracket {
        lower: inside as f64 * cell,
        upper: touching as f64 * cell,
        grid_step: h,
        cells_counted: total,
        inside_cells: inside,
        touching_cells: touching,
    })
}

#[derive(Clone, Debug)]
pub struct CoveringBound {
    /// `9^n vol(K) vol(E) / vol(K n E)^2` with upper brackets above and lower below.
    pub value: f64,
    pub body: VolumeBracket,
    pub intersection: VolumeBracket,
    pub ellipsoid_volume: f64,
}

impl CoveringBound {
    /// `value^{1/n}`.
    pub fn per_dimension(&self, n: usize) -> f64 {
        self.value.powf(1.0 / n as f64)
    }
}

/// Certified upper bound on `N(K,E) N(E,K)` via the volume-ratio covering bound in both
/// directions.
pub fn covering_product_bound(body: &ConvexBody, e: &Ellipsoid, h: f64) -> Result<CoveringBound> {
    covering_product_bound_with_budget(body, e, h, DEFAULT_CELL_BUDGET)
}

pub fn covering_product_bound_with_budget(
    body: &ConvexBody,
    e: &Ellipsoid,
    h: f64,
    budget: u64,
) -> Result<CoveringBound> {
    let n = body.dim();
    if e.dim() != n {
        return invalid("ellipsoid dimension does not match the body");
    }
    if !body.is_symmetric() {
        return invalid("the covering certificate needs a symmetric body");
    }
    if e.center().amax() != 0.0 {
        return invalid("the covering certificate needs an origin-centred ellipsoid");
    }
    let vk = grid_volume_with_budget(body, h, budget)?;
    let meet = ConvexBody::intersection(body, &e.to_body()?)?;
    let vke = grid_volume_with_budget(&meet, h, budget)?;
    if vke.lower <= 0.0 {
        return Err(Error::ResolutionFailure(format!(
            "grid step {h} too coarse: no cell lies inside the intersection"
        )));
    }
    let ve = e.volume();
    let value = 9f64.powi(n as i32) * vk.upper * ve / (vke.lower * vke.lower);
    Ok(CoveringBound { value, body: vk, intersection: vke, ellipsoid_volume: ve })
}

/// Grid cells used by [`covering_certificate`] when no step is given.
pub fn certificate_cells(n: usize) -> f64 {
    match n {
        0..=2 => 4e5,
        3 => 2e6,
        _ => 4e6,
    }
}

/// The covering certificate of `(K, E)` evaluated in the normalized position of `K`, where
/// the grid resolves the body evenly. The certificate is invariant under linear maps, so
/// the position only changes the grid slack. Without a step, the grid has about
/// [`certificate_cells`] cells.
pub fn covering_certificate(body: &ConvexBody, e: &Ellipsoid, h: Option<f64>, budget: u64) -> Result<CoveringBound> {
    let norm = normalize_position(body, &NormalizeConfig::default())?;
    let e = e.mapped(&norm.transform)?;
    let h = match h {
        Some(h) => h,
        None => auto_step(&norm.body, certificate_cells(body.dim()).min(budget as f64))?,
    };
    covering_product_bound_with_budget(&norm.body, &e, h, budget)
}

/// Checks `vol(conv(K u D)) <= 4 alpha n N vol(K)` on grid brackets, after verifying
/// `D <= alpha K` on a direction net.
pub fn hull_volume_bound_check(body: &ConvexBody, d: &ConvexBody, alpha: f64, n_upper: u64, h: f64) -> Result<bool> {
    let n = body.dim();
    if d.dim() != n {
        return invalid("bodies have different dimensions");
    }
    if !(alpha > 0.0) {
        return invalid("alpha must be positive");
    }
    for u in linalg::direction_net(n, 8 * n * n) {
        if d.support(&u)? > alpha * body.support(&u)? * (1.0 + 1e-9) {
            return invalid("D is not contained in alpha K");
        }
    }
    let hull = ConvexBody::hull(body, d)?;
    let vh = grid_volume(&hull, h)?;
    let vk = grid_volume(body, h)?;
    Ok(vh.lower <= 4.0 * alpha * n as f64 * n_upper as f64 * vk.upper)
}
