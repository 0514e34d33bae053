use super::ConvexBody;
use crate::error::{invalid, Error, Result};
use crate::lewis::{self, LewisConfig};
use crate::linalg::{self, Matrix};

#[derive(Clone, Debug)]
pub struct NormalizeConfig {
    /// Accept positions with sandwich ratio up to `c_pos * n`.
    pub c_pos: f64,
    pub max_rounds: usize,
    /// Extra random directions (beyond the 2n axes) used to measure the sandwich.
    pub net_extra: usize,
}

impl Default for NormalizeConfig {
    fn default() -> Self {
        NormalizeConfig { c_pos: 2.0, max_rounds: 4, net_extra: 64 }
    }
}

#[derive(Clone, Debug)]
pub struct Normalized {
    /// The map with `body = T * K`.
    pub transform: Matrix,
    pub body: ConvexBody,
    /// Sampled sandwich ratio of `body`, whose sampled inradius is 1.
    pub ratio: f64,
    pub rounds: usize,
}

/// Sampled `(min radial value, max support value)` of a body over a direction net.
fn sampled_radii(body: &ConvexBody, extra: usize) -> Result<(f64, f64)> {
    let mut r_in = f64::INFINITY;
    let mut r_out: f64 = 0.0;
    for u in linalg::direction_net(body.dim(), extra) {
        r_in = r_in.min(1.0 / body.gauge(&u)?);
        r_out = r_out.max(body.support(&u)?);
    }
    Ok((r_in, r_out))
}

/// Brings a symmetric body near John position by iterated Lewis rounding: map by the
/// inverse of the Lewis transform, rescale so the sampled inradius is 1, and repeat while
/// the sampled sandwich ratio exceeds `n` and still improves by at least 1%.
pub fn normalize_position(body: &ConvexBody, cfg: &NormalizeConfig) -> Result<Normalized> {
    if !body.is_symmetric() {
        return invalid("normalize_position needs a symmetric body");
    }
    let n = body.dim();
    let nf = n as f64;
    let (r_in, r_out) = sampled_radii(body, cfg.net_extra)?;
    let mut transform = Matrix::identity(n, n) / r_in;
    let mut current = body.apply_linear(&transform)?;
    let mut ratio = r_out / r_in;
    let mut rounds = 0;
    while ratio > nf && rounds < cfg.max_rounds {
        let sol = lewis::solve_lewis_with(&current, &LewisConfig::default())?;
        let map = linalg::inverse(&sol.a)?;
        let candidate = current.apply_linear(&map)?;
        let (ci, co) = sampled_radii(&candidate, cfg.net_extra)?;
        let next_ratio = co / ci;
        rounds += 1;
        if next_ratio > ratio * 0.99 {
            break;
        }
        let step = map / ci;
        transform = &step * &transform;
        current = body.apply_linear(&transform)?;
        ratio = next_ratio;
    }
    if ratio > cfg.c_pos * nf {
        return Err(Error::NormalizationFailure { ratio, limit: cfg.c_pos * nf });
    }
    Ok(Normalized { transform, body: current, ratio, rounds })
}
