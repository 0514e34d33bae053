//! Body description files.
//!
//! A body file is TOML with a `kind` key and per-kind parameters. Combinators nest their
//! operands as tables. Matrices are arrays of rows.
//!
//! ```toml
//! kind = "hull"
//! [left]
//! kind = "cube"
//! dim = 2
//! scale = 1.0
//! [right]
//! kind = "ellipsoid"
//! matrix = [[2.0, 0.0], [0.0, 0.5]]
//! ```

use serde::Deserialize;

use super::ConvexBody;
use crate::error::{invalid, Error, Result};
use crate::linalg::{Matrix, Vector};

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BodySpec {
    Ball {
        dim: usize,
        #[serde(default = "one")]
        radius: f64,
    },
    Ellipsoid {
        matrix: Vec<Vec<f64>>,
    },
    Cube {
        dim: usize,
        #[serde(default = "one")]
        scale: f64,
    },
    CrossPolytope {
        dim: usize,
        #[serde(default = "one")]
        scale: f64,
    },
    LpBall {
        dim: usize,
        p: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    HPolytope {
        rows: Vec<Vec<f64>>,
        offsets: Vec<f64>,
    },
    Intersection {
        left: Box<BodySpec>,
        right: Box<BodySpec>,
    },
    Hull {
        left: Box<BodySpec>,
        right: Box<BodySpec>,
    },
    LinearImage {
        matrix: Vec<Vec<f64>>,
        inner: Box<BodySpec>,
    },
    DifferenceBody {
        inner: Box<BodySpec>,
    },
}

fn matrix(rows: &[Vec<f64>], square: bool) -> Result<Matrix> {
    let m = rows.len();
    let n = rows.first().map_or(0, |r| r.len());
    if m == 0 || n == 0 || rows.iter().any(|r| r.len() != n) {
        return invalid("matrix rows must be non-empty and of equal length");
    }
    if square && m != n {
        return invalid("matrix must be square");
    }
    Ok(Matrix::from_fn(m, n, |i, j| rows[i][j]))
}

impl BodySpec {
    /// Builds the body, applying the semantic checks of each constructor.
    pub fn build(&self) -> Result<ConvexBody> {
        match self {
            BodySpec::Ball { dim, radius } => ConvexBody::ball(*dim, *radius),
            BodySpec::Ellipsoid { matrix: m } => ConvexBody::ellipsoid(matrix(m, true)?),
            BodySpec::Cube { dim, scale } => ConvexBody::cube(*dim, *scale),
            BodySpec::CrossPolytope { dim, scale } => ConvexBody::cross_polytope(*dim, *scale),
            BodySpec::LpBall { dim, p, scale } => ConvexBody::lp_ball(*dim, *p, *scale),
            BodySpec::HPolytope { rows, offsets } => {
                ConvexBody::h_polytope(matrix(rows, false)?, Vector::from_column_slice(offsets))
            }
            BodySpec::Intersection { left, right } => ConvexBody::intersection(&left.build()?, &right.build()?),
            BodySpec::Hull { left, right } => ConvexBody::hull(&left.build()?, &right.build()?),
            BodySpec::LinearImage { matrix: m, inner } => inner.build()?.apply_linear(&matrix(m, true)?),
            BodySpec::DifferenceBody { inner } => inner.build()?.difference_body(),
        }
    }
}

/// Parses a body file. Syntax and schema problems are parse errors; inconsistent
/// parameters (wrong shapes, non-positive radii, unbounded polytopes) are invalid input.
pub fn parse_body_file(text: &str) -> Result<ConvexBody> {
    let spec: BodySpec = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    spec.build()
}
