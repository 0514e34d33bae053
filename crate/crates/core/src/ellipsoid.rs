use crate::body::ConvexBody;
use crate::error::{invalid, Result};
use crate::linalg::{self, Matrix, Vector};

/// The ellipsoid `center + A * B` for a symmetric positive-definite `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ellipsoid {
    matrix: Matrix,
    inverse: Matrix,
    center: Vector,
}

impl Ellipsoid {
    pub fn new(a: Matrix) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n || !linalg::all_finite(&a) {
            return invalid("ellipsoid matrix must be square, finite and non-empty");
        }
        if (&a - a.transpose()).amax() > 1e-10 * a.amax().max(1.0) {
            return invalid("ellipsoid matrix must be symmetric");
        }
        let a = linalg::symmetrize(&a);
        let (vals, _) = linalg::sym_eigen(&a);
        if !(vals[0] > 0.0) || vals[n - 1] / vals[0] > crate::body::MAX_CONDITION {
            return invalid("ellipsoid matrix must be positive definite and well conditioned");
        }
        let inverse = linalg::symmetrize(&linalg::inverse(&a)?);
        Ok(Ellipsoid { matrix: a, inverse, center: Vector::zeros(n) })
    }

    /// The ellipsoid `G * B` for an invertible, possibly non-symmetric `G`.
    pub fn from_map(g: &Matrix) -> Result<Self> {
        if g.nrows() != g.ncols() {
            return invalid("ellipsoid map must be square");
        }
        Self::new(linalg::sym_sqrt(&(g * g.transpose())))
    }

    pub fn unit_ball(n: usize) -> Self {
        Self::new(Matrix::identity(n, n)).expect("identity is a valid ellipsoid")
    }

    pub fn with_center(mut self, center: Vector) -> Result<Self> {
        if center.len() != self.dim() || center.iter().any(|v| !v.is_finite()) {
            return invalid("ellipsoid center has wrong length or non-finite entries");
        }
        self.center = center;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }
    pub fn inverse(&self) -> &Matrix {
        &self.inverse
    }
    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn det(&self) -> f64 {
        self.matrix.determinant()
    }

    /// Semi-axis lengths (ascending) and the corresponding unit axes as columns.
    pub fn eigen(&self) -> (Vector, Matrix) {
        linalg::sym_eigen(&self.matrix)
    }

    pub fn volume(&self) -> f64 {
        linalg::unit_ball_volume(self.dim()) * self.det()
    }

    /// `||A^{-1}(x - center)||_2`.
    pub fn gauge(&self, x: &Vector) -> f64 {
        (&self.inverse * (x - &self.center)).norm()
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(&self.matrix * s)?.with_center(self.center.clone())
    }

    /// The image under `x -> M x` (the center is mapped too).
    pub fn mapped(&self, m: &Matrix) -> Result<Self> {
        Self::from_map(&(m * &self.matrix))?.with_center(m * &self.center)
    }

    /// The origin-centred body `A * B`.
    pub fn to_body(&self) -> Result<ConvexBody> {
        ConvexBody::ellipsoid(self.matrix.clone())
    }

    /// Largest ratio between corresponding semi-axes after aligning `other` to `self`:
    /// `max(sigma_max, 1/sigma_min)` of `A^{-1} B`. Equals 1 iff the ellipsoids coincide.
    pub fn axis_ratio(&self, other: &Ellipsoid) -> f64 {
        let (lo, hi) = linalg::singular_range(&(&self.inverse * &other.matrix));
        hi.max(1.0 / lo)
    }
}
