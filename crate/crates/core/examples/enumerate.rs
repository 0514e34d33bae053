//! All points of a skewed lattice in a translated convex body, listed by coefficients.

use mellipsoid::lattice::{covering_ellipsoid, enum_body, EnumConfig, LatticeBasis};
use mellipsoid::linalg::{Matrix, Vector};
use mellipsoid::ConvexBody;

fn main() -> mellipsoid::Result<()> {
    let basis = LatticeBasis::new(Matrix::from_row_slice(2, 2, &[1.0, 0.3, -0.4, 0.8]))?;
    let body = ConvexBody::lp_ball(2, 3.0, 2.0)?;
    let e = covering_ellipsoid(&body)?;
    let center = Vector::from_vec(vec![0.7, -0.2]);
    let points = enum_body(&basis, &body, &center, &e, &EnumConfig::default())?;
    println!("{} lattice points in center + K", points.len());
    for p in &points {
        println!("  {:>3?} -> ({:>7.3}, {:>7.3})", p.coefficients, p.point[0], p.point[1]);
    }
    Ok(())
}
