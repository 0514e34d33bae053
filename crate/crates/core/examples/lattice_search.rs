//! Shortest and closest lattice vectors under the l_inf and l_1 norms.

use mellipsoid::lattice::{cvp, svp, EnumConfig, LatticeBasis};
use mellipsoid::linalg::{Matrix, Vector};
use mellipsoid::ConvexBody;

fn main() -> mellipsoid::Result<()> {
    let basis = LatticeBasis::new(Matrix::from_row_slice(3, 3, &[3.0, 1.0, 0.0, 1.0, 2.5, 0.5, -1.0, 0.5, 2.0]))?;
    let target = Vector::from_vec(vec![4.2, -1.3, 2.9]);
    let cfg = EnumConfig::default();
    for (name, body) in [("l_inf", ConvexBody::cube(3, 1.0)?), ("l_1", ConvexBody::cross_polytope(3, 1.0)?)] {
        let s = svp(&basis, &body, &cfg)?;
        println!("{name}: shortest vector {:?} = {:.4?}, norm {:.4}", s.coefficients, s.vector.as_slice(), s.value);
        let c = cvp(&basis, &body, &target, 8.0, &cfg)?;
        println!("{name}: closest to target {:?} = {:.4?}, distance {:.4}", c.coefficients, c.vector.as_slice(), c.value);
        println!("       searched at scales {:.3?}", c.scales);
    }
    Ok(())
}
