//! Certified volume brackets and the covering bound between a body and an ellipsoid.

use mellipsoid::covering::{covering_product_bound, grid_volume};
use mellipsoid::{ConvexBody, Ellipsoid};

fn main() -> mellipsoid::Result<()> {
    let square = ConvexBody::cube(2, 1.0)?;
    for h in [0.1, 0.05, 0.025] {
        let b = grid_volume(&square.apply_linear(&mellipsoid::suite::test_maps(2)[0])?, h)?;
        println!("mapped square, step {h}: volume in [{:.4}, {:.4}]", b.lower, b.upper);
    }
    for r in [0.8, 1.0, 1.2, 1.5] {
        let disc = Ellipsoid::unit_ball(2).scaled(r)?;
        let c = covering_product_bound(&square, &disc, 0.005)?;
        println!("square and disc of radius {r}: N(K,E) N(E,K) <= {:.1}", c.value);
    }
    Ok(())
}
