//! Gauge and support queries on bodies built from a file and by combining primitives.

use mellipsoid::body::parse_body_file;
use mellipsoid::linalg::Vector;
use mellipsoid::ConvexBody;

const TRIANGLE: &str = r#"
kind = "h-polytope"
rows = [[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]]
offsets = [0.3333333333333333, 0.3333333333333333, 0.3333333333333333]
"#;

fn main() -> mellipsoid::Result<()> {
    let triangle = parse_body_file(TRIANGLE)?;
    let disc = ConvexBody::ball(2, 0.3)?;
    let bodies = [
        ("triangle", triangle.clone()),
        ("triangle - triangle", triangle.difference_body()?),
        ("hull(triangle, disc)", ConvexBody::hull(&triangle, &disc)?),
        ("triangle and disc", ConvexBody::intersection(&triangle, &disc)?),
    ];
    let x = Vector::from_vec(vec![0.25, 0.1]);
    let u = Vector::from_vec(vec![1.0, -2.0]);
    for (name, k) in &bodies {
        println!(
            "{name:<22} gauge(x) = {:.5}  support(u) = {:.5}  symmetric: {}",
            k.gauge(&x)?,
            k.support(&u)?,
            k.is_symmetric()
        );
    }
    Ok(())
}
