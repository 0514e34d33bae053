//! M-ellipsoid of the 4-dimensional cross-polytope, round by round, with its covering
//! certificate.

use mellipsoid::milman::{m_ellipsoid_general, MilmanConfig};
use mellipsoid::{suite, ConvexBody};

fn main() -> mellipsoid::Result<()> {
    let body = ConvexBody::cross_polytope(4, 1.0)?;
    let (e, trace, position) = m_ellipsoid_general(&body, &MilmanConfig::default())?;
    println!("{} rounds for n = {}", trace.steps.len(), trace.n);
    for (i, step) in trace.steps.iter().enumerate() {
        println!(
            "  round {}: r_in = {:.4}, r_out = {:.4}, sandwich ratio {:.3}",
            i + 1,
            step.r_in,
            step.r_out,
            step.bm_ratio
        );
    }
    println!("final sandwich c_f = {:.4} (ok: {})", trace.c_f, trace.sandwich_ok);
    println!("normalizing map:\n{position:.4}");
    println!("ellipsoid matrix:\n{:.4}", e.matrix());
    let cover = suite::certificate(&body, &e)?;
    println!("N(K,E) N(E,K) <= {:.3e}, per dimension {:.3}", cover.value, cover.per_dimension(4));
    Ok(())
}
