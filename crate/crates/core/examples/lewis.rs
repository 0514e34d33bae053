//! Lewis position of an l_p ball and a family of dual certificates checking it.

use mellipsoid::lewis::{certify_lewis, solve_lewis_with, LewisConfig};
use mellipsoid::ConvexBody;

fn main() -> mellipsoid::Result<()> {
    for p in [1.5, 4.0] {
        let body = ConvexBody::lp_ball(3, p, 1.0)?;
        let sol = solve_lewis_with(&body, &LewisConfig::default())?;
        println!("l_{p} ball in dimension 3");
        println!("  det(A)^(1/n) = {:.6}, l~(A) = {:.6}", sol.objective, sol.ell_value);
        println!("  gap bound {:.2e} after {} iterations", sol.gap_bound, sol.iterations);
        println!("  A =\n{:.5}", sol.a);
        let cert = certify_lewis(&body, &sol, 64)?;
        println!(
            "  max tr(A^-1 T) = {:.4} against 2n = {} (strict {:.4}): {}",
            cert.max_trace,
            cert.bound,
            cert.strict_bound,
            if cert.pass { "PASS" } else { "FAIL" }
        );
    }
    Ok(())
}
