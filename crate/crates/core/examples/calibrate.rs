//! Calibration run for the constants frozen in the library and asserted by the acceptance
//! suite. Prints `beta_calib` (the largest `covering_product_bound^{1/n}` over the
//! benchmark suite in dimensions 2 to 5),
//! `c_vol` (the largest `|log(estimate / vol)| / (eps n)` over the volume cases) and
//! `c_count` (the largest `log(tiles) / (n log(1 / eps))` over the same cases).

use std::time::Instant;

use mellipsoid::milman::{m_ellipsoid_general, MilmanConfig};
use mellipsoid::suite;
use mellipsoid::volume::{volume_of, VolumeConfig};

/// Pass dimensions as arguments to restrict the covering part, e.g. `calibrate 2 3`.
fn main() -> mellipsoid::Result<()> {
    let mut beta: f64 = 0.0;
    let dims: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    for n in 2..=5 {
        if !dims.is_empty() && !dims.contains(&n) {
            continue;
        }
        for (name, body) in suite::calibration_suite(n)? {
            let t0 = Instant::now();
            let (e, _, _) = m_ellipsoid_general(&body, &MilmanConfig::default())?;
            let t1 = t0.elapsed();
            let cert = suite::certificate(&body, &e)?;
            let b = cert.per_dimension(n);
            beta = beta.max(b);
            println!(
                "n={n} {name:<15} beta={b:.4} body_width={:.3} meet_width={:.3} ellipsoid {:.2?} certificate {:.2?}",
                cert.body.relative_width(),
                cert.intersection.relative_width(),
                t1,
                t0.elapsed() - t1
            );
        }
    }
    println!("beta_calib = {:.6}", round_up(beta));

    let mut c_vol: f64 = 0.0;
    let mut c_count: f64 = 0.0;
    for n in 2..=3 {
        for (name, body, exact) in suite::volume_cases(n)? {
            for eps in [0.25, 0.5] {
                let t0 = Instant::now();
                let (est, report, _) = volume_of(&body, eps, &VolumeConfig::default())?;
                let c = (est / exact).ln().abs() / (eps * n as f64);
                c_vol = c_vol.max(c);
                c_count = c_count.max((report.tiles.count as f64).ln() / (n as f64 * (1.0 / eps).ln()));
                println!(
                    "n={n} {name:<15} eps={eps} estimate={est:.5} exact={exact:.5} tiles={} flagged={} c={c:.4} {:.2?}",
                    report.tiles.count,
                    report.tiles.flagged,
                    t0.elapsed()
                );
            }
        }
    }
    println!("c_vol = {:.6}", round_up(c_vol));
    println!("c_count = {:.6}", round_up(c_count));
    Ok(())
}

/// Rounds up at the sixth decimal so the printed constant bounds every measured value.
fn round_up(x: f64) -> f64 {
    (x * 1e6).ceil() / 1e6
}
