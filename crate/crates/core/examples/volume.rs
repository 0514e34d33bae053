//! Volume estimates by tile counting, compared with the exact volumes.

use mellipsoid::volume::{volume_of, VolumeConfig};
use mellipsoid::{suite, Result};

fn main() -> Result<()> {
    let eps = 0.5;
    for (name, body, exact) in suite::volume_cases(3)? {
        let (estimate, report, _) = volume_of(&body, eps, &VolumeConfig::default())?;
        println!(
            "{name:<15} estimate {estimate:>9.4}  exact {exact:>9.4}  ratio {:.4}  tiles {}",
            estimate / exact,
            report.tiles.count
        );
    }
    println!("every ratio lies in [1, (1 + eps)^n] = [1, {:.4}]", (1.0 + eps).powi(3));
    Ok(())
}
