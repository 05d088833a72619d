//! Tail dependence: the model coefficient χ of a generator, calibration of
//! a generator to a target χ, and the rank-based estimate from data.
//!
//! ```bash
//! cargo run --release --example tail_dependence
//! ```

use mvpot::clustering::{chi_distance, empirical_chi};
use mvpot::mgpd::{calibrate_generator_to_chi, chi_pair_theoretical, simulate_mgpd};
use mvpot::{GaussianGenerator, MgpdModel};

fn main() -> mvpot::Result<()> {
    let chi = chi_pair_theoretical(&GaussianGenerator::identity(2), (0, 1), 1_000_000, 1)?;
    println!("identity generator: chi = {chi:.3}");

    for target in [0.2, 0.5, 0.8] {
        let g = calibrate_generator_to_chi(target)?;
        let c = g.covariance()[(0, 0)];
        let model = MgpdModel::new(g, vec![1.0, 1.0], 0.0)?;
        let z = simulate_mgpd(&model, 50_000, 2)?.values;
        let est = empirical_chi(&z.column(0), &z.column(1), 0.95)?;
        println!(
            "target {target}: variance {c:.3}, empirical chi at q = 0.95 {est:.3}, distance {:.3}",
            chi_distance(est)?
        );
    }
    Ok(())
}
