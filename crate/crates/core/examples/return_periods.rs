//! Return periods of a weighted sum under complete dependence, independence
//! and an MGPD with moderate tail dependence.
//!
//! ```bash
//! cargo run --release --example return_periods
//! ```

use mvpot::mgpd::calibrate_generator_to_chi;
use mvpot::return_period::{return_period, DependenceMode};
use mvpot::{MgpdModel, WeightVector};

fn main() -> mvpot::Result<()> {
    let model = MgpdModel::new(calibrate_generator_to_chi(0.5)?, vec![1.0, 1.0], 0.0)?;
    let modes = [
        ("complete", DependenceMode::CompleteDependence),
        ("independent", DependenceMode::Independence),
        (
            "mgpd",
            DependenceMode::Mgpd {
                model,
                mc_size: 2_000_000,
                seed: 3,
            },
        ),
    ];
    for w1 in [0.5, 0.2] {
        let w = WeightVector::bivariate(w1)?;
        for t in [10.0, 50.0, 100.0] {
            let cells: Vec<String> = modes
                .iter()
                .map(|(name, m)| return_period(m, &w, t).map(|r| format!("{name} {:.1}", r.years)))
                .collect::<mvpot::Result<_>>()?;
            println!("w = ({w1}, {}), T = {t}: {}", 1.0 - w1, cells.join(", "));
        }
    }
    Ok(())
}
