//! Weights maximizing PN: the bivariate closed form and the simplex search
//! on fitted worlds.
//!
//! ```bash
//! cargo run --release --example optimal_weights
//! ```

use mvpot::attribution::{
    fit_world, optimal_weights_bivariate, optimal_weights_numeric, OptimizerConfig, Site, World, WorldSample,
};
use mvpot::mgpd::simulate_mgpd;
use mvpot::{GaussianGenerator, MgpdModel};

fn main() -> mvpot::Result<()> {
    for v in [1.0, 5.0, 20.0] {
        let o = optimal_weights_bivariate([2.0, 1.0], [5.0, 1.0], 0.0, v)?;
        println!("closed form, v = {v}: w = {:.3}, ratio {:.4} ({:?})", o.w, o.ratio, o.route);
    }
    for gamma in [-0.4, 0.0, 0.4] {
        let o = optimal_weights_bivariate([1.0, 1.0], [2.0, 1.2], gamma, 2.0)?;
        println!("shape {gamma:>4}: w = {:.3}, ratio {:.4}", o.w, o.ratio);
    }

    // only the second of four sites changes
    let g = GaussianGenerator::scaled_identity(4, 2.0)?;
    let m0 = MgpdModel::new(g.clone(), vec![1.0; 4], 0.0)?;
    let m1 = MgpdModel::new(g, vec![1.0, 1.8, 1.0, 1.0], 0.0)?;
    let x0 = WorldSample::with_quantile_thresholds(
        simulate_mgpd(&m0, 3000, 1)?.values,
        World::Counterfactual,
        Site::anonymous(4),
        0.95,
    )?;
    let x1 =
        WorldSample::with_quantile_thresholds(simulate_mgpd(&m1, 3000, 2)?.values, World::Factual, Site::anonymous(4), 0.95)?;
    let (f0, f1) = (fit_world(&x0)?, fit_world(&x1)?);
    let opt = optimal_weights_numeric((&x0, &f0), (&x1, &f1), 4.0, &OptimizerConfig::default())?;
    println!(
        "numeric optimum at v = 4: w = {:.3?}, PN = {:.3}",
        opt.w.as_slice(),
        opt.pn_hat
    );
    Ok(())
}
