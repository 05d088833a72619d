//! PN of a multivariate event from two simulated worlds: marginal fits,
//! the two-term tail estimator, a bootstrap interval and the univariate
//! comparators.
//!
//! ```bash
//! cargo run --release --example two_world_pn
//! ```

use mvpot::attribution::{
    bootstrap_pn_ci, estimate_pn, fit_world, pooled_baseline_pn, univariate_baseline_pn, BootstrapConfig, Site, World,
    WorldSample,
};
use mvpot::mgpd::simulate_mgpd;
use mvpot::{GaussianGenerator, MgpdModel, WeightVector};

fn main() -> mvpot::Result<()> {
    let g = GaussianGenerator::scaled_identity(3, 2.0)?;
    let m0 = MgpdModel::new(g.clone(), vec![1.0, 1.0, 1.0], 0.1)?;
    let m1 = MgpdModel::new(g, vec![1.4, 1.3, 1.5], 0.1)?;
    let sites = Site::anonymous(3);
    let q = 0.95;
    let x0 = WorldSample::with_quantile_thresholds(simulate_mgpd(&m0, 2000, 1)?.values, World::Counterfactual, sites.clone(), q)?;
    let x1 = WorldSample::with_quantile_thresholds(simulate_mgpd(&m1, 2000, 2)?.values, World::Factual, sites, q)?;
    let (f0, f1) = (fit_world(&x0)?, fit_world(&x1)?);
    for (name, f) in [("counterfactual", &f0), ("factual", &f1)] {
        let m = f.margins().unwrap();
        let scales: Vec<String> = m.iter().map(|p| format!("{:.2}", p.scale())).collect();
        println!("{name}: scales [{}], common shape {:.3}", scales.join(", "), f.common_shape());
    }

    let w = WeightVector::equal(3);
    let cfg = BootstrapConfig {
        replicates: 300,
        seed: 9,
        threshold_quantile: Some(q),
        ..Default::default()
    };
    for v in [3.0, 5.0, 8.0] {
        let est = estimate_pn((&x0, &f0), (&x1, &f1), &w, v)?;
        let ci = bootstrap_pn_ci(&x0, &x1, &w, v, &cfg)?;
        let est = est.with_interval(ci.lo, ci.hi, ci.n_valid);
        let (lo, hi) = est.ci_95.unwrap();
        let proj = univariate_baseline_pn(&x0, &x1, &w, v, q)?.pn_hat;
        let pooled = pooled_baseline_pn(&x0, &x1, v, q)?.pn_hat;
        println!(
            "v = {v}: PN = {:.3} [{lo:.3}, {hi:.3}]; projected-series {proj:.3}, pooled-sites {pooled:.3}",
            est.pn_hat
        );
    }
    Ok(())
}
