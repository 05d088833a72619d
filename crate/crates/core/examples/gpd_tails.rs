//! Univariate tails: GPD survival and quantiles, a PWM fit to simulated
//! excesses, and the causation triple for two fitted tails.
//!
//! ```bash
//! cargo run --release --example gpd_tails
//! ```

use mvpot::causation::{pn_curve_univariate, UnivariateWorld};
use mvpot::rng::substream;
use mvpot::{causation_probabilities, gpd_quantile, gpd_survival, pn_limit, pwm_fit, tail_prob, GpdParams, TailModel};

fn main() -> mvpot::Result<()> {
    let h = GpdParams::new(1.0, 0.2)?;
    println!(
        "GPD(1, 0.2): survival at 2 = {:.4}, median = {:.4}",
        gpd_survival(2.0, &h)?,
        gpd_quantile(0.5, &h)?
    );

    let mut rng = substream(42, 0);
    let excesses: Vec<f64> = (0..2000).map(|_| h.sample(&mut rng)).collect();
    let fit = pwm_fit(&excesses)?;
    println!(
        "PWM fit on 2000 excesses: scale {:.3}, shape {:.3}",
        fit.params.scale(),
        fit.params.shape()
    );

    // exceedance rate 5% above u = 10 in both worlds, heavier scale in the factual one
    let m0 = TailModel::new(0.05, 10.0, GpdParams::new(1.0, 0.2)?)?;
    let m1 = TailModel::new(0.05, 10.0, GpdParams::new(1.5, 0.2)?)?;
    for v in [11.0, 15.0, 25.0] {
        let (p0, p1) = (tail_prob(&m0, v)?, tail_prob(&m1, v)?);
        let t = causation_probabilities(p0, p1)?;
        println!(
            "v = {v:>4}: p0 = {p0:.2e}, p1 = {p1:.2e}, PN = {:.4}, PS = {:.2e}, PNS = {:.2e}",
            t.pn.unwrap(),
            t.ps.unwrap(),
            t.pns
        );
    }
    println!("PN limit as v grows: {:.4}", pn_limit(&m0, &m1)?);

    let curve = pn_curve_univariate(
        &UnivariateWorld::Gaussian { mean: 0.0, sd: 1.0 },
        &UnivariateWorld::Gaussian { mean: 1.0, sd: 1.5 },
        &[0.0, 1.0, 3.0, 6.0],
    )?;
    for c in curve {
        println!(
            "Gaussian worlds, v = {}: PN = {:.4}, PNS = {:.4}",
            c.v,
            c.triple.pn.unwrap_or(f64::NAN),
            c.triple.pns
        );
    }
    Ok(())
}
