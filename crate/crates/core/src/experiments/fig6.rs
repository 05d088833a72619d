use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Check, Experiment, Report, Table};
use crate::attribution::{estimate_pn, fit_world, pooled_baseline_pn, univariate_baseline_pn, World, WorldSample};
use crate::data::fig6_models;
use crate::error::{Error, Result};
use crate::mgpd::{linear_project, projection_exceed_prob, simulate_mgpd, GaussianGenerator, MgpdModel};
use crate::rng::derive_seed;
use crate::stats::{quantile, quantile_sorted};
use crate::weights::WeightVector;

#[derive(Debug, Clone)]
pub struct Fig6Config {
    pub samples: usize,
    pub n: usize,
    pub dims: Vec<usize>,
    /// Per-site threshold level of the multivariate fit; the univariate
    /// baseline thresholds `wᵀX` at the same level.
    pub threshold_quantile: f64,
    /// The event `v` is this quantile of `wᵀZ⁽⁰⁾` under equal weights.
    pub event_quantile: f64,
    pub presim: usize,
    pub seed: u64,
}

impl Default for Fig6Config {
    fn default() -> Self {
        Self {
            samples: 200,
            n: 1000,
            dims: (2..=9).collect(),
            threshold_quantile: 0.95,
            event_quantile: 0.99,
            presim: 1_000_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig6Dimension {
    pub d: usize,
    pub v: f64,
    /// Monte-Carlo PN of the generating models at `v`.
    pub true_pn: f64,
    pub n_valid: usize,
    pub median_diff: f64,
    pub q25_diff: f64,
    pub q75_diff: f64,
    pub median_multivariate: f64,
    pub median_univariate: f64,
    /// Median of multivariate minus the pooled-sites baseline.
    pub median_diff_pooled: f64,
    pub median_pooled: f64,
}

/// The first `d` grid sites of a model.
fn restrict(model: &MgpdModel, d: usize) -> Result<MgpdModel> {
    let idx: Vec<usize> = (0..d).collect();
    let g = &model.generator;
    let cov = g.covariance().select_rows(&idx).select_columns(&idx);
    let sub = GaussianGenerator::new(g.mean()[..d].to_vec(), cov)?;
    MgpdModel::new(sub, model.scales()[..d].to_vec(), model.shape())
}

/// Multivariate-minus-univariate PN differences for one dimension.
pub fn fig6_dimension(cfg: &Fig6Config, d: usize) -> Result<(Fig6Dimension, Vec<f64>)> {
    let (sites, m0, m1) = fig6_models()?;
    if !(1..=sites.len()).contains(&d) {
        return Err(Error::domain(format!("dimension must lie in 1..={}, got {d}", sites.len())));
    }
    let (m0, m1) = (restrict(&m0, d)?, restrict(&m1, d)?);
    let sites = sites[..d].to_vec();
    let w = WeightVector::equal(d);
    let tag = (d as u64) << 32;

    let pre = simulate_mgpd(&m0, cfg.presim, derive_seed(cfg.seed, tag))?;
    let mut proj = linear_project(&pre, &w)?;
    proj.sort_by(f64::total_cmp);
    let v = quantile_sorted(&proj, cfg.event_quantile);
    let p0 = projection_exceed_prob(&m0, &w, v, cfg.presim, derive_seed(cfg.seed, tag | 1))?.estimate;
    let p1 = projection_exceed_prob(&m1, &w, v, cfg.presim, derive_seed(cfg.seed, tag | 2))?.estimate;
    let true_pn = if p1 > 0.0 { (1.0 - p0 / p1).max(0.0) } else { f64::NAN };

    let q = cfg.threshold_quantile;
    let runs: Vec<Option<(f64, f64, f64)>> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|s| {
            let seed = derive_seed(cfg.seed, tag | (1 << 16) | s);
            let one = || -> Result<(f64, f64, f64)> {
                let z0 = simulate_mgpd(&m0, cfg.n, derive_seed(seed, 0))?.values;
                let z1 = simulate_mgpd(&m1, cfg.n, derive_seed(seed, 1))?.values;
                let x0 = WorldSample::with_quantile_thresholds(z0, World::Counterfactual, sites.clone(), q)?;
                let x1 = WorldSample::with_quantile_thresholds(z1, World::Factual, sites.clone(), q)?;
                let (f0, f1) = (fit_world(&x0)?, fit_world(&x1)?);
                let multi = estimate_pn((&x0, &f0), (&x1, &f1), &w, v)?.pn_hat;
                let uni = univariate_baseline_pn(&x0, &x1, &w, v, q)?.pn_hat;
                let pooled = pooled_baseline_pn(&x0, &x1, v, q)?.pn_hat;
                Ok((multi, uni, pooled))
            };
            one().ok()
        })
        .collect();
    let pairs: Vec<(f64, f64, f64)> = runs.into_iter().flatten().collect();
    if pairs.is_empty() {
        return Err(Error::EstimationFailure(format!("every sample failed at d = {d}")));
    }
    let diffs: Vec<f64> = pairs.iter().map(|(m, u, _)| m - u).collect();
    let pooled_diffs: Vec<f64> = pairs.iter().map(|(m, _, p)| m - p).collect();
    let pooled: Vec<f64> = pairs.iter().map(|p| p.2).collect();
    let multi: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let uni: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok((
        Fig6Dimension {
            d,
            v,
            true_pn,
            n_valid: pairs.len(),
            median_diff: quantile(&diffs, 0.5)?,
            q25_diff: quantile(&diffs, 0.25)?,
            q75_diff: quantile(&diffs, 0.75)?,
            median_multivariate: quantile(&multi, 0.5)?,
            median_univariate: quantile(&uni, 0.5)?,
            median_diff_pooled: quantile(&pooled_diffs, 0.5)?,
            median_pooled: quantile(&pooled, 0.5)?,
        },
        diffs,
    ))
}

/// Counts adjacent decreases in `x`.
fn inversions(x: &[f64]) -> usize {
    x.windows(2).filter(|p| p[1] < p[0]).count()
}

fn sign_and_trend_checks(label: &str, medians: &[f64]) -> Vec<Check> {
    let inv = inversions(medians);
    let fmt = medians.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>().join(", ");
    vec![
        Check::new(
            format!("{label}: median difference > 0 for every d"),
            fmt,
            "all > 0",
            medians.iter().all(|&m| m > 0.0),
        ),
        Check::new(
            format!("{label}: median difference nondecreasing in d"),
            format!("{inv} inversions"),
            "at most 1",
            inv <= 1,
        ),
    ]
}

/// Multivariate-minus-univariate PN on the Whittle–Matérn grid for each
/// dimension, with the median sign and trend checks.
pub fn fig6(cfg: &Fig6Config) -> Result<Report> {
    let mut summary = Table::new(
        "summary",
        &[
            "d",
            "v",
            "true_pn",
            "n_valid",
            "median_diff",
            "q25_diff",
            "q75_diff",
            "median_multivariate",
            "median_univariate",
            "median_diff_pooled",
            "median_pooled",
        ],
    );
    let mut samples = Table::new("differences", &["d", "sample", "diff"]);
    let mut medians = Vec::new();
    let mut pooled = Vec::new();
    for &d in &cfg.dims {
        let (s, diffs) = fig6_dimension(cfg, d)?;
        summary.push(vec![
            d as f64,
            s.v,
            s.true_pn,
            s.n_valid as f64,
            s.median_diff,
            s.q25_diff,
            s.q75_diff,
            s.median_multivariate,
            s.median_univariate,
            s.median_diff_pooled,
            s.median_pooled,
        ]);
        for (i, x) in diffs.iter().enumerate() {
            samples.push(vec![d as f64, i as f64, *x]);
        }
        medians.push(s.median_diff);
        pooled.push(s.median_diff_pooled);
    }
    let mut checks = sign_and_trend_checks("projected baseline", &medians);
    checks.extend(sign_and_trend_checks("pooled-sites baseline", &pooled));
    Ok(Report {
        experiment: Experiment::Fig6,
        seed: cfg.seed,
        tables: vec![summary, samples],
        checks,
    })
}
