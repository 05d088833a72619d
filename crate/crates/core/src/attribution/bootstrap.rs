use log::warn;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimate::estimate_pn;
use super::fit::{fit_world_with, FitMethod};
use super::sample::WorldSample;
use crate::data::column_quantiles;
use crate::error::{Error, Result};
use crate::matrix::RowMatrix;
use crate::rng::{substream, Rng};
use crate::stats::percentile_interval;
use crate::weights::WeightVector;

pub const MIN_REPLICATES: usize = 100;

/// Share of dropped replicates above which an interval is flagged.
pub const UNRELIABLE_SHARE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
    /// Moving-block length; 1 resamples rows independently.
    pub block_len: usize,
    pub level: f64,
    /// Recompute per-site thresholds at this quantile on every replicate;
    /// `None` keeps the original thresholds.
    pub threshold_quantile: Option<f64>,
    pub method: FitMethod,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 500,
            seed: 0,
            block_len: 1,
            level: 0.95,
            threshold_quantile: None,
            method: FitMethod::MarginAverage,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub lo: f64,
    pub hi: f64,
    pub replicates: usize,
    pub n_valid: usize,
    /// Replicates where PN was undefined (`p̂1 = 0`).
    pub n_undefined: usize,
    /// Replicates where a refit or tail estimate failed.
    pub n_failed: usize,
    pub unreliable: bool,
}

/// Row indices of one (block) bootstrap resample of `n` rows.
pub(crate) fn resample_indices(rng: &mut Rng, n: usize, block_len: usize) -> Vec<usize> {
    let len = block_len.clamp(1, n.max(1));
    let mut idx = Vec::with_capacity(n);
    while idx.len() < n {
        let start = rng.random_range(0..=n - len);
        idx.extend((start..start + len).take(n - idx.len()));
    }
    idx
}

fn resample(sample: &WorldSample, rng: &mut Rng, cfg: &BootstrapConfig) -> Result<WorldSample> {
    let idx = resample_indices(rng, sample.n(), cfg.block_len);
    let rows: RowMatrix = sample.observations().select_rows(&idx);
    match cfg.threshold_quantile {
        Some(q) => {
            let u = column_quantiles(&rows, q)?;
            sample.with_observations(rows).with_thresholds(u)
        }
        None => Ok(sample.with_observations(rows)),
    }
}

enum Replicate {
    Valid(f64),
    Undefined,
    Failed,
}

/// Percentile interval for PN at fixed `w` and `v`.
///
/// Replicate `b` resamples both worlds from sub-stream `b` of `seed`
/// (counterfactual first), refits and re-estimates. Replicates run in
/// parallel and are collected in order, so the result is independent of
/// the thread count.
pub fn bootstrap_pn_ci(
    cf: &WorldSample,
    f: &WorldSample,
    w: &WeightVector,
    v: f64,
    cfg: &BootstrapConfig,
) -> Result<BootstrapCi> {
    Ok(bootstrap_pn_curve(cf, f, w, &[v], cfg)?.remove(0))
}

/// [`bootstrap_pn_ci`] at several levels, sharing one refit per replicate.
pub fn bootstrap_pn_curve(
    cf: &WorldSample,
    f: &WorldSample,
    w: &WeightVector,
    levels: &[f64],
    cfg: &BootstrapConfig,
) -> Result<Vec<BootstrapCi>> {
    if cfg.replicates < MIN_REPLICATES {
        return Err(Error::domain(format!(
            "need at least {MIN_REPLICATES} replicates, got {}",
            cfg.replicates
        )));
    }
    if !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(Error::domain(format!(
            "confidence level must lie in (0,1), got {}",
            cfg.level
        )));
    }
    if levels.is_empty() {
        return Err(Error::domain("no event levels given"));
    }
    w.check_dim(cf.dim())?;
    w.check_dim(f.dim())?;

    let outcomes: Vec<Vec<Replicate>> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(cfg.seed, b);
            let fitted = (|| -> Result<_> {
                let s0 = resample(cf, &mut rng, cfg)?;
                let s1 = resample(f, &mut rng, cfg)?;
                let f0 = fit_world_with(&s0, cfg.method, w)?;
                let f1 = fit_world_with(&s1, cfg.method, w)?;
                Ok((s0, f0, s1, f1))
            })();
            match fitted {
                Err(_) => levels.iter().map(|_| Replicate::Failed).collect(),
                Ok((s0, f0, s1, f1)) => levels
                    .iter()
                    .map(|&v| match estimate_pn((&s0, &f0), (&s1, &f1), w, v) {
                        Ok(e) => Replicate::Valid(e.pn_hat),
                        Err(Error::PnUndefined(_)) => Replicate::Undefined,
                        Err(_) => Replicate::Failed,
                    })
                    .collect(),
            }
        })
        .collect();

    (0..levels.len())
        .map(|i| summarize(outcomes.iter().map(|o| &o[i]), cfg))
        .collect()
}

fn summarize<'a>(outcomes: impl Iterator<Item = &'a Replicate>, cfg: &BootstrapConfig) -> Result<BootstrapCi> {
    let mut values = Vec::new();
    let (mut n_undefined, mut n_failed) = (0, 0);
    for o in outcomes {
        match o {
            Replicate::Valid(pn) => values.push(*pn),
            Replicate::Undefined => n_undefined += 1,
            Replicate::Failed => n_failed += 1,
        }
    }
    let dropped = n_undefined + n_failed;
    let unreliable = dropped as f64 > UNRELIABLE_SHARE * cfg.replicates as f64;
    if unreliable {
        warn!(
            "bootstrap interval unreliable: {dropped} of {} replicates dropped ({n_undefined} undefined, {n_failed} failed)",
            cfg.replicates
        );
    }
    if values.is_empty() {
        return Err(Error::EstimationFailure(format!(
            "all {} bootstrap replicates were dropped",
            cfg.replicates
        )));
    }
    let (lo, hi) = percentile_interval(&values, cfg.level)?;
    Ok(BootstrapCi {
        lo,
        hi,
        replicates: cfg.replicates,
        n_valid: values.len(),
        n_undefined,
        n_failed,
        unreliable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::sample::{Site, World};
    use crate::mgpd::{simulate_mgpd, GaussianGenerator, MgpdModel};

    fn world(scales: Vec<f64>, n: usize, seed: u64, world: World) -> WorldSample {
        let model = MgpdModel::new(GaussianGenerator::identity(scales.len()), scales.clone(), 0.0).unwrap();
        let z = simulate_mgpd(&model, n, seed).unwrap();
        WorldSample::with_quantile_thresholds(z.values, world, Site::anonymous(scales.len()), 0.9).unwrap()
    }

    #[test]
    fn block_indices_cover_n() {
        let mut rng = substream(1, 0);
        for (n, l) in [(10, 1), (10, 3), (7, 7), (5, 20)] {
            let idx = resample_indices(&mut rng, n, l);
            assert_eq!(idx.len(), n);
            assert!(idx.iter().all(|&i| i < n));
        }
    }

    #[test]
    fn identical_worlds_cover_zero() {
        let s = world(vec![1.0, 2.0], 1000, 2, World::Counterfactual);
        let cfg = BootstrapConfig {
            replicates: 200,
            seed: 3,
            ..Default::default()
        };
        let ci = bootstrap_pn_ci(&s, &s, &WeightVector::equal(2), 5.0, &cfg).unwrap();
        assert!(ci.lo <= 0.0 && ci.hi >= 0.0, "{ci:?}");
    }

    #[test]
    fn separated_worlds_concentrate_near_one() {
        let s0 = world(vec![0.2, 0.2], 2000, 4, World::Counterfactual);
        let s1 = world(vec![5.0, 5.0], 2000, 5, World::Factual);
        let cfg = BootstrapConfig {
            replicates: 200,
            seed: 6,
            ..Default::default()
        };
        let ci = bootstrap_pn_ci(&s0, &s1, &WeightVector::equal(2), 10.0, &cfg).unwrap();
        assert!(ci.hi - ci.lo < 0.1 && ci.lo > 0.9, "{ci:?}");
    }

    #[test]
    fn reproducible() {
        let s0 = world(vec![1.0, 1.0], 500, 7, World::Counterfactual);
        let s1 = world(vec![1.5, 1.0], 500, 8, World::Factual);
        let cfg = BootstrapConfig {
            replicates: 100,
            seed: 9,
            block_len: 4,
            ..Default::default()
        };
        let w = WeightVector::equal(2);
        assert_eq!(
            bootstrap_pn_ci(&s0, &s1, &w, 3.0, &cfg).unwrap(),
            bootstrap_pn_ci(&s0, &s1, &w, 3.0, &cfg).unwrap()
        );
    }

    #[test]
    fn rejects_few_replicates() {
        let s = world(vec![1.0], 200, 1, World::Factual);
        let cfg = BootstrapConfig {
            replicates: 50,
            ..Default::default()
        };
        assert!(bootstrap_pn_ci(&s, &s, &WeightVector::equal(1), 1.0, &cfg).is_err());
    }
}
