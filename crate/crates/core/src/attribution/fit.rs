use serde::{Deserialize, Serialize};

use super::sample::{extract_exceedances, WorldSample};
use crate::error::{Error, Result};
use crate::gpd::{pwm_fit, GpdParams, PWM_MIN_SAMPLE};
use crate::weights::WeightVector;

/// Smallest sample accepted for fitting.
pub const MIN_FIT_ROWS: usize = 50;

/// How the projected tail `wᵀZ | wᵀZ > 0` is parameterized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum TailFit {
    /// Per-site PWM fits, shape averaged across sites; any `w` can be used.
    MarginAverage { margins: Vec<GpdParams>, common_shape: f64 },
    /// PWM directly on the positive projected excesses for one fixed `w`.
    Projected { w: WeightVector, params: GpdParams },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedWorld {
    pub fit: TailFit,
    pub threshold_u: Vec<f64>,
    /// Per-site counts of strictly positive excesses.
    pub exceed_counts: Vec<usize>,
    pub n_exceed: usize,
}

impl FittedWorld {
    pub fn margins(&self) -> Option<&[GpdParams]> {
        match &self.fit {
            TailFit::MarginAverage { margins, .. } => Some(margins),
            TailFit::Projected { .. } => None,
        }
    }

    pub fn common_shape(&self) -> f64 {
        match &self.fit {
            TailFit::MarginAverage { common_shape, .. } => *common_shape,
            TailFit::Projected { params, .. } => params.shape(),
        }
    }

    /// GPD of `wᵀZ | wᵀZ > 0`: `(wᵀσ̂, γ̂)`.
    pub fn projected_params(&self, w: &[f64]) -> Result<GpdParams> {
        match &self.fit {
            TailFit::MarginAverage { margins, common_shape } => {
                if w.len() != margins.len() {
                    return Err(Error::domain("weight length does not match the fitted dimension"));
                }
                let scale: f64 = margins.iter().zip(w).map(|(m, w)| m.scale() * w).sum();
                GpdParams::new(scale, *common_shape)
            }
            TailFit::Projected { w: fixed, params } => {
                let same = fixed.dim() == w.len() && fixed.as_slice().iter().zip(w).all(|(a, b)| (a - b).abs() <= 1e-12);
                if !same {
                    return Err(Error::domain("projected fit was made for a different weight vector"));
                }
                Ok(*params)
            }
        }
    }
}

fn check_rows(sample: &WorldSample) -> Result<()> {
    if sample.n() < MIN_FIT_ROWS {
        return Err(Error::EstimationFailure(format!(
            "fitting needs at least {MIN_FIT_ROWS} rows, got {}",
            sample.n()
        )));
    }
    Ok(())
}

/// Per-site PWM fits on the positive excesses, with the common shape set to
/// the mean of the per-site shapes.
pub fn fit_world(sample: &WorldSample) -> Result<FittedWorld> {
    check_rows(sample)?;
    let exc = extract_exceedances(sample)?;
    let mut margins = Vec::with_capacity(sample.dim());
    let mut exceed_counts = Vec::with_capacity(sample.dim());
    for (j, site) in sample.sites().iter().enumerate() {
        let z = exc.positive_component(j);
        exceed_counts.push(z.len());
        if z.len() < PWM_MIN_SAMPLE {
            return Err(Error::SiteFit {
                site: site.id.clone(),
                reason: format!("{} positive excesses, need {PWM_MIN_SAMPLE}", z.len()),
            });
        }
        let fit = pwm_fit(&z).map_err(|e| Error::SiteFit {
            site: site.id.clone(),
            reason: e.to_string(),
        })?;
        margins.push(fit.params);
    }
    let common_shape = margins.iter().map(GpdParams::shape).sum::<f64>() / margins.len() as f64;
    Ok(FittedWorld {
        fit: TailFit::MarginAverage { margins, common_shape },
        threshold_u: sample.threshold_u().to_vec(),
        exceed_counts,
        n_exceed: exc.n_exceed,
    })
}

/// PWM on `wᵀZ | wᵀZ > 0`; the result is only valid for this `w`.
pub fn fit_world_projected(sample: &WorldSample, w: &WeightVector) -> Result<FittedWorld> {
    check_rows(sample)?;
    w.check_dim(sample.dim())?;
    let exc = extract_exceedances(sample)?;
    let projected: Vec<f64> = exc.z_rows.rows_iter().map(|r| w.dot(r)).filter(|&y| y > 0.0).collect();
    let params = pwm_fit(&projected)?.params;
    let exceed_counts = (0..sample.dim()).map(|j| exc.positive_component(j).len()).collect();
    Ok(FittedWorld {
        fit: TailFit::Projected { w: w.clone(), params },
        threshold_u: sample.threshold_u().to_vec(),
        exceed_counts,
        n_exceed: exc.n_exceed,
    })
}

/// Fitting strategy selectable from configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    #[default]
    MarginAverage,
    Projected,
}

/// [`fit_world`] or [`fit_world_projected`]; `w` is only used by the latter.
pub fn fit_world_with(sample: &WorldSample, method: FitMethod, w: &WeightVector) -> Result<FittedWorld> {
    match method {
        FitMethod::MarginAverage => fit_world(sample),
        FitMethod::Projected => fit_world_projected(sample, w),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::sample::{Site, World};
    use crate::matrix::RowMatrix;
    use crate::mgpd::{simulate_mgpd, GaussianGenerator, MgpdModel};

    fn mgpd_world(scales: Vec<f64>, n: usize, seed: u64, q: f64) -> WorldSample {
        let d = scales.len();
        let model = MgpdModel::new(GaussianGenerator::identity(d), scales, 0.0).unwrap();
        let z = simulate_mgpd(&model, n, seed).unwrap();
        WorldSample::with_quantile_thresholds(z.values, World::Counterfactual, Site::anonymous(d), q).unwrap()
    }

    fn recovery_rate(n: usize, seeds: u64) -> f64 {
        let ok = (0..seeds)
            .filter(|&s| {
                let fit = fit_world(&mgpd_world(vec![1.0, 2.0], n, 100 + s, 0.9)).unwrap();
                let m = fit.margins().unwrap();
                (m[0].scale() - 1.0).abs() < 0.1 && (m[1].scale() - 2.0).abs() < 0.2 && m.iter().all(|p| p.shape().abs() < 0.07)
            })
            .count();
        ok as f64 / seeds as f64
    }

    #[test]
    fn recovers_mgpd_margins() {
        let rate = recovery_rate(20_000, 100);
        assert!(rate >= 0.95, "{rate}");
    }

    // With about 500 excesses per site the PWM standard errors are roughly
    // 0.068σ and 0.052, so the joint tolerance holds in about 60% of seeds.
    #[test]
    #[ignore = "joint tolerance exceeds PWM precision at n = 5000"]
    fn recovers_mgpd_margins_n5000() {
        let rate = recovery_rate(5000, 100);
        assert!(rate >= 0.95, "{rate}");
    }

    #[test]
    fn one_site_reduces_to_pwm() {
        let s = mgpd_world(vec![1.5], 2000, 3, 0.9);
        let fit = fit_world(&s).unwrap();
        let exc: Vec<f64> = s
            .observations()
            .column(0)
            .iter()
            .map(|x| x - s.threshold_u()[0])
            .filter(|&z| z > 0.0)
            .collect();
        assert_eq!(fit.margins().unwrap()[0], pwm_fit(&exc).unwrap().params);
        assert_eq!(fit.common_shape(), fit.margins().unwrap()[0].shape());
    }

    #[test]
    fn duplicated_sites_fit_identically() {
        let s = mgpd_world(vec![1.0], 2000, 4, 0.9);
        let col = s.observations().column(0);
        let rows: Vec<Vec<f64>> = col.iter().map(|&x| vec![x, x]).collect();
        let u = s.threshold_u()[0];
        let dup = WorldSample::new(
            RowMatrix::from_rows(&rows).unwrap(),
            World::Factual,
            vec![u, u],
            Site::anonymous(2),
        )
        .unwrap();
        let fit = fit_world(&dup).unwrap();
        let m = fit.margins().unwrap();
        assert_eq!(m[0], m[1]);
        assert!((fit.common_shape() - m[0].shape()).abs() < 1e-12);
    }

    #[test]
    fn common_shape_is_mean() {
        let fit = fit_world(&mgpd_world(vec![1.0, 2.0, 0.5], 3000, 5, 0.9)).unwrap();
        let m = fit.margins().unwrap();
        let mean = m.iter().map(|p| p.shape()).sum::<f64>() / 3.0;
        assert!((fit.common_shape() - mean).abs() < 1e-12);
    }

    #[test]
    fn names_failing_site() {
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64, 1.0]).collect();
        let s = WorldSample::new(
            RowMatrix::from_rows(&rows).unwrap(),
            World::Factual,
            vec![50.0, 0.5],
            vec![Site::new("a", 0.0, 0.0), Site::new("flat", 1.0, 0.0)],
        )
        .unwrap();
        match fit_world(&s) {
            Err(Error::SiteFit { site, .. }) => assert_eq!(site, "flat"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn projected_fit_is_tied_to_its_weights() {
        let s = mgpd_world(vec![1.0, 3.0], 4000, 6, 0.9);
        let w = WeightVector::equal(2);
        let fit = fit_world_projected(&s, &w).unwrap();
        assert!((fit.projected_params(w.as_slice()).unwrap().scale() - 2.0).abs() < 0.3);
        assert!(fit.projected_params(&[0.3, 0.7]).is_err());
    }
}
