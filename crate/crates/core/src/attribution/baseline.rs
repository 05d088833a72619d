use super::estimate::{estimate_pn, CausationEstimate};
use super::fit::fit_world;
use super::sample::{Site, WorldSample};
use crate::data::column_quantiles;
use crate::error::Result;
use crate::matrix::RowMatrix;
use crate::weights::WeightVector;

/// The scalar series `wᵀX` as a one-site sample thresholded at its own
/// empirical `quantile`.
pub fn project_world(sample: &WorldSample, w: &WeightVector, quantile: f64) -> Result<WorldSample> {
    w.check_dim(sample.dim())?;
    let y = sample.projections(w);
    let obs = RowMatrix::from_vec(y.len(), 1, y)?;
    let u = column_quantiles(&obs, quantile)?;
    WorldSample::new(obs, sample.world(), u, vec![Site::new("projection", 0.0, 0.0)])
}

/// PN from univariate peaks-over-thresholds fits to `wᵀX` in each world,
/// ignoring the multivariate structure. `threshold_quantile` should match
/// the level used for the per-site thresholds of the multivariate fit.
pub fn univariate_baseline_pn(
    cf: &WorldSample,
    f: &WorldSample,
    w: &WeightVector,
    v: f64,
    threshold_quantile: f64,
) -> Result<CausationEstimate> {
    let y0 = project_world(cf, w, threshold_quantile)?;
    let y1 = project_world(f, w, threshold_quantile)?;
    let (f0, f1) = (fit_world(&y0)?, fit_world(&y1)?);
    let mut est = estimate_pn((&y0, &f0), (&y1, &f1), &WeightVector::equal(1), v)?;
    est.w = w.clone();
    Ok(est)
}

/// All sites' observations pooled into one series of length `n·d`,
/// thresholded at its own empirical `quantile`.
pub fn pool_world(sample: &WorldSample, quantile: f64) -> Result<WorldSample> {
    let pooled: Vec<f64> = sample.observations().as_slice().to_vec();
    let obs = RowMatrix::from_vec(pooled.len(), 1, pooled)?;
    let u = column_quantiles(&obs, quantile)?;
    WorldSample::new(obs, sample.world(), u, vec![Site::new("pooled", 0.0, 0.0)])
}

/// PN at level `v` from univariate fits to the pooled site observations,
/// i.e. treating sites as independent replicates of one variable.
pub fn pooled_baseline_pn(cf: &WorldSample, f: &WorldSample, v: f64, threshold_quantile: f64) -> Result<CausationEstimate> {
    let y0 = pool_world(cf, threshold_quantile)?;
    let y1 = pool_world(f, threshold_quantile)?;
    let (f0, f1) = (fit_world(&y0)?, fit_world(&y1)?);
    estimate_pn((&y0, &f0), (&y1, &f1), &WeightVector::equal(1), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::sample::World;
    use crate::mgpd::{simulate_mgpd, GaussianGenerator, MgpdModel};

    #[test]
    fn one_site_equals_multivariate() {
        let model = MgpdModel::new(GaussianGenerator::identity(1), vec![1.0], 0.1).unwrap();
        let m1 = MgpdModel::new(GaussianGenerator::identity(1), vec![1.4], 0.1).unwrap();
        let q = 0.9;
        let s0 = WorldSample::with_quantile_thresholds(
            simulate_mgpd(&model, 1500, 1).unwrap().values,
            World::Counterfactual,
            Site::anonymous(1),
            q,
        )
        .unwrap();
        let s1 = WorldSample::with_quantile_thresholds(
            simulate_mgpd(&m1, 1500, 2).unwrap().values,
            World::Factual,
            Site::anonymous(1),
            q,
        )
        .unwrap();
        let w = WeightVector::equal(1);
        let multi = estimate_pn((&s0, &fit_world(&s0).unwrap()), (&s1, &fit_world(&s1).unwrap()), &w, 4.0).unwrap();
        let uni = univariate_baseline_pn(&s0, &s1, &w, 4.0, q).unwrap();
        assert_eq!(multi.pn_hat, uni.pn_hat);
        assert_eq!(multi.p0_hat, uni.p0_hat);
    }

    #[test]
    fn pooling_one_site_matches_projection() {
        let model = MgpdModel::new(GaussianGenerator::identity(1), vec![1.0], 0.0).unwrap();
        let m1 = MgpdModel::new(GaussianGenerator::identity(1), vec![1.3], 0.0).unwrap();
        let q = 0.9;
        let s0 = WorldSample::with_quantile_thresholds(
            simulate_mgpd(&model, 1000, 3).unwrap().values,
            World::Counterfactual,
            Site::anonymous(1),
            q,
        )
        .unwrap();
        let s1 = WorldSample::with_quantile_thresholds(
            simulate_mgpd(&m1, 1000, 4).unwrap().values,
            World::Factual,
            Site::anonymous(1),
            q,
        )
        .unwrap();
        let pooled = pooled_baseline_pn(&s0, &s1, 3.0, q).unwrap();
        let uni = univariate_baseline_pn(&s0, &s1, &WeightVector::equal(1), 3.0, q).unwrap();
        assert_eq!(pooled.pn_hat, uni.pn_hat);
    }

    #[test]
    fn pooled_length_is_n_times_d() {
        let model = MgpdModel::new(GaussianGenerator::identity(3), vec![1.0; 3], 0.0).unwrap();
        let s = WorldSample::with_quantile_thresholds(
            simulate_mgpd(&model, 200, 5).unwrap().values,
            World::Factual,
            Site::anonymous(3),
            0.9,
        )
        .unwrap();
        assert_eq!(pool_world(&s, 0.9).unwrap().n(), 600);
    }
}
