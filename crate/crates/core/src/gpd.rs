//! Univariate generalized Pareto tails.
//!
//! `H̄(z; σ, γ) = (1 + γ z / σ)₊^(-1/γ)` with the exponential limit
//! `exp(-z / σ)` used whenever `|γ| < SHAPE_SWITCH`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this magnitude the shape is treated as zero.
pub const SHAPE_SWITCH: f64 = 1e-9;

/// Minimum sample size accepted by [`pwm_fit`].
pub const PWM_MIN_SAMPLE: usize = 10;

/// Largest shape [`pwm_fit`] reports; the second moment diverges at one.
pub const PWM_MAX_SHAPE: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdParams {
    scale: f64,
    shape: f64,
}

impl GpdParams {
    pub fn new(scale: f64, shape: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::domain(format!("GPD scale must be positive, got {scale}")));
        }
        if !shape.is_finite() {
            return Err(Error::domain(format!("GPD shape must be finite, got {shape}")));
        }
        Ok(Self { scale, shape })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    fn is_exponential(&self) -> bool {
        self.shape.abs() < SHAPE_SWITCH
    }

    /// Upper end of the support; infinite unless the shape is negative.
    pub fn upper_endpoint(&self) -> f64 {
        if self.shape < 0.0 && !self.is_exponential() {
            self.scale / -self.shape
        } else {
            f64::INFINITY
        }
    }

    /// `ln H̄(z)` for `z >= 0`; `-inf` past the endpoint.
    pub(crate) fn log_survival_unchecked(&self, z: f64) -> f64 {
        if self.is_exponential() {
            return -z / self.scale;
        }
        let t = self.shape * z / self.scale;
        if t <= -1.0 {
            return f64::NEG_INFINITY;
        }
        -t.ln_1p() / self.shape
    }

    pub(crate) fn survival_unchecked(&self, z: f64) -> f64 {
        self.log_survival_unchecked(z).exp()
    }

    /// Inverse survival for `p` in `(0, 1]`.
    pub(crate) fn inverse_survival_unchecked(&self, p: f64) -> f64 {
        let lp = p.ln();
        if self.is_exponential() {
            -self.scale * lp
        } else {
            self.scale * (-self.shape * lp).exp_m1() / self.shape
        }
    }

    pub fn density(&self, z: f64) -> f64 {
        if z < 0.0 || z > self.upper_endpoint() {
            return 0.0;
        }
        if self.is_exponential() {
            return (-z / self.scale).exp() / self.scale;
        }
        let b = 1.0 + self.shape * z / self.scale;
        b.powf(-1.0 / self.shape - 1.0) / self.scale
    }

    pub fn cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            0.0
        } else {
            -self.log_survival_unchecked(z).exp_m1()
        }
    }

    /// One draw by inversion.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.inverse_survival_unchecked(1.0 - u)
    }
}

fn check_level(z: f64) -> Result<()> {
    if z.is_nan() || z < 0.0 {
        return Err(Error::domain(format!("GPD survival needs z >= 0, got {z}")));
    }
    Ok(())
}

/// `H̄(z; σ, γ)`.
pub fn gpd_survival(z: f64, params: &GpdParams) -> Result<f64> {
    check_level(z)?;
    Ok(params.survival_unchecked(z))
}

/// `ln H̄(z; σ, γ)`, finite wherever the survival is positive.
pub fn gpd_log_survival(z: f64, params: &GpdParams) -> Result<f64> {
    check_level(z)?;
    Ok(params.log_survival_unchecked(z))
}

/// The level exceeded with probability `p`.
pub fn gpd_quantile(p: f64, params: &GpdParams) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("exceedance probability must lie in (0,1), got {p}")));
    }
    Ok(params.inverse_survival_unchecked(p))
}

/// A peaks-over-thresholds tail: `P[X > v] ≈ P[X > u] H̄(v - u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    exceed_prob_at_u: f64,
    threshold_u: f64,
    params: GpdParams,
}

impl TailModel {
    pub fn new(exceed_prob_at_u: f64, threshold_u: f64, params: GpdParams) -> Result<Self> {
        if !(exceed_prob_at_u > 0.0 && exceed_prob_at_u <= 1.0) {
            return Err(Error::domain(format!(
                "threshold exceedance probability must lie in (0,1], got {exceed_prob_at_u}"
            )));
        }
        if !threshold_u.is_finite() {
            return Err(Error::domain("threshold must be finite"));
        }
        Ok(Self {
            exceed_prob_at_u,
            threshold_u,
            params,
        })
    }

    pub fn exceed_prob_at_u(&self) -> f64 {
        self.exceed_prob_at_u
    }

    pub fn threshold_u(&self) -> f64 {
        self.threshold_u
    }

    pub fn params(&self) -> &GpdParams {
        &self.params
    }

    /// Absolute upper endpoint `u + σ/|γ|` (infinite for `γ >= 0`).
    pub fn upper_endpoint(&self) -> f64 {
        self.threshold_u + self.params.upper_endpoint()
    }
}

fn check_above_threshold(m: &TailModel, v: f64) -> Result<()> {
    if v.is_nan() || v <= m.threshold_u {
        return Err(Error::domain(format!(
            "level {v} is not above the threshold {}; use the empirical branch",
            m.threshold_u
        )));
    }
    Ok(())
}

/// `P[X > v]` for `v` above the threshold.
pub fn tail_prob(m: &TailModel, v: f64) -> Result<f64> {
    check_above_threshold(m, v)?;
    Ok(m.exceed_prob_at_u * m.params.survival_unchecked(v - m.threshold_u))
}

/// `ln P[X > v]`; stays finite deep in the tail where `tail_prob` underflows.
pub fn tail_log_prob(m: &TailModel, v: f64) -> Result<f64> {
    check_above_threshold(m, v)?;
    Ok(m.exceed_prob_at_u.ln() + m.params.log_survival_unchecked(v - m.threshold_u))
}

/// Outcome of a probability-weighted-moment fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PwmFit {
    pub params: GpdParams,
    /// The raw shape estimate reached [`PWM_MAX_SHAPE`] and was clamped.
    pub shape_clamped: bool,
}

/// Probability-weighted-moment estimator for threshold excesses.
///
/// With the sample sorted ascending and plotting positions
/// `p_i = (i - 0.35) / n`, `a0` is the sample mean and `a1` the mean of
/// `(1 - p_i) x_(i)`. Then `σ̂ = 2 a0 a1 / (a0 - 2 a1)` and
/// `γ̂ = 2 - a0 / (a0 - 2 a1)`.
pub fn pwm_fit(sample: &[f64]) -> Result<PwmFit> {
    if sample.len() < PWM_MIN_SAMPLE {
        return Err(Error::EstimationFailure(format!(
            "PWM needs at least {PWM_MIN_SAMPLE} excesses, got {}",
            sample.len()
        )));
    }
    if let Some(bad) = sample.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::domain(format!("PWM excesses must be positive and finite, got {bad}")));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(Error::EstimationFailure("PWM sample has zero spread".into()));
    }
    let n = sorted.len() as f64;
    let a0 = sorted.iter().sum::<f64>() / n;
    let a1 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (1.0 - (i as f64 + 1.0 - 0.35) / n) * x)
        .sum::<f64>()
        / n;
    let denom = a0 - 2.0 * a1;
    if !(denom > f64::EPSILON * a0) {
        return Err(Error::EstimationFailure(format!(
            "degenerate PWM moments (a0 = {a0}, a1 = {a1})"
        )));
    }
    let scale = 2.0 * a0 * a1 / denom;
    let mut shape = 2.0 - a0 / denom;
    let shape_clamped = shape > PWM_MAX_SHAPE;
    if shape_clamped {
        log::warn!("PWM shape estimate {shape} clamped to {PWM_MAX_SHAPE}");
        shape = PWM_MAX_SHAPE;
    }
    Ok(PwmFit {
        params: GpdParams::new(scale, shape)?,
        shape_clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn gpd(s: f64, g: f64) -> GpdParams {
        GpdParams::new(s, g).unwrap()
    }

    // Simpson's rule on the density, as an independent route to H̄.
    fn survival_by_quadrature(z: f64, p: &GpdParams) -> f64 {
        let steps = 20_000;
        let h = z / steps as f64;
        let mut acc = p.density(0.0) + p.density(z);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * p.density(i as f64 * h);
        }
        1.0 - acc * h / 3.0
    }

    #[test]
    fn survival_examples() {
        assert_eq!(gpd_survival(0.0, &gpd(3.0, 0.4)).unwrap(), 1.0);
        assert_relative_eq!(gpd_survival(100f64.ln(), &gpd(1.0, 0.0)).unwrap(), 0.01, max_relative = 1e-12);
        assert_eq!(gpd_survival(2.0, &gpd(1.0, -0.5)).unwrap(), 0.0);
        assert_eq!(gpd_survival(3.0, &gpd(1.0, -0.5)).unwrap(), 0.0);
        let p = gpd(1.0, 0.2);
        let direct = gpd_survival(1.0, &p).unwrap();
        assert_relative_eq!(direct, 1.2f64.powf(-5.0), max_relative = 1e-12);
        assert!((direct - 0.40188).abs() < 5e-6);
        assert!((direct - survival_by_quadrature(1.0, &p)).abs() < 1e-9);
    }

    #[test]
    fn survival_rejects_negative_level() {
        assert!(matches!(gpd_survival(-0.1, &gpd(1.0, 0.0)), Err(Error::Domain(_))));
        assert!(GpdParams::new(0.0, 0.1).is_err());
        assert!(GpdParams::new(-1.0, 0.1).is_err());
    }

    #[test]
    fn quantile_examples() {
        assert_relative_eq!(gpd_quantile(0.01, &gpd(1.0, 0.0)).unwrap(), 100f64.ln(), max_relative = 1e-14);
        assert!((gpd_quantile(0.01, &gpd(1.0, 0.0)).unwrap() - 4.6052).abs() < 1e-4);
        let p = gpd(2.5, 0.3);
        let z = gpd_quantile(0.37, &p).unwrap();
        assert_relative_eq!(gpd_survival(z, &p).unwrap(), 0.37, max_relative = 1e-12);
        assert_relative_eq!(gpd_quantile(0.5, &gpd(1.0, 1.0)).unwrap(), 1.0, max_relative = 1e-14);
        assert!(gpd_quantile(0.0, &p).is_err());
        assert!(gpd_quantile(1.0, &p).is_err());
    }

    #[test]
    fn continuity_across_zero_shape() {
        for &z in &[0.1, 1.0, 10.0] {
            let base = gpd_survival(z, &gpd(1.3, 0.0)).unwrap();
            for &eps in &[1e-9, -1e-9] {
                let near = gpd_survival(z, &gpd(1.3, eps)).unwrap();
                assert!((near - base).abs() < 1e-6, "z={z} eps={eps}");
            }
        }
    }

    #[test]
    fn tail_prob_examples() {
        let m = TailModel::new(0.05, 10.0, gpd(1.0, 0.0)).unwrap();
        assert_relative_eq!(tail_prob(&m, 10.0 + 2f64.ln()).unwrap(), 0.025, max_relative = 1e-12);
        let m1 = TailModel::new(1.0, 0.0, gpd(1.7, 0.25)).unwrap();
        assert_relative_eq!(
            tail_prob(&m1, 3.3).unwrap(),
            gpd_survival(3.3, m1.params()).unwrap(),
            max_relative = 1e-14
        );
        let m0 = TailModel::new(0.05, 10.0, gpd(1.0, 0.2)).unwrap();
        assert_relative_eq!(tail_prob(&m0, 15.0).unwrap(), 0.05 / 32.0, max_relative = 1e-12);
        assert!(tail_prob(&m0, 10.0).is_err());
        assert!(TailModel::new(0.0, 1.0, gpd(1.0, 0.0)).is_err());
    }

    #[test]
    fn tail_prob_matches_monte_carlo() {
        // X = 10 + GPD(1, 0.2) with probability 0.05
        let p = gpd(1.0, 0.2);
        let mut rng = substream(11, 0);
        let n = 400_000;
        let hits = (0..n)
            .filter(|_| {
                let exceed = rng.random::<f64>() < 0.05;
                exceed && 10.0 + p.sample(&mut rng) > 15.0
            })
            .count();
        let mc = hits as f64 / n as f64;
        let exact = tail_prob(&TailModel::new(0.05, 10.0, p).unwrap(), 15.0).unwrap();
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((mc - exact).abs() < 4.0 * se, "mc {mc} exact {exact}");
    }

    #[test]
    fn pwm_rejects_degenerate_samples() {
        assert!(matches!(pwm_fit(&[2.0; 50]), Err(Error::EstimationFailure(_))));
        assert!(matches!(pwm_fit(&[1.0; 5]), Err(Error::EstimationFailure(_))));
        let mut bad = vec![1.0; 20];
        bad[3] = -1.0;
        assert!(matches!(pwm_fit(&bad), Err(Error::Domain(_))));
    }

    fn pwm_recovery_rate(scale: f64, shape: f64, tol_scale: f64, tol_shape: f64, seeds: u64) -> f64 {
        let p = gpd(scale, shape);
        let ok = (0..seeds)
            .filter(|&s| {
                let mut rng = substream(2024, s);
                let x: Vec<f64> = (0..5000).map(|_| p.sample(&mut rng)).collect();
                let fit = pwm_fit(&x).unwrap().params;
                (fit.scale() - scale).abs() <= tol_scale && (fit.shape() - shape).abs() <= tol_shape
            })
            .count();
        ok as f64 / seeds as f64
    }

    #[test]
    fn pwm_recovers_exponential() {
        assert!(pwm_recovery_rate(2.0, 0.0, 0.1, 0.05, 100) >= 0.95);
    }

    #[test]
    fn pwm_recovers_heavy_tail() {
        assert!(pwm_recovery_rate(1.0, 0.2, 0.07, 0.07, 100) >= 0.95);
    }

    #[test]
    fn pwm_average_bias_is_small() {
        let (scale, shape) = (1.5, 0.1);
        let p = gpd(scale, shape);
        let seeds = 200;
        let (mut ds, mut dg) = (0.0, 0.0);
        for s in 0..seeds {
            let mut rng = substream(77, s);
            let x: Vec<f64> = (0..5000).map(|_| p.sample(&mut rng)).collect();
            let fit = pwm_fit(&x).unwrap().params;
            ds += fit.scale() - scale;
            dg += fit.shape() - shape;
        }
        assert!((ds / seeds as f64).abs() / scale < 0.03);
        assert!((dg / seeds as f64).abs() < 0.05);
    }

    proptest! {
        #[test]
        fn survival_nonincreasing(scale in 0.1f64..10.0, shape in -0.9f64..2.0, a in 0.0f64..50.0, b in 0.0f64..50.0) {
            let p = gpd(scale, shape);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(gpd_survival(hi, &p).unwrap() <= gpd_survival(lo, &p).unwrap());
        }

        #[test]
        fn quantile_inverts_survival(scale in 0.1f64..10.0, shape in -0.9f64..2.0, u in 0.0f64..1.0) {
            let p = gpd(scale, shape);
            let z = u * p.upper_endpoint().min(40.0 * scale);
            let s = gpd_survival(z, &p).unwrap();
            prop_assume!(s > 1e-300 && s < 1.0);
            let back = gpd_quantile(s, &p).unwrap();
            prop_assert!((back - z).abs() <= 1e-10 * z.max(1e-12) + 1e-12, "{back} vs {z}");
        }
    }
}
