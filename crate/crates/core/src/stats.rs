//! Small numerical helpers shared across modules.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub fn normal_sf(x: f64, mean: f64, sd: f64) -> f64 {
    // statrs only fails on invalid parameters, which callers validate
    Normal::new(mean, sd).map(|n| n.sf(x)).unwrap_or(f64::NAN)
}

pub fn std_normal_cdf(x: f64) -> f64 {
    normal_sf(-x, 0.0, 1.0)
}

/// Linear-interpolation sample quantile (type 7). `sorted` must be ascending.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let q = q.clamp(0.0, 1.0);
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::domain("quantile of an empty sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, q))
}

pub fn median(values: &[f64]) -> Result<f64> {
    quantile(values, 0.5)
}

/// One-sample Kolmogorov–Smirnov test result.
#[derive(Debug, Clone, Copy)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

impl KsTest {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value > significance
    }
}

/// Tests `sample` against a continuous distribution function.
pub fn ks_test(sample: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsTest> {
    if sample.is_empty() {
        return Err(Error::domain("KS test on an empty sample"));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    let sqrt_n = n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    Ok(KsTest {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
        n: sorted.len(),
    })
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn bessel_i1(x: f64) -> f64 {
    let t = (x / 3.75).powi(2);
    x * (0.5
        + t * (0.878_905_94
            + t * (0.514_988_69 + t * (0.150_849_34 + t * (0.026_587_33 + t * (0.003_015_32 + t * 0.000_324_11))))))
}

/// Modified Bessel function of the second kind, order one (x > 0).
/// Polynomial approximations with absolute error below 3e-7.
pub fn bessel_k1(x: f64) -> f64 {
    assert!(x > 0.0, "bessel_k1 requires x > 0");
    if x <= 2.0 {
        let y = x * x / 4.0;
        let poly = 1.0
            + y * (0.154_431_44
                + y * (-0.672_785_79 + y * (-0.181_568_97 + y * (-0.019_194_02 + y * (-0.001_104_04 + y * (-0.000_046_86))))));
        ((x / 2.0).ln() * bessel_i1(x) * x + poly) / x
    } else {
        let y = 2.0 / x;
        let poly = 1.253_314_14
            + y * (0.234_986_19
                + y * (-0.036_556_20 + y * (0.015_042_68 + y * (-0.007_803_53 + y * (0.003_256_14 + y * (-0.000_682_45))))));
        poly * (-x).exp() / x.sqrt()
    }
}

/// Whittle–Matérn correlation with smoothness fixed at one:
/// `rho(h) = (h / range) K1(h / range)`, `rho(0) = 1`.
pub fn whittle_matern(distance: f64, range: f64) -> f64 {
    if distance <= 0.0 {
        return 1.0;
    }
    let x = distance / range;
    x * bessel_k1(x)
}

/// Percentile interval of a sample (linear interpolation).
pub fn percentile_interval(values: &[f64], level: f64) -> Result<(f64, f64)> {
    let alpha = (1.0 - level) / 2.0;
    let mut sorted = values.to_vec();
    if sorted.is_empty() {
        return Err(Error::domain("percentile interval of an empty sample"));
    }
    sorted.sort_by(f64::total_cmp);
    Ok((quantile_sorted(&sorted, alpha), quantile_sorted(&sorted, 1.0 - alpha)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // K1(x) = ∫_0^∞ exp(-x cosh t) cosh t dt, trapezoid on a truncated range
    fn k1_integral(x: f64) -> f64 {
        let h = 1e-4;
        let mut sum = 0.0;
        let mut t = 0.0;
        while t < 20.0 {
            let f = |t: f64| (-x * t.cosh()).exp() * t.cosh();
            sum += 0.5 * h * (f(t) + f(t + h));
            t += h;
        }
        sum
    }

    #[test]
    fn bessel_k1_matches_integral() {
        for &x in &[0.05, 0.4, 1.0, 1.999, 2.0, 2.83, 5.0, 12.0] {
            let exact = k1_integral(x);
            assert!(
                (bessel_k1(x) - exact).abs() < 5e-7 * exact.max(1.0),
                "x={x}: {} vs {exact}",
                bessel_k1(x)
            );
        }
    }

    #[test]
    fn matern_is_one_at_origin_and_decreasing() {
        assert_eq!(whittle_matern(0.0, 1.0), 1.0);
        let mut prev = 1.0;
        for i in 1..50 {
            let r = whittle_matern(i as f64 * 0.1, 2.5);
            assert!(r < prev);
            prev = r;
        }
        assert_abs_diff_eq!(whittle_matern(1e-9, 1.0), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn quantile_type7() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.0).unwrap(), 1.0);
        assert_eq!(quantile(&v, 1.0).unwrap(), 4.0);
        assert_abs_diff_eq!(quantile(&v, 0.5).unwrap(), 2.5);
        assert!(quantile(&[], 0.5).is_err());
    }

    #[test]
    fn ks_detects_wrong_distribution() {
        let n = 2000;
        let uniform: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        assert!(ks_test(&uniform, |x| x.clamp(0.0, 1.0)).unwrap().passes(0.01));
        assert!(!ks_test(&uniform, |x| (x * x).clamp(0.0, 1.0)).unwrap().passes(0.01));
    }

    #[test]
    fn kolmogorov_known_values() {
        // critical value for alpha = 0.05 is 1.358
        assert_abs_diff_eq!(kolmogorov_sf(1.358), 0.05, epsilon = 1e-3);
        assert_abs_diff_eq!(kolmogorov_sf(1.628), 0.01, epsilon = 1e-3);
    }
}
