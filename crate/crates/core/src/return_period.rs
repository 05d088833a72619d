//! Return periods of `{wᵀX > log T}` for unit-exponential margins under three
//! dependence regimes.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mgpd::{projection_exceed_prob, MgpdModel};
use crate::weights::WeightVector;

#[derive(Debug, Clone)]
pub enum DependenceMode {
    /// `X_1 = ... = X_d`.
    CompleteDependence,
    /// Independent unit exponentials.
    Independence,
    /// `X` distributed as the MGPD itself, estimated from `mc_size` draws.
    Mgpd { model: MgpdModel, mc_size: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnPeriod {
    pub years: f64,
    /// Monte-Carlo standard error (delta method); `None` for closed forms.
    pub std_error: Option<f64>,
}

pub fn return_period(mode: &DependenceMode, w: &WeightVector, t_years: f64) -> Result<ReturnPeriod> {
    if !(t_years >= 2.0) || !t_years.is_finite() {
        return Err(Error::domain(format!(
            "return period must be at least 2 years, got {t_years}"
        )));
    }
    if w.as_slice().iter().all(|&x| x == 0.0) {
        return Err(Error::domain("weight vector is zero"));
    }
    let level = t_years.ln();
    match mode {
        DependenceMode::CompleteDependence => Ok(ReturnPeriod {
            years: t_years,
            std_error: None,
        }),
        DependenceMode::Independence => Ok(ReturnPeriod {
            years: 1.0 / weighted_exponential_sum_sf(w.as_slice(), level)?,
            std_error: None,
        }),
        DependenceMode::Mgpd { model, mc_size, seed } => {
            let p = projection_exceed_prob(model, w, level, *mc_size, *seed)?;
            if p.estimate == 0.0 {
                return Err(Error::EstimationFailure(format!(
                    "no Monte-Carlo draw exceeded log {t_years}; increase the draw count"
                )));
            }
            Ok(ReturnPeriod {
                years: 1.0 / p.estimate,
                std_error: Some(p.std_error / (p.estimate * p.estimate)),
            })
        }
    }
}

/// `P[Σ w_j E_j > t]` for independent unit exponentials `E_j`.
///
/// Equal weights give a gamma tail, distinct weights the hypoexponential
/// closed form; any other pattern falls back to the phase-type matrix
/// exponential.
pub fn weighted_exponential_sum_sf(weights: &[f64], t: f64) -> Result<f64> {
    let rates: Vec<f64> = weights.iter().filter(|&&w| w > 0.0).map(|w| 1.0 / w).collect();
    if rates.is_empty() {
        return Err(Error::domain("weight vector is zero"));
    }
    if t <= 0.0 {
        return Ok(1.0);
    }
    let all_equal = rates.iter().all(|r| (r - rates[0]).abs() <= 1e-12 * rates[0]);
    if all_equal {
        return Ok(gamma_sf(rates.len(), rates[0], t));
    }
    let mut sorted = rates.clone();
    sorted.sort_by(f64::total_cmp);
    let distinct = sorted.windows(2).all(|p| (p[1] - p[0]) > 1e-9 * p[1]);
    if distinct {
        Ok(hypoexponential_sf(&rates, t))
    } else {
        Ok(phase_type_sf(&rates, t))
    }
}

/// Erlang(k, rate) survival.
fn gamma_sf(k: usize, rate: f64, t: f64) -> f64 {
    let x = rate * t;
    let mut term = 1.0;
    let mut sum = 1.0;
    for i in 1..k {
        term *= x / i as f64;
        sum += term;
    }
    (-x).exp() * sum
}

fn hypoexponential_sf(rates: &[f64], t: f64) -> f64 {
    rates
        .iter()
        .enumerate()
        .map(|(j, &lj)| {
            let coef: f64 = rates
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .map(|(_, &lk)| lk / (lk - lj))
                .product();
            coef * (-lj * t).exp()
        })
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// `α exp(S t) 1` for exponential phases in series.
fn phase_type_sf(rates: &[f64], t: f64) -> f64 {
    let k = rates.len();
    let mut s = DMatrix::zeros(k, k);
    for (i, &r) in rates.iter().enumerate() {
        s[(i, i)] = -r * t;
        if i + 1 < k {
            s[(i, i + 1)] = r * t;
        }
    }
    let e = s.exp();
    (0..k).map(|j| e[(0, j)]).sum::<f64>().clamp(0.0, 1.0)
}
