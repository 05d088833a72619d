//! Counterfactual causation probabilities for a pair of worlds.
//!
//! With `p0` the event probability without the forcing and `p1` with it:
//! `PN = max(1 - p0/p1, 0)`, `PS = max(1 - (1-p1)/(1-p0), 0)`,
//! `PNS = max(p1 - p0, 0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpd::{tail_log_prob, TailModel, SHAPE_SWITCH};
use crate::stats::normal_sf;

/// PN/PS/PNS. `None` marks a probability that is undefined for the inputs
/// (`p1 = 0` for PN, `p0 = 1` for PS).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CausationTriple {
    pub pn: Option<f64>,
    pub ps: Option<f64>,
    pub pns: f64,
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("{name} must lie in [0,1], got {p}")));
    }
    Ok(())
}

pub fn causation_probabilities(p0: f64, p1: f64) -> Result<CausationTriple> {
    check_prob("p0", p0)?;
    check_prob("p1", p1)?;
    let pn = (p1 > 0.0).then(|| (1.0 - p0 / p1).max(0.0));
    let ps = (p0 < 1.0).then(|| (1.0 - (1.0 - p1) / (1.0 - p0)).max(0.0));
    Ok(CausationTriple {
        pn,
        ps,
        pns: (p1 - p0).max(0.0),
    })
}

/// PN alone, as an error when undefined.
pub fn pn(p0: f64, p1: f64) -> Result<f64> {
    causation_probabilities(p0, p1)?
        .pn
        .ok_or_else(|| Error::PnUndefined(format!("p1 = 0 (p0 = {p0})")))
}

/// PN from log-probabilities, usable where `p0` and `p1` underflow.
pub fn pn_from_log(log_p0: f64, log_p1: f64) -> Option<f64> {
    if log_p1 == f64::NEG_INFINITY || log_p1.is_nan() {
        return None;
    }
    Some((1.0 - (log_p0 - log_p1).exp()).max(0.0))
}

/// Limit of `PN(v)` as `v` grows for two peaks-over-thresholds tails.
///
/// Differing shapes give `1{γ0 < γ1}`; equal non-zero shapes give
/// `1 - (p0(u0)/p1(u1)) (σ0/σ1)^(1/γ)`; equal zero shapes give
/// `1{σ0 < σ1}`. When the factual tail is bounded, PN is undefined past its
/// endpoint; if the counterfactual endpoint lies strictly below it, PN is 1
/// on the gap between them and that value is returned.
pub fn pn_limit(m0: &TailModel, m1: &TailModel) -> Result<f64> {
    let (g0, g1) = (m0.params().shape(), m1.params().shape());
    let zero0 = g0.abs() < SHAPE_SWITCH;
    let zero1 = g1.abs() < SHAPE_SWITCH;

    if g1 < 0.0 && !zero1 {
        let (e0, e1) = (m0.upper_endpoint(), m1.upper_endpoint());
        if e0 < e1 {
            return Ok(1.0);
        }
        return Err(Error::PnUndefined(format!(
            "factual tail ends at {e1}, not above the counterfactual endpoint {e0}"
        )));
    }
    if zero0 && zero1 {
        return Ok(indicator(m0.params().scale() < m1.params().scale()));
    }
    if zero0 != zero1 || g0 != g1 {
        return Ok(indicator(g0 < g1));
    }
    let gamma = g0;
    let ratio = m0.exceed_prob_at_u() / m1.exceed_prob_at_u() * (m0.params().scale() / m1.params().scale()).powf(1.0 / gamma);
    Ok((1.0 - ratio).max(0.0))
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// A univariate world whose exceedance probabilities are known in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnivariateWorld {
    Tail(TailModel),
    Gaussian { mean: f64, sd: f64 },
}

impl UnivariateWorld {
    pub fn exceed_prob(&self, v: f64) -> Result<f64> {
        Ok(self.log_exceed_prob(v)?.exp())
    }

    pub fn log_exceed_prob(&self, v: f64) -> Result<f64> {
        match self {
            UnivariateWorld::Tail(m) => tail_log_prob(m, v),
            UnivariateWorld::Gaussian { mean, sd } => {
                if !(*sd > 0.0) {
                    return Err(Error::domain("Gaussian world needs a positive standard deviation"));
                }
                Ok(normal_sf(v, *mean, *sd).ln())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub v: f64,
    pub p0: f64,
    pub p1: f64,
    pub triple: CausationTriple,
}

/// PN/PS/PNS along a grid of event levels. PN is evaluated on the log scale so
/// it stays meaningful after both probabilities underflow.
pub fn pn_curve_univariate(world0: &UnivariateWorld, world1: &UnivariateWorld, v_grid: &[f64]) -> Result<Vec<CurvePoint>> {
    v_grid
        .iter()
        .map(|&v| {
            let lp0 = world0.log_exceed_prob(v)?;
            let lp1 = world1.log_exceed_prob(v)?;
            let (p0, p1) = (lp0.exp(), lp1.exp());
            let mut triple = causation_probabilities(p0, p1)?;
            triple.pn = pn_from_log(lp0, lp1);
            Ok(CurvePoint { v, p0, p1, triple })
        })
        .collect()
}
