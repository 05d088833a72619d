use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::estimate::{log_tail_prob_raw, ratio_from};
use super::fit::FittedWorld;
use super::sample::WorldSample;
use crate::error::{Error, Result};
use crate::gpd::GpdParams;
use crate::optim::{nelder_mead, simplex_logits, softmax_simplex, NelderMead};
use crate::rng::substream;
use crate::weights::WeightVector;

/// Grid step of the fallback scan for the bivariate optimum.
pub const BIVARIATE_GRID_STEP: f64 = 1e-3;

/// How the bivariate optimum was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BivariateRoute {
    /// An interior root `w±` was the best candidate.
    Interior,
    /// One of `w ∈ {0, 1}`.
    Boundary,
    /// Degenerate denominators or a binding support endpoint; a grid scan
    /// was added to the candidates.
    Guarded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariateOptimum {
    /// Weight on the first site; the second receives `1 - w`.
    pub w: f64,
    pub ratio: f64,
    /// The discriminant `R`, when defined.
    pub r: Option<f64>,
    pub route: BivariateRoute,
}

/// Weight maximizing the bivariate PN ratio approximation.
///
/// Candidates are `{0, 1}` plus whichever of `w±(v) = c ± √R` fall inside
/// `(0, 1)`. Ties keep the lowest weight.
pub fn optimal_weights_bivariate(sigma0: [f64; 2], sigma1: [f64; 2], gamma: f64, v: f64) -> Result<BivariateOptimum> {
    if sigma0.iter().chain(&sigma1).any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::domain("scales must be positive and finite"));
    }
    if !(v > 0.0) || !gamma.is_finite() {
        return Err(Error::domain(format!(
            "need v > 0 and finite shape, got v = {v}, shape = {gamma}"
        )));
    }
    let ratio = |w: f64| -> f64 {
        let s0 = w * sigma0[0] + (1.0 - w) * sigma0[1];
        let s1 = w * sigma1[0] + (1.0 - w) * sigma1[1];
        match (GpdParams::new(s0, gamma), GpdParams::new(s1, gamma)) {
            (Ok(h0), Ok(h1)) => ratio_from(h0, h1, v),
            _ => f64::NEG_INFINITY,
        }
    };

    let cross = sigma0[0] * sigma1[1] - sigma0[1] * sigma1[0];
    let gap1 = sigma1[1] - sigma1[0];
    let gap0 = sigma0[1] - sigma0[0];
    let dgap = gap1 - gap0;
    let denom = gap1 * gap0 * dgap * dgap;
    let r = (denom != 0.0)
        .then(|| cross * (cross + gamma * v * dgap) / denom)
        .filter(|r| r.is_finite());

    let mut candidates: Vec<(f64, BivariateRoute)> = vec![(0.0, BivariateRoute::Boundary), (1.0, BivariateRoute::Boundary)];
    if let Some(r) = r.filter(|&r| r >= 0.0) {
        let centre = (sigma1[1] - sigma0[1]) / dgap;
        for w in [centre - r.sqrt(), centre + r.sqrt()] {
            if w > 0.0 && w < 1.0 {
                candidates.push((w, BivariateRoute::Interior));
            }
        }
    }
    let min_scale = sigma0.iter().chain(&sigma1).copied().fold(f64::INFINITY, f64::min);
    let support_binds = gamma < 0.0 && v >= min_scale / -gamma;
    if r.is_none() || support_binds {
        let steps = (1.0 / BIVARIATE_GRID_STEP).round() as usize;
        candidates.extend((1..steps).map(|i| (i as f64 * BIVARIATE_GRID_STEP, BivariateRoute::Guarded)));
    }

    let mut best: Option<(f64, f64, BivariateRoute)> = None;
    for (w, route) in candidates {
        let value = ratio(w);
        best = match best {
            None => Some((w, value, route)),
            Some((bw, bv, br)) => {
                if value > bv || (value == bv && w < bw) {
                    Some((w, value, route))
                } else {
                    Some((bw, bv, br))
                }
            }
        };
    }
    let (w, ratio, route) = best.expect("candidate set is never empty");
    Ok(BivariateOptimum { w, ratio, r, route })
}

/// Settings for [`optimal_weights_numeric`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub random_starts: usize,
    pub tolerance: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            random_starts: 4,
            tolerance: 1e-8,
            max_iter: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericOptimum {
    pub w: WeightVector,
    /// Unclamped `1 - p̂0/p̂1` at `w`.
    pub objective: f64,
    pub pn_hat: f64,
    pub starts: usize,
}

/// Vertex-biased starts put this logit gap between the favoured site and
/// the others.
const VERTEX_BIAS: f64 = 3.0;

/// Maximizes the unclamped `1 - p̂0/p̂1` over the simplex.
///
/// Nelder–Mead runs on softmax logits from `1 + d + random_starts` starts
/// (uniform, one biased towards each vertex, then Gaussian logits drawn
/// from `seed`). The exact vertices are also evaluated. The first best
/// point in that order wins, so flat objectives return the uniform weights.
pub fn optimal_weights_numeric(
    cf: (&WorldSample, &FittedWorld),
    f: (&WorldSample, &FittedWorld),
    v: f64,
    config: &OptimizerConfig,
) -> Result<NumericOptimum> {
    let d = cf.0.dim();
    if d < 2 || f.0.dim() != d {
        return Err(Error::domain(format!(
            "need two worlds of equal dimension d ≥ 2, got {d} and {}",
            f.0.dim()
        )));
    }
    if cf.1.margins().is_none() || f.1.margins().is_none() {
        return Err(Error::domain("weight optimization needs margin fits, not projected fits"));
    }

    let objective = |w: &[f64]| -> f64 {
        let lp0 = log_tail_prob_raw(cf.0, cf.1, w, v);
        let lp1 = log_tail_prob_raw(f.0, f.1, w, v);
        match (lp0, lp1) {
            (Ok(a), Ok(b)) if b > f64::NEG_INFINITY => 1.0 - (a - b).exp(),
            _ => f64::NEG_INFINITY,
        }
    };

    let mut starts: Vec<Vec<f64>> = vec![vec![0.0; d - 1]];
    for j in 0..d {
        let mut w = vec![1.0; d];
        w[j] = VERTEX_BIAS.exp();
        starts.push(simplex_logits(&w, 1e-300));
    }
    let mut rng = substream(config.seed, 0);
    for _ in 0..config.random_starts {
        starts.push((0..d - 1).map(|_| rng.sample::<f64, _>(StandardNormal)).collect());
    }

    let opts = NelderMead {
        tolerance: config.tolerance,
        max_iter: config.max_iter,
        step: 1.0,
    };
    let mut points: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|s| softmax_simplex(&nelder_mead(|theta| -objective(&softmax_simplex(theta)), s, &opts).x))
        .collect();
    points.extend((0..d).map(|j| WeightVector::unit(d, j).as_slice().to_vec()));

    let mut best = (points[0].clone(), objective(&points[0]));
    for p in &points[1..] {
        let value = objective(p);
        if value > best.1 {
            best = (p.clone(), value);
        }
    }
    let (w, value) = best;
    if value == f64::NEG_INFINITY {
        return Err(Error::PnUndefined(format!(
            "estimated factual probability is 0 for every candidate at v = {v}"
        )));
    }
    Ok(NumericOptimum {
        w: WeightVector::normalized(w)?,
        objective: value,
        pn_hat: value.max(0.0),
        starts: starts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::estimate::pn_ratio_approx;
    use crate::attribution::fit::fit_world;
    use crate::attribution::sample::{Site, World};
    use crate::mgpd::{simulate_mgpd, GaussianGenerator, MgpdModel};
    use rand::Rng;

    fn grid_max(s0: [f64; 2], s1: [f64; 2], g: f64, v: f64) -> f64 {
        (0..=1000)
            .map(|i| {
                let w = WeightVector::bivariate(i as f64 / 1000.0).unwrap();
                pn_ratio_approx(&s0, &s1, g, &w, v).unwrap()
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn worked_example() {
        for v in [0.5, 1.0, 10.0] {
            let o = optimal_weights_bivariate([2.0, 1.0], [5.0, 1.0], 0.0, v).unwrap();
            assert!((o.r.unwrap() - 0.25).abs() < 1e-15);
            assert_eq!(o.w, 0.5);
            assert_eq!(o.route, BivariateRoute::Interior);
        }
    }

    #[test]
    fn boundary_case() {
        for g in [-0.4, 0.0, 0.4] {
            for v in [0.5, 1.0, 2.0] {
                let o = optimal_weights_bivariate([1.0, 2.0], [1.5, 2.0], g, v).unwrap();
                assert_eq!(o.w, 1.0, "γ={g} v={v}");
            }
        }
    }

    #[test]
    fn equal_worlds_tie_to_zero() {
        let o = optimal_weights_bivariate([1.0, 3.0], [1.0, 3.0], 0.2, 4.0).unwrap();
        assert_eq!(o.w, 0.0);
        assert_eq!(o.ratio, 0.0);
    }

    #[test]
    fn never_below_grid() {
        let mut rng = substream(17, 0);
        for _ in 0..500 {
            let mut s = || (0.5f64.ln() + rng.random::<f64>() * (10f64).ln()).exp();
            let s0 = [s(), s()];
            let s1 = [s(), s()];
            let g = [-0.4, 0.0, 0.4][rng.random_range(0..3)];
            let v = [1.0, 5.0, 20.0][rng.random_range(0..3)];
            let o = optimal_weights_bivariate(s0, s1, g, v).unwrap();
            let grid = grid_max(s0, s1, g, v);
            assert!(
                o.ratio >= grid - 1e-9 || grid == f64::NEG_INFINITY,
                "{s0:?} {s1:?} {g} {v}: {} < {grid}",
                o.ratio
            );
        }
    }

    fn mgpd_pair(scales: Vec<f64>, n: usize, seed: u64, world: World) -> (WorldSample, FittedWorld) {
        let model = MgpdModel::new(GaussianGenerator::identity(scales.len()), scales.clone(), 0.0).unwrap();
        let z = simulate_mgpd(&model, n, seed).unwrap();
        let s = WorldSample::with_quantile_thresholds(z.values, world, Site::anonymous(scales.len()), 0.9).unwrap();
        let f = fit_world(&s).unwrap();
        (s, f)
    }

    #[test]
    fn identical_worlds_return_uniform() {
        let (s, f) = mgpd_pair(vec![1.0, 2.0, 1.5], 1000, 1, World::Counterfactual);
        let o = optimal_weights_numeric((&s, &f), (&s, &f), 4.0, &OptimizerConfig::default()).unwrap();
        assert_eq!(o.pn_hat, 0.0);
        for x in o.w.as_slice() {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_bivariate_closed_form() {
        let (s0, f0) = mgpd_pair(vec![2.0, 1.0], 20_000, 3, World::Counterfactual);
        let (s1, f1) = mgpd_pair(vec![5.0, 1.0], 20_000, 4, World::Factual);
        let v = 8.0;
        let o = optimal_weights_numeric((&s0, &f0), (&s1, &f1), v, &OptimizerConfig::default()).unwrap();
        let m0 = f0.margins().unwrap();
        let m1 = f1.margins().unwrap();
        let gamma = 0.5 * (f0.common_shape() + f1.common_shape());
        let b = optimal_weights_bivariate([m0[0].scale(), m0[1].scale()], [m1[0].scale(), m1[1].scale()], gamma, v).unwrap();
        assert!((o.w.as_slice()[0] - b.w).abs() < 0.02, "{:?} vs {}", o.w, b.w);
    }

    #[test]
    fn deterministic_given_seed() {
        let (s0, f0) = mgpd_pair(vec![1.0, 1.0, 1.0], 2000, 5, World::Counterfactual);
        let (s1, f1) = mgpd_pair(vec![1.0, 1.0, 3.0], 2000, 6, World::Factual);
        let cfg = OptimizerConfig {
            seed: 9,
            ..Default::default()
        };
        let a = optimal_weights_numeric((&s0, &f0), (&s1, &f1), 6.0, &cfg).unwrap();
        let b = optimal_weights_numeric((&s0, &f0), (&s1, &f1), 6.0, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.w.as_slice()[2] >= 0.9, "{:?}", a.w);
    }
}
