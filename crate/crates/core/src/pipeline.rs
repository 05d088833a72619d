//! The clustered two-world attribution run and its companion commands.
//!
//! `cmd_attribute` clusters sites on the counterfactual world, then for each
//! cluster fits both worlds, derives return levels of the equally weighted
//! counterfactual index, and estimates PN under equal and optimized weights
//! with bootstrap intervals. A failing cluster is reported with a status
//! and does not stop the run.

use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribution::{
    bootstrap_pn_curve, estimate_pn, fit_world, fit_world_with, optimal_weights_numeric, return_level, BootstrapConfig,
    FitMethod, FittedWorld, OptimizerConfig, World, WorldSample,
};
use crate::clustering::{chi_matrix, pam_cluster, ChiMatrix, ClusterAssignment};
use crate::config::PipelineConfig;
use crate::data::{
    blocks_per_year, generate_synthetic_worlds, load_gridded_csv, persist_results, save_gridded_csv, seasonal_weekly_maxima,
    ClusterResult, CurvePointResult, PnSummary, ResultBundle, ReturnPeriodResult, RunManifest, ScaleSummary, Status,
    SyntheticSpec, WorldPair,
};
use crate::error::{Error, Result};
use crate::experiments::{reproduce, Experiment, Report};
use crate::gpd::GpdParams;
use crate::rng::derive_seed;
use crate::weights::WeightVector;

/// Process exit codes of the command line.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const ALL_CLUSTERS_FAILED: i32 = 3;
    pub const CONFIG: i32 = 4;
}

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Input { .. } | Error::Schema { .. } | Error::Alignment(_) | Error::Csv(_) | Error::Io(_) => exit_code::INPUT,
        Error::Config(_) => exit_code::CONFIG,
        Error::AllClustersFailed(_) => exit_code::ALL_CLUSTERS_FAILED,
        _ => exit_code::OTHER,
    }
}

fn seed_tag(cluster: usize, period: usize, mode: u64) -> u64 {
    ((cluster as u64) << 32) | ((period as u64) << 8) | mode
}

const MODE_EQUAL: u64 = 1;
const MODE_OPTIMAL: u64 = 2;
const MODE_OPTIMIZER: u64 = 3;
const MODE_CURVE: u64 = 4;

fn bootstrap_config(config: &PipelineConfig, seed: u64) -> BootstrapConfig {
    BootstrapConfig {
        replicates: config.bootstrap_b,
        seed,
        block_len: config.bootstrap_block_len,
        level: 0.95,
        threshold_quantile: Some(config.threshold_quantile),
        method: config.fit_method,
    }
}

fn summary_of(
    cf: (&WorldSample, &FittedWorld),
    f: (&WorldSample, &FittedWorld),
    w: &WeightVector,
    v: f64,
    boot: &BootstrapConfig,
) -> PnSummary {
    let weights = w.as_slice().to_vec();
    let est = match estimate_pn(cf, f, w, v) {
        Ok(e) => e,
        Err(Error::PnUndefined(m)) => return PnSummary::not_available(Status::Undefined, weights, m),
        Err(e) => return PnSummary::not_available(Status::Failed, weights, e.to_string()),
    };
    let mut out = PnSummary {
        status: Status::Ok,
        estimate: Some(est.pn_hat),
        p0_hat: Some(est.p0_hat),
        p1_hat: Some(est.p1_hat),
        ci_lo: None,
        ci_hi: None,
        n_boot: 0,
        n_dropped: 0,
        ci_unreliable: false,
        weights,
        message: None,
    };
    match bootstrap_pn_curve(cf.0, f.0, w, &[v], boot) {
        Ok(ci) => {
            let ci = ci[0];
            let est = est.with_interval(ci.lo, ci.hi, ci.n_valid);
            let (lo, hi) = est.ci_95.expect("interval attached");
            out.ci_lo = Some(lo);
            out.ci_hi = Some(hi);
            out.n_boot = ci.n_valid;
            out.n_dropped = ci.n_undefined + ci.n_failed;
            out.ci_unreliable = ci.unreliable;
        }
        Err(e) => out.message = Some(format!("bootstrap failed: {e}")),
    }
    out
}

/// Fits a cluster's worlds with margin averaging, or with projected fits at
/// equal weights when configured.
fn fit_pair(s0: &WorldSample, s1: &WorldSample, method: FitMethod) -> Result<(FittedWorld, FittedWorld)> {
    let eq = WeightVector::equal(s0.dim());
    Ok((fit_world_with(s0, method, &eq)?, fit_world_with(s1, method, &eq)?))
}

fn scale_summary(fit: &FittedWorld, w: &WeightVector) -> ScaleSummary {
    match fit.margins() {
        Some(m) => ScaleSummary::of(&m.iter().map(GpdParams::scale).collect::<Vec<_>>()),
        None => {
            let s = fit.projected_params(w.as_slice()).map(|p| p.scale()).unwrap_or(f64::NAN);
            ScaleSummary { min: s, mean: s, max: s }
        }
    }
}

/// Attribution for one cluster of sites.
pub fn attribute_cluster(
    cluster_id: usize,
    members: &[usize],
    medoid: usize,
    x0: &WorldSample,
    x1: &WorldSample,
    config: &PipelineConfig,
    bpy: f64,
    seed: u64,
) -> ClusterResult {
    let medoid_site = x0.sites()[medoid].clone();
    let member_site_ids: Vec<String> = members.iter().map(|&j| x0.sites()[j].id.clone()).collect();
    let failed = |message: String| ClusterResult {
        cluster_id,
        status: Status::Failed,
        message: Some(message),
        medoid: medoid_site.clone(),
        member_site_ids: member_site_ids.clone(),
        gamma_hat: None,
        sigma_hat: None,
        return_periods: Vec::new(),
        curve: Vec::new(),
    };

    let (s0, s1) = match (x0.select_sites(members), x1.select_sites(members)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return failed(e.to_string()),
    };
    let (f0, f1) = match fit_pair(&s0, &s1, config.fit_method) {
        Ok(p) => p,
        Err(e) => return failed(e.to_string()),
    };
    let d = members.len();
    let eq = WeightVector::equal(d);

    let mut return_periods = Vec::new();
    let mut levels = Vec::new();
    for (ti, &years) in config.return_periods_years.iter().enumerate() {
        let level = match return_level(&s0, &f0, &eq, 1.0 / (years * bpy)) {
            Ok(v) => v,
            Err(e) => {
                let msg = format!("return level for {years} years: {e}");
                return_periods.push(ReturnPeriodResult {
                    years,
                    level: None,
                    equal: config
                        .weights_mode
                        .equal()
                        .then(|| PnSummary::not_available(Status::Failed, eq.as_slice().to_vec(), msg.clone())),
                    optimal: config
                        .weights_mode
                        .optimal()
                        .then(|| PnSummary::not_available(Status::Failed, Vec::new(), msg.clone())),
                });
                continue;
            }
        };
        levels.push(level);
        let equal = config.weights_mode.equal().then(|| {
            let boot = bootstrap_config(config, derive_seed(seed, seed_tag(cluster_id, ti, MODE_EQUAL)));
            summary_of((&s0, &f0), (&s1, &f1), &eq, level, &boot)
        });
        let optimal = config.weights_mode.optimal().then(|| {
            let weights = if d < 2 {
                Ok(eq.clone())
            } else if config.fit_method == FitMethod::Projected {
                // projected fits are tied to their weights; optimize on margin fits
                match (fit_world(&s0), fit_world(&s1)) {
                    (Ok(g0), Ok(g1)) => optimize(&s0, &g0, &s1, &g1, level, seed, cluster_id, ti),
                    (Err(e), _) | (_, Err(e)) => Err(e),
                }
            } else {
                optimize(&s0, &f0, &s1, &f1, level, seed, cluster_id, ti)
            };
            match weights {
                Ok(w) => {
                    let boot = bootstrap_config(config, derive_seed(seed, seed_tag(cluster_id, ti, MODE_OPTIMAL)));
                    match fit_pair_for(&s0, &s1, config.fit_method, &w) {
                        Ok((g0, g1)) => summary_of((&s0, &g0), (&s1, &g1), &w, level, &boot),
                        Err(e) => PnSummary::not_available(Status::Failed, w.as_slice().to_vec(), e.to_string()),
                    }
                }
                Err(Error::PnUndefined(m)) => PnSummary::not_available(Status::Undefined, Vec::new(), m),
                Err(e) => PnSummary::not_available(Status::Failed, Vec::new(), e.to_string()),
            }
        });
        return_periods.push(ReturnPeriodResult {
            years,
            level: Some(level),
            equal,
            optimal,
        });
    }

    let curve = pn_curve(
        &s0,
        &f0,
        &s1,
        &f1,
        &eq,
        &levels,
        config,
        derive_seed(seed, seed_tag(cluster_id, 0, MODE_CURVE)),
    );
    ClusterResult {
        cluster_id,
        status: Status::Ok,
        message: None,
        medoid: medoid_site,
        member_site_ids,
        gamma_hat: Some(WorldPair {
            w0: f0.common_shape(),
            w1: f1.common_shape(),
        }),
        sigma_hat: Some(WorldPair {
            w0: scale_summary(&f0, &eq),
            w1: scale_summary(&f1, &eq),
        }),
        return_periods,
        curve,
    }
}

fn fit_pair_for(s0: &WorldSample, s1: &WorldSample, method: FitMethod, w: &WeightVector) -> Result<(FittedWorld, FittedWorld)> {
    Ok((fit_world_with(s0, method, w)?, fit_world_with(s1, method, w)?))
}

#[allow(clippy::too_many_arguments)]
fn optimize(
    s0: &WorldSample,
    f0: &FittedWorld,
    s1: &WorldSample,
    f1: &FittedWorld,
    v: f64,
    seed: u64,
    cluster_id: usize,
    period: usize,
) -> Result<WeightVector> {
    let cfg = OptimizerConfig {
        seed: derive_seed(seed, seed_tag(cluster_id, period, MODE_OPTIMIZER)),
        ..Default::default()
    };
    Ok(optimal_weights_numeric((s0, f0), (s1, f1), v, &cfg)?.w)
}

/// Equal-weight PN over a grid spanning the requested return levels.
#[allow(clippy::too_many_arguments)]
fn pn_curve(
    s0: &WorldSample,
    f0: &FittedWorld,
    s1: &WorldSample,
    f1: &FittedWorld,
    w: &WeightVector,
    levels: &[f64],
    config: &PipelineConfig,
    seed: u64,
) -> Vec<CurvePointResult> {
    if levels.is_empty() {
        return Vec::new();
    }
    let lo = s0.projected_threshold(w);
    let hi = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(lo);
    let span = (hi - lo).max(1e-9) * 1.25;
    let m = config.curve_points;
    let grid: Vec<f64> = (0..m).map(|i| lo + span * i as f64 / (m - 1) as f64).collect();
    let boot = bootstrap_config(config, seed);
    let cis = bootstrap_pn_curve(s0, s1, w, &grid, &boot).ok();
    grid.iter()
        .enumerate()
        .map(|(i, &v)| {
            let pn = estimate_pn((s0, f0), (s1, f1), w, v).ok().map(|e| e.pn_hat);
            let ci = cis.as_ref().map(|c| c[i]);
            CurvePointResult {
                v,
                pn,
                ci_lo: ci.map(|c| pn.map_or(c.lo, |p| c.lo.min(p))),
                ci_hi: ci.map(|c| pn.map_or(c.hi, |p| c.hi.max(p))),
            }
        })
        .collect()
}

/// Distance matrix and PAM on the counterfactual world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringOutput {
    pub site_ids: Vec<String>,
    pub chi: ChiMatrix,
    pub assignment: ClusterAssignment,
}

pub fn cluster_world(x0: &WorldSample, config: &PipelineConfig, seed: u64) -> Result<ClusteringOutput> {
    let chi = chi_matrix(x0, config.chi_quantile)?;
    let k = config.k.min(x0.dim());
    if k < config.k {
        warn!("K = {} exceeds the {} available sites; using K = {k}", config.k, x0.dim());
    }
    let assignment = pam_cluster(&chi.distances(), k, seed)?;
    Ok(ClusteringOutput {
        site_ids: x0.sites().iter().map(|s| s.id.clone()).collect(),
        chi,
        assignment,
    })
}

/// Attribution on already blocked samples.
pub fn attribute_samples(
    x0: &WorldSample,
    x1: &WorldSample,
    config: &PipelineConfig,
    manifest: RunManifest,
) -> Result<ResultBundle> {
    config.validate()?;
    let seed = config.require_seed()?;
    let bpy = blocks_per_year(config);
    let clustering = cluster_world(x0, config, seed)?;
    let a = &clustering.assignment;
    info!("{} clusters over {} sites", a.k, x0.dim());
    let clusters: Vec<ClusterResult> = (0..a.k)
        .into_par_iter()
        .map(|c| attribute_cluster(c, &a.members(c), a.medoid_ids[c], x0, x1, config, bpy, seed))
        .collect();
    if clusters.iter().all(|c| c.status == Status::Failed) {
        let reasons: Vec<String> = clusters.iter().filter_map(|c| c.message.clone()).collect();
        return Err(Error::AllClustersFailed(reasons.join("; ")));
    }
    Ok(ResultBundle {
        manifest,
        threshold_quantile: config.threshold_quantile,
        blocks_per_year: bpy,
        n_blocks: WorldPair { w0: x0.n(), w1: x1.n() },
        clusters,
    })
}

/// Loads `input`, runs the clustered attribution and, if `out_dir` is given,
/// persists the bundle there.
pub fn cmd_attribute(input: &Path, config: &PipelineConfig, out_dir: Option<&Path>) -> Result<(ResultBundle, Vec<PathBuf>)> {
    config.validate()?;
    let seed = config.require_seed()?;
    let series = load_gridded_csv(input)?;
    let (x0, x1) = seasonal_weekly_maxima(&series, config)?;
    info!("{} counterfactual and {} factual blocks, {} sites", x0.n(), x1.n(), x0.dim());
    let manifest = RunManifest::new("attribute", config, vec![input.display().to_string()], seed);
    let mut bundle = attribute_samples(&x0, &x1, config, manifest)?;
    let paths = match out_dir {
        Some(dir) => {
            let paths = persist_results(&bundle, dir)?;
            bundle.manifest.output_paths = paths.iter().map(|p| p.display().to_string()).collect();
            paths
        }
        None => Vec::new(),
    };
    Ok((bundle, paths))
}

pub fn cmd_cluster(input: &Path, config: &PipelineConfig) -> Result<ClusteringOutput> {
    config.validate()?;
    let series = load_gridded_csv(input)?;
    let (x0, _) = seasonal_weekly_maxima(&series, config)?;
    cluster_world(&x0, config, config.seed.unwrap_or(0))
}

/// Per-site marginal diagnostics of one world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteFitReport {
    pub site_id: String,
    pub threshold: f64,
    pub n_exceed: usize,
    pub scale: f64,
    pub shape: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub world: World,
    pub n_blocks: usize,
    pub n_exceed_rows: usize,
    pub common_shape: f64,
    pub sites: Vec<SiteFitReport>,
}

pub fn fit_report(sample: &WorldSample) -> Result<FitReport> {
    let fit = fit_world(sample)?;
    let margins = fit.margins().expect("margin fit");
    Ok(FitReport {
        world: sample.world(),
        n_blocks: sample.n(),
        n_exceed_rows: fit.n_exceed,
        common_shape: fit.common_shape(),
        sites: sample
            .sites()
            .iter()
            .enumerate()
            .map(|(j, s)| SiteFitReport {
                site_id: s.id.clone(),
                threshold: sample.threshold_u()[j],
                n_exceed: fit.exceed_counts[j],
                scale: margins[j].scale(),
                shape: margins[j].shape(),
            })
            .collect(),
    })
}

pub fn cmd_fit(input: &Path, config: &PipelineConfig, world: World) -> Result<FitReport> {
    config.validate()?;
    let series = load_gridded_csv(input)?;
    let (x0, x1) = seasonal_weekly_maxima(&series, config)?;
    fit_report(if world == World::Counterfactual { &x0 } else { &x1 })
}

/// Writes two simulated worlds as an input CSV.
pub fn cmd_simulate(spec: &SyntheticSpec, seed: u64, out: &Path) -> Result<()> {
    save_gridded_csv(&generate_synthetic_worlds(spec, seed)?, out)
}

pub fn cmd_reproduce(experiment: Experiment, seed: u64) -> Result<Report> {
    reproduce(experiment, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::two_block_preset;

    fn small_config(seed: u64) -> PipelineConfig {
        PipelineConfig {
            k: 2,
            bootstrap_b: 100,
            curve_points: 5,
            seed: Some(seed),
            ..Default::default()
        }
    }

    #[test]
    fn reproducible_bundle_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.csv");
        save_gridded_csv(
            &generate_synthetic_worlds(&two_block_preset(400).unwrap(), 11).unwrap(),
            &input,
        )
        .unwrap();
        let cfg = small_config(5);
        let (a, pa) = cmd_attribute(&input, &cfg, Some(&dir.path().join("a"))).unwrap();
        let (b, pb) = cmd_attribute(&input, &cfg, Some(&dir.path().join("b"))).unwrap();
        assert_eq!(a.clusters, b.clusters);
        for (x, y) in pa.iter().zip(&pb).skip(1) {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
        assert_eq!(a.clusters.len(), 2);
    }

    #[test]
    fn identical_worlds_give_zero_pn() {
        let spec = two_block_preset(400).unwrap();
        let series = generate_synthetic_worlds(&spec, 3).unwrap();
        let cfg = small_config(1);
        let (x0, _) = seasonal_weekly_maxima(&series, &cfg).unwrap();
        let x1 = WorldSample::new(
            x0.observations().clone(),
            World::Factual,
            x0.threshold_u().to_vec(),
            x0.sites().to_vec(),
        )
        .unwrap();
        let bundle = attribute_samples(&x0, &x1, &cfg, RunManifest::new("attribute", &cfg, vec![], 1)).unwrap();
        for c in &bundle.clusters {
            for rp in &c.return_periods {
                for pn in [&rp.equal, &rp.optimal].into_iter().flatten() {
                    assert_eq!(pn.estimate, Some(0.0));
                    assert!(pn.ci_lo.unwrap() <= 0.0 && pn.ci_hi.unwrap() >= 0.0);
                }
            }
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code_for(&Error::Config("x".into())), exit_code::CONFIG);
        assert_eq!(
            exit_code_for(&Error::Schema {
                row: 2,
                message: "x".into()
            }),
            exit_code::INPUT
        );
        assert_eq!(
            exit_code_for(&Error::AllClustersFailed("x".into())),
            exit_code::ALL_CLUSTERS_FAILED
        );
    }

    #[test]
    fn missing_seed_is_config_error() {
        let cfg = PipelineConfig::default();
        assert!(matches!(cfg.require_seed(), Err(Error::Config(_))));
    }
}
