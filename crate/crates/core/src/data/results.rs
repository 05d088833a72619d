use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attribution::Site;
use crate::config::PipelineConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: PipelineConfig,
    pub input_paths: Vec<String>,
    pub output_paths: Vec<String>,
    pub seed: u64,
    pub tool_version: String,
    /// Left out unless requested, so reruns stay byte-identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

impl RunManifest {
    pub fn new(command: &str, config: &PipelineConfig, input_paths: Vec<String>, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config: config.clone(),
            input_paths,
            output_paths: Vec::new(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_secs: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// PN undefined because the factual probability estimate is zero.
    Undefined,
    Failed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Undefined => "undefined",
            Status::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PnSummary {
    pub status: Status,
    pub estimate: Option<f64>,
    pub p0_hat: Option<f64>,
    pub p1_hat: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub n_boot: usize,
    pub n_dropped: usize,
    pub ci_unreliable: bool,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl PnSummary {
    pub fn not_available(status: Status, weights: Vec<f64>, message: String) -> Self {
        Self {
            status,
            estimate: None,
            p0_hat: None,
            p1_hat: None,
            ci_lo: None,
            ci_hi: None,
            n_boot: 0,
            n_dropped: 0,
            ci_unreliable: false,
            weights,
            message: Some(message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnPeriodResult {
    pub years: f64,
    /// Counterfactual return level of the equally weighted index.
    pub level: Option<f64>,
    pub equal: Option<PnSummary>,
    pub optimal: Option<PnSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleSummary {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl ScaleSummary {
    pub fn of(values: &[f64]) -> Self {
        Self {
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            mean: values.iter().sum::<f64>() / values.len() as f64,
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldPair<T> {
    pub w0: T,
    pub w1: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePointResult {
    pub v: f64,
    pub pn: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub cluster_id: usize,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub medoid: Site,
    pub member_site_ids: Vec<String>,
    pub gamma_hat: Option<WorldPair<f64>>,
    pub sigma_hat: Option<WorldPair<ScaleSummary>>,
    pub return_periods: Vec<ReturnPeriodResult>,
    /// Equal-weight PN against the level `v`.
    pub curve: Vec<CurvePointResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub manifest: RunManifest,
    pub threshold_quantile: f64,
    pub blocks_per_year: f64,
    pub n_blocks: WorldPair<usize>,
    pub clusters: Vec<ClusterResult>,
}

pub const RESULTS_JSON: &str = "results.json";
pub const RESULTS_CSV: &str = "results.csv";
pub const CURVES_DIR: &str = "curves";

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Output files of [`persist_results`] for `bundle` under `dir`.
pub fn result_paths(dir: &Path, bundle: &ResultBundle) -> Vec<PathBuf> {
    let mut paths = vec![dir.join(RESULTS_JSON), dir.join(RESULTS_CSV)];
    paths.extend(
        bundle
            .clusters
            .iter()
            .map(|c| dir.join(CURVES_DIR).join(format!("cluster_{:03}.csv", c.cluster_id))),
    );
    paths
}

/// Writes `results.json` (with the manifest listing every output),
/// `results.csv` (one row per cluster, return period and weighting) and one
/// `curves/cluster_NNN.csv` per cluster. Returns the paths written.
pub fn persist_results(bundle: &ResultBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir.join(CURVES_DIR)).map_err(|e| Error::Input {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })?;
    let paths = result_paths(dir, bundle);
    let mut bundle = bundle.clone();
    bundle.manifest.output_paths = paths.iter().map(|p| p.display().to_string()).collect();

    let mut json = serde_json::to_string_pretty(&bundle)?;
    json.push('\n');
    std::fs::write(&paths[0], json)?;

    let mut w = csv::Writer::from_path(&paths[1])?;
    w.write_record([
        "cluster_id",
        "cluster_status",
        "medoid_site_id",
        "n_members",
        "return_period_years",
        "level",
        "weights_mode",
        "pn_status",
        "pn",
        "ci_lo",
        "ci_hi",
        "n_boot",
        "weights",
    ])?;
    for c in &bundle.clusters {
        let base = [
            c.cluster_id.to_string(),
            c.status.as_str().to_string(),
            c.medoid.id.clone(),
            c.member_site_ids.len().to_string(),
        ];
        if c.return_periods.is_empty() {
            let mut row = base.to_vec();
            row.extend(std::iter::repeat_n(String::new(), 9));
            w.write_record(row)?;
        }
        for rp in &c.return_periods {
            for (mode, pn) in [("equal", &rp.equal), ("optimal", &rp.optimal)] {
                let Some(pn) = pn else { continue };
                let mut row = base.to_vec();
                row.extend([
                    rp.years.to_string(),
                    opt(rp.level),
                    mode.to_string(),
                    pn.status.as_str().to_string(),
                    opt(pn.estimate),
                    opt(pn.ci_lo),
                    opt(pn.ci_hi),
                    pn.n_boot.to_string(),
                    pn.weights.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"),
                ]);
                w.write_record(row)?;
            }
        }
    }
    w.flush()?;

    for (c, path) in bundle.clusters.iter().zip(&paths[2..]) {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["v", "pn", "ci_lo", "ci_hi"])?;
        for p in &c.curve {
            w.write_record([p.v.to_string(), opt(p.pn), opt(p.ci_lo), opt(p.ci_hi)])?;
        }
        w.flush()?;
    }
    Ok(paths)
}

pub fn load_results(path: &Path) -> Result<ResultBundle> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundle() -> ResultBundle {
        let cfg = PipelineConfig {
            seed: Some(3),
            ..Default::default()
        };
        let ok = PnSummary {
            status: Status::Ok,
            estimate: Some(0.4),
            p0_hat: Some(0.01),
            p1_hat: Some(1.0 / 60.0),
            ci_lo: Some(0.1),
            ci_hi: Some(0.6),
            n_boot: 500,
            n_dropped: 2,
            ci_unreliable: false,
            weights: vec![0.5, 0.5],
            message: None,
        };
        ResultBundle {
            manifest: RunManifest::new("attribute", &cfg, vec!["in.csv".into()], 3),
            threshold_quantile: 0.95,
            blocks_per_year: 12.2425,
            n_blocks: WorldPair { w0: 100, w1: 100 },
            clusters: vec![
                ClusterResult {
                    cluster_id: 0,
                    status: Status::Ok,
                    message: None,
                    medoid: Site::new("a", 0.0, 0.0),
                    member_site_ids: vec!["a".into(), "b".into()],
                    gamma_hat: Some(WorldPair { w0: 0.1, w1: 0.12 }),
                    sigma_hat: Some(WorldPair {
                        w0: ScaleSummary::of(&[1.0, 2.0]),
                        w1: ScaleSummary::of(&[1.5, 2.5]),
                    }),
                    return_periods: vec![ReturnPeriodResult {
                        years: 5.0,
                        level: Some(3.2),
                        equal: Some(ok.clone()),
                        optimal: Some(PnSummary::not_available(Status::Undefined, vec![1.0, 0.0], "p1 = 0".into())),
                    }],
                    curve: vec![CurvePointResult {
                        v: 3.0,
                        pn: Some(0.3),
                        ci_lo: Some(0.1),
                        ci_hi: Some(0.5),
                    }],
                },
                ClusterResult {
                    cluster_id: 1,
                    status: Status::Failed,
                    message: Some("no exceedances".into()),
                    medoid: Site::new("c", 1.0, 0.0),
                    member_site_ids: vec!["c".into()],
                    gamma_hat: None,
                    sigma_hat: None,
                    return_periods: vec![],
                    curve: vec![],
                },
            ],
        }
    }

    #[test]
    fn round_trip_and_byte_stability() {
        let dir = tempfile::tempdir().unwrap();
        let b = bundle();
        let paths = persist_results(&b, dir.path()).unwrap();
        assert_eq!(paths.len(), 4);
        let first: Vec<Vec<u8>> = paths.iter().map(|p| std::fs::read(p).unwrap()).collect();
        persist_results(&b, dir.path()).unwrap();
        let second: Vec<Vec<u8>> = paths.iter().map(|p| std::fs::read(p).unwrap()).collect();
        assert_eq!(first, second);

        let back = load_results(&paths[0]).unwrap();
        assert_eq!(back.manifest.config, b.manifest.config);
        assert_eq!(back.clusters, b.clusters);
        assert_eq!(back.manifest.output_paths.len(), 4);
    }

    #[test]
    fn undefined_is_explicit() {
        let dir = tempfile::tempdir().unwrap();
        persist_results(&bundle(), dir.path()).unwrap();
        let json = std::fs::read_to_string(dir.path().join(RESULTS_JSON)).unwrap();
        assert!(json.contains("\"status\": \"undefined\""));
        assert!(json.contains("\"status\": \"failed\""));
        let csv = std::fs::read_to_string(dir.path().join(RESULTS_CSV)).unwrap();
        assert!(csv.contains(",optimal,undefined,,,,0,1;0"));
        assert!(!json.contains("wall_time"));
    }
}
