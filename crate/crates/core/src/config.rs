//! Run configuration shared by the pipeline and the command line.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::attribution::FitMethod;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightsMode {
    Equal,
    Optimal,
    #[default]
    Both,
}

impl WeightsMode {
    pub fn equal(self) -> bool {
        matches!(self, WeightsMode::Equal | WeightsMode::Both)
    }

    pub fn optimal(self) -> bool {
        matches!(self, WeightsMode::Optimal | WeightsMode::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Calendar months (1–12) making up the season.
    pub season: Vec<u32>,
    pub block_days: u32,
    pub threshold_quantile: f64,
    pub chi_quantile: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub return_periods_years: Vec<f64>,
    pub weights_mode: WeightsMode,
    #[serde(rename = "bootstrap_B")]
    pub bootstrap_b: usize,
    /// Moving-block length for the bootstrap, in blocks; 1 is i.i.d.
    pub bootstrap_block_len: usize,
    pub fit_method: FitMethod,
    /// Points on each exported PN-versus-level curve.
    pub curve_points: usize,
    pub seed: Option<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            season: vec![12, 1, 2],
            block_days: 7,
            threshold_quantile: 0.95,
            chi_quantile: 0.95,
            k: 40,
            return_periods_years: vec![5.0, 50.0],
            weights_mode: WeightsMode::Both,
            bootstrap_b: 500,
            bootstrap_block_len: 1,
            fit_method: FitMethod::MarginAverage,
            curve_points: 25,
            seed: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Input {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.season.is_empty() || self.season.iter().any(|m| !(1..=12).contains(m)) {
            return fail(format!("season must be a nonempty set of months 1-12, got {:?}", self.season));
        }
        let mut months = self.season.clone();
        months.sort_unstable();
        months.dedup();
        if months.len() != self.season.len() {
            return fail(format!("season lists a month twice: {:?}", self.season));
        }
        if self.block_days == 0 {
            return fail("block_days must be at least 1".into());
        }
        for (name, q) in [
            ("threshold_quantile", self.threshold_quantile),
            ("chi_quantile", self.chi_quantile),
        ] {
            if !(q > 0.0 && q < 1.0) {
                return fail(format!("{name} must lie in (0,1), got {q}"));
            }
        }
        if self.k == 0 {
            return fail("K must be at least 1".into());
        }
        if self.return_periods_years.is_empty() || self.return_periods_years.iter().any(|t| !(*t > 1.0) || !t.is_finite()) {
            return fail(format!(
                "return periods must exceed one year, got {:?}",
                self.return_periods_years
            ));
        }
        if self.bootstrap_b < crate::attribution::MIN_REPLICATES {
            return fail(format!(
                "bootstrap_B must be at least {}, got {}",
                crate::attribution::MIN_REPLICATES,
                self.bootstrap_b
            ));
        }
        if self.bootstrap_block_len == 0 {
            return fail("bootstrap_block_len must be at least 1".into());
        }
        if self.curve_points < 2 {
            return fail("curve_points must be at least 2".into());
        }
        Ok(())
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("a seed is required for this command".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = PipelineConfig::default();
        c.validate().unwrap();
        assert_eq!(c.season, vec![12, 1, 2]);
        assert_eq!(c.k, 40);
    }

    #[test]
    fn json_field_names() {
        let c: PipelineConfig =
            serde_json::from_str(r#"{"K": 3, "bootstrap_B": 200, "weights_mode": "equal", "seed": 4}"#).unwrap();
        assert_eq!(
            (c.k, c.bootstrap_b, c.weights_mode, c.seed),
            (3, 200, WeightsMode::Equal, Some(4))
        );
        let back: PipelineConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"k": 3}"#).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            PipelineConfig {
                threshold_quantile: 1.0,
                ..Default::default()
            },
            PipelineConfig {
                block_days: 0,
                ..Default::default()
            },
            PipelineConfig {
                season: vec![13],
                ..Default::default()
            },
            PipelineConfig {
                bootstrap_b: 10,
                ..Default::default()
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))));
        }
    }
}
