//! Desk-scale reproductions of the reference tables and figures.
//!
//! Each experiment returns a [`Report`]: plot-ready tables plus a list of
//! checks comparing the computed numbers against published targets where
//! those exist.

mod curves;
mod fig6;
mod table1;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use curves::{fig2, fig3, fig4, fig5, Fig4Config, Fig5Config};
pub use fig6::{fig6, fig6_dimension, Fig6Config, Fig6Dimension};
pub use table1::{table1, Table1Config, TABLE1_MGPD_TARGETS, TABLE1_PERIODS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Table1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Table1,
        Experiment::Fig2,
        Experiment::Fig3,
        Experiment::Fig4,
        Experiment::Fig5,
        Experiment::Fig6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Table1 => "table1",
            Experiment::Fig2 => "fig2",
            Experiment::Fig3 => "fig3",
            Experiment::Fig4 => "fig4",
            Experiment::Fig5 => "fig5",
            Experiment::Fig6 => "fig6",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            Error::Config(format!(
                "unknown experiment {s:?}; expected one of table1, fig2, fig3, fig4, fig5, fig6"
            ))
        })
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Columns of numbers; `NaN` marks an undefined entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| if x.is_nan() { String::new() } else { x.to_string() }))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One comparison against a target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub observed: String,
    pub target: String,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, observed: impl Into<String>, target: impl Into<String>, pass: bool) -> Self {
        Self {
            name: name.into(),
            observed: observed.into(),
            target: target.into(),
            pass,
        }
    }

    /// `|observed - target| <= tol`.
    pub fn near(name: impl Into<String>, observed: f64, target: f64, tol: f64) -> Self {
        Self::new(
            name,
            format!("{observed:.4}"),
            format!("{target} ± {tol}"),
            (observed - target).abs() <= tol,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: Experiment,
    pub seed: u64,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Writes one `<experiment>_<table>.csv` per table and returns the paths.
    pub fn write_csvs(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        self.tables
            .iter()
            .map(|t| {
                let path = dir.join(format!("{}_{}.csv", self.experiment, t.name));
                t.write_csv(&path)?;
                Ok(path)
            })
            .collect()
    }
}

fn fmt_cell(x: f64) -> String {
    if x.is_nan() {
        "-".into()
    } else if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e6) {
        format!("{x:.4e}")
    } else {
        format!("{x:.4}")
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# {} (seed {})", self.experiment, self.seed)?;
        for t in &self.tables {
            writeln!(f, "\n## {}", t.name)?;
            writeln!(f, "{}", t.columns.join("\t"))?;
            for row in &t.rows {
                writeln!(f, "{}", row.iter().map(|&x| fmt_cell(x)).collect::<Vec<_>>().join("\t"))?;
            }
        }
        if !self.checks.is_empty() {
            writeln!(f, "\n## comparison")?;
            for c in &self.checks {
                writeln!(
                    f,
                    "[{}] {}: {} (target {})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.observed,
                    c.target
                )?;
            }
        }
        Ok(())
    }
}

/// Runs `experiment` with its default desk-scale settings.
pub fn reproduce(experiment: Experiment, seed: u64) -> Result<Report> {
    match experiment {
        Experiment::Table1 => table1(&Table1Config {
            seed,
            ..Default::default()
        }),
        Experiment::Fig2 => fig2(),
        Experiment::Fig3 => fig3(),
        Experiment::Fig4 => fig4(&Fig4Config {
            seed,
            ..Default::default()
        }),
        Experiment::Fig5 => fig5(&Fig5Config {
            seed,
            ..Default::default()
        }),
        Experiment::Fig6 => fig6(&Fig6Config {
            seed,
            ..Default::default()
        }),
    }
}

/// `lo, lo + step, ..., hi`.
pub(crate) fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
}
