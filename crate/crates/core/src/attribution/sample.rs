use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RowMatrix;
use crate::weights::WeightVector;

/// Which run a sample comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum World {
    /// Natural forcings only (`p0`).
    Counterfactual,
    /// All forcings (`p1`).
    Factual,
}

impl World {
    pub fn code(self) -> u8 {
        match self {
            World::Counterfactual => 0,
            World::Factual => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(World::Counterfactual),
            1 => Some(World::Factual),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub id: String,
    pub lon: f64,
    pub lat: f64,
}

impl Site {
    pub fn new(id: impl Into<String>, lon: f64, lat: f64) -> Self {
        Self { id: id.into(), lon, lat }
    }

    /// Anonymous sites `s0, s1, ...` on a line.
    pub fn anonymous(d: usize) -> Vec<Site> {
        (0..d).map(|j| Site::new(format!("s{j}"), j as f64, 0.0)).collect()
    }
}

/// An `n x d` sample from one world with its marginal thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSample {
    observations: RowMatrix,
    world: World,
    threshold_u: Vec<f64>,
    sites: Vec<Site>,
}

impl WorldSample {
    pub fn new(observations: RowMatrix, world: World, threshold_u: Vec<f64>, sites: Vec<Site>) -> Result<Self> {
        let d = observations.ncols();
        if sites.len() != d {
            return Err(Error::domain(format!("{} sites for {d} columns", sites.len())));
        }
        if threshold_u.len() != d || threshold_u.iter().any(|u| !u.is_finite()) {
            return Err(Error::domain(format!("need {d} finite thresholds, got {threshold_u:?}")));
        }
        if observations.as_slice().iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("observations must be finite"));
        }
        Ok(Self {
            observations,
            world,
            threshold_u,
            sites,
        })
    }

    /// A sample whose thresholds are the per-site empirical `quantile`.
    pub fn with_quantile_thresholds(observations: RowMatrix, world: World, sites: Vec<Site>, quantile: f64) -> Result<Self> {
        let u = crate::data::column_quantiles(&observations, quantile)?;
        Self::new(observations, world, u, sites)
    }

    pub fn observations(&self) -> &RowMatrix {
        &self.observations
    }

    pub fn world(&self) -> World {
        self.world
    }

    pub fn threshold_u(&self) -> &[f64] {
        &self.threshold_u
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn n(&self) -> usize {
        self.observations.nrows()
    }

    pub fn dim(&self) -> usize {
        self.observations.ncols()
    }

    pub fn with_thresholds(&self, threshold_u: Vec<f64>) -> Result<Self> {
        Self::new(self.observations.clone(), self.world, threshold_u, self.sites.clone())
    }

    /// Same sites and thresholds, different rows.
    pub(crate) fn with_observations(&self, observations: RowMatrix) -> Self {
        Self {
            observations,
            world: self.world,
            threshold_u: self.threshold_u.clone(),
            sites: self.sites.clone(),
        }
    }

    /// Restriction to a subset of sites.
    pub fn select_sites(&self, idx: &[usize]) -> Result<Self> {
        Self::new(
            self.observations.select_columns(idx),
            self.world,
            idx.iter().map(|&j| self.threshold_u[j]).collect(),
            idx.iter().map(|&j| self.sites[j].clone()).collect(),
        )
    }

    pub fn projections(&self, w: &WeightVector) -> Vec<f64> {
        self.observations.rows_iter().map(|r| w.dot(r)).collect()
    }

    pub fn projected_threshold(&self, w: &WeightVector) -> f64 {
        w.dot(&self.threshold_u)
    }
}

/// Rows with at least one component above its threshold, shifted by `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceSet {
    pub z_rows: RowMatrix,
    pub n_total: usize,
    pub n_exceed: usize,
}

impl ExceedanceSet {
    /// Strictly positive excesses of site `j`.
    pub fn positive_component(&self, j: usize) -> Vec<f64> {
        self.z_rows.rows_iter().map(|r| r[j]).filter(|&z| z > 0.0).collect()
    }
}

pub fn extract_exceedances(sample: &WorldSample) -> Result<ExceedanceSet> {
    let u = sample.threshold_u();
    let d = sample.dim();
    let mut data = Vec::new();
    for row in sample.observations().rows_iter() {
        if row.iter().zip(u).any(|(x, u)| x > u) {
            data.extend(row.iter().zip(u).map(|(x, u)| x - u));
        }
    }
    let n_exceed = data.len() / d.max(1);
    if n_exceed == 0 {
        return Err(Error::EmptyExceedances(format!(
            "no row of the {} sample exceeds its thresholds",
            sample.n()
        )));
    }
    Ok(ExceedanceSet {
        z_rows: RowMatrix::from_vec(n_exceed, d, data)?,
        n_total: sample.n(),
        n_exceed,
    })
}

/// `n⁻¹ #{t : wᵀX_t > v}`.
pub fn empirical_exceedance_prob(sample: &WorldSample, w: &WeightVector, v: f64) -> Result<f64> {
    w.check_dim(sample.dim())?;
    if sample.n() == 0 {
        return Err(Error::domain("empty sample"));
    }
    Ok(empirical_count(sample, w.as_slice(), v) as f64 / sample.n() as f64)
}

pub(crate) fn empirical_count(sample: &WorldSample, w: &[f64], v: f64) -> usize {
    sample
        .observations()
        .rows_iter()
        .filter(|r| r.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() > v)
        .count()
}
