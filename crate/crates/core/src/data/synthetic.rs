use chrono::NaiveDate;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::blocks::{season_end, season_start};
use super::series::{GriddedSeries, Record};
use crate::attribution::{Site, World};
use crate::error::{Error, Result};
use crate::mgpd::{simulate_mgpd, GaussianGenerator, MgpdModel};
use crate::rng::derive_seed;
use crate::stats::whittle_matern;

/// Two MGPD worlds laid out as daily series whose seasonal block maxima are
/// the MGPD draws (shifted by `baseline` and floored at zero).
///
/// The first day of each block carries the draw and the remaining days hold
/// zero, so preprocessing with the same season and block length recovers
/// the rows exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub sites: Vec<Site>,
    pub counterfactual: MgpdModel,
    pub factual: MgpdModel,
    pub n_counterfactual: usize,
    pub n_factual: usize,
    pub baseline: f64,
    pub season: Vec<u32>,
    pub block_days: u32,
    pub first_season_year: i32,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        let d = self.sites.len();
        if self.counterfactual.dim() != d || self.factual.dim() != d {
            return Err(Error::Model(format!(
                "models of dimension {} and {} for {d} sites",
                self.counterfactual.dim(),
                self.factual.dim()
            )));
        }
        if self.n_counterfactual == 0 || self.n_factual == 0 {
            return Err(Error::Model("sample sizes must be positive".into()));
        }
        if self.block_days == 0 || self.season.is_empty() || self.season.iter().any(|m| !(1..=12).contains(m)) {
            return Err(Error::Model("invalid season or block length".into()));
        }
        if !self.baseline.is_finite() {
            return Err(Error::Model("baseline must be finite".into()));
        }
        Ok(())
    }
}

/// Default layout: winter seasons from December 1950, weekly blocks.
fn winter_spec(sites: Vec<Site>, counterfactual: MgpdModel, factual: MgpdModel, n: usize, baseline: f64) -> SyntheticSpec {
    SyntheticSpec {
        sites,
        counterfactual,
        factual,
        n_counterfactual: n,
        n_factual: n,
        baseline,
        season: vec![12, 1, 2],
        block_days: 7,
        first_season_year: 1950,
    }
}

/// Sites on a `side x side` unit grid, row-major.
pub fn grid_sites(side: usize) -> Vec<Site> {
    (0..side * side)
        .map(|i| Site::new(format!("g{}{}", i / side, i % side), (i % side) as f64, (i / side) as f64))
        .collect()
}

/// `variance · ρ(h)` with `ρ` the Whittle–Matérn correlation (κ = 1).
pub fn matern_generator(sites: &[Site], range: f64, variance: f64) -> Result<GaussianGenerator> {
    let d = sites.len();
    let corr = DMatrix::from_fn(d, d, |i, j| {
        let h = ((sites[i].lon - sites[j].lon).powi(2) + (sites[i].lat - sites[j].lat).powi(2)).sqrt();
        whittle_matern(h, range)
    });
    GaussianGenerator::from_correlation(corr, variance)
}

pub const FIG6_RANGES: (f64, f64) = (1.0, 2.5);
pub const FIG6_VARIANCE: f64 = 10.0;

/// The 3x3 grid worlds: unit scales, zero shape, Whittle–Matérn generators
/// with ranges 1 (counterfactual) and 2.5 (factual), variance 10.
pub fn fig6_models() -> Result<(Vec<Site>, MgpdModel, MgpdModel)> {
    let sites = grid_sites(3);
    let g0 = matern_generator(&sites, FIG6_RANGES.0, FIG6_VARIANCE)?;
    let g1 = matern_generator(&sites, FIG6_RANGES.1, FIG6_VARIANCE)?;
    let m0 = MgpdModel::new(g0, vec![1.0; 9], 0.0)?;
    let m1 = MgpdModel::new(g1, vec![1.0; 9], 0.0)?;
    Ok((sites, m0, m1))
}

pub fn fig6_preset(n: usize) -> Result<SyntheticSpec> {
    let (sites, m0, m1) = fig6_models()?;
    Ok(winter_spec(sites, m0, m1, n, 20.0))
}

/// Sites per block in the two-block preset.
pub const TWO_BLOCK_SITES: usize = 4;
pub const TWO_BLOCK_SCALE_FACTOR: f64 = 2.0;

/// Two spatially separated blocks of four sites. Within a block the
/// generator correlation is 0.95, across blocks zero, variance 5, so tail
/// dependence is strong inside blocks and weak between them. The factual
/// world multiplies the scales of block `a` by [`TWO_BLOCK_SCALE_FACTOR`];
/// block `b` is unchanged. Shape 0.1 everywhere.
pub fn two_block_models() -> Result<(Vec<Site>, MgpdModel, MgpdModel)> {
    let k = TWO_BLOCK_SITES;
    let sites: Vec<Site> = (0..2 * k)
        .map(|i| {
            let (block, j) = (i / k, i % k);
            let name = if block == 0 { "a" } else { "b" };
            Site::new(format!("{name}{j}"), 10.0 * block as f64 + j as f64, 0.0)
        })
        .collect();
    let corr = DMatrix::from_fn(2 * k, 2 * k, |i, j| {
        if i == j {
            1.0
        } else if i / k == j / k {
            0.95
        } else {
            0.0
        }
    });
    let g = GaussianGenerator::from_correlation(corr, 5.0)?;
    let s1: Vec<f64> = (0..2 * k).map(|i| if i < k { TWO_BLOCK_SCALE_FACTOR } else { 1.0 }).collect();
    Ok((
        sites,
        MgpdModel::new(g.clone(), vec![1.0; 2 * k], 0.1)?,
        MgpdModel::new(g, s1, 0.1)?,
    ))
}

pub fn two_block_preset(n: usize) -> Result<SyntheticSpec> {
    let (sites, m0, m1) = two_block_models()?;
    Ok(winter_spec(sites, m0, m1, n, 20.0))
}

/// Starting dates of the first `n` complete blocks from the first
/// season onwards, plus every in-season date up to the end of the last
/// block.
fn block_calendar(spec: &SyntheticSpec, n: usize) -> Result<(Vec<NaiveDate>, Vec<(NaiveDate, Option<usize>)>)> {
    let block = i64::from(spec.block_days);
    let mut starts = Vec::with_capacity(n);
    let mut days = Vec::new();
    let mut day = NaiveDate::from_ymd_opt(spec.first_season_year, 1, 1).ok_or_else(|| Error::Model("bad first year".into()))?;
    // move to the first season start on or after Jan 1 of the first year
    while season_start(day, &spec.season) != Some(day) {
        day = day.succ_opt().expect("calendar range");
    }
    while starts.len() < n {
        let start = day;
        let end = season_end(start, &spec.season);
        let len = (end - start).num_days();
        let full = len / block;
        if full == 0 {
            return Err(Error::Model(format!("season shorter than one {}-day block", spec.block_days)));
        }
        for offset in 0..len {
            if starts.len() == n && offset % block == 0 {
                // the last block is complete; leave the rest of the season out
                break;
            }
            let date = start + chrono::Days::new(offset as u64);
            let b = offset / block;
            let row = (offset % block == 0 && b < full && starts.len() < n).then(|| {
                starts.push(date);
                starts.len() - 1
            });
            days.push((date, row));
        }
        day = end;
        while season_start(day, &spec.season) != Some(day) {
            day = day.succ_opt().expect("calendar range");
        }
    }
    Ok((starts, days))
}

/// Bit-reproducible two-world series; world `i` uses seed
/// `derive_seed(seed, i)`.
pub fn generate_synthetic_worlds(spec: &SyntheticSpec, seed: u64) -> Result<GriddedSeries> {
    spec.validate()?;
    let mut records = Vec::new();
    for (world, model, n) in [
        (World::Counterfactual, &spec.counterfactual, spec.n_counterfactual),
        (World::Factual, &spec.factual, spec.n_factual),
    ] {
        let z = simulate_mgpd(model, n, derive_seed(seed, u64::from(world.code())))?.values;
        let (_, days) = block_calendar(spec, n)?;
        for (date, row) in days {
            for (j, site) in spec.sites.iter().enumerate() {
                let value = match row {
                    Some(t) => (spec.baseline + z.get(t, j)).max(0.0),
                    None => 0.0,
                };
                records.push(Record {
                    date,
                    site_id: site.id.clone(),
                    lon: site.lon,
                    lat: site.lat,
                    value,
                    world,
                });
            }
        }
    }
    Ok(GriddedSeries { records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PipelineConfig;
    use crate::data::blocks::seasonal_weekly_maxima;
    use crate::mgpd::chi_pair_theoretical;

    #[test]
    fn blocks_recover_draws() {
        let spec = two_block_preset(100).unwrap();
        let series = generate_synthetic_worlds(&spec, 7).unwrap();
        let (x0, x1) = seasonal_weekly_maxima(&series, &PipelineConfig::default()).unwrap();
        assert_eq!((x0.n(), x1.n()), (100, 100));
        let z = simulate_mgpd(&spec.counterfactual, 100, derive_seed(7, 0)).unwrap().values;
        for t in 0..100 {
            for j in 0..8 {
                assert_eq!(x0.observations().get(t, j), (20.0 + z.get(t, j)).max(0.0));
            }
        }
    }

    #[test]
    fn seed_determinism() {
        let spec = fig6_preset(30).unwrap();
        assert_eq!(
            generate_synthetic_worlds(&spec, 1).unwrap(),
            generate_synthetic_worlds(&spec, 1).unwrap()
        );
        assert_ne!(
            generate_synthetic_worlds(&spec, 1).unwrap(),
            generate_synthetic_worlds(&spec, 2).unwrap()
        );
    }

    #[test]
    fn fig6_chi_ranges() {
        let (sites, m0, m1) = fig6_models().unwrap();
        assert_eq!(sites.len(), 9);
        // nearest (distance 1) and farthest (distance √8) pairs
        for (pair, lo0, hi0, lo1, hi1) in [((0, 1), 0.37, 0.43, 0.52, 0.58), ((0, 8), 0.27, 0.33, 0.37, 0.43)] {
            let c0 = chi_pair_theoretical(&m0.generator, pair, 400_000, 3).unwrap();
            let c1 = chi_pair_theoretical(&m1.generator, pair, 400_000, 4).unwrap();
            assert!(c0 > lo0 && c0 < hi0, "{pair:?}: {c0}");
            assert!(c1 > lo1 && c1 < hi1, "{pair:?}: {c1}");
        }
    }
}
