use std::collections::{BTreeMap, HashMap};

use chrono::{Datelike, NaiveDate};

use super::series::GriddedSeries;
use crate::attribution::{Site, World, WorldSample};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::matrix::RowMatrix;

fn prev_month(y: i32, m: u32) -> (i32, u32) {
    if m == 1 {
        (y - 1, 12)
    } else {
        (y, m - 1)
    }
}

fn next_month(y: i32, m: u32) -> (i32, u32) {
    if m == 12 {
        (y + 1, 1)
    } else {
        (y, m + 1)
    }
}

fn first_of(y: i32, m: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, 1).expect("valid month")
}

/// First day of the season containing `date`, if `date` is in season.
/// A season is a maximal run of consecutive months from `months`; when all
/// twelve months are listed the season is the calendar year.
pub fn season_start(date: NaiveDate, months: &[u32]) -> Option<NaiveDate> {
    if !months.contains(&date.month()) {
        return None;
    }
    if months.len() >= 12 {
        return Some(first_of(date.year(), 1));
    }
    let (mut y, mut m) = (date.year(), date.month());
    loop {
        let (py, pm) = prev_month(y, m);
        if !months.contains(&pm) {
            return Some(first_of(y, m));
        }
        (y, m) = (py, pm);
    }
}

/// First day after the season that begins on `start`.
pub fn season_end(start: NaiveDate, months: &[u32]) -> NaiveDate {
    if months.len() >= 12 {
        return first_of(start.year() + 1, 1);
    }
    let (mut y, mut m) = (start.year(), start.month());
    loop {
        (y, m) = next_month(y, m);
        if !months.contains(&m) {
            return first_of(y, m);
        }
    }
}

/// Mean number of complete blocks per season over a 400-year calendar cycle.
pub fn blocks_per_year(config: &PipelineConfig) -> f64 {
    let months = &config.season;
    let block = i64::from(config.block_days);
    let mut blocks = 0i64;
    for y in 2000..2400 {
        for m in 1..=12u32 {
            let start = first_of(y, m);
            if season_start(start, months) == Some(start) {
                blocks += (season_end(start, months) - start).num_days() / block;
            }
        }
    }
    blocks as f64 / 400.0
}

type BlockKey = (NaiveDate, i64);

fn world_blocks(series: &GriddedSeries, world: World, sites: &[Site], config: &PipelineConfig) -> Result<RowMatrix> {
    let block = i64::from(config.block_days);
    let index: HashMap<&str, usize> = sites.iter().enumerate().map(|(j, s)| (s.id.as_str(), j)).collect();
    // per block: per-site (day count, running max)
    let mut acc: BTreeMap<BlockKey, Vec<(i64, f64)>> = BTreeMap::new();
    for r in series.records.iter().filter(|r| r.world == world) {
        let Some(start) = season_start(r.date, &config.season) else {
            continue;
        };
        let offset = (r.date - start).num_days();
        let b = offset / block;
        let end = season_end(start, &config.season);
        if (end - start).num_days() < (b + 1) * block {
            continue;
        }
        let j = index[r.site_id.as_str()];
        let cell = &mut acc
            .entry((start, b))
            .or_insert_with(|| vec![(0, f64::NEG_INFINITY); sites.len()])[j];
        cell.0 += 1;
        cell.1 = cell.1.max(r.value);
    }
    let mut data = Vec::new();
    let mut rows = 0;
    for cells in acc.values() {
        if cells.iter().all(|(count, _)| *count == block) {
            data.extend(cells.iter().map(|c| c.1));
            rows += 1;
        }
    }
    if rows == 0 {
        return Err(Error::EstimationFailure(format!(
            "world {} has no complete {}-day block in season",
            world.code(),
            config.block_days
        )));
    }
    RowMatrix::from_vec(rows, sites.len(), data)
}

/// Seasonal block maxima of both worlds, thresholded at
/// `config.threshold_quantile`.
///
/// Each season is cut into consecutive `block_days`-day blocks from its first
/// day; the trailing partial block and any block with a missing day at some
/// site are dropped. Columns follow the counterfactual world's site order.
pub fn seasonal_weekly_maxima(series: &GriddedSeries, config: &PipelineConfig) -> Result<(WorldSample, WorldSample)> {
    config.validate()?;
    let sites = series.sites(World::Counterfactual);
    let factual = series.sites(World::Factual);
    if sites.is_empty() || factual.is_empty() {
        return Err(Error::Alignment("both worlds need at least one site".into()));
    }
    let mut a: Vec<&str> = sites.iter().map(|s| s.id.as_str()).collect();
    let mut b: Vec<&str> = factual.iter().map(|s| s.id.as_str()).collect();
    a.sort_unstable();
    b.sort_unstable();
    if a != b {
        let only0: Vec<&str> = a.iter().filter(|s| !b.contains(s)).copied().collect();
        let only1: Vec<&str> = b.iter().filter(|s| !a.contains(s)).copied().collect();
        return Err(Error::Alignment(format!(
            "sites only in world 0: {only0:?}; only in world 1: {only1:?}"
        )));
    }
    let q = config.threshold_quantile;
    let x0 = world_blocks(series, World::Counterfactual, &sites, config)?;
    let x1 = world_blocks(series, World::Factual, &sites, config)?;
    Ok((
        WorldSample::with_quantile_thresholds(x0, World::Counterfactual, sites.clone(), q)?,
        WorldSample::with_quantile_thresholds(x1, World::Factual, sites, q)?,
    ))
}
