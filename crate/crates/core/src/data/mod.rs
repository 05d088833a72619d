//! Ingestion, seasonal block maxima, thresholds, synthetic worlds and
//! result files.
//!
//! Input CSV schema (header required): `date,site_id,lon,lat,value,world`,
//! ISO-8601 dates, `world` 0 (counterfactual) or 1 (factual).

mod blocks;
mod results;
mod series;
mod synthetic;

pub use blocks::{blocks_per_year, season_end, season_start, seasonal_weekly_maxima};
pub use results::{
    load_results, persist_results, result_paths, ClusterResult, CurvePointResult, PnSummary, ResultBundle, ReturnPeriodResult,
    RunManifest, ScaleSummary, Status, WorldPair, CURVES_DIR, RESULTS_CSV, RESULTS_JSON,
};
pub use series::{load_gridded_csv, read_gridded_csv, save_gridded_csv, write_gridded_csv, GriddedSeries, Record, CSV_HEADER};
pub use synthetic::{
    fig6_models, fig6_preset, generate_synthetic_worlds, grid_sites, matern_generator, two_block_models, two_block_preset,
    SyntheticSpec, FIG6_RANGES, FIG6_VARIANCE, TWO_BLOCK_SCALE_FACTOR, TWO_BLOCK_SITES,
};

use crate::attribution::WorldSample;
use crate::error::{Error, Result};
use crate::matrix::RowMatrix;
use crate::stats::quantile_sorted;

/// Per-column empirical quantiles (linear interpolation between order
/// statistics). `q = 0` gives the column minima.
pub fn column_quantiles(x: &RowMatrix, q: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain(format!("quantile level must lie in [0,1], got {q}")));
    }
    if x.nrows() == 0 {
        return Err(Error::domain("cannot take quantiles of an empty sample"));
    }
    Ok((0..x.ncols())
        .map(|j| {
            let mut col = x.column(j);
            col.sort_by(f64::total_cmp);
            quantile_sorted(&col, q)
        })
        .collect())
}

/// Per-site empirical `quantile` of one world.
pub fn select_thresholds(sample: &WorldSample, quantile: f64) -> Result<Vec<f64>> {
    column_quantiles(sample.observations(), quantile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::{Site, World};
    use crate::rng::substream;
    use rand::Rng;

    #[test]
    fn thresholds() {
        let mut rng = substream(2, 0);
        let n = 100_000;
        let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let s = WorldSample::new(
            RowMatrix::from_rows(&rows).unwrap(),
            World::Factual,
            vec![0.0, 0.0],
            Site::anonymous(2),
        )
        .unwrap();
        for u in select_thresholds(&s, 0.95).unwrap() {
            assert!((u - 0.95).abs() < 0.005);
        }
        let mins = select_thresholds(&s, 0.0).unwrap();
        for (j, m) in mins.iter().enumerate() {
            assert_eq!(*m, s.observations().column(j).iter().copied().fold(f64::INFINITY, f64::min));
        }
    }
}
