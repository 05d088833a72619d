//! Multivariate generalized Pareto vectors built from a Gaussian generator.
//!
//! A standard draw is `Z* = E + T - max_j T_j` with `E` unit exponential and
//! `T` Gaussian. Margins are then mapped componentwise through
//! `Z = σ (exp(γ Z*) - 1) / γ` (`σ Z*` when `γ = 0`), so that every positive
//! conditional margin `Z_j | Z_j > 0` is GPD(σ_j, γ).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpd::SHAPE_SWITCH;
use crate::matrix::RowMatrix;
use crate::rng::{chunks, substream};
use crate::weights::WeightVector;

const SYMMETRY_TOLERANCE: f64 = 1e-12;
const EIGEN_FLOOR: f64 = -1e-10;

/// Gaussian generator `T ~ N(mean, covariance)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeneratorSpec", into = "GeneratorSpec")]
pub struct GaussianGenerator {
    mean: Vec<f64>,
    covariance: DMatrix<f64>,
    /// `V sqrt(Λ)` from the clipped eigendecomposition.
    factor: DMatrix<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GeneratorSpec {
    mean: Vec<f64>,
    covariance: Vec<Vec<f64>>,
}

impl TryFrom<GeneratorSpec> for GaussianGenerator {
    type Error = Error;

    fn try_from(spec: GeneratorSpec) -> Result<Self> {
        let d = spec.mean.len();
        if spec.covariance.len() != d || spec.covariance.iter().any(|r| r.len() != d) {
            return Err(Error::Model(format!("covariance must be {d}x{d}")));
        }
        let cov = DMatrix::from_fn(d, d, |i, j| spec.covariance[i][j]);
        GaussianGenerator::new(spec.mean, cov)
    }
}

impl From<GaussianGenerator> for GeneratorSpec {
    fn from(g: GaussianGenerator) -> Self {
        let d = g.dim();
        GeneratorSpec {
            covariance: (0..d).map(|i| (0..d).map(|j| g.covariance[(i, j)]).collect()).collect(),
            mean: g.mean,
        }
    }
}

impl GaussianGenerator {
    pub fn new(mean: Vec<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::Model("generator dimension must be positive".into()));
        }
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::Model(format!("covariance must be {d}x{d}")));
        }
        if mean.iter().chain(covariance.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Model("generator parameters must be finite".into()));
        }
        let scale = covariance.amax().max(1.0);
        for i in 0..d {
            for j in 0..i {
                if (covariance[(i, j)] - covariance[(j, i)]).abs() > SYMMETRY_TOLERANCE * scale {
                    return Err(Error::Model(format!("covariance is not symmetric at ({i},{j})")));
                }
            }
        }
        let eig = SymmetricEigen::new(covariance.clone());
        if let Some(&bad) = eig.eigenvalues.iter().find(|&&l| l < EIGEN_FLOOR * scale) {
            return Err(Error::Model(format!(
                "covariance is not positive semi-definite (eigenvalue {bad})"
            )));
        }
        let sqrt_l = DVector::from_iterator(d, eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()));
        let factor = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_l);
        Ok(Self {
            mean,
            covariance,
            factor,
        })
    }

    pub fn identity(d: usize) -> Self {
        Self::scaled_identity(d, 1.0).expect("identity covariance factorizes")
    }

    /// Zero mean, covariance `variance * I`.
    pub fn scaled_identity(d: usize, variance: f64) -> Result<Self> {
        Self::new(vec![0.0; d], DMatrix::identity(d, d) * variance)
    }

    /// Zero mean, covariance `variance * C` with `C` a correlation matrix.
    pub fn from_correlation(correlation: DMatrix<f64>, variance: f64) -> Result<Self> {
        let d = correlation.nrows();
        Self::new(vec![0.0; d], correlation * variance)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// The bivariate generator of components `(j, k)`.
    pub fn pair(&self, j: usize, k: usize) -> Result<Self> {
        let d = self.dim();
        if j >= d || k >= d || j == k {
            return Err(Error::domain(format!("invalid pair ({j},{k}) for dimension {d}")));
        }
        let idx = [j, k];
        let cov = DMatrix::from_fn(2, 2, |a, b| self.covariance[(idx[a], idx[b])]);
        Self::new(vec![self.mean[j], self.mean[k]], cov)
    }

    /// Writes one draw of `T` into `out`; `normals` is scratch of length `d`.
    fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, normals: &mut [f64], out: &mut [f64]) {
        let d = self.dim();
        for z in normals.iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = self.mean[i];
            for (k, z) in normals.iter().enumerate().take(d) {
                acc += self.factor[(i, k)] * z;
            }
            *o = acc;
        }
    }

    /// One standard MGPD row `E + T - max T`.
    fn standard_row<R: Rng + ?Sized>(&self, rng: &mut R, normals: &mut [f64], out: &mut [f64]) {
        self.draw_into(rng, normals, out);
        let e: f64 = rng.sample(Exp1);
        let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for x in out.iter_mut() {
            *x = e + (*x - max);
        }
    }
}

/// MGPD with a common shape across components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct MgpdModel {
    pub generator: GaussianGenerator,
    scales: Vec<f64>,
    shape: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelSpec {
    generator: GaussianGenerator,
    scales: Vec<f64>,
    shape: f64,
}

impl TryFrom<ModelSpec> for MgpdModel {
    type Error = Error;

    fn try_from(spec: ModelSpec) -> Result<Self> {
        MgpdModel::new(spec.generator, spec.scales, spec.shape)
    }
}

impl From<MgpdModel> for ModelSpec {
    fn from(m: MgpdModel) -> Self {
        ModelSpec {
            generator: m.generator,
            scales: m.scales,
            shape: m.shape,
        }
    }
}

impl MgpdModel {
    pub fn new(generator: GaussianGenerator, scales: Vec<f64>, shape: f64) -> Result<Self> {
        if scales.len() != generator.dim() {
            return Err(Error::Model(format!(
                "{} scales for a {}-dimensional generator",
                scales.len(),
                generator.dim()
            )));
        }
        if scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::Model(format!("scales must be positive: {scales:?}")));
        }
        if !shape.is_finite() {
            return Err(Error::Model("shape must be finite".into()));
        }
        Ok(Self {
            generator,
            scales,
            shape,
        })
    }

    pub fn dim(&self) -> usize {
        self.scales.len()
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    /// Projected scale `wᵀσ`.
    pub fn projected_scale(&self, w: &WeightVector) -> f64 {
        w.dot(&self.scales)
    }
}

fn transform_margin(z_star: f64, scale: f64, shape: f64) -> f64 {
    if shape.abs() < SHAPE_SWITCH {
        scale * z_star
    } else {
        scale * (shape * z_star).exp_m1() / shape
    }
}

/// `n` rows of `Z*`, chunked over sub-streams of `seed`.
pub fn simulate_standard(generator: &GaussianGenerator, n: usize, seed: u64) -> Result<RowMatrix> {
    simulate_rows(generator, n, seed, |_| {})
}

fn simulate_rows(generator: &GaussianGenerator, n: usize, seed: u64, map_row: impl Fn(&mut [f64]) + Sync) -> Result<RowMatrix> {
    if n == 0 {
        return Err(Error::domain("number of draws must be at least one"));
    }
    let d = generator.dim();
    let blocks: Vec<Vec<f64>> = chunks(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(c, _, len)| {
            let mut rng = substream(seed, c);
            let mut normals = vec![0.0; d];
            let mut out = vec![0.0; len * d];
            for row in out.chunks_exact_mut(d) {
                generator.standard_row(&mut rng, &mut normals, row);
                map_row(row);
            }
            out
        })
        .collect();
    RowMatrix::from_vec(n, d, blocks.concat())
}

/// MGPD draws with the simulation seed recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgpdSample {
    pub values: RowMatrix,
    pub model: MgpdModel,
    pub seed: u64,
}

pub fn simulate_mgpd(model: &MgpdModel, n: usize, seed: u64) -> Result<MgpdSample> {
    let scales = model.scales.clone();
    let shape = model.shape;
    let values = simulate_rows(&model.generator, n, seed, |row| {
        for (x, s) in row.iter_mut().zip(&scales) {
            *x = transform_margin(*x, *s, shape);
        }
    })?;
    Ok(MgpdSample {
        values,
        model: model.clone(),
        seed,
    })
}

/// Simulation with one shape per component. Projection results require a
/// common shape and are not available for such samples.
pub fn simulate_mgpd_componentwise(
    generator: &GaussianGenerator,
    scales: &[f64],
    shapes: &[f64],
    n: usize,
    seed: u64,
) -> Result<RowMatrix> {
    let d = generator.dim();
    if scales.len() != d || shapes.len() != d {
        return Err(Error::Model("scale and shape vectors must match the generator".into()));
    }
    if scales.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::Model("scales must be positive".into()));
    }
    simulate_rows(generator, n, seed, |row| {
        for ((x, s), g) in row.iter_mut().zip(scales).zip(shapes) {
            *x = transform_margin(*x, *s, *g);
        }
    })
}

/// Strictly positive values of `wᵀZ`.
pub fn linear_project(sample: &MgpdSample, w: &WeightVector) -> Result<Vec<f64>> {
    w.check_dim(sample.values.ncols())?;
    let out: Vec<f64> = sample.values.rows_iter().map(|r| w.dot(r)).filter(|&y| y > 0.0).collect();
    if out.is_empty() {
        return Err(Error::EmptyExceedances("no positive projections".into()));
    }
    Ok(out)
}

/// A Monte-Carlo proportion with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub draws: usize,
}

impl McEstimate {
    fn from_count(hits: usize, n: usize) -> Self {
        let p = hits as f64 / n as f64;
        Self {
            estimate: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
            draws: n,
        }
    }
}

pub const MIN_PROJECTION_DRAWS: usize = 10_000;
pub const MIN_CHI_DRAWS: usize = 100_000;

/// Counts rows of `simulate_mgpd(model, n, seed)` satisfying `pred`,
/// without materializing the sample.
pub(crate) fn count_rows(model: &MgpdModel, n: usize, seed: u64, pred: impl Fn(&[f64]) -> bool + Sync) -> usize {
    let d = model.dim();
    chunks(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(c, _, len)| {
            let mut rng = substream(seed, c);
            let mut normals = vec![0.0; d];
            let mut row = vec![0.0; d];
            let mut hits = 0usize;
            for _ in 0..len {
                model.generator.standard_row(&mut rng, &mut normals, &mut row);
                for (x, s) in row.iter_mut().zip(&model.scales) {
                    *x = transform_margin(*x, *s, model.shape);
                }
                if pred(&row) {
                    hits += 1;
                }
            }
            hits
        })
        .sum()
}

/// Monte-Carlo estimate of `P[wᵀZ > 0]`.
pub fn positive_projection_prob(model: &MgpdModel, w: &WeightVector, mc_size: usize, seed: u64) -> Result<McEstimate> {
    w.check_dim(model.dim())?;
    if mc_size < MIN_PROJECTION_DRAWS {
        return Err(Error::domain(format!(
            "need at least {MIN_PROJECTION_DRAWS} draws, got {mc_size}"
        )));
    }
    let hits = count_rows(model, mc_size, seed, |r| w.dot(r) > 0.0);
    Ok(McEstimate::from_count(hits, mc_size))
}

/// Monte-Carlo estimate of `P[wᵀZ > v]`.
pub fn projection_exceed_prob(model: &MgpdModel, w: &WeightVector, v: f64, mc_size: usize, seed: u64) -> Result<McEstimate> {
    w.check_dim(model.dim())?;
    if mc_size == 0 {
        return Err(Error::domain("need at least one draw"));
    }
    let hits = count_rows(model, mc_size, seed, |r| w.dot(r) > v);
    Ok(McEstimate::from_count(hits, mc_size))
}

/// Tail dependence coefficient of components `(j, k)`:
/// `E[min(e^{T_j - M} / E e^{T_j - M}, e^{T_k - M} / E e^{T_k - M})]`
/// with `M = max(T_j, T_k)`, by Monte Carlo. Symmetric in `(j, k)`.
pub fn chi_pair_theoretical(generator: &GaussianGenerator, pair: (usize, usize), mc_size: usize, seed: u64) -> Result<f64> {
    if mc_size < MIN_CHI_DRAWS {
        return Err(Error::domain(format!("need at least {MIN_CHI_DRAWS} draws, got {mc_size}")));
    }
    let (j, k) = (pair.0.min(pair.1), pair.0.max(pair.1));
    let sub = generator.pair(j, k)?;
    let draws: Vec<(f64, f64)> = chunks(mc_size)
        .collect::<Vec<_>>()
        .into_par_iter()
        .flat_map_iter(|(c, _, len)| {
            let mut rng = substream(seed, c);
            let mut normals = [0.0; 2];
            let mut t = [0.0; 2];
            (0..len)
                .map(|_| {
                    sub.draw_into(&mut rng, &mut normals, &mut t);
                    let m = t[0].max(t[1]);
                    ((t[0] - m).exp(), (t[1] - m).exp())
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let n = draws.len() as f64;
    let (sa, sb) = draws.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (ma, mb) = (sa / n, sb / n);
    let chi = draws.iter().map(|(a, b)| (a / ma).min(b / mb)).sum::<f64>() / n;
    Ok(chi.clamp(0.0, 1.0))
}

/// Monte-Carlo settings for [`calibrate_generator_to_chi_with`].
#[derive(Debug, Clone, Copy)]
pub struct ChiCalibration {
    pub mc_size: usize,
    pub seed: u64,
    /// Search range for the variance multiplier `c` in `c I_2`.
    pub variance_range: (f64, f64),
    pub tolerance: f64,
}

impl Default for ChiCalibration {
    fn default() -> Self {
        Self {
            mc_size: 400_000,
            seed: 0x5eed_c41,
            variance_range: (0.01, 100.0),
            tolerance: 0.001,
        }
    }
}

/// Zero-mean bivariate generator `c I_2` whose tail dependence coefficient
/// matches `target_chi`. χ decreases in `c` (it depends on `T` only through
/// `T_1 - T_2 ~ N(0, 2c)`), so the search is a bisection on `ln c`.
pub fn calibrate_generator_to_chi(target_chi: f64) -> Result<GaussianGenerator> {
    calibrate_generator_to_chi_with(target_chi, &ChiCalibration::default())
}

pub fn calibrate_generator_to_chi_with(target_chi: f64, opts: &ChiCalibration) -> Result<GaussianGenerator> {
    if !(target_chi > 0.0 && target_chi < 1.0) {
        return Err(Error::domain(format!("target chi must lie in (0,1), got {target_chi}")));
    }
    let chi_at = |log_c: f64| -> Result<f64> {
        let g = GaussianGenerator::scaled_identity(2, log_c.exp())?;
        chi_pair_theoretical(&g, (0, 1), opts.mc_size, opts.seed)
    };
    let (mut lo, mut hi) = (opts.variance_range.0.ln(), opts.variance_range.1.ln());
    let (chi_lo, chi_hi) = (chi_at(lo)?, chi_at(hi)?);
    if target_chi > chi_lo || target_chi < chi_hi {
        return Err(Error::Calibration(format!(
            "target chi {target_chi} outside the reachable range [{chi_hi:.4}, {chi_lo:.4}]"
        )));
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..60 {
        mid = 0.5 * (lo + hi);
        let chi = chi_at(mid)?;
        if (chi - target_chi).abs() < opts.tolerance {
            break;
        }
        if chi > target_chi {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    GaussianGenerator::scaled_identity(2, mid.exp())
}
