//! Pairwise tail dependence, the χ dissimilarity and PAM clustering.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attribution::WorldSample;
use crate::error::{Error, Result};
use crate::matrix::RowMatrix;

pub const MIN_CHI_LENGTH: usize = 100;
pub const MIN_CHI_JOINT: f64 = 10.0;

/// Ordinal ranks `1..=n`, ties broken by position.
fn ranks(x: &[f64]) -> Result<Vec<usize>> {
    let first = x.first().copied().unwrap_or(0.0);
    if x.iter().all(|&v| v == first) {
        return Err(Error::domain("ranks are undefined for a constant series"));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0; x.len()];
    for (rank, &i) in order.iter().enumerate() {
        r[i] = rank + 1;
    }
    Ok(r)
}

fn check_chi_args(n: usize, q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!("quantile level must lie in (0,1), got {q}")));
    }
    if n < MIN_CHI_LENGTH {
        return Err(Error::domain(format!("need at least {MIN_CHI_LENGTH} observations, got {n}")));
    }
    if (1.0 - q) * (n as f64) < MIN_CHI_JOINT {
        return Err(Error::domain(format!(
            "(1 - q) n = {} is below {MIN_CHI_JOINT}",
            (1.0 - q) * n as f64
        )));
    }
    Ok(())
}

fn joint_count(ra: &[usize], rb: &[usize], q: f64) -> usize {
    let cut = ra.len() as f64 * q;
    ra.iter().zip(rb).filter(|(&a, &b)| a as f64 > cut && b as f64 > cut).count()
}

fn chi_from_count(count: usize, n: usize, q: f64) -> f64 {
    (count as f64 / ((1.0 - q) * n as f64)).clamp(0.0, 1.0)
}

/// `#{t : rank_a(t) > nq, rank_b(t) > nq} / ((1 - q) n)`, clipped to `[0,1]`.
pub fn empirical_chi(series_a: &[f64], series_b: &[f64], q: f64) -> Result<f64> {
    if series_a.len() != series_b.len() {
        return Err(Error::domain("series lengths differ"));
    }
    check_chi_args(series_a.len(), q)?;
    let (ra, rb) = (ranks(series_a)?, ranks(series_b)?);
    Ok(chi_from_count(joint_count(&ra, &rb, q), series_a.len(), q))
}

/// `(1 - χ) / (2 (3 - χ))`.
pub fn chi_distance(chi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&chi) {
        return Err(Error::domain(format!("chi must lie in [0,1], got {chi}")));
    }
    Ok((1.0 - chi) / (2.0 * (3.0 - chi)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiMatrix {
    pub values: RowMatrix,
    pub quantile_level: f64,
    /// Joint-exceedance counts; the diagonal holds the marginal counts.
    pub pair_counts: Vec<Vec<usize>>,
}

impl ChiMatrix {
    pub fn distances(&self) -> RowMatrix {
        let d = self.values.nrows();
        let data = (0..d * d)
            .map(|i| {
                let (a, b) = (i / d, i % d);
                if a == b {
                    0.0
                } else {
                    chi_distance(self.values.get(a, b)).expect("chi matrix entries lie in [0,1]")
                }
            })
            .collect();
        RowMatrix::from_vec(d, d, data).expect("square")
    }
}

pub fn chi_matrix(sample: &WorldSample, q: f64) -> Result<ChiMatrix> {
    let (n, d) = (sample.n(), sample.dim());
    check_chi_args(n, q)?;
    let obs = sample.observations();
    let ranked: Vec<Vec<usize>> = (0..d)
        .into_par_iter()
        .map(|j| ranks(&obs.column(j)).map_err(|_| Error::domain(format!("site {} has a constant series", sample.sites()[j].id))))
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|a| (a + 1..d).map(move |b| (a, b))).collect();
    let counts: Vec<usize> = pairs
        .par_iter()
        .map(|&(a, b)| joint_count(&ranked[a], &ranked[b], q))
        .collect();

    let mut values = RowMatrix::zeros(d, d);
    let mut pair_counts = vec![vec![0; d]; d];
    for j in 0..d {
        values.row_mut(j)[j] = 1.0;
        pair_counts[j][j] = joint_count(&ranked[j], &ranked[j], q);
    }
    for (&(a, b), &c) in pairs.iter().zip(&counts) {
        let chi = chi_from_count(c, n, q);
        values.row_mut(a)[b] = chi;
        values.row_mut(b)[a] = chi;
        pair_counts[a][b] = c;
        pair_counts[b][a] = c;
    }
    Ok(ChiMatrix {
        values,
        quantile_level: q,
        pair_counts,
    })
}

/// χ-based dissimilarities between all sites of `sample`.
pub fn distance_matrix(sample: &WorldSample, q: f64) -> Result<RowMatrix> {
    Ok(chi_matrix(sample, q)?.distances())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub k: usize,
    /// Medoid site indices, ascending; cluster `c` has medoid `medoid_ids[c]`.
    pub medoid_ids: Vec<usize>,
    /// Cluster index of every site.
    pub labels: Vec<usize>,
    pub total_cost: f64,
    /// Cost after BUILD and after every accepted swap.
    pub cost_trace: Vec<f64>,
}

impl ClusterAssignment {
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == cluster).collect()
    }
}

fn check_square(dist: &RowMatrix) -> Result<usize> {
    let d = dist.nrows();
    if dist.ncols() != d {
        return Err(Error::domain("distance matrix must be square"));
    }
    if dist.as_slice().iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::domain("distances must be finite and nonnegative"));
    }
    Ok(d)
}

/// Sum over sites of the distance to the nearest medoid.
pub fn medoid_cost(dist: &RowMatrix, medoids: &[usize]) -> f64 {
    (0..dist.nrows())
        .map(|i| medoids.iter().map(|&m| dist.get(i, m)).fold(f64::INFINITY, f64::min))
        .sum()
}

/// Number of BUILD starts tried by [`pam_cluster`].
pub const PAM_STARTS: usize = 8;

/// Greedy BUILD, optionally with the first medoid fixed.
fn build(dist: &RowMatrix, k: usize, first: Option<usize>) -> Vec<usize> {
    let d = dist.nrows();
    let mut medoids: Vec<usize> = Vec::with_capacity(k);
    let mut nearest = vec![f64::INFINITY; d];
    while medoids.len() < k {
        let c = match (medoids.is_empty(), first) {
            (true, Some(c)) => c,
            _ => {
                let mut best: Option<(usize, f64)> = None;
                for c in (0..d).filter(|c| !medoids.contains(c)) {
                    let cost: f64 = (0..d).map(|i| nearest[i].min(dist.get(i, c))).sum();
                    if best.is_none_or(|(_, b)| cost < b) {
                        best = Some((c, cost));
                    }
                }
                best.expect("k ≤ d leaves a candidate").0
            }
        };
        medoids.push(c);
        for (i, n) in nearest.iter_mut().enumerate() {
            *n = n.min(dist.get(i, c));
        }
    }
    medoids
}

/// Steepest-descent SWAP from `medoids`; returns the cost after every
/// accepted exchange.
fn swap(dist: &RowMatrix, medoids: &mut [usize]) -> Vec<f64> {
    let d = dist.nrows();
    let k = medoids.len();
    let mut cost = medoid_cost(dist, medoids);
    let mut trace = vec![cost];
    let eps = 1e-12 * cost.abs().max(1.0);
    loop {
        // nearest and second-nearest medoid distance per site
        let mut d1 = vec![f64::INFINITY; d];
        let mut d2 = vec![f64::INFINITY; d];
        let mut owner = vec![0; d];
        for i in 0..d {
            for (slot, &m) in medoids.iter().enumerate() {
                let x = dist.get(i, m);
                if x < d1[i] {
                    d2[i] = d1[i];
                    d1[i] = x;
                    owner[i] = slot;
                } else if x < d2[i] {
                    d2[i] = x;
                }
            }
        }
        let mut best: Option<(usize, usize, f64)> = None;
        for slot in 0..k {
            for h in (0..d).filter(|h| !medoids.contains(h)) {
                let c: f64 = (0..d)
                    .map(|i| {
                        let keep = if owner[i] == slot { d2[i] } else { d1[i] };
                        keep.min(dist.get(i, h))
                    })
                    .sum();
                if c < cost - eps && best.is_none_or(|(_, _, b)| c < b) {
                    best = Some((slot, h, c));
                }
            }
        }
        match best {
            Some((slot, h, _)) => {
                medoids[slot] = h;
                let c = medoid_cost(dist, medoids);
                debug_assert!(c <= cost + eps);
                cost = c;
                trace.push(cost);
            }
            None => return trace,
        }
    }
}

/// Partitioning around medoids: greedy BUILD, then steepest-descent SWAP
/// until no exchange lowers the cost.
///
/// SWAP is run from the plain BUILD and from up to `PAM_STARTS - 1` further
/// BUILDs whose first medoid is forced to the next-best 1-median candidates;
/// the cheapest local optimum is kept. Ties are resolved towards the lowest
/// site index, so the result does not depend on `_seed`; the argument is
/// kept for interface stability.
pub fn pam_cluster(dist: &RowMatrix, k: usize, _seed: u64) -> Result<ClusterAssignment> {
    let d = check_square(dist)?;
    if k == 0 || k > d {
        return Err(Error::domain(format!("need 1 ≤ K ≤ {d}, got {k}")));
    }

    let mut firsts: Vec<(f64, usize)> = (0..d).map(|c| ((0..d).map(|i| dist.get(i, c)).sum(), c)).collect();
    firsts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let starts: Vec<Option<usize>> = if k == 1 {
        vec![None]
    } else {
        std::iter::once(None)
            .chain(firsts.iter().skip(1).take(PAM_STARTS - 1).map(|&(_, c)| Some(c)))
            .collect()
    };
    let runs: Vec<(Vec<usize>, Vec<f64>)> = starts
        .par_iter()
        .map(|&first| {
            let mut m = build(dist, k, first);
            let trace = swap(dist, &mut m);
            (m, trace)
        })
        .collect();
    let (mut medoids, cost_trace) = runs
        .into_iter()
        .reduce(|a, b| if b.1.last() < a.1.last() { b } else { a })
        .expect("at least one start");

    medoids.sort_unstable();
    let labels: Vec<usize> = (0..d)
        .map(|i| match medoids.iter().position(|&m| m == i) {
            Some(own) => own,
            None => (0..k).fold(0, |b, c| {
                if dist.get(i, medoids[c]) < dist.get(i, medoids[b]) {
                    c
                } else {
                    b
                }
            }),
        })
        .collect();
    let total_cost = (0..d).map(|i| dist.get(i, medoids[labels[i]])).sum();
    Ok(ClusterAssignment {
        k,
        medoid_ids: medoids,
        labels,
        total_cost,
        cost_trace,
    })
}
