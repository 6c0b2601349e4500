//! Chart-quality and positioning metrics.
//!
//! Neighbor ranks run from 1 (nearest) to N-1; equal distances are ordered
//! by ascending sample index. Pairwise quantities are computed one row at a
//! time, so memory stays O(N).

use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math::{dist2, floor, log2, sqrt};
use crate::Point2;

pub const DEFAULT_BINS: usize = 20;
pub const DEFAULT_NEIGHBOR_FRACTION: f64 = 0.05;

/// `max(1, floor(fraction * n))`.
pub fn neighbor_count(n: usize, fraction: f64) -> usize {
    (floor(fraction * n as f64) as usize).max(1)
}

fn check_pair(real: &[Point2], latent: &[Point2]) -> Result<()> {
    if real.len() != latent.len() {
        return Err(Error::Shape { what: "latent points", expected: real.len(), found: latent.len() });
    }
    if real.iter().chain(latent).flatten().any(|v| !v.is_finite()) {
        return Err(invalid("metric inputs must be finite"));
    }
    Ok(())
}

/// Sample indices `j != n` ordered by distance from `points[n]`.
fn neighbor_order(points: &[Point2], n: usize, dist: &mut Vec<f64>, order: &mut Vec<usize>) {
    dist.clear();
    dist.extend(points.iter().map(|p| dist2(p, &points[n])));
    order.clear();
    order.extend((0..points.len()).filter(|&j| j != n));
    order.sort_unstable_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
}

/// Full rank table: `ranks[n][j]` is the rank of `j` as seen from `n`, with
/// `ranks[n][n] = 0`. Quadratic memory; meant for small inputs and export.
pub fn knn_ranks(points: &[Point2]) -> Result<Vec<Vec<usize>>> {
    if points.len() < 2 {
        return Err(invalid("ranking needs at least two points"));
    }
    let (mut dist, mut order) = (Vec::new(), Vec::new());
    Ok((0..points.len())
        .map(|n| {
            neighbor_order(points, n, &mut dist, &mut order);
            let mut ranks = vec![0; points.len()];
            for (r, &j) in order.iter().enumerate() {
                ranks[j] = r + 1;
            }
            ranks
        })
        .collect())
}

fn gamma(n: usize, j: usize) -> Result<f64> {
    let (nf, jf) = (n as f64, j as f64);
    if j == 0 || j >= n || 2.0 * nf - 3.0 * jf - 1.0 <= 0.0 {
        return Err(invalid("neighbor count J out of range (need 1 <= J < (2N-1)/3)"));
    }
    Ok(2.0 / (nf * jf * (2.0 * nf - 3.0 * jf - 1.0)))
}

/// Penalty sum shared by trustworthiness and continuity: over the `j`
/// nearest neighbors in `judged`, the excess rank (beyond `j`) they have in
/// `reference`.
fn rank_penalty(reference: &[Point2], judged: &[Point2], j: usize) -> f64 {
    let n = reference.len();
    let (mut dist, mut order) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut ref_rank = vec![0usize; n];
    let mut total = 0usize;
    for i in 0..n {
        neighbor_order(reference, i, &mut dist, &mut order);
        for (r, &k) in order.iter().enumerate() {
            ref_rank[k] = r + 1;
        }
        neighbor_order(judged, i, &mut dist, &mut order);
        total += order[..j].iter().map(|&k| ref_rank[k].saturating_sub(j)).sum::<usize>();
    }
    total as f64
}

/// Penalizes latent neighbors that are not real-world neighbors.
pub fn trustworthiness(real: &[Point2], latent: &[Point2], j: usize) -> Result<f64> {
    check_pair(real, latent)?;
    let g = gamma(real.len(), j)?;
    Ok(1.0 - g * rank_penalty(real, latent, j))
}

/// Penalizes real-world neighbors that are lost in the latent space.
pub fn continuity(real: &[Point2], latent: &[Point2], j: usize) -> Result<f64> {
    check_pair(real, latent)?;
    let g = gamma(real.len(), j)?;
    Ok(1.0 - g * rank_penalty(latent, real, j))
}

/// Visits every unordered pair `(n, j)`, `n < j`, with (real, latent) distances.
fn for_each_pair(real: &[Point2], latent: &[Point2], mut f: impl FnMut(f64, f64)) {
    for n in 0..real.len() {
        for j in n + 1..real.len() {
            f(dist2(&real[n], &real[j]), dist2(&latent[n], &latent[j]));
        }
    }
}

/// Scale fitted to real distances against latent ones,
/// `sum(d_latent * d_real) / sum(d_real^2)` (zero if real points coincide).
pub fn stress_scale(real: &[Point2], latent: &[Point2]) -> Result<f64> {
    check_pair(real, latent)?;
    let (mut cross, mut rr) = (0.0, 0.0);
    for_each_pair(real, latent, |dr, dl| {
        cross += dl * dr;
        rr += dr * dr;
    });
    Ok(if rr > 0.0 { cross / rr } else { 0.0 })
}

/// Stress at scale `lambda`: `sqrt(sum (d_latent - lambda d_real)^2 / sum d_latent^2)`.
pub fn stress_at(real: &[Point2], latent: &[Point2], lambda: f64) -> Result<f64> {
    check_pair(real, latent)?;
    let (mut num, mut den) = (0.0, 0.0);
    for_each_pair(real, latent, |dr, dl| {
        let r = dl - lambda * dr;
        num += r * r;
        den += dl * dl;
    });
    if den == 0.0 {
        return Err(Error::Numerical("Kruskal stress undefined: all latent points coincide"));
    }
    Ok(sqrt(num / den))
}

/// Kruskal stress minimized over the scale applied to real distances.
pub fn kruskal_stress(real: &[Point2], latent: &[Point2]) -> Result<f64> {
    let lambda = stress_scale(real, latent)?;
    stress_at(real, latent, lambda)
}

#[inline]
fn bin_of(d: f64, max: f64, bins: usize) -> usize {
    if max > 0.0 {
        (floor(d / max * bins as f64) as usize).min(bins - 1)
    } else {
        0
    }
}

fn entropy(counts: &[usize], total: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * log2(p)
        })
        .sum()
}

/// `1 - I(V;Q) / H(V,Q)` over the pairwise distances quantized into `bins`
/// uniform bins on `[0, max]` of each point set.
pub fn rajski_distance(real: &[Point2], latent: &[Point2], bins: usize) -> Result<f64> {
    check_pair(real, latent)?;
    if real.len() < 2 {
        return Err(invalid("Rajski distance needs at least two points"));
    }
    if bins == 0 {
        return Err(invalid("bin count must be positive"));
    }
    let (mut max_r, mut max_l) = (0.0f64, 0.0f64);
    for_each_pair(real, latent, |dr, dl| {
        max_r = max_r.max(dr);
        max_l = max_l.max(dl);
    });
    let mut joint = vec![0usize; bins * bins];
    for_each_pair(real, latent, |dr, dl| {
        joint[bin_of(dr, max_r, bins) * bins + bin_of(dl, max_l, bins)] += 1;
    });
    let total = joint.iter().sum::<usize>() as f64;
    let mut v = vec![0usize; bins];
    let mut q = vec![0usize; bins];
    for (k, &c) in joint.iter().enumerate() {
        v[k / bins] += c;
        q[k % bins] += c;
    }
    let h = entropy(&joint, total);
    if h == 0.0 {
        return Err(Error::Numerical("Rajski distance undefined: zero joint entropy"));
    }
    let mutual = entropy(&v, total) + entropy(&q, total) - h;
    // Mutual information never exceeds the joint entropy; clamp rounding.
    Ok((1.0 - mutual / h).clamp(0.0, 1.0))
}

pub fn distance_errors(est: &[Point2], truth: &[Point2]) -> Result<Vec<f64>> {
    check_pair(truth, est)?;
    Ok(est.iter().zip(truth).map(|(a, b)| dist2(a, b)).collect())
}

/// Mean Euclidean position error.
pub fn mde(est: &[Point2], truth: &[Point2]) -> Result<f64> {
    let e = distance_errors(est, truth)?;
    if e.is_empty() {
        return Err(invalid("no samples"));
    }
    Ok(e.iter().sum::<f64>() / e.len() as f64)
}

/// Smallest value `v` such that at least 95% of the errors are strictly
/// below `v`. `v` is taken from the error values themselves; when no error
/// value qualifies (the 95% mark falls on the maximum) it is the next
/// float above the maximum.
pub fn e95(est: &[Point2], truth: &[Point2]) -> Result<f64> {
    let mut e = distance_errors(est, truth)?;
    percentile_strict(&mut e, 95)
}

/// [`e95`] for an arbitrary percent on a raw error list.
pub fn percentile_strict(errors: &mut [f64], percent: usize) -> Result<f64> {
    let n = errors.len();
    if n == 0 {
        return Err(invalid("no samples"));
    }
    errors.sort_unstable_by(f64::total_cmp);
    let k = (percent * n).div_ceil(100).max(1);
    let pivot = errors[k - 1];
    Ok(errors[k..].iter().copied().find(|&e| e > pivot).unwrap_or_else(|| errors[n - 1].next_up()))
}

/// Metrics for one trained model on the evaluation split.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SeedMetrics {
    pub seed: u64,
    pub tw: f64,
    pub ct: f64,
    pub ks: f64,
    pub rd: f64,
    /// Absent for charts in arbitrary coordinates.
    pub mde: Option<f64>,
    pub e95: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MetricsConfig {
    pub neighbor_fraction: f64,
    pub bins: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig { neighbor_fraction: DEFAULT_NEIGHBOR_FRACTION, bins: DEFAULT_BINS }
    }
}

/// All metrics of `latent` against ground truth `real`. Positioning errors
/// are included only if `real_coordinates` is set.
pub fn evaluate(seed: u64, real: &[Point2], latent: &[Point2], real_coordinates: bool, cfg: &MetricsConfig) -> Result<SeedMetrics> {
    let j = neighbor_count(real.len(), cfg.neighbor_fraction);
    Ok(SeedMetrics {
        seed,
        tw: trustworthiness(real, latent, j)?,
        ct: continuity(real, latent, j)?,
        ks: kruskal_stress(real, latent)?,
        rd: rajski_distance(real, latent, cfg.bins)?,
        mde: if real_coordinates { Some(mde(latent, real)?) } else { None },
        e95: if real_coordinates { Some(e95(latent, real)?) } else { None },
    })
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Some(Stat { mean, std: sqrt(var) })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MetricsReport {
    pub per_seed: Vec<SeedMetrics>,
    pub tw: Stat,
    pub ct: Stat,
    pub ks: Stat,
    pub rd: Stat,
    pub mde: Option<Stat>,
    pub e95: Option<Stat>,
    pub neighbors: usize,
    pub bins: usize,
}

/// Aggregates per-seed metrics. Summation runs in seed order so the result
/// does not depend on the order the runs finished in.
pub fn aggregate(per_seed: &[SeedMetrics], neighbors: usize, bins: usize) -> Result<MetricsReport> {
    if per_seed.is_empty() {
        return Err(invalid("no per-seed metrics to aggregate"));
    }
    let mut runs = per_seed.to_vec();
    runs.sort_by_key(|m| m.seed);
    let col = |f: fn(&SeedMetrics) -> f64| Stat::of(&runs.iter().map(f).collect::<Vec<_>>()).expect("nonempty");
    let opt = |f: fn(&SeedMetrics) -> Option<f64>| -> Option<Stat> {
        let vals: Option<Vec<f64>> = runs.iter().map(f).collect();
        vals.and_then(|v| Stat::of(&v))
    };
    Ok(MetricsReport {
        tw: col(|m| m.tw),
        ct: col(|m| m.ct),
        ks: col(|m| m.ks),
        rd: col(|m| m.rd),
        mde: opt(|m| m.mde),
        e95: opt(|m| m.e95),
        neighbors,
        bins,
        per_seed: runs,
    })
}
