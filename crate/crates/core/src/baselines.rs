//! Reference segmenters: equal-duration splits, K-Means on clip vectors,
//! and K-Means on vectors augmented with relative time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datamodel::Segmentation;
use crate::error::{Error, Result};

/// Splits `[0, T]` into `k` equal intervals and labels each clip by the
/// interval holding its midpoint. When clips are too uneven for every
/// interval to receive a midpoint, boundaries are nudged so that exactly
/// `k` contiguous segments remain.
pub fn naive_equal_splits(clip_midpoints: &[f64], t_total: f64, k: usize) -> Result<Segmentation> {
    let n = clip_midpoints.len();
    if k == 0 || k > n {
        return Err(Error::validation(format!(
            "cannot split {n} clips into {k} parts"
        )));
    }
    if !(t_total > 0.0) {
        return Err(Error::validation("total duration must be positive"));
    }
    let width = t_total / k as f64;
    // first clip index of each segment after the first
    let mut starts = Vec::with_capacity(k - 1);
    let mut prev = 0;
    for j in 1..k {
        let edge = j as f64 * width;
        let first = clip_midpoints.partition_point(|&m| m < edge);
        let first = first.max(prev + 1).min(n - (k - j));
        starts.push(first);
        prev = first;
    }
    let mut labels = vec![0; n];
    for (seg, &s) in starts.iter().enumerate() {
        labels[s..].iter_mut().for_each(|l| *l = seg + 1);
    }
    Ok(Segmentation::from_labels(&labels))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    pub k: usize,
    pub n_restarts: usize,
    pub max_iters: usize,
    /// Stop when the relative inertia change drops below this.
    pub tol: f64,
    pub rng_seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 2,
            n_restarts: 10,
            max_iters: 100,
            tol: 1e-6,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    /// Raw cluster index per point (not canonicalized).
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Final inertia of every restart, in restart order.
    pub restart_inertias: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid; ties go to the lowest index.
fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.iter().enumerate() {
        let d = sq_dist(p, cen);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn kmeans_pp(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centroids.push(points[pick].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &centroids[centroids.len() - 1]));
        }
    }
    centroids
}

fn lloyd(
    points: &[Vec<f64>],
    mut centroids: Vec<Vec<f64>>,
    cfg: &KMeansConfig,
) -> (Vec<usize>, Vec<Vec<f64>>, f64) {
    let dim = points[0].len();
    let k = centroids.len();
    let mut assignment = vec![0; points.len()];
    let mut prev_inertia = f64::INFINITY;
    for _ in 0..cfg.max_iters.max(1) {
        let mut dists = vec![0.0; points.len()];
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centroids);
            assignment[i] = c;
            dists[i] = d;
        }
        let inertia: f64 = dists.iter().sum();

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                // re-seed at the point farthest from its centroid
                let far = dists
                    .iter()
                    .enumerate()
                    .fold(0, |best, (i, &d)| if d > dists[best] { i } else { best });
                centroids[c] = points[far].clone();
                dists[far] = 0.0;
            }
        }
        let converged = prev_inertia.is_finite()
            && (prev_inertia - inertia).abs() <= cfg.tol * prev_inertia.max(f64::MIN_POSITIVE);
        prev_inertia = inertia;
        if converged {
            break;
        }
    }
    // final assignment against the final centroids
    let mut total = 0.0;
    for (i, p) in points.iter().enumerate() {
        let (c, d) = nearest(p, &centroids);
        assignment[i] = c;
        total += d;
    }
    (assignment, centroids, total)
}

/// K-Means with k-means++ seeding; the restart with the lowest inertia wins
/// (earliest on ties). Restart `r` draws from ChaCha8 stream `r` of the seed.
pub fn kmeans_fit(points: &[Vec<f64>], cfg: &KMeansConfig) -> Result<KMeansFit> {
    let n = points.len();
    if cfg.k == 0 || cfg.n_restarts == 0 {
        return Err(Error::validation("k and n_restarts must be >= 1"));
    }
    if cfg.k > n {
        return Err(Error::validation(format!(
            "k = {} exceeds {n} points",
            cfg.k
        )));
    }
    let dim = points[0].len();
    if points
        .iter()
        .any(|p| p.len() != dim || p.iter().any(|x| !x.is_finite()))
    {
        return Err(Error::validation(
            "points must be finite and of equal width",
        ));
    }
    let mut best: Option<KMeansFit> = None;
    let mut restart_inertias = Vec::with_capacity(cfg.n_restarts);
    for r in 0..cfg.n_restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        rng.set_stream(r as u64);
        let init = kmeans_pp(points, cfg.k, &mut rng);
        let (assignment, centroids, inertia) = lloyd(points, init, cfg);
        restart_inertias.push(inertia);
        if best.as_ref().is_none_or(|b| inertia < b.inertia) {
            best = Some(KMeansFit {
                assignment,
                centroids,
                inertia,
                restart_inertias: Vec::new(),
            });
        }
    }
    let mut fit = best.expect("at least one restart");
    fit.restart_inertias = restart_inertias;
    Ok(fit)
}

/// K-Means over clip vectors; labels canonicalized in clip order.
pub fn kmeans_segment(points: &[Vec<f64>], cfg: &KMeansConfig) -> Result<Segmentation> {
    let fit = kmeans_fit(points, cfg)?;
    Ok(Segmentation::from_labels(&fit.assignment))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CteConfig {
    pub time_weight: f64,
    pub kmeans: KMeansConfig,
}

impl Default for CteConfig {
    fn default() -> Self {
        Self {
            time_weight: 1.0,
            kmeans: KMeansConfig::default(),
        }
    }
}

/// `[φ/‖φ‖, w_t · τ/T]` for every clip.
pub fn time_infused(
    points: &[Vec<f64>],
    taus: &[f64],
    t_total: f64,
    time_weight: f64,
) -> Result<Vec<Vec<f64>>> {
    if points.len() != taus.len() {
        return Err(Error::validation("one timestamp per point required"));
    }
    if !(time_weight >= 0.0) || !(t_total > 0.0) {
        return Err(Error::validation(
            "time weight must be >= 0 and duration positive",
        ));
    }
    points
        .iter()
        .zip(taus)
        .map(|(p, &tau)| {
            let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::DegenerateEmbedding);
            }
            let mut v: Vec<f64> = p.iter().map(|x| x / norm).collect();
            v.push(time_weight * tau / t_total);
            Ok(v)
        })
        .collect()
}

/// Time-infused K-Means ("CTE-lite").
pub fn cte_segment(
    points: &[Vec<f64>],
    taus: &[f64],
    t_total: f64,
    cfg: &CteConfig,
) -> Result<Segmentation> {
    kmeans_segment(
        &time_infused(points, taus, t_total, cfg.time_weight)?,
        &cfg.kmeans,
    )
}
