use rand::Rng;
use rayon::prelude::*;

use super::metrics::{distance_matrix, silhouette_from_distances, Partition};
use crate::error::{Error, Result};
use crate::rng::{split_seed, substream, StreamRng};
use crate::tensor::{sq_dist, Dataset, MatrixObs};

pub const DEFAULT_RESTARTS: usize = 10;
const MAX_LLOYD_ITER: usize = 300;

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: Vec<MatrixObs>,
    /// Within-cluster sum of squared Frobenius distances.
    pub objective: f64,
    /// Objective after each Lloyd iteration of the winning restart.
    pub trace: Vec<f64>,
    pub restart: usize,
}

impl KMeansResult {
    pub fn partition(&self) -> Partition {
        Partition::from(self.labels.as_slice())
    }
}

struct Flat<'a> {
    rows: Vec<&'a [f64]>,
    dim: usize,
}

impl Flat<'_> {
    fn nearest(&self, i: usize, centroids: &[Vec<f64>]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (c, centre) in centroids.iter().enumerate() {
            let d = sq_dist(self.rows[i], centre);
            if d < best.1 {
                best = (c, d);
            }
        }
        best
    }
}

/// k-means++ seeding: first centre uniform, then proportional to the
/// squared distance to the nearest chosen centre.
fn seed_centroids(flat: &Flat<'_>, k: usize, rng: &mut StreamRng) -> Vec<Vec<f64>> {
    let n = flat.rows.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = flat
        .rows
        .iter()
        .map(|r| sq_dist(r, flat.rows[chosen[0]]))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && target < acc {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave target just above the final sum
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            // every point coincides with a centre; take the first unused index
            (0..n).find(|i| !chosen.contains(i)).unwrap()
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(flat.rows[i], flat.rows[next]));
        }
    }
    chosen.into_iter().map(|i| flat.rows[i].to_vec()).collect()
}

fn update_centroids(flat: &Flat<'_>, labels: &[usize], k: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut sums = vec![vec![0.0; flat.dim]; k];
    let mut counts = vec![0usize; k];
    for (row, &l) in flat.rows.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(row.iter()) {
            *s += v;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    (sums, counts)
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(flat: &Flat<'_>, labels: &mut [usize], centroids: &mut Vec<Vec<f64>>, counts: &mut [usize]) {
    while let Some(empty) = counts.iter().position(|&c| c == 0) {
        let far = (0..labels.len())
            .filter(|&i| counts[labels[i]] > 1)
            .map(|i| (i, sq_dist(flat.rows[i], &centroids[labels[i]])))
            .fold(
                (usize::MAX, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            )
            .0;
        counts[labels[far]] -= 1;
        labels[far] = empty;
        counts[empty] = 1;
        let (c, _) = update_centroids(flat, labels, centroids.len());
        *centroids = c;
    }
}

fn objective(flat: &Flat<'_>, labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    flat.rows
        .iter()
        .zip(labels)
        .map(|(r, &l)| sq_dist(r, &centroids[l]))
        .sum()
}

fn lloyd(flat: &Flat<'_>, k: usize, rng: &mut StreamRng) -> (Vec<usize>, Vec<Vec<f64>>, Vec<f64>) {
    let mut centroids = seed_centroids(flat, k, rng);
    let n = flat.rows.len();
    let mut labels = vec![usize::MAX; n];
    let mut trace = Vec::new();
    for _ in 0..MAX_LLOYD_ITER {
        let next: Vec<usize> = (0..n).map(|i| flat.nearest(i, &centroids).0).collect();
        let stable = next == labels;
        labels = next;
        if stable {
            break;
        }
        let (c, mut counts) = update_centroids(flat, &labels, k);
        centroids = c;
        repair_empty(flat, &mut labels, &mut centroids, &mut counts);
        trace.push(objective(flat, &labels, &centroids));
    }
    (labels, centroids, trace)
}

/// Best of `restarts` Lloyd runs with k-means++ seeding. Restart `r` uses
/// substream `r` of `seed`; objective ties go to the lower restart.
pub fn kmeans(data: &Dataset, k: usize, seed: u64, restarts: usize) -> Result<KMeansResult> {
    let n = data.len();
    if k < 2 || k > n {
        return Err(Error::param(format!("K must lie in [2, {n}], got {k}")));
    }
    if restarts == 0 {
        return Err(Error::param("at least one restart is required"));
    }
    let flat = Flat {
        rows: data.iter().map(MatrixObs::as_slice).collect(),
        dim: data.dim(),
    };
    let runs: Vec<_> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, r as u64);
            let (labels, centroids, trace) = lloyd(&flat, k, &mut rng);
            let obj = objective(&flat, &labels, &centroids);
            (obj, labels, centroids, trace)
        })
        .collect();
    let (restart, (obj, labels, centroids, trace)) = runs
        .into_iter()
        .enumerate()
        .reduce(|best, cur| if cur.1 .0 < best.1 .0 { cur } else { best })
        .expect("restarts >= 1");
    let (rows, cols) = data.shape();
    Ok(KMeansResult {
        labels,
        centroids: centroids
            .into_iter()
            .map(|c| MatrixObs::from_vec_unchecked(rows, cols, c))
            .collect(),
        objective: obj,
        trace,
        restart,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectedK {
    pub k: usize,
    pub partition: Partition,
    pub score: f64,
    /// `(K, silhouette)` for every K tried.
    pub scores: Vec<(usize, f64)>,
}

/// Runs K-means for each K in `kmin..=kmax` and keeps the best silhouette,
/// ties to the smaller K. K uses seed `split_seed(seed, K)`.
pub fn select_k_silhouette(
    data: &Dataset,
    kmin: usize,
    kmax: usize,
    seed: u64,
    restarts: usize,
) -> Result<SelectedK> {
    let n = data.len();
    if kmin < 2 || kmin > kmax || kmax + 1 > n {
        return Err(Error::param(format!(
            "need 2 <= kmin <= kmax <= N-1, got kmin={kmin}, kmax={kmax}, N={n}"
        )));
    }
    let dist = distance_matrix(data);
    let mut best: Option<SelectedK> = None;
    let mut scores = Vec::new();
    for k in kmin..=kmax {
        let fit = kmeans(data, k, split_seed(seed, k as u64), restarts)?;
        let partition = fit.partition();
        let score = silhouette_from_distances(&dist, &partition)?;
        scores.push((k, score));
        if best.as_ref().is_none_or(|b| score > b.score) {
            best = Some(SelectedK {
                k,
                partition,
                score,
                scores: Vec::new(),
            });
        }
    }
    let mut best = best.expect("kmin <= kmax");
    best.scores = scores;
    Ok(best)
}
