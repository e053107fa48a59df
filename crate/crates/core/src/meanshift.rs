//! Mean-shift ascent on the matrix-variate estimators, mode merging and
//! cluster assignment.

use rayon::prelude::*;

use crate::density::{fit, Bandwidth, EstimatorConfig, FittedEstimator};
use crate::error::{Error, Result};
use crate::kernels::KernelFamily;
use crate::numeric::normalize_log_weights;
use crate::tensor::{knn_sq, sq_dist, Dataset, MatrixObs};

/// Convergence and merging controls for [`cluster`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanShiftConfig {
    /// Stop when `||Y' - Y||_F < tol * (1 + ||Y||_F)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Terminal points closer than this multiple of the bandwidth scale are
    /// merged into one mode.
    pub merge_radius_factor: f64,
}

impl Default for MeanShiftConfig {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 500,
            merge_radius_factor: 0.5,
        }
    }
}

impl MeanShiftConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::param(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter must be at least 1"));
        }
        if !(self.merge_radius_factor > 0.0 && self.merge_radius_factor.is_finite()) {
            return Err(Error::param(format!(
                "merge_radius_factor must be positive, got {}",
                self.merge_radius_factor
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterResult {
    /// One label per observation, in `0..modes.len()`.
    pub labels: Vec<usize>,
    pub modes: Vec<MatrixObs>,
    /// Mean-shift steps taken from each observation.
    pub iterations: Vec<usize>,
    pub converged: Vec<bool>,
    pub mode_log_density: Vec<f64>,
    /// Overall smoothing length used for the merge radius.
    pub bandwidth_scale: f64,
    pub merge_radius: f64,
}

impl ClusterResult {
    pub fn n_clusters(&self) -> usize {
        self.modes.len()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.modes.len()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

fn weighted_mean(data: &Dataset, weights: &[f64]) -> MatrixObs {
    let (rows, cols) = data.shape();
    let mut acc = vec![0.0; rows * cols];
    for (x, &w) in data.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for (a, v) in acc.iter_mut().zip(x.as_slice()) {
            *a += w * v;
        }
    }
    MatrixObs::from_vec_unchecked(rows, cols, acc)
}

/// Plain mean of the selected observations, summed in ascending index order.
fn subset_mean(data: &Dataset, indices: impl Iterator<Item = usize>) -> MatrixObs {
    let (rows, cols) = data.shape();
    let mut acc = vec![0.0; rows * cols];
    let mut count = 0usize;
    for i in indices {
        for (a, v) in acc.iter_mut().zip(data.get(i).as_slice()) {
            *a += v;
        }
        count += 1;
    }
    let c = count as f64;
    acc.iter_mut().for_each(|a| *a /= c);
    MatrixObs::from_vec_unchecked(rows, cols, acc)
}

/// One mean-shift update `Y -> Y + M(Y)`.
///
/// Gaussian fixed, separable and sample-point estimators use the
/// kernel-weighted mean with weights formed in log domain; the sample-point
/// weights carry the `s_n^-(d+2)` factor of the gradient. The balloon
/// estimator with the uniform-ball kernel moves to the mean of the points
/// inside the `delta_k(Y)` ball.
pub fn ms_step(est: &FittedEstimator<'_>, y: &MatrixObs) -> Result<MatrixObs> {
    let data = est.data();
    data.check_query(y)?;
    let ys = y.as_slice();
    let family = est.kernel().family;
    let d = est.kernel().dim as f64;

    let mut log_w: Vec<f64> = match &est.config().bandwidth {
        Bandwidth::Balloon { k } => {
            if family != KernelFamily::UniformBall {
                return Err(Error::param(
                    "balloon mean-shift is only available with the uniform-ball kernel",
                ));
            }
            let nb = knn_sq(ys, data, *k, None)?;
            let radius2 = nb.last().map_or(0.0, |&(d2, _)| d2);
            let inside = data
                .iter()
                .enumerate()
                .filter(|(_, x)| sq_dist(ys, x.as_slice()) <= radius2)
                .map(|(i, _)| i);
            return Ok(subset_mean(data, inside));
        }
        _ if family != KernelFamily::Gaussian => {
            return Err(Error::param(
                "mean-shift requires the Gaussian kernel for this estimator",
            ));
        }
        Bandwidth::Fixed { h } => {
            let c = -0.5 / (h * h);
            data.iter().map(|x| c * sq_dist(ys, x.as_slice())).collect()
        }
        Bandwidth::SamplePoint { .. } => {
            let scales = est.point_scales().expect("sample-point cache");
            data.iter()
                .zip(scales)
                .map(|(x, s)| -(d + 2.0) * s.ln() - 0.5 * sq_dist(ys, x.as_slice()) / (s * s))
                .collect()
        }
        Bandwidth::Separable { .. } => {
            let f = est.separable_factors().expect("separable cache");
            let mut diff = vec![0.0; ys.len()];
            data.iter()
                .map(|x| {
                    for ((o, a), b) in diff.iter_mut().zip(x.as_slice()).zip(ys) {
                        *o = a - b;
                    }
                    -0.5 * f.quadratic_form(&diff)
                })
                .collect()
        }
    };
    if !normalize_log_weights(&mut log_w) {
        return Err(Error::Isolated(
            "mean-shift weights are not finite or all zero".to_string(),
        ));
    }
    Ok(weighted_mean(data, &log_w))
}

/// Mean of the `k` nearest observations to `y` (no exclusion, ties by index).
pub fn ms_step_knn_uniform(data: &Dataset, k: usize, y: &MatrixObs) -> Result<MatrixObs> {
    data.check_query(y)?;
    let mut idx: Vec<usize> = knn_sq(y.as_slice(), data, k, None)?
        .into_iter()
        .map(|(_, i)| i)
        .collect();
    idx.sort_unstable();
    Ok(subset_mean(data, idx.into_iter()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ascent {
    pub mode: MatrixObs,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates `step` from `start` until the move is below the relative
/// tolerance or `max_iter` steps have been taken.
pub fn ascend<F>(mut step: F, start: MatrixObs, cfg: &MeanShiftConfig) -> Result<Ascent>
where
    F: FnMut(&MatrixObs) -> Result<MatrixObs>,
{
    cfg.validate()?;
    let mut y = start;
    for it in 1..=cfg.max_iter {
        let next = step(&y)?;
        let shift = sq_dist(next.as_slice(), y.as_slice()).sqrt();
        let threshold = cfg.tol * (1.0 + y.frobenius_norm());
        y = next;
        if shift < threshold {
            return Ok(Ascent {
                mode: y,
                iterations: it,
                converged: true,
            });
        }
    }
    Ok(Ascent {
        mode: y,
        iterations: cfg.max_iter,
        converged: false,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergedModes {
    /// For each merged group, the index of its representative input mode.
    /// Groups are ordered by their lowest member index.
    pub representatives: Vec<usize>,
    /// For each input mode, the group it belongs to.
    pub assignment: Vec<usize>,
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // lower root wins so roots stay deterministic
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Single-linkage grouping of modes at Frobenius distance `<= radius`. The
/// representative of a group is the member with the highest log-density,
/// ties going to the lower index.
pub fn merge_modes(modes: &[MatrixObs], log_density: &[f64], radius: f64) -> Result<MergedModes> {
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::param(format!(
            "merge radius must be positive, got {radius}"
        )));
    }
    if log_density.len() != modes.len() {
        return Err(Error::Dimension {
            expected: format!("{} log-densities", modes.len()),
            found: format!("{}", log_density.len()),
        });
    }
    let m = modes.len();
    let r2 = radius * radius;
    let mut sets = DisjointSet::new(m);
    for i in 0..m {
        for j in (i + 1)..m {
            if sets.find(i) == sets.find(j) {
                continue;
            }
            if sq_dist(modes[i].as_slice(), modes[j].as_slice()) <= r2 {
                sets.union(i, j);
            }
        }
    }
    let mut group_of_root = vec![usize::MAX; m];
    let mut representatives = Vec::new();
    let mut assignment = Vec::with_capacity(m);
    for i in 0..m {
        let root = sets.find(i);
        if group_of_root[root] == usize::MAX {
            group_of_root[root] = representatives.len();
            representatives.push(i);
        }
        let g = group_of_root[root];
        let best = representatives[g];
        if log_density[i] > log_density[best] {
            representatives[g] = i;
        }
        assignment.push(g);
    }
    Ok(MergedModes {
        representatives,
        assignment,
    })
}

/// Runs a mean-shift ascent from every observation, merges the terminal
/// points and labels each observation by the mode it reached.
///
/// The balloon estimator with the uniform-ball kernel uses the k-NN mean
/// update; every other configuration uses [`ms_step`]. The ascents run in
/// parallel but the result does not depend on the thread count.
pub fn cluster(data: &Dataset, config: &EstimatorConfig, cfg: &MeanShiftConfig) -> Result<ClusterResult> {
    cfg.validate()?;
    let est = fit(config, data)?;
    let knn_k = match (&config.bandwidth, config.kernel) {
        (Bandwidth::Balloon { k }, KernelFamily::UniformBall) => Some(*k),
        _ => None,
    };

    let ascents: Vec<Ascent> = (0..data.len())
        .into_par_iter()
        .map(|i| match knn_k {
            Some(k) => ascend(|y| ms_step_knn_uniform(data, k, y), data.get(i).clone(), cfg),
            None => ascend(|y| ms_step(&est, y), data.get(i).clone(), cfg),
        })
        .collect::<Result<_>>()?;

    let terminals: Vec<MatrixObs> = ascents.iter().map(|a| a.mode.clone()).collect();
    let log_density: Vec<f64> = terminals
        .par_iter()
        .map(|y| match est.log_density_at(y) {
            Ok(v) => Ok(v),
            // a balloon terminal sitting on >= k coincident points has no
            // finite radius; rank it last
            Err(Error::DegenerateBandwidth { .. }) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;

    let bandwidth_scale = est.bandwidth_scale()?;
    let merge_radius = cfg.merge_radius_factor * bandwidth_scale;
    let merged = if merge_radius > 0.0 {
        merge_modes(&terminals, &log_density, merge_radius)?
    } else {
        // all observations coincide: a single mode
        MergedModes {
            representatives: vec![0],
            assignment: vec![0; terminals.len()],
        }
    };

    Ok(ClusterResult {
        labels: merged.assignment,
        modes: merged
            .representatives
            .iter()
            .map(|&r| terminals[r].clone())
            .collect(),
        mode_log_density: merged.representatives.iter().map(|&r| log_density[r]).collect(),
        iterations: ascents.iter().map(|a| a.iterations).collect(),
        converged: ascents.iter().map(|a| a.converged).collect(),
        bandwidth_scale,
        merge_radius,
    })
}
