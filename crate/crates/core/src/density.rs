//! Matrix-variate kernel density estimators: fixed scalar bandwidth,
//! separable `U (x) V` bandwidth, and the two k-nearest-neighbour adaptive
//! forms (balloon and sample-point), plus bandwidth rules.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::numeric::log_sum_exp;
use crate::tensor::{knn_sq, sq_dist, Dataset, MatrixObs};

/// How the smoothing scale is chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum Bandwidth {
    /// Scalar bandwidth `h`.
    Fixed { h: f64 },
    /// Row covariance `u` (`P x P`) and column covariance `v` (`T x T`),
    /// both symmetric positive definite.
    Separable { u: MatrixObs, v: MatrixObs },
    /// Query-dependent bandwidth `delta_k(Y)`.
    Balloon { k: usize },
    /// Per-observation bandwidth `h * delta_k(X_n)`, self excluded.
    SamplePoint { k: usize, h: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorConfig {
    pub bandwidth: Bandwidth,
    pub kernel: KernelFamily,
}

impl EstimatorConfig {
    pub fn fixed(h: f64) -> Self {
        Self {
            bandwidth: Bandwidth::Fixed { h },
            kernel: KernelFamily::Gaussian,
        }
    }

    pub fn separable(u: MatrixObs, v: MatrixObs) -> Self {
        Self {
            bandwidth: Bandwidth::Separable { u, v },
            kernel: KernelFamily::Gaussian,
        }
    }

    /// Balloon estimator with the uniform-ball kernel.
    pub fn balloon(k: usize) -> Self {
        Self {
            bandwidth: Bandwidth::Balloon { k },
            kernel: KernelFamily::UniformBall,
        }
    }

    pub fn sample_point(k: usize, h: f64) -> Self {
        Self {
            bandwidth: Bandwidth::SamplePoint { k, h },
            kernel: KernelFamily::Gaussian,
        }
    }

    pub fn with_kernel(mut self, kernel: KernelFamily) -> Self {
        self.kernel = kernel;
        self
    }
}

#[derive(Clone, Debug)]
pub(crate) struct SeparableFactors {
    /// Inverse Cholesky factor of `u`.
    pub(crate) u_inv_chol: DMatrix<f64>,
    /// Transposed inverse Cholesky factor of `v`.
    pub(crate) v_inv_chol_t: DMatrix<f64>,
    log_det_u: f64,
    log_det_v: f64,
}

impl SeparableFactors {
    /// `tr(V^-1 D^T U^-1 D)` for a difference `D` given row-major.
    pub(crate) fn quadratic_form(&self, diff: &[f64]) -> f64 {
        let d = DMatrix::from_row_slice(self.u_inv_chol.nrows(), self.v_inv_chol_t.nrows(), diff);
        (&self.u_inv_chol * d * &self.v_inv_chol_t).norm_squared()
    }
}

#[derive(Clone, Debug)]
enum Cache {
    None,
    SamplePoint { scales: Vec<f64> },
    Separable(SeparableFactors),
}

/// An estimator bound to a dataset, with any per-point quantities cached.
#[derive(Clone, Debug)]
pub struct FittedEstimator<'a> {
    config: EstimatorConfig,
    data: &'a Dataset,
    spec: KernelSpec,
    cache: Cache,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn factor_spd(name: &str, m: &MatrixObs, size: usize) -> Result<(DMatrix<f64>, f64)> {
    if m.shape() != (size, size) {
        return Err(Error::Dimension {
            expected: format!("{name} of shape {size}x{size}"),
            found: format!("{}x{}", m.rows(), m.cols()),
        });
    }
    let a = DMatrix::from_row_slice(size, size, m.as_slice());
    let scale = a.amax().max(f64::MIN_POSITIVE);
    if (&a - a.transpose()).amax() > 1e-12 * scale {
        return Err(Error::param(format!("{name} is not symmetric")));
    }
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::param(format!("{name} is not positive definite")))?;
    let l = chol.l();
    let log_det = 2.0 * l.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let l_inv = l
        .try_inverse()
        .ok_or_else(|| Error::param(format!("{name} is numerically singular")))?;
    Ok((l_inv, log_det))
}

/// Binds `config` to `data`, validating parameters and caching per-point
/// scales (sample-point) or factorizations (separable).
pub fn fit<'a>(config: &EstimatorConfig, data: &'a Dataset) -> Result<FittedEstimator<'a>> {
    let n = data.len();
    let spec = KernelSpec::new(config.kernel, data.dim())?;
    let cache = match &config.bandwidth {
        Bandwidth::Fixed { h } => {
            check_positive("h", *h)?;
            Cache::None
        }
        Bandwidth::Separable { u, v } => {
            if config.kernel != KernelFamily::Gaussian {
                return Err(Error::param(
                    "the separable estimator supports the Gaussian kernel only",
                ));
            }
            let (rows, cols) = data.shape();
            let (u_inv_chol, log_det_u) = factor_spd("U", u, rows)?;
            let (v_inv_chol, log_det_v) = factor_spd("V", v, cols)?;
            Cache::Separable(SeparableFactors {
                u_inv_chol,
                v_inv_chol_t: v_inv_chol.transpose(),
                log_det_u,
                log_det_v,
            })
        }
        Bandwidth::Balloon { k } => {
            if *k < 2 || *k > n {
                return Err(Error::param(format!(
                    "balloon k = {k} must satisfy 2 <= k <= N = {n}"
                )));
            }
            Cache::None
        }
        Bandwidth::SamplePoint { k, h } => {
            check_positive("h", *h)?;
            if *k < 2 || *k + 1 > n {
                return Err(Error::param(format!(
                    "sample-point k = {k} must satisfy 2 <= k <= N - 1 = {}",
                    n.saturating_sub(1)
                )));
            }
            let radii: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|i| {
                    knn_sq(data.get(i).as_slice(), data, *k, Some(i))
                        .map(|nb| nb.last().map_or(0.0, |&(d2, _)| d2.sqrt()))
                })
                .collect::<Result<_>>()?;
            let degenerate: Vec<usize> = radii
                .iter()
                .enumerate()
                .filter(|(_, &r)| r <= 0.0)
                .map(|(i, _)| i)
                .collect();
            if !degenerate.is_empty() {
                return Err(Error::DegenerateBandwidth { indices: degenerate });
            }
            Cache::SamplePoint {
                scales: radii.into_iter().map(|r| h * r).collect(),
            }
        }
    };
    Ok(FittedEstimator {
        config: config.clone(),
        data,
        spec,
        cache,
    })
}

impl<'a> FittedEstimator<'a> {
    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn kernel(&self) -> KernelSpec {
        self.spec
    }

    /// Cached sample-point scales `h * delta_k(X_n)`, if any.
    pub fn point_scales(&self) -> Option<&[f64]> {
        match &self.cache {
            Cache::SamplePoint { scales } => Some(scales),
            _ => None,
        }
    }

    pub(crate) fn separable_factors(&self) -> Option<&SeparableFactors> {
        match &self.cache {
            Cache::Separable(f) => Some(f),
            _ => None,
        }
    }

    /// A single overall smoothing length: `h` for fixed and sample-point,
    /// the geometric-mean scale `(|U|^(1/P) |V|^(1/T))^(1/2)` for separable,
    /// and the mean k-NN radius over the data for balloon.
    pub fn bandwidth_scale(&self) -> Result<f64> {
        match (&self.config.bandwidth, &self.cache) {
            (Bandwidth::Fixed { h }, _) | (Bandwidth::SamplePoint { h, .. }, _) => Ok(*h),
            (Bandwidth::Separable { .. }, Cache::Separable(f)) => {
                let (p, t) = self.data.shape();
                Ok((0.5 * (f.log_det_u / p as f64 + f.log_det_v / t as f64)).exp())
            }
            (Bandwidth::Balloon { k }, _) => mean_knn_radius(self.data, *k),
            _ => unreachable!("cache matches bandwidth variant"),
        }
    }

    /// `log f(Y)`, evaluated as a max-shifted log-sum-exp over the
    /// per-observation terms so that large `P * T` does not underflow.
    pub fn log_density_at(&self, y: &MatrixObs) -> Result<f64> {
        self.data.check_query(y)?;
        let n = self.data.len();
        let d = self.spec.dim as f64;
        let ys = y.as_slice();
        let terms: Vec<f64> = match (&self.config.bandwidth, &self.cache) {
            (Bandwidth::Fixed { h }, _) => {
                let inv_h2 = 1.0 / (h * h);
                let log_norm = -d * h.ln();
                self.data
                    .iter()
                    .map(|x| log_norm + self.spec.log_kernel_of_sq(sq_dist(ys, x.as_slice()) * inv_h2))
                    .collect()
            }
            (Bandwidth::SamplePoint { .. }, Cache::SamplePoint { scales }) => self
                .data
                .iter()
                .zip(scales)
                .map(|(x, s)| -d * s.ln() + self.spec.log_kernel_of_sq(sq_dist(ys, x.as_slice()) / (s * s)))
                .collect(),
            (Bandwidth::Balloon { k }, _) => {
                let radius2 = balloon_radius_sq(ys, self.data, *k)?;
                let log_norm = -0.5 * d * radius2.ln();
                self.data
                    .iter()
                    .map(|x| log_norm + self.spec.log_kernel_of_sq(sq_dist(ys, x.as_slice()) / radius2))
                    .collect()
            }
            (Bandwidth::Separable { .. }, Cache::Separable(f)) => {
                let (p, t) = self.data.shape();
                let log_norm =
                    -0.5 * d * (2.0 * PI).ln() - 0.5 * p as f64 * f.log_det_v - 0.5 * t as f64 * f.log_det_u;
                let mut diff = vec![0.0; ys.len()];
                self.data
                    .iter()
                    .map(|x| {
                        for ((o, a), b) in diff.iter_mut().zip(ys).zip(x.as_slice()) {
                            *o = a - b;
                        }
                        log_norm - 0.5 * f.quadratic_form(&diff)
                    })
                    .collect()
            }
            _ => unreachable!("cache matches bandwidth variant"),
        };
        Ok(log_sum_exp(&terms) - (n as f64).ln())
    }

    /// `f(Y)`. May underflow to zero in high dimension.
    pub fn density_at(&self, y: &MatrixObs) -> Result<f64> {
        Ok(self.log_density_at(y)?.exp())
    }

    /// Log-density for a batch of queries, evaluated in parallel.
    pub fn log_density_batch(&self, queries: &[MatrixObs]) -> Result<Vec<f64>> {
        queries.par_iter().map(|q| self.log_density_at(q)).collect()
    }
}

/// Squared balloon radius `delta_k(Y)^2` over all observations. A zero
/// radius is a degenerate-bandwidth error naming the coincident points.
pub(crate) fn balloon_radius_sq(y: &[f64], data: &Dataset, k: usize) -> Result<f64> {
    let nb = knn_sq(y, data, k, None)?;
    let radius2 = nb.last().map_or(0.0, |&(d2, _)| d2);
    if radius2 > 0.0 {
        Ok(radius2)
    } else {
        Err(Error::DegenerateBandwidth {
            indices: nb.iter().map(|&(_, i)| i).collect(),
        })
    }
}

/// Mean of `delta_k(X_n)` over the observations, no self exclusion.
pub fn mean_knn_radius(data: &Dataset, k: usize) -> Result<f64> {
    let radii: Vec<f64> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            knn_sq(data.get(i).as_slice(), data, k, None)
                .map(|nb| nb.last().map_or(0.0, |&(d2, _)| d2.sqrt()))
        })
        .collect::<Result<_>>()?;
    Ok(radii.iter().sum::<f64>() / radii.len() as f64)
}

/// Bandwidth minimizing `N^-1 h^-d R(K) + h^4 m2(K)^2 R(lap f) / 4`.
pub fn amise_bandwidth(
    n: usize,
    dim: usize,
    r_kernel: f64,
    m2_kernel: f64,
    r_laplacian_f: f64,
) -> Result<f64> {
    if n == 0 || dim == 0 {
        return Err(Error::param("N and d must be positive"));
    }
    check_positive("R(K)", r_kernel)?;
    check_positive("m2(K)", m2_kernel)?;
    check_positive("R(lap f)", r_laplacian_f)?;
    let d = dim as f64;
    let exponent = 1.0 / (d + 4.0);
    Ok((d * r_kernel / (m2_kernel * m2_kernel * r_laplacian_f)).powf(exponent) * (n as f64).powf(-exponent))
}

/// The AMISE objective itself, `N^-1 h^-d R(K) + h^4 m2(K)^2 R(lap f) / 4`.
pub fn amise(h: f64, n: usize, dim: usize, r_kernel: f64, m2_kernel: f64, r_laplacian_f: f64) -> f64 {
    r_kernel / (n as f64 * h.powi(dim as i32)) + 0.25 * h.powi(4) * m2_kernel * m2_kernel * r_laplacian_f
}

/// Normal-reference scalar bandwidth for estimating the density gradient:
/// `sigma * (4 / (N (d + 4)))^(1 / (d + 6))`, with `sigma` the mean of the
/// per-entry sample standard deviations.
pub fn normal_scale_gradient_bandwidth(data: &Dataset) -> Result<f64> {
    let n = data.len();
    if n < 2 {
        return Err(Error::param("bandwidth rule requires at least 2 observations"));
    }
    let mean = data.mean();
    let mut var = vec![0.0; data.dim()];
    for x in data {
        for ((acc, v), m) in var.iter_mut().zip(x.as_slice()).zip(mean.as_slice()) {
            *acc += (v - m) * (v - m);
        }
    }
    let sigma = var.iter().map(|s| (s / (n - 1) as f64).sqrt()).sum::<f64>() / var.len() as f64;
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::param("pooled standard deviation is zero"));
    }
    let d = data.dim() as f64;
    Ok(sigma * (4.0 / (n as f64 * (d + 4.0))).powf(1.0 / (d + 6.0)))
}

/// Rule-of-thumb multiplier for `k = c * sqrt(N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KRule {
    Half,
    One,
    Five,
}

impl KRule {
    pub fn factor(self) -> f64 {
        match self {
            KRule::Half => 0.5,
            KRule::One => 1.0,
            KRule::Five => 5.0,
        }
    }
}

/// `round(c * sqrt(N))` clamped to `[2, N - 1]`.
pub fn choose_k(rule: KRule, n: usize) -> usize {
    let k = (rule.factor() * (n as f64).sqrt()).round() as usize;
    k.clamp(2, n.saturating_sub(1).max(2))
}
