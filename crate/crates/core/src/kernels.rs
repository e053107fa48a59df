//! Spherically symmetric matrix-variate kernels expressed through their
//! scalar profile, `K(X) = kappa(tr(X^T X)) / 2`.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::tensor::MatrixObs;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    /// Standard matrix Normal density.
    Gaussian,
    /// Uniform density on the unit Frobenius ball.
    UniformBall,
}

impl std::fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::UniformBall => "uniform-ball",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    /// Number of entries `P * T`.
    pub dim: usize,
}

/// The profile and its derivative at one argument.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileValue {
    pub kappa: f64,
    pub kappa_prime: f64,
}

/// `log` of the volume of the unit ball in `dim` dimensions.
pub fn log_unit_ball_volume(dim: usize) -> f64 {
    let half = dim as f64 / 2.0;
    half * PI.ln() - ln_gamma(half + 1.0)
}

impl KernelSpec {
    pub fn new(family: KernelFamily, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("kernel dimension must be at least 1"));
        }
        Ok(Self { family, dim })
    }

    pub fn gaussian(dim: usize) -> Self {
        Self::new(KernelFamily::Gaussian, dim).expect("dim >= 1")
    }

    pub fn uniform_ball(dim: usize) -> Self {
        Self::new(KernelFamily::UniformBall, dim).expect("dim >= 1")
    }

    fn log_gaussian_norm(&self) -> f64 {
        -(self.dim as f64 / 2.0) * (2.0 * PI).ln()
    }

    /// `log K` as a function of the squared Frobenius norm `u = tr(X^T X)`.
    /// Returns `-inf` outside the support.
    pub fn log_kernel_of_sq(&self, u: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => self.log_gaussian_norm() - 0.5 * u,
            KernelFamily::UniformBall => {
                if u <= 1.0 {
                    -log_unit_ball_volume(self.dim)
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    fn check(&self, x: &MatrixObs) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::Dimension {
                expected: format!("{} entries", self.dim),
                found: format!("{} entries", x.dim()),
            });
        }
        Ok(())
    }
}

/// Evaluates the profile `kappa` and its derivative at `u >= 0`.
///
/// For the uniform ball the derivative is zero away from the boundary; the
/// uniform mean-shift never uses it.
pub fn profile(spec: KernelSpec, u: f64) -> Result<ProfileValue> {
    if u.is_nan() || u < 0.0 {
        return Err(Error::Domain(format!("profile argument must be >= 0, got {u}")));
    }
    Ok(match spec.family {
        KernelFamily::Gaussian => {
            let base = (spec.log_gaussian_norm() - 0.5 * u).exp();
            ProfileValue {
                kappa: 2.0 * base,
                kappa_prime: -base,
            }
        }
        KernelFamily::UniformBall => ProfileValue {
            kappa: if u <= 1.0 {
                2.0 * (-log_unit_ball_volume(spec.dim)).exp()
            } else {
                0.0
            },
            kappa_prime: 0.0,
        },
    })
}

/// `K(X)`. May underflow to zero for large `P * T`; see [`kernel_log_eval`].
pub fn kernel_eval(spec: KernelSpec, x: &MatrixObs) -> Result<f64> {
    Ok(kernel_log_eval(spec, x)?.exp())
}

pub fn kernel_log_eval(spec: KernelSpec, x: &MatrixObs) -> Result<f64> {
    spec.check(x)?;
    Ok(spec.log_kernel_of_sq(x.squared_norm()))
}

/// Gradient of `K` at `X`, `kappa'(tr X^T X) * X`. Gaussian only.
pub fn kernel_gradient(spec: KernelSpec, x: &MatrixObs) -> Result<MatrixObs> {
    spec.check(x)?;
    if spec.family != KernelFamily::Gaussian {
        return Err(Error::param(
            "kernel gradient is only defined for the Gaussian kernel",
        ));
    }
    let p = profile(spec, x.squared_norm())?;
    Ok(x.scale(p.kappa_prime))
}

/// Roughness `R(K) = int K^2` and second moment `m2(K) = int x_pt^2 K`.
pub fn kernel_constants(spec: KernelSpec) -> Result<(f64, f64)> {
    let d = spec.dim as f64;
    match spec.family {
        KernelFamily::Gaussian => Ok(((4.0 * PI).powf(-d / 2.0), 1.0)),
        KernelFamily::UniformBall => Ok(((-log_unit_ball_volume(spec.dim)).exp(), 1.0 / (d + 2.0))),
    }
}
