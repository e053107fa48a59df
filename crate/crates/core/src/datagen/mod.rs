//! Synthetic matrix-variate clusters: each observation is a prototype whose
//! DCT coefficients are independently contaminated with Gaussian noise.
//!
//! Random draws per observation are consumed in a fixed order from one
//! ChaCha8 stream: one uniform for the prototype label, then `P * T`
//! uniforms for the contamination indicators (row-major), then `P * T`
//! standard normals for the noise (row-major). Noise is drawn for every
//! entry whether or not it is used.

pub mod dct;
pub mod presets;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};
use crate::tensor::{Dataset, MatrixObs};

pub use dct::{dct2_forward, dct2_inverse, dct_matrix, Dct2};
pub use presets::{preset_coefficients, preset_prototypes, PresetName, Setting};

#[derive(Clone, Debug, PartialEq)]
pub struct Prototype {
    pub name: String,
    pub matrix: MatrixObs,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenConfig {
    pub prototypes: Vec<Prototype>,
    pub weights: Vec<f64>,
    /// Probability that a coefficient is contaminated.
    pub rho: f64,
    /// Noise standard deviation.
    pub sigma: f64,
    pub n: usize,
    pub seed: u64,
}

impl GenConfig {
    /// Config for a named preset setting at shape `rows x cols`.
    pub fn from_setting(
        setting: Setting,
        rows: usize,
        cols: usize,
        n: usize,
        rho: f64,
        sigma: f64,
        seed: u64,
    ) -> Result<Self> {
        let cfg = Self {
            prototypes: setting.prototypes(rows, cols)?,
            weights: setting.weights().to_vec(),
            rho,
            sigma,
            n,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .prototypes
            .first()
            .ok_or_else(|| Error::param("at least one prototype is required"))?;
        for p in &self.prototypes {
            p.matrix.check_shape(first.matrix.shape())?;
        }
        if self.weights.len() != self.prototypes.len() {
            return Err(Error::param(format!(
                "{} weights given for {} prototypes",
                self.weights.len(),
                self.prototypes.len()
            )));
        }
        if self.weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::param("mixing weights must be positive"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!("mixing weights sum to {total}, not 1")));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::param(format!("rho must lie in [0, 1], got {}", self.rho)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::param(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.n == 0 {
            return Err(Error::param("N must be positive"));
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        self.prototypes[0].matrix.shape()
    }
}

/// Adds `epsilon * u` to every coefficient, with `u ~ Bernoulli(rho)` and
/// `epsilon ~ Normal(0, sigma^2)` drawn independently per entry.
pub fn perturb_coefficients(
    omega: &MatrixObs,
    rho: f64,
    sigma: f64,
    rng: &mut StreamRng,
) -> Result<MatrixObs> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::param(format!("rho must lie in [0, 1], got {rho}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!("sigma must be positive, got {sigma}")));
    }
    let d = omega.dim();
    let hits: Vec<bool> = (0..d).map(|_| rng.random::<f64>() < rho).collect();
    let noise: Vec<f64> = (0..d)
        .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let out = omega
        .as_slice()
        .iter()
        .zip(hits.iter().zip(&noise))
        .map(|(w, (&hit, e))| if hit { w + e } else { *w })
        .collect();
    MatrixObs::new(omega.rows(), omega.cols(), out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generated {
    pub data: Dataset,
    /// Index of the prototype each observation was drawn from.
    pub labels: Vec<usize>,
}

impl Generated {
    pub fn counts(&self, n_prototypes: usize) -> Vec<usize> {
        let mut c = vec![0; n_prototypes];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }
}

fn draw_label(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Draws `cfg.n` observations. Deterministic given `cfg.seed`.
pub fn generate(cfg: &GenConfig) -> Result<Generated> {
    cfg.validate()?;
    let (rows, cols) = cfg.shape();
    let dct = Dct2::new(rows, cols);
    let coefficients: Vec<MatrixObs> = cfg.prototypes.iter().map(|p| dct.forward(&p.matrix)).collect();
    let mut rng = rng::stream(cfg.seed);
    let mut obs = Vec::with_capacity(cfg.n);
    let mut labels = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let label = draw_label(&cfg.weights, rng.random::<f64>());
        let omega = perturb_coefficients(&coefficients[label], cfg.rho, cfg.sigma, &mut rng)?;
        // the DCT round trip is exact only up to rounding
        obs.push(if cfg.rho == 0.0 {
            cfg.prototypes[label].matrix.clone()
        } else {
            dct.inverse(&omega)
        });
        labels.push(label);
    }
    Ok(Generated {
        data: Dataset::new(obs)?,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::frobenius_distance;

    fn one_prototype(rows: usize, cols: usize) -> Vec<Prototype> {
        vec![preset_prototypes(PresetName::A, rows, cols).unwrap()]
    }

    #[test]
    fn no_contamination_leaves_coefficients() {
        let omega = MatrixObs::new(2, 2, vec![1.0, -2.0, 3.0, 0.5]).unwrap();
        let mut rng = rng::stream(1);
        assert_eq!(perturb_coefficients(&omega, 0.0, 1.0, &mut rng).unwrap(), omega);
        let tiny = perturb_coefficients(&omega, 1.0, 1e-300, &mut rng).unwrap();
        assert!(frobenius_distance(&tiny, &omega).unwrap() < 1e-12);
        assert!(perturb_coefficients(&omega, 1.5, 1.0, &mut rng).is_err());
        assert!(perturb_coefficients(&omega, 0.5, 0.0, &mut rng).is_err());
    }

    #[test]
    fn contamination_fraction() {
        let omega = MatrixObs::zeros(100, 1000);
        let mut rng = rng::stream(99);
        let out = perturb_coefficients(&omega, 0.3, 1.0, &mut rng).unwrap();
        let changed = out.as_slice().iter().filter(|v| **v != 0.0).count() as f64 / 1e5;
        assert!((changed - 0.3).abs() < 0.01, "fraction {changed}");
    }

    #[test]
    fn rho_zero_reproduces_prototypes() {
        let cfg = GenConfig::from_setting(Setting::TwoBalanced, 3, 4, 50, 0.0, 1.0, 5).unwrap();
        let g = generate(&cfg).unwrap();
        for (x, &l) in g.data.iter().zip(&g.labels) {
            assert_eq!(x, &cfg.prototypes[l].matrix);
        }
    }

    #[test]
    fn full_contamination_gives_unit_spread() {
        let cfg = GenConfig {
            prototypes: one_prototype(2, 2),
            weights: vec![1.0],
            rho: 1.0,
            sigma: 1.0,
            n: 2000,
            seed: 11,
        };
        let g = generate(&cfg).unwrap();
        let proto = &cfg.prototypes[0].matrix;
        for e in 0..4 {
            let vals: Vec<f64> = g
                .data
                .iter()
                .map(|x| x.as_slice()[e] - proto.as_slice()[e])
                .collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let sd = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt();
            assert!((sd - 1.0).abs() < 0.05, "entry {e}: sd {sd}");
        }
    }

    #[test]
    fn imbalanced_counts_within_binomial_band() {
        let cfg = GenConfig::from_setting(Setting::TwoImbalanced, 2, 2, 1000, 1.0, 1.0, 2024).unwrap();
        let counts = generate(&cfg).unwrap().counts(2);
        // Binomial(1000, 0.1): mean 100, sd 9.49; 99% band is about +-24.4
        assert!((76..=124).contains(&counts[0]), "counts {counts:?}");
        assert_eq!(counts[0] + counts[1], 1000);
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = GenConfig::from_setting(Setting::TwoBalanced, 5, 5, 100, 0.3, 1.0, 42).unwrap();
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let other = GenConfig {
            seed: 43,
            ..cfg.clone()
        };
        assert_ne!(generate(&cfg).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn config_validation() {
        let base = GenConfig::from_setting(Setting::TwoBalanced, 2, 2, 10, 0.5, 1.0, 0).unwrap();
        let bad = [
            GenConfig {
                weights: vec![0.5, 0.6],
                ..base.clone()
            },
            GenConfig {
                weights: vec![1.0],
                ..base.clone()
            },
            GenConfig {
                rho: -0.1,
                ..base.clone()
            },
            GenConfig {
                sigma: 0.0,
                ..base.clone()
            },
            GenConfig { n: 0, ..base.clone() },
            GenConfig {
                prototypes: vec![],
                weights: vec![],
                ..base.clone()
            },
        ];
        for cfg in bad {
            assert!(generate(&cfg).is_err());
        }
    }

    #[test]
    fn presets_are_separated() {
        for (rows, cols) in [(1, 1), (5, 5), (5, 20), (3, 1)] {
            let b = preset_prototypes(PresetName::B, rows, cols).unwrap().matrix;
            let c = preset_prototypes(PresetName::C, rows, cols).unwrap().matrix;
            let sep = frobenius_distance(&b, &c).unwrap();
            assert!(
                sep >= 4.0 * ((rows * cols) as f64).sqrt() - 1e-9,
                "{rows}x{cols}: {sep}"
            );
        }
        assert!("D".parse::<PresetName>().is_err());
        assert!("triple".parse::<Setting>().is_err());
    }

    #[test]
    fn presets_are_bit_reproducible() {
        let a1 = preset_prototypes(PresetName::A, 5, 20).unwrap();
        let a2 = preset_prototypes(PresetName::A, 5, 20).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(a1.name, "A");
    }
}
