//! Parsing and resolution of the estimator flags shared by `cluster`,
//! `density` and `bench`.

use std::fmt;
use std::str::FromStr;

use modalmatrix::{choose_k, normal_scale_gradient_bandwidth, Dataset, EstimatorConfig, KRule};

use crate::{CliError, CliResult, EstimatorKind};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BandwidthArg {
    Auto,
    Value(f64),
}

impl FromStr for BandwidthArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Self::Auto);
        }
        match s.parse::<f64>() {
            Ok(h) if h > 0.0 && h.is_finite() => Ok(Self::Value(h)),
            _ => Err(format!("expected 'auto' or a positive number, got '{s}'")),
        }
    }
}

impl fmt::Display for BandwidthArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Value(h) => write!(f, "{h}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KArg {
    Auto(KRule),
    Value(usize),
}

impl FromStr for KArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto0.5" => Ok(Self::Auto(KRule::Half)),
            "auto1" => Ok(Self::Auto(KRule::One)),
            "auto5" => Ok(Self::Auto(KRule::Five)),
            _ => s
                .parse::<usize>()
                .map(Self::Value)
                .map_err(|_| format!("expected auto0.5, auto1, auto5 or an integer, got '{s}'")),
        }
    }
}

impl fmt::Display for KArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto(KRule::Half) => f.write_str("auto0.5"),
            Self::Auto(KRule::One) => f.write_str("auto1"),
            Self::Auto(KRule::Five) => f.write_str("auto5"),
            Self::Value(k) => write!(f, "{k}"),
        }
    }
}

/// Concrete estimator plus the resolved bandwidth parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub config: EstimatorConfig,
    pub h: Option<f64>,
    pub k: Option<usize>,
}

fn resolve_h(h: BandwidthArg, data: &Dataset) -> CliResult<f64> {
    match h {
        BandwidthArg::Value(v) => Ok(v),
        BandwidthArg::Auto => Ok(normal_scale_gradient_bandwidth(data)?),
    }
}

fn resolve_k(k: KArg, n: usize) -> CliResult<usize> {
    match k {
        KArg::Value(v) => Ok(v),
        KArg::Auto(rule) if n >= 4 => Ok(choose_k(rule, n)),
        KArg::Auto(_) => Err(CliError::Usage(format!("automatic k needs N >= 4, got N={n}"))),
    }
}

/// The sample-point multiplier `h` is set exactly as the fixed bandwidth.
pub fn resolve(kind: EstimatorKind, h: BandwidthArg, k: KArg, data: &Dataset) -> CliResult<Resolved> {
    Ok(match kind {
        EstimatorKind::Fixed => {
            let h = resolve_h(h, data)?;
            Resolved {
                config: EstimatorConfig::fixed(h),
                h: Some(h),
                k: None,
            }
        }
        EstimatorKind::Balloon => {
            let k = resolve_k(k, data.len())?;
            Resolved {
                config: EstimatorConfig::balloon(k),
                h: None,
                k: Some(k),
            }
        }
        EstimatorKind::Samplepoint => {
            let h = resolve_h(h, data)?;
            let k = resolve_k(k, data.len())?;
            Resolved {
                config: EstimatorConfig::sample_point(k, h),
                h: Some(h),
                k: Some(k),
            }
        }
    })
}
