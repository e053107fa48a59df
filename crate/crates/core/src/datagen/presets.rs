//! Repository-defined prototype matrices, built from a versioned table of
//! low-frequency DCT coefficients.

use std::fmt;
use std::str::FromStr;

use super::dct::Dct2;
use super::Prototype;
use crate::error::{Error, Result};
use crate::tensor::MatrixObs;

pub const PRESET_VERSION: u32 = 1;

const PRESET_TABLE: &str = include_str!("../../data/presets-v1.txt");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PresetName {
    A,
    B,
    C,
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(PresetName::A),
            "B" | "b" => Ok(PresetName::B),
            "C" | "c" => Ok(PresetName::C),
            _ => Err(Error::param(format!("unknown prototype preset '{s}'"))),
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PresetName::A => "A",
            PresetName::B => "B",
            PresetName::C => "C",
        };
        f.write_str(s)
    }
}

struct Coefficient {
    name: PresetName,
    row: usize,
    col: usize,
    value: f64,
}

fn parse_table() -> Result<Vec<Coefficient>> {
    let mut out = Vec::new();
    for (lineno, line) in PRESET_TABLE.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |m: &str| Error::Parse {
            line: lineno + 1,
            message: m.to_string(),
        };
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(bad("expected 4 fields"));
        }
        out.push(Coefficient {
            name: f[0].parse()?,
            row: f[1].parse().map_err(|_| bad("bad row frequency"))?,
            col: f[2].parse().map_err(|_| bad("bad column frequency"))?,
            value: f[3].parse().map_err(|_| bad("bad coefficient"))?,
        });
    }
    Ok(out)
}

/// DCT coefficient matrix of a preset at shape `rows x cols`.
pub fn preset_coefficients(name: PresetName, rows: usize, cols: usize) -> Result<MatrixObs> {
    if rows == 0 || cols == 0 {
        return Err(Error::param("prototype shape must be positive"));
    }
    let scale = ((rows * cols) as f64).sqrt();
    let mut omega = vec![0.0; rows * cols];
    for c in parse_table()? {
        if c.name == name && c.row < rows && c.col < cols {
            omega[c.row * cols + c.col] = c.value * scale;
        }
    }
    MatrixObs::new(rows, cols, omega)
}

/// Smooth preset prototype of shape `rows x cols`.
pub fn preset_prototypes(name: PresetName, rows: usize, cols: usize) -> Result<Prototype> {
    let omega = preset_coefficients(name, rows, cols)?;
    Ok(Prototype {
        name: name.to_string(),
        matrix: Dct2::new(rows, cols).inverse(&omega),
    })
}

/// A named clustering setting: which presets, mixed in what proportions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Setting {
    /// One group from prototype A.
    Single,
    /// B and C in equal proportions.
    TwoBalanced,
    /// B and C in proportions 0.1 and 0.9.
    TwoImbalanced,
}

impl Setting {
    pub fn presets(self) -> &'static [PresetName] {
        match self {
            Setting::Single => &[PresetName::A],
            Setting::TwoBalanced | Setting::TwoImbalanced => &[PresetName::B, PresetName::C],
        }
    }

    pub fn weights(self) -> &'static [f64] {
        match self {
            Setting::Single => &[1.0],
            Setting::TwoBalanced => &[0.5, 0.5],
            Setting::TwoImbalanced => &[0.1, 0.9],
        }
    }

    pub fn prototypes(self, rows: usize, cols: usize) -> Result<Vec<Prototype>> {
        self.presets()
            .iter()
            .map(|&p| preset_prototypes(p, rows, cols))
            .collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            Setting::Single => "single",
            Setting::TwoBalanced => "two-balanced",
            Setting::TwoImbalanced => "two-imbalanced",
        }
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Setting::Single),
            "two-balanced" | "balanced" => Ok(Setting::TwoBalanced),
            "two-imbalanced" | "imbalanced" => Ok(Setting::TwoImbalanced),
            _ => Err(Error::param(format!(
                "unknown preset setting '{s}' (expected single, two-balanced or two-imbalanced)"
            ))),
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
