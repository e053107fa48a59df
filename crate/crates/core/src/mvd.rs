//! The `mvd` text format for matrix-variate datasets, and plain label files.
//!
//! ```text
//! mvd 1 <N> <P> <T>
//! <P*T floats, row-major>        (N lines)
//! # key=value                    (optional metadata, ignored by readers)
//! # labels: <N integers>         (optional, last)
//! ```
//!
//! Floats are written with 17 significant digits so that a write/read cycle
//! is lossless.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Dataset, MatrixObs};

pub const MVD_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct MvdFile {
    pub data: Dataset,
    pub labels: Option<Vec<i64>>,
    pub metadata: Vec<(String, String)>,
}

/// Shortest lossless form is not required; 17 significant digits are.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_mvd<W: Write>(
    mut out: W,
    data: &Dataset,
    labels: Option<&[i64]>,
    metadata: &[(String, String)],
) -> Result<()> {
    let (rows, cols) = data.shape();
    if let Some(l) = labels {
        if l.len() != data.len() {
            return Err(Error::Dimension {
                expected: format!("{} labels", data.len()),
                found: format!("{}", l.len()),
            });
        }
    }
    writeln!(out, "mvd {MVD_VERSION} {} {rows} {cols}", data.len())?;
    let mut line = String::new();
    for x in data {
        line.clear();
        for (i, v) in x.as_slice().iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&format_f64(*v));
        }
        writeln!(out, "{line}")?;
    }
    for (k, v) in metadata {
        writeln!(out, "# {k}={v}")?;
    }
    if let Some(l) = labels {
        let joined: Vec<String> = l.iter().map(i64::to_string).collect();
        writeln!(out, "# labels: {}", joined.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_mvd_path(
    path: impl AsRef<Path>,
    data: &Dataset,
    labels: Option<&[i64]>,
    metadata: &[(String, String)],
) -> Result<()> {
    write_mvd(BufWriter::new(File::create(path)?), data, labels, metadata)
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn read_mvd<R: BufRead>(input: R) -> Result<MvdFile> {
    let mut lines = input.lines().enumerate();
    let (n, rows, cols) = loop {
        let (i, line) = lines.next().ok_or_else(|| parse_err(1, "missing mvd header"))?;
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        if f.len() != 5 || f[0] != "mvd" {
            return Err(parse_err(i + 1, "expected header 'mvd 1 <N> <P> <T>'"));
        }
        if f[1] != MVD_VERSION.to_string() {
            return Err(parse_err(i + 1, format!("unsupported mvd version {}", f[1])));
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| parse_err(i + 1, format!("bad header field '{s}'")))
        };
        break (num(f[2])?, num(f[3])?, num(f[4])?);
    };
    if n == 0 || rows == 0 || cols == 0 {
        return Err(parse_err(1, "N, P and T must be positive"));
    }
    let mut obs = Vec::with_capacity(n);
    let mut labels = None;
    let mut metadata = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(list) = rest.strip_prefix("labels:") {
                let parsed = list
                    .split_whitespace()
                    .map(|s| {
                        s.parse::<i64>()
                            .map_err(|_| parse_err(i + 1, format!("bad label '{s}'")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if parsed.len() != n {
                    return Err(parse_err(
                        i + 1,
                        format!("expected {n} labels, found {}", parsed.len()),
                    ));
                }
                labels = Some(parsed);
            } else if let Some((k, v)) = rest.split_once('=') {
                metadata.push((k.trim().to_string(), v.trim().to_string()));
            }
            continue;
        }
        if labels.is_some() {
            return Err(parse_err(i + 1, "data after the labels line"));
        }
        if obs.len() == n {
            return Err(parse_err(i + 1, format!("more than {n} observation lines")));
        }
        let values = t
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| parse_err(i + 1, format!("bad float '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != rows * cols {
            return Err(parse_err(
                i + 1,
                format!("expected {} values, found {}", rows * cols, values.len()),
            ));
        }
        obs.push(MatrixObs::new(rows, cols, values).map_err(|e| parse_err(i + 1, e.to_string()))?);
    }
    if obs.len() != n {
        return Err(parse_err(
            0,
            format!("expected {n} observations, found {}", obs.len()),
        ));
    }
    Ok(MvdFile {
        data: Dataset::new(obs)?,
        labels,
        metadata,
    })
}

pub fn read_mvd_path(path: impl AsRef<Path>) -> Result<MvdFile> {
    read_mvd(BufReader::new(File::open(path)?))
}

/// One integer label per line.
pub fn write_labels<W: Write>(mut out: W, labels: &[i64]) -> Result<()> {
    for l in labels {
        writeln!(out, "{l}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a label file. Also accepts an mvd file carrying a labels line.
pub fn read_labels<R: BufRead>(input: R) -> Result<Vec<i64>> {
    let mut text = String::new();
    let mut reader = input;
    reader.read_to_string(&mut text)?;
    if text.trim_start().starts_with("mvd") {
        return read_mvd(text.as_bytes())?
            .labels
            .ok_or_else(|| parse_err(0, "mvd file has no labels line"));
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            l.trim()
                .parse::<i64>()
                .map_err(|_| parse_err(i + 1, format!("bad label '{}'", l.trim())))
        })
        .collect()
}

pub fn read_labels_path(path: impl AsRef<Path>) -> Result<Vec<i64>> {
    read_labels(BufReader::new(File::open(path)?))
}
