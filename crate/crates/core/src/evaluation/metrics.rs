use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{sq_dist, Dataset};

/// Cluster labels, one per observation. Only co-membership matters.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    labels: Vec<i64>,
}

impl Partition {
    pub fn new(labels: Vec<i64>) -> Self {
        Self { labels }
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Distinct labels in ascending order.
    pub fn distinct(&self) -> Vec<i64> {
        let mut d = self.labels.clone();
        d.sort_unstable();
        d.dedup();
        d
    }

    pub fn n_clusters(&self) -> usize {
        self.distinct().len()
    }

    /// Relabels to `0..M` in ascending order of the original labels.
    fn dense(&self) -> (Vec<i64>, Vec<usize>) {
        let distinct = self.distinct();
        let index: BTreeMap<i64, usize> = distinct.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let dense = self.labels.iter().map(|l| index[l]).collect();
        (distinct, dense)
    }
}

impl From<Vec<i64>> for Partition {
    fn from(labels: Vec<i64>) -> Self {
        Self::new(labels)
    }
}

impl From<&[usize]> for Partition {
    fn from(labels: &[usize]) -> Self {
        Self::new(labels.iter().map(|&l| l as i64).collect())
    }
}

impl From<Vec<usize>> for Partition {
    fn from(labels: Vec<usize>) -> Self {
        Self::from(labels.as_slice())
    }
}

fn check_lengths(a: &Partition, b: &Partition) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: format!("{} labels", a.len()),
            found: format!("{}", b.len()),
        });
    }
    Ok(())
}

/// Contingency counts: rows follow `a`'s sorted labels, columns `b`'s.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionTable {
    pub row_labels: Vec<i64>,
    pub col_labels: Vec<i64>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionTable {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> Vec<usize> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<usize> {
        (0..self.col_labels.len())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }
}

impl fmt::Display for ConfusionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells = self
            .row_labels
            .iter()
            .map(|l| l.to_string())
            .chain(self.col_labels.iter().map(|l| l.to_string()))
            .chain(self.counts.iter().flatten().map(|c| c.to_string()));
        let w = cells.map(|s| s.len()).max().unwrap_or(1).max(3);
        write!(f, "{:>w$}", "a\\b")?;
        for c in &self.col_labels {
            write!(f, " {c:>w$}")?;
        }
        for (l, row) in self.row_labels.iter().zip(&self.counts) {
            write!(f, "\n{l:>w$}")?;
            for c in row {
                write!(f, " {c:>w$}")?;
            }
        }
        Ok(())
    }
}

pub fn confusion_table(a: &Partition, b: &Partition) -> Result<ConfusionTable> {
    check_lengths(a, b)?;
    let (row_labels, ra) = a.dense();
    let (col_labels, rb) = b.dense();
    let mut counts = vec![vec![0usize; col_labels.len()]; row_labels.len()];
    for (i, j) in ra.into_iter().zip(rb) {
        counts[i][j] += 1;
    }
    Ok(ConfusionTable {
        row_labels,
        col_labels,
        counts,
    })
}

fn pairs(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Fowlkes-Mallows index over all unordered pairs. Zero when no pair is
/// co-clustered in both partitions.
pub fn fowlkes_mallows(a: &Partition, b: &Partition) -> Result<f64> {
    check_lengths(a, b)?;
    if a.len() < 2 {
        return Err(Error::param("Fowlkes-Mallows needs at least 2 observations"));
    }
    let table = confusion_table(a, b)?;
    let tp: f64 = table.counts.iter().flatten().map(|&c| pairs(c)).sum();
    if tp == 0.0 {
        return Ok(0.0);
    }
    let pa: f64 = table.row_sums().into_iter().map(pairs).sum();
    let pb: f64 = table.col_sums().into_iter().map(pairs).sum();
    Ok((tp / (pa * pb).sqrt()).min(1.0))
}

/// Row-major `N x N` Frobenius distance matrix.
pub fn distance_matrix(data: &Dataset) -> Vec<f64> {
    let n = data.len();
    let mut out = vec![0.0; n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let xi = data.get(i).as_slice();
        for (j, r) in row.iter_mut().enumerate() {
            *r = sq_dist(xi, data.get(j).as_slice()).sqrt();
        }
    });
    out
}

pub fn silhouette(data: &Dataset, p: &Partition) -> Result<f64> {
    if p.len() != data.len() {
        return Err(Error::Dimension {
            expected: format!("{} labels", data.len()),
            found: format!("{}", p.len()),
        });
    }
    silhouette_from_distances(&distance_matrix(data), p)
}

/// Mean silhouette width from a precomputed row-major distance matrix.
/// Points in singleton clusters score 0.
pub fn silhouette_from_distances(dist: &[f64], p: &Partition) -> Result<f64> {
    let n = p.len();
    if dist.len() != n * n {
        return Err(Error::Dimension {
            expected: format!("{}x{} distance matrix", n, n),
            found: format!("{} entries", dist.len()),
        });
    }
    if n < 3 {
        return Err(Error::UndefinedMetric(
            "silhouette needs at least 3 observations".into(),
        ));
    }
    let (distinct, labels) = p.dense();
    let m = distinct.len();
    if m < 2 {
        return Err(Error::UndefinedMetric(
            "silhouette needs at least 2 clusters".into(),
        ));
    }
    let mut sizes = vec![0usize; m];
    for &l in &labels {
        sizes[l] += 1;
    }
    let scores: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = labels[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; m];
            for (j, &l) in labels.iter().enumerate() {
                sums[l] += dist[i * n + j];
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..m)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / n as f64)
}
