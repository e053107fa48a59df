//! Matrix observations, datasets and exact nearest-neighbour queries under
//! the Frobenius distance.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// One `P x T` real matrix, stored row-major.
#[derive(Clone, PartialEq)]
pub struct MatrixObs {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl MatrixObs {
    /// Builds a matrix from row-major entries. Entries must be finite.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::param(format!(
                "matrix shape must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                expected: format!("{} entries", rows * cols),
                found: format!("{} entries", data.len()),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite entry at position {pos}")));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a list of rows of equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::param("rows have unequal lengths"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix shape must be positive");
        assert!(value.is_finite());
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// A `1 x 1` matrix.
    pub fn scalar(value: f64) -> Self {
        Self::filled(1, 1, value)
    }

    /// Caller guarantees `data.len() == rows * cols`. Finiteness is only
    /// debug-checked; arithmetic on finite inputs stays finite in practice.
    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Number of entries, `P * T`.
    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        self.data[row * self.cols + col]
    }

    /// `tr(X^T X)`.
    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.squared_norm().sqrt()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::from_vec_unchecked(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v * factor).collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_shape(other.shape())?;
        Ok(Self::from_vec_unchecked(
            self.rows,
            self.cols,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub(crate) fn check_shape(&self, shape: (usize, usize)) -> Result<()> {
        if self.shape() == shape {
            Ok(())
        } else {
            Err(Error::shape(shape, self.shape()))
        }
    }
}

impl fmt::Debug for MatrixObs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MatrixObs({}x{}) ", self.rows, self.cols)?;
        f.debug_list()
            .entries(self.data.chunks(self.cols).map(|r| r.to_vec()))
            .finish()
    }
}

/// Squared Euclidean distance between two equally sized slices.
#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Ordered, immutable collection of equally shaped observations.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    obs: Vec<MatrixObs>,
    shape: (usize, usize),
}

impl Dataset {
    pub fn new(obs: Vec<MatrixObs>) -> Result<Self> {
        let shape = obs
            .first()
            .map(MatrixObs::shape)
            .ok_or_else(|| Error::param("dataset must contain at least one observation"))?;
        for (i, o) in obs.iter().enumerate() {
            if o.shape() != shape {
                return Err(Error::Dimension {
                    expected: format!("{}x{}", shape.0, shape.1),
                    found: format!("{}x{} at observation {i}", o.rows(), o.cols()),
                });
            }
        }
        Ok(Self { obs, shape })
    }

    /// Builds a dataset from 1x1 observations, convenient for scalar data.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        values
            .iter()
            .map(|&v| MatrixObs::new(1, 1, vec![v]))
            .collect::<Result<Vec<_>>>()
            .and_then(Self::new)
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.0 * self.shape.1
    }

    pub fn get(&self, index: usize) -> &MatrixObs {
        &self.obs[index]
    }

    pub fn observations(&self) -> &[MatrixObs] {
        &self.obs
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MatrixObs> {
        self.obs.iter()
    }

    pub fn into_observations(self) -> Vec<MatrixObs> {
        self.obs
    }

    /// Entrywise mean over all observations.
    pub fn mean(&self) -> MatrixObs {
        let mut acc = vec![0.0; self.dim()];
        for o in &self.obs {
            for (a, v) in acc.iter_mut().zip(o.as_slice()) {
                *a += v;
            }
        }
        let n = self.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        MatrixObs::from_vec_unchecked(self.shape.0, self.shape.1, acc)
    }

    pub(crate) fn check_query(&self, y: &MatrixObs) -> Result<()> {
        y.check_shape(self.shape)
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a MatrixObs;
    type IntoIter = std::slice::Iter<'a, MatrixObs>;

    fn into_iter(self) -> Self::IntoIter {
        self.obs.iter()
    }
}

/// Result of a k-nearest-neighbour query, nearest first.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborList {
    pub indices: Vec<usize>,
    pub distances: Vec<f64>,
}

impl NeighborList {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Distance to the farthest returned neighbour.
    pub fn radius(&self) -> f64 {
        self.distances.last().copied().unwrap_or(0.0)
    }
}

pub fn frobenius_distance(a: &MatrixObs, b: &MatrixObs) -> Result<f64> {
    a.check_shape(b.shape())?;
    Ok(sq_dist(a.as_slice(), b.as_slice()).sqrt())
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Exact brute-force search returning `(squared distance, index)` pairs for
/// the `k` nearest points, nearest first, ties broken by lower index.
pub(crate) fn knn_sq(
    y: &[f64],
    data: &Dataset,
    k: usize,
    exclude: Option<usize>,
) -> Result<Vec<(f64, usize)>> {
    let available = data.len() - usize::from(exclude.is_some_and(|e| e < data.len()));
    if k == 0 || k > available {
        return Err(Error::param(format!(
            "k = {k} out of range: must satisfy 1 <= k <= {available}"
        )));
    }
    let mut all: Vec<(f64, usize)> = data
        .iter()
        .enumerate()
        .filter(|&(i, _)| Some(i) != exclude)
        .map(|(i, x)| (sq_dist(y, x.as_slice()), i))
        .collect();
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, by_distance_then_index);
        all.truncate(k);
    }
    all.sort_unstable_by(by_distance_then_index);
    Ok(all)
}

/// The `k` nearest observations of `data` to `y` under the Frobenius
/// distance, optionally skipping one dataset index.
pub fn knn_query(
    y: &MatrixObs,
    data: &Dataset,
    k: usize,
    exclude_index: Option<usize>,
) -> Result<NeighborList> {
    data.check_query(y)?;
    let found = knn_sq(y.as_slice(), data, k, exclude_index)?;
    Ok(NeighborList {
        indices: found.iter().map(|&(_, i)| i).collect(),
        distances: found.iter().map(|&(d2, _)| d2.sqrt()).collect(),
    })
}

/// Distance from `y` to its k-th nearest neighbour, `delta_k(y)`.
pub fn knn_distance(y: &MatrixObs, data: &Dataset, k: usize, exclude_index: Option<usize>) -> Result<f64> {
    Ok(knn_query(y, data, k, exclude_index)?.radius())
}

/// Per-entry location and scale used by [`standardize`].
#[derive(Clone, Debug, PartialEq)]
pub struct Standardization {
    pub center: MatrixObs,
    pub scale: MatrixObs,
}

impl Standardization {
    pub fn apply(&self, x: &MatrixObs) -> Result<MatrixObs> {
        x.check_shape(self.center.shape())?;
        let data = x
            .as_slice()
            .iter()
            .zip(self.center.as_slice().iter().zip(self.scale.as_slice()))
            .map(|(v, (c, s))| (v - c) / s)
            .collect();
        Ok(MatrixObs::from_vec_unchecked(x.rows(), x.cols(), data))
    }

    pub fn invert(&self, z: &MatrixObs) -> Result<MatrixObs> {
        z.check_shape(self.center.shape())?;
        let data = z
            .as_slice()
            .iter()
            .zip(self.center.as_slice().iter().zip(self.scale.as_slice()))
            .map(|(v, (c, s))| v * s + c)
            .collect();
        Ok(MatrixObs::from_vec_unchecked(z.rows(), z.cols(), data))
    }

    pub fn invert_dataset(&self, data: &Dataset) -> Result<Dataset> {
        Dataset::new(data.iter().map(|z| self.invert(z)).collect::<Result<_>>()?)
    }
}

/// Per-entry z-scores across the sample (sample standard deviation with
/// `N - 1` denominator). Constant entries are centred only and keep scale 1.
pub fn standardize(data: &Dataset) -> Result<(Dataset, Standardization)> {
    let n = data.len();
    if n < 2 {
        return Err(Error::param("standardize requires at least 2 observations"));
    }
    let (rows, cols) = data.shape();
    let center = data.mean();
    let mut var = vec![0.0; data.dim()];
    for x in data {
        for ((acc, v), c) in var.iter_mut().zip(x.as_slice()).zip(center.as_slice()) {
            *acc += (v - c) * (v - c);
        }
    }
    let scale: Vec<f64> = var
        .into_iter()
        .map(|s| {
            let sd = (s / (n - 1) as f64).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    let st = Standardization {
        center,
        scale: MatrixObs::from_vec_unchecked(rows, cols, scale),
    };
    let z = Dataset::new(data.iter().map(|x| st.apply(x)).collect::<Result<_>>()?)?;
    Ok((z, st))
}
