use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// `n x d` matrix of node features; row `u` is the feature vector of node `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureField {
    values: DMatrix<f64>,
}

impl FeatureField {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|x| !x.is_finite()) {
            let n = values.nrows();
            return Err(Error::InvalidArgument(format!(
                "feature entry ({}, {}) is not finite",
                pos % n,
                pos / n
            )));
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                what: "feature row",
                expected: d,
                found: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
    }

    pub fn from_column(values: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(values.len(), 1, values))
    }

    pub fn constant(n: usize, value: &[f64]) -> Self {
        Self {
            values: DMatrix::from_fn(n, value.len(), |_, j| value[j]),
        }
    }

    /// IID standard normal entries from a seeded stream.
    pub fn random_normal(n: usize, d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = DMatrix::zeros(n, d);
        for i in 0..n {
            for j in 0..d {
                values[(i, j)] = StandardNormal.sample(&mut rng);
            }
        }
        Self { values }
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.values
    }

    pub fn row(&self, u: usize) -> Vec<f64> {
        self.values.row(u).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|u| self.row(u)).collect()
    }

    /// Largest absolute entry.
    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest Euclidean distance between two node feature vectors.
    pub fn spread(&self) -> f64 {
        let rows = self.rows();
        let mut best = 0.0f64;
        for u in 0..rows.len() {
            for v in (u + 1)..rows.len() {
                let d2: f64 = rows[u].iter().zip(&rows[v]).map(|(a, b)| (a - b) * (a - b)).sum();
                best = best.max(d2);
            }
        }
        best.sqrt()
    }

    /// Weighted column average `sum_u w(u) X(u)`.
    pub fn weighted_mean(&self, weights: &[f64]) -> Result<Vec<f64>> {
        if weights.len() != self.n() {
            return Err(Error::DimensionMismatch {
                what: "weights",
                expected: self.n(),
                found: weights.len(),
            });
        }
        Ok((0..self.dim())
            .map(|j| weights.iter().enumerate().map(|(u, w)| w * self.values[(u, j)]).sum())
            .collect())
    }

    /// Subtracts `offset` from every row.
    pub fn shifted(&self, offset: &[f64]) -> Self {
        let mut values = self.values.clone();
        for mut row in values.row_iter_mut() {
            for (x, o) in row.iter_mut().zip(offset) {
                *x -= o;
            }
        }
        Self { values }
    }

    /// Sup-norm distance to the consensus field `1 b^T`.
    pub fn deviation_inf(&self, b: &[f64]) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.n() {
            for (j, bj) in b.iter().enumerate() {
                m = m.max((self.values[(i, j)] - bj).abs());
            }
        }
        m
    }

    /// Frobenius distance to the consensus field `1 b^T`.
    pub fn deviation_l2(&self, b: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n() {
            for (j, bj) in b.iter().enumerate() {
                let e = self.values[(i, j)] - bj;
                s += e * e;
            }
        }
        s.sqrt()
    }
}

impl From<FeatureField> for DMatrix<f64> {
    fn from(f: FeatureField) -> Self {
        f.values
    }
}
