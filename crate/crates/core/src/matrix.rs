//! Compressed sparse row storage shared by the feature extractor and the
//! classifiers.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Row-major sparse matrix. Column indices within a row are strictly
/// increasing and stored values are never exactly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(n_cols: usize) -> Self {
        CsrMatrix {
            n_cols,
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Appends a row given as `(column, value)` pairs in any order. Zeros are
    /// dropped; repeated columns are summed.
    pub fn push_row<I>(&mut self, entries: I) -> Result<()>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let mut row: Vec<(usize, f64)> = entries.into_iter().collect();
        row.sort_by_key(|&(c, _)| c);
        let start = self.indices.len();
        for (col, value) in row {
            if col >= self.n_cols {
                self.indices.truncate(start);
                self.values.truncate(start);
                return Err(Error::DimensionMismatch {
                    expected: self.n_cols,
                    actual: col + 1,
                });
            }
            if self.indices.len() > start && *self.indices.last().unwrap() as usize == col {
                *self.values.last_mut().unwrap() += value;
            } else {
                self.indices.push(col as u32);
                self.values.push(value);
            }
        }
        // drop explicit zeros, including ones produced by summing
        let mut write = start;
        for read in start..self.indices.len() {
            if self.values[read] != 0.0 {
                self.indices[write] = self.indices[read];
                self.values[write] = self.values[read];
                write += 1;
            }
        }
        self.indices.truncate(write);
        self.values.truncate(write);
        self.indptr.push(write);
        Ok(())
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut m = CsrMatrix::new(n_cols);
        for row in rows {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    actual: row.len(),
                });
            }
            m.push_row(row.iter().copied().enumerate())?;
        }
        Ok(m)
    }

    pub fn n_rows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> SparseRow<'_> {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        SparseRow {
            indices: &self.indices[a..b],
            values: &self.values[a..b],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = SparseRow<'_>> {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    /// Value at `(i, j)`, zero when absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).get(j)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows()
            .map(|r| {
                let mut dense = vec![0.0; self.n_cols];
                for (j, v) in r.iter() {
                    dense[j] = v;
                }
                dense
            })
            .collect()
    }

    /// New matrix holding the given rows, in order (repeats allowed).
    pub fn select_rows(&self, rows: &[usize]) -> CsrMatrix {
        let mut m = CsrMatrix::new(self.n_cols);
        for &i in rows {
            let r = self.row(i);
            m.indices.extend_from_slice(r.indices);
            m.values.extend_from_slice(r.values);
            m.indptr.push(m.indices.len());
        }
        m
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if self.n_rows() != other.n_rows() {
            return Err(Error::InvalidInput(format!(
                "cannot stack {} rows with {} rows",
                self.n_rows(),
                other.n_rows()
            )));
        }
        let offset = self.n_cols;
        let mut m = CsrMatrix::new(self.n_cols + other.n_cols);
        for (a, b) in self.rows().zip(other.rows()) {
            m.push_row(a.iter().chain(b.iter().map(|(j, v)| (j + offset, v))))?;
        }
        Ok(m)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SparseRow<'a> {
    pub indices: &'a [u32],
    pub values: &'a [f64],
}

impl<'a> SparseRow<'a> {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        let values = self.values;
        self.indices
            .iter()
            .zip(values)
            .map(|(&j, &v)| (j as usize, v))
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn get(&self, j: usize) -> f64 {
        match self.indices.binary_search(&(j as u32)) {
            Ok(k) => self.values[k],
            Err(_) => 0.0,
        }
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(j, v)| v * dense[j]).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}
