//! Row-major sample storage and the few dense linear-algebra helpers the
//! samplers and estimators share.

use crate::{Error, Result};
use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Dense `rows × cols` table stored row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Table {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(
                "table",
                format!("{} values do not fill {rows} rows of {cols} columns", data.len()),
            ));
        }
        Ok(Table { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::invalid(
                    "table",
                    format!("row {i} has {} values, expected {cols}", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Ok(Table {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::invalid("table", "columns have different lengths"));
        }
        let mut data = vec![0.0; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            for (i, &v) in c.iter().enumerate() {
                data[i * cols + j] = v;
            }
        }
        Ok(Table { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, col)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Keeps the listed columns, in the listed order.
    pub fn select_columns(&self, cols: &[usize]) -> Table {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for r in self.row_iter() {
            data.extend(cols.iter().map(|&c| r[c]));
        }
        Table {
            rows: self.rows,
            cols: cols.len(),
            data,
        }
    }

    /// Keeps the listed rows, in the listed order.
    pub fn select_rows(&self, rows: &[usize]) -> Table {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        Table {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }
}

pub fn cholesky(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone()).ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Projects a symmetric matrix with unit diagonal onto a positive-definite
/// correlation matrix: eigenvalues below `floor` are raised to it, then the
/// diagonal is rescaled back to one.
pub fn clip_to_correlation(m: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let clipped = eig.eigenvalues.map(|l| l.max(floor));
    let v = &eig.eigenvectors;
    let rebuilt = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    let d: Vec<f64> = (0..m.nrows()).map(|i| rebuilt[(i, i)].sqrt()).collect();
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        if i == j {
            1.0
        } else {
            let v = rebuilt[(i, j)] / (d[i] * d[j]);
            0.5 * (v + rebuilt[(j, i)] / (d[j] * d[i]))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shapes() {
        let t = Table::from_columns(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(t.rows(), 3);
        assert_eq!(t.row(1), &[2.0, 5.0]);
        assert_eq!(t.column(1), vec![4.0, 5.0, 6.0]);
        assert_eq!(t.select_columns(&[1]).as_slice(), &[4.0, 5.0, 6.0]);
        assert_eq!(t.select_rows(&[2, 0]).as_slice(), &[3.0, 6.0, 1.0, 4.0]);
        assert!(Table::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn clipping_all_ones_gives_positive_definite_matrix() {
        for k in 2..5 {
            let ones = DMatrix::from_element(k, k, 1.0);
            let c = clip_to_correlation(&ones, 1e-8);
            assert!(cholesky(&c, "clipped").is_ok(), "k={k}");
            for i in 0..k {
                assert_eq!(c[(i, i)], 1.0);
                for j in 0..k {
                    if i != j {
                        assert!(c[(i, j)] <= 1.0 - 1e-8 + 1e-15, "{}", c[(i, j)]);
                        assert!(c[(i, j)] > 0.99);
                    }
                }
            }
        }
    }
}
