//! Row-major instance matrix.

use crate::error::{Error, Result};

/// Dense row-major matrix of f64 feature values. Rows are instances.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Empty matrix with a fixed column count.
    pub fn new(cols: usize) -> Self {
        Self {
            cols,
            data: Vec::new(),
        }
    }

    pub fn with_capacity(cols: usize, rows: usize) -> Self {
        Self {
            cols,
            data: Vec::with_capacity(cols * rows),
        }
    }

    pub fn from_rows(cols: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut m = Matrix::with_capacity(cols, rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::RaggedRow {
                    row: i,
                    found: row.len(),
                    expected: cols,
                });
            }
            m.data.extend_from_slice(row);
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.cols).unwrap_or(0)
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols, "row arity mismatch");
        self.data.extend_from_slice(row);
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1))
    }

    /// New matrix containing only the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        let mut out = Matrix::with_capacity(cols.len(), self.rows());
        for row in self.iter_rows() {
            for &c in cols {
                out.data.push(row[c]);
            }
        }
        out
    }

    /// New matrix containing only the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut out = Matrix::with_capacity(self.cols, rows.len());
        for &r in rows {
            out.push_row(self.row(r));
        }
        out
    }

    /// Number of distinct rows under bitwise f64 equality.
    pub fn distinct_rows(&self) -> usize {
        use std::collections::HashSet;
        let mut seen: HashSet<Vec<u64>> = HashSet::with_capacity(self.rows());
        for row in self.iter_rows() {
            seen.insert(row.iter().map(|v| v.to_bits()).collect());
        }
        seen.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_rows() {
        let m = Matrix::from_rows(2, &[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m.rows(), 2);
        assert_eq!(m.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn ragged_rejected() {
        let err = Matrix::from_rows(2, &[vec![1.0, 2.0], vec![3.0]]).unwrap_err();
        assert!(matches!(err, Error::RaggedRow { row: 1, .. }));
    }

    #[test]
    fn column_selection() {
        let m = Matrix::from_rows(3, &[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let s = m.select_columns(&[2, 0]);
        assert_eq!(s.row(0), &[3.0, 1.0]);
        assert_eq!(s.row(1), &[6.0, 4.0]);
    }

    #[test]
    fn distinct_row_count() {
        let m = Matrix::from_rows(2, &[vec![1.0, 2.0], vec![1.0, 2.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(m.distinct_rows(), 2);
    }
}
