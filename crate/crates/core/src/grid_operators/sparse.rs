use std::io::{self, Write};

use crate::linalg::Scalar;

/// Real sparse matrix in compressed-row layout.
///
/// Column indices within a row are strictly increasing, so there are no
/// duplicate `(row, col)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Builds a matrix from triplets, summing duplicates and dropping exact zeros.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut row_of = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < rows && c < cols, "triplet ({r}, {c}) out of range");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_of.push(r);
                last = Some((r, c));
            }
        }
        let keep: Vec<bool> = values.iter().map(|v| *v != 0.0).collect();
        let mut ci = Vec::with_capacity(col_idx.len());
        let mut vs = Vec::with_capacity(values.len());
        for k in 0..values.len() {
            if keep[k] {
                row_ptr[row_of[k] + 1] += 1;
                ci.push(col_idx[k]);
                vs.push(values[k]);
            }
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseOperator {
            rows,
            cols,
            row_ptr,
            col_idx: ci,
            values: vs,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of row `r` as `(col, value)` pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    /// All entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        self.triplets().map(|(r, c, _)| r.abs_diff(c)).max().unwrap_or(0)
    }

    /// `y = A x`.
    pub fn apply<T: Scalar>(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += T::from(self.values[k]) * x[self.col_idx[k]];
            }
            *yr = acc;
        }
    }

    pub fn mul_vec<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.rows];
        self.apply(x, &mut y);
        y
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &SparseOperator) -> SparseOperator {
        assert_eq!(self.cols, other.rows);
        let mut triplets = Vec::new();
        let mut acc = vec![0.0; other.cols];
        let mut touched = Vec::new();
        let mut mark = vec![false; other.cols];
        for r in 0..self.rows {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !mark[c] {
                        mark[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                triplets.push((r, c, acc[c]));
                acc[c] = 0.0;
                mark[c] = false;
            }
            touched.clear();
        }
        SparseOperator::from_triplets(self.rows, other.cols, triplets)
    }

    pub fn transpose(&self) -> SparseOperator {
        SparseOperator::from_triplets(self.cols, self.rows, self.triplets().map(|(r, c, v)| (c, r, v)).collect())
    }

    /// Max-norm of `self - other` over the union of stored entries.
    pub fn max_abs_diff(&self, other: &SparseOperator) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let a = self.triplets().map(|(r, c, v)| (v - other.get(r, c)).abs());
        let b = other.triplets().map(|(r, c, v)| (v - self.get(r, c)).abs());
        a.chain(b).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for (r, c, v) in self.triplets() {
            d[r][c] = v;
        }
        d
    }

    /// Writes the triplet debug dump: a `# rows cols nnz` header, then one
    /// `row col value` line per entry with 17 significant digits.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# {} {} {}", self.rows, self.cols, self.nnz())?;
        for (r, c, v) in self.triplets() {
            writeln!(w, "{r} {c} {v:.16e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let a = SparseOperator::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, 2.0), (0, 0, 3.0), (0, 1, 0.0)]);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 0), 4.0);
        assert_eq!(a.get(0, 1), 0.0);
    }

    #[test]
    fn product_matches_dense() {
        let a = SparseOperator::from_triplets(3, 3, vec![(0, 0, 2.0), (0, 2, -1.0), (1, 1, 3.0), (2, 0, 1.0), (2, 1, 4.0)]);
        let p = a.matmul(&a);
        let d = a.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                let want: f64 = (0..3).map(|k| d[i][k] * d[k][j]).sum();
                assert_eq!(p.get(i, j), want);
            }
        }
    }

    #[test]
    fn triplet_dump_format() {
        let a = SparseOperator::from_triplets(2, 3, vec![(1, 2, 0.1), (0, 0, -4.0)]);
        let mut buf = Vec::new();
        a.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "# 2 3 2\n0 0 -4.0000000000000000e0\n1 2 1.0000000000000001e-1\n");
    }
}
