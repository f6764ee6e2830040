//! Compressed sparse row matrices, sized for the operator algebra this
//! solver needs: assembly from element triplets, congruence products with
//! the prolongation operator, row/column restriction for contact terms,
//! and Jacobi-preconditioned CG.

use crate::error::{Error, Result};
use crate::parallel;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n as u32).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(u32, u32, f64)>,
    ) -> Result<Self> {
        for &(r, c, _) in &triplets {
            if r as usize >= nrows || c as usize >= ncols {
                return Err(Error::Dimension(format!(
                    "triplet ({r}, {c}) outside a {nrows} x {ncols} matrix"
                )));
            }
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx: Vec<u32> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut prev: Option<(u32, u32)> = None;
        for (r, c, v) in triplets {
            if prev == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r as usize + 1] = col_idx.len();
                prev = Some((r, c));
            }
        }
        // Rows without entries: make the pointer array cumulative.
        for r in 0..nrows {
            if row_ptr[r + 1] < row_ptr[r] {
                row_ptr[r + 1] = row_ptr[r];
            }
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()]
            .iter()
            .zip(&self.values[range])
            .map(|(&c, &v)| (c as usize, v))
    }

    /// `y = A x`, row-parallel when the `parallel` feature is on. Each row
    /// is reduced sequentially, so results do not depend on thread count.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        let mut y = vec![0.0; self.nrows];
        parallel::fill_indexed(&mut y, |r| self.row_dot(r, x));
        y
    }

    /// Sequential twin of [`CsrMatrix::mul_vec`] (the fallback kernel when
    /// the `parallel` feature is off; also used by the benches).
    pub fn mul_vec_serial(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        (0..self.nrows).map(|r| self.row_dot(r, x)).collect()
    }

    #[inline]
    fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in self.row_ptr[r]..self.row_ptr[r + 1] {
            acc += self.values[k] * x[self.col_idx[k] as usize];
        }
        acc
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c as usize + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let mut row_ptr = counts.clone();
        let mut col_idx = vec![0u32; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k] as usize;
                let dst = row_ptr[c];
                col_idx[dst] = r as u32;
                values[dst] = self.values[k];
                row_ptr[c] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr: counts,
            col_idx,
            values,
        }
    }

    /// Sparse product `self * rhs` (Gustavson's row-wise algorithm,
    /// row-parallel when enabled).
    pub fn matmul(&self, rhs: &CsrMatrix) -> Result<CsrMatrix> {
        if self.ncols != rhs.nrows {
            return Err(Error::Dimension(format!(
                "matmul: {}x{} * {}x{}",
                self.nrows, self.ncols, rhs.nrows, rhs.ncols
            )));
        }
        let rows: Vec<(Vec<u32>, Vec<f64>)> = parallel::map_indexed(self.nrows, |r| {
            let mut marker: Vec<i64> = Vec::new();
            let mut acc: Vec<f64> = Vec::new();
            let mut cols: Vec<u32> = Vec::new();
            marker.resize(rhs.ncols, -1);
            acc.resize(rhs.ncols, 0.0);
            for (k, a) in self.row(r) {
                for kk in rhs.row_ptr[k]..rhs.row_ptr[k + 1] {
                    let j = rhs.col_idx[kk] as usize;
                    if marker[j] < 0 {
                        marker[j] = 1;
                        cols.push(j as u32);
                    }
                    acc[j] += a * rhs.values[kk];
                }
            }
            cols.sort_unstable();
            let vals = cols.iter().map(|&j| acc[j as usize]).collect();
            (cols, vals)
        });
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut nnz = 0;
        for (r, (cols, _)) in rows.iter().enumerate() {
            nnz += cols.len();
            row_ptr[r + 1] = nnz;
        }
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for (cols, vals) in rows {
            col_idx.extend(cols);
            values.extend(vals);
        }
        Ok(CsrMatrix {
            nrows: self.nrows,
            ncols: rhs.ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// `self + alpha * other` (matching sparsity union).
    pub fn add_scaled(&self, other: &CsrMatrix, alpha: f64) -> Result<CsrMatrix> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::Dimension("matrix sum shape mismatch".into()));
        }
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for r in 0..self.nrows {
            let mut ka = self.row_ptr[r];
            let mut kb = other.row_ptr[r];
            let ea = self.row_ptr[r + 1];
            let eb = other.row_ptr[r + 1];
            while ka < ea || kb < eb {
                let ca = if ka < ea { self.col_idx[ka] } else { u32::MAX };
                let cb = if kb < eb { other.col_idx[kb] } else { u32::MAX };
                if ca == cb {
                    col_idx.push(ca);
                    values.push(self.values[ka] + alpha * other.values[kb]);
                    ka += 1;
                    kb += 1;
                } else if ca < cb {
                    col_idx.push(ca);
                    values.push(self.values[ka]);
                    ka += 1;
                } else {
                    col_idx.push(cb);
                    values.push(alpha * other.values[kb]);
                    kb += 1;
                }
            }
            row_ptr[r + 1] = col_idx.len();
        }
        Ok(CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Restriction to a subset of rows, in the given order.
    pub fn restrict_rows(&self, rows: &[usize]) -> CsrMatrix {
        let mut row_ptr = vec![0usize; rows.len() + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for (i, &r) in rows.iter().enumerate() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                col_idx.push(self.col_idx[k]);
                values.push(self.values[k]);
            }
            row_ptr[i + 1] = col_idx.len();
        }
        CsrMatrix {
            nrows: rows.len(),
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Restriction to the columns where `col_map[c]` is `Some(new_index)`.
    pub fn restrict_cols(&self, col_map: &[Option<usize>], new_ncols: usize) -> CsrMatrix {
        assert_eq!(col_map.len(), self.ncols);
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for r in 0..self.nrows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if let Some(nc) = col_map[self.col_idx[k] as usize] {
                    col_idx.push(nc as u32);
                    values.push(self.values[k]);
                }
            }
            row_ptr[r + 1] = col_idx.len();
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: new_ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows.min(self.ncols)];
        for (r, slot) in d.iter_mut().enumerate() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.col_idx[k] as usize == r {
                    *slot = self.values[k];
                }
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - A^T|`, for symmetry assertions.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut worst: f64 = 0.0;
        for r in 0..self.nrows {
            let mut ka = self.row_ptr[r];
            let mut kb = t.row_ptr[r];
            let ea = self.row_ptr[r + 1];
            let eb = t.row_ptr[r + 1];
            while ka < ea || kb < eb {
                let ca = if ka < ea { self.col_idx[ka] } else { u32::MAX };
                let cb = if kb < eb { t.col_idx[kb] } else { u32::MAX };
                if ca == cb {
                    worst = worst.max((self.values[ka] - t.values[kb]).abs());
                    ka += 1;
                    kb += 1;
                } else if ca < cb {
                    worst = worst.max(self.values[ka].abs());
                    ka += 1;
                } else {
                    worst = worst.max(t.values[kb].abs());
                    kb += 1;
                }
            }
        }
        worst
    }

    /// Dense copy for small oracles and debugging.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small() -> CsrMatrix {
        // [1 0 2]
        // [0 3 0]
        CsrMatrix::from_triplets(2, 3, vec![(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)]).unwrap()
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m =
            CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 0, 2.5), (1, 1, -1.0)]).unwrap();
        assert_eq!(m.nnz(), 2);
        assert_relative_eq!(m.to_dense()[(0, 0)], 3.5);
    }

    #[test]
    fn matvec_matches_dense() {
        let m = small();
        let y = m.mul_vec(&[1.0, 2.0, 3.0]);
        assert_eq!(y, vec![7.0, 6.0]);
        assert_eq!(m.mul_vec_serial(&[1.0, 2.0, 3.0]), y);
    }

    #[test]
    fn transpose_roundtrip() {
        let m = small();
        let tt = m.transpose().transpose();
        assert_eq!(m.to_dense(), tt.to_dense());
    }

    #[test]
    fn matmul_matches_dense_product() {
        let a = small();
        let b = CsrMatrix::from_triplets(
            3,
            2,
            vec![(0, 0, 1.0), (0, 1, -1.0), (1, 0, 2.0), (2, 1, 0.5)],
        )
        .unwrap();
        let c = a.matmul(&b).unwrap();
        let dense = a.to_dense() * b.to_dense();
        assert_relative_eq!((c.to_dense() - dense).abs().max(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn add_scaled_matches_dense() {
        let a = small();
        let b = CsrMatrix::from_triplets(2, 3, vec![(0, 1, 4.0), (1, 1, 1.0)]).unwrap();
        let c = a.add_scaled(&b, 2.0).unwrap();
        let dense = a.to_dense() + 2.0 * b.to_dense();
        assert_relative_eq!((c.to_dense() - dense).abs().max(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn row_and_column_restriction() {
        let a = small();
        let rows = a.restrict_rows(&[1, 0]);
        assert_eq!(rows.to_dense()[(0, 1)], 3.0);
        let cols = a.restrict_cols(&[Some(0), None, Some(1)], 2);
        assert_eq!(cols.to_dense()[(0, 1)], 2.0);
        assert_eq!(cols.ncols(), 2);
    }

    #[test]
    fn asymmetry_detects_lopsided_entries() {
        let sym =
            CsrMatrix::from_triplets(2, 2, vec![(0, 1, 2.0), (1, 0, 2.0), (0, 0, 1.0)]).unwrap();
        assert_relative_eq!(sym.asymmetry(), 0.0);
        let skew = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 2.0), (1, 0, 1.0)]).unwrap();
        assert_relative_eq!(skew.asymmetry(), 1.0);
    }

    #[test]
    fn out_of_range_triplet_is_rejected() {
        assert!(CsrMatrix::from_triplets(1, 1, vec![(0, 1, 1.0)]).is_err());
    }
}
