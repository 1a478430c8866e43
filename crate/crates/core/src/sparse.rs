//! Compressed-row storage used by the integrators to apply operators.
//!
//! Operators are constructed densely in [`crate::hilbert`]; the propagators
//! convert them once so that each right-hand-side evaluation only touches the
//! nonzero entries.

use nalgebra::DMatrix;

use crate::par::{self, Exec};
use crate::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl CsrMatrix {
    /// Keep every entry that is not exactly zero.
    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "CSR conversion expects a square matrix");
        let dim = m.nrows();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            for j in 0..dim {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { dim, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k])] = self.vals[k];
            }
        }
        m
    }

    /// Diagonal entries if the matrix has no off-diagonal nonzeros.
    pub fn diagonal(&self) -> Option<Vec<C64>> {
        let mut d = vec![C64::new(0.0, 0.0); self.dim];
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.cols[k] != i {
                    return None;
                }
                d[i] = self.vals[k];
            }
        }
        Some(d)
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    /// `y += alpha A x`
    pub fn matvec_add(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi += alpha * acc;
        }
    }

    /// `out = A m` for a column-major square matrix, column by column.
    pub fn mul_dense(&self, m: &DMatrix<C64>, out: &mut DMatrix<C64>, exec: Exec) {
        let n = self.dim;
        debug_assert_eq!(m.nrows(), n);
        let src = m.as_slice();
        par::for_each_chunk_mut(exec, out.as_mut_slice(), n, |c, col| {
            self.matvec(&src[c * n..(c + 1) * n], col);
        });
    }

    /// `out += alpha A m`
    pub fn mul_dense_add(&self, alpha: C64, m: &DMatrix<C64>, out: &mut DMatrix<C64>, exec: Exec) {
        let n = self.dim;
        let src = m.as_slice();
        par::for_each_chunk_mut(exec, out.as_mut_slice(), n, |c, col| {
            self.matvec_add(alpha, &src[c * n..(c + 1) * n], col);
        });
    }

    /// `out += m (alpha A)†`, built column by column from contiguous columns of `m`.
    pub fn mul_dense_adjoint_add(&self, alpha: C64, m: &DMatrix<C64>, out: &mut DMatrix<C64>, exec: Exec) {
        let n = self.dim;
        let src = m.as_slice();
        par::for_each_chunk_mut(exec, out.as_mut_slice(), n, |i, col| {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let coef = (alpha * self.vals[k]).conj();
                let j = self.cols[k];
                let x = &src[j * n..(j + 1) * n];
                if coef.im == 0.0 {
                    let c = coef.re;
                    for (o, v) in col.iter_mut().zip(x) {
                        o.re += c * v.re;
                        o.im += c * v.im;
                    }
                } else {
                    for (o, v) in col.iter_mut().zip(x) {
                        *o += coef * v;
                    }
                }
            }
        });
    }

    /// For matrices with at most one nonzero per column, the list of
    /// `(column, row, value)`.
    pub fn monomial_entries(&self) -> Option<Vec<(usize, usize, C64)>> {
        let mut by_col: Vec<Option<(usize, C64)>> = vec![None; self.dim];
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let slot = &mut by_col[self.cols[k]];
                if slot.is_some() {
                    return None;
                }
                *slot = Some((i, self.vals[k]));
            }
        }
        Some(by_col.into_iter().enumerate().filter_map(|(c, e)| e.map(|(r, v)| (c, r, v))).collect())
    }
}
