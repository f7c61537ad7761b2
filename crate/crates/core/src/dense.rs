//! Dense LU with partial pivoting, used for the coarsest multilevel solve.

use crate::error::{Error, Result};
use crate::operator::LinearOperator;
use crate::sparse::{SparseMatrix, VALUE_BYTES};

#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    // Row-major packed L (unit, below diagonal) and U.
    lu: Vec<f64>,
    pivots: Vec<usize>,
}

impl DenseLu {
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        if a.n_rows() != a.n_cols() {
            return Err(Error::dims("DenseLu::factor", a.n_rows(), a.n_cols()));
        }
        let n = a.n_rows();
        let mut lu = vec![0.0; n * n];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                lu[i * n + c] = v;
            }
        }
        let scale = lu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut pivots = vec![0; n];
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for i in k + 1..n {
                let v = lu[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= f64::EPSILON * scale * n as f64 || best == 0.0 {
                return Err(Error::SingularMatrix { pivot: k });
            }
            pivots[k] = p;
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let l = lu[i * n + k] / pivot;
                lu[i * n + k] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= l * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Self { n, lu, pivots })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n, "DenseLu::solve: wrong right-hand side length");
        for k in 0..n {
            b.swap(k, self.pivots[k]);
        }
        for i in 0..n {
            let mut s = b[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s -= self.lu[i * n + j] * b[j];
            }
            b[i] = s / self.lu[i * n + i];
        }
    }

    pub fn storage_bytes(&self) -> usize {
        self.lu.len() * VALUE_BYTES + self.pivots.len() * 8
    }
}

impl LinearOperator for DenseLu {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
        self.solve_in_place(y);
    }
}
