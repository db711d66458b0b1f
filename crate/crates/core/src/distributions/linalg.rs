//! Small dense matrices: LU with partial pivoting and triangular solves.

use crate::{Error, Result};

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut m = Self::identity(n);
        m.data.iter_mut().for_each(|v| *v *= s);
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParameter("matrix must be square and non-empty".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("matrix entries must be finite".into()));
        }
        Ok(Self { n, data: rows.concat() })
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// `out = self * x`.
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        for (row, o) in self.data.chunks(self.n).zip(out.iter_mut()) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.mul_vec_into(x, &mut out);
        out
    }

    pub fn is_lower_triangular(&self) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| self.get(i, j) == 0.0))
    }

    /// Solve `L y = b` for lower-triangular `self`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let row = &self.data[i * n..i * n + i];
            let s: f64 = row.iter().zip(&y).map(|(a, v)| a * v).sum();
            y[i] = (b[i] - s) / self.get(i, i);
        }
        y
    }

    pub fn lu(&self) -> Result<Lu> {
        Lu::new(self)
    }

    /// Lower-triangular `L` with `L L^T = self`; fails unless symmetric positive definite.
    pub fn cholesky(&self) -> Result<Matrix> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                if (self.get(i, j) - self.get(j, i)).abs() > 1e-12 * self.get(i, j).abs().max(1.0) {
                    return Err(Error::InvalidParameter("covariance is not symmetric".into()));
                }
                let s: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
                if i == j {
                    let d = self.get(i, i) - s;
                    if !(d > 0.0) {
                        return Err(Error::InvalidParameter("covariance is not positive definite".into()));
                    }
                    l[i * n + i] = d.sqrt();
                } else {
                    l[i * n + j] = (self.get(i, j) - s) / l[j * n + j];
                }
            }
        }
        Ok(Matrix { n, data: l })
    }
}

/// `P A = L U` factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    log_abs_det: f64,
}

impl Lu {
    fn new(a: &Matrix) -> Result<Self> {
        let n = a.n;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = lu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| lu[i * n + k].abs().total_cmp(&lu[j * n + k].abs()))
                .expect("non-empty range");
            if lu[p * n + k].abs() <= 1e-14 * scale {
                return Err(Error::InvalidParameter("matrix is singular".into()));
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let factor = lu[i * n + k] / pivot;
                lu[i * n + k] = factor;
                for j in k + 1..n {
                    lu[i * n + j] -= factor * lu[k * n + j];
                }
            }
        }
        let log_abs_det = (0..n).map(|i| lu[i * n + i].abs().ln()).sum();
        Ok(Self { n, lu, perm, log_abs_det })
    }

    pub fn log_abs_det(&self) -> f64 {
        self.log_abs_det
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reproduces_covariance() {
        let c = Matrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 1.25]]).unwrap();
        let l = c.cholesky().unwrap();
        assert_eq!(l.rows(), vec![vec![2.0, 0.0], vec![1.0, 0.5]]);
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap().cholesky().is_err());
    }

    #[test]
    fn solve_and_determinant() {
        let a = Matrix::from_rows(&[vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]]).unwrap();
        let lu = a.lu().unwrap();
        // det = 0*(1) - 2*(1 - 0) + 1*(0 - 3) = -5
        assert!((lu.log_abs_det() - 5f64.ln()).abs() < 1e-14);
        let x = vec![1.0, -2.0, 0.5];
        let b = a.mul_vec(&x);
        let back = lu.solve(&b);
        for (u, v) in back.iter().zip(&x) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_is_rejected() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(a.lu().is_err());
    }

    #[test]
    fn lower_solve() {
        let l = Matrix::from_rows(&[vec![2.0, 0.0], vec![1.0, 4.0]]).unwrap();
        assert!(l.is_lower_triangular());
        let y = l.solve_lower(&[2.0, 9.0]);
        assert_eq!(y, vec![1.0, 2.0]);
    }
}
