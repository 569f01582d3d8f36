//! Dense real matrices and a cyclic Jacobi eigensolver for symmetric
//! matrices. The spin Hamiltonians handled here are small (20 x 20), where
//! Jacobi rotations are simple and unconditionally convergent.

use crate::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n_cols + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n_cols + j] += v;
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.n_cols, rhs.n_rows);
        let mut out = Matrix::zeros(self.n_rows, rhs.n_cols);
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.n_cols {
                    out.add_to(i, j, a * rhs.get(k, j));
                }
            }
        }
        out
    }

    /// Kronecker product `self (x) rhs`.
    pub fn kron(&self, rhs: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.n_rows * rhs.n_rows, self.n_cols * rhs.n_cols);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                let a = self.get(i, j);
                if a == 0.0 {
                    continue;
                }
                for k in 0..rhs.n_rows {
                    for l in 0..rhs.n_cols {
                        out.set(i * rhs.n_rows + k, j * rhs.n_cols + l, a * rhs.get(k, l));
                    }
                }
            }
        }
        out
    }

    /// `v^T M w` for column vectors.
    pub fn bilinear(&self, v: &[f64], w: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.n_rows);
        debug_assert_eq!(w.len(), self.n_cols);
        let mut acc = 0.0;
        for (i, vi) in v.iter().enumerate() {
            let mut row = 0.0;
            for (j, wj) in w.iter().enumerate() {
                row += self.get(i, j) * wj;
            }
            acc += vi * row;
        }
        acc
    }
}

/// Result of a symmetric eigendecomposition: ascending eigenvalues and the
/// matching orthonormal eigenvectors as matrix columns.
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Matrix,
    pub sweeps: usize,
}

/// Cyclic Jacobi eigensolver for a real symmetric matrix.
///
/// Sweeps plane rotations over all off-diagonal elements until the
/// off-diagonal norm is negligible relative to the matrix scale. Returns
/// eigenvalues sorted ascending with eigenvectors in matching column order.
pub fn jacobi_eigen(matrix: &Matrix) -> Result<EigenDecomposition> {
    let n = matrix.n_rows();
    assert_eq!(n, matrix.n_cols(), "matrix must be square");
    let mut a = matrix.clone();
    let mut v = Matrix::identity(n);
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let tol = 1e-15 * scale * (n as f64);
    const MAX_SWEEPS: usize = 60;

    let mut sweeps = 0;
    loop {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q).abs();
            }
        }
        if off < tol {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err(Error::EigenConvergence { iterations: sweeps });
        }
        sweeps += 1;

        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = 0.5 * (aqq - app) / apq;
                // smaller root of t^2 + 2 t theta - 1 = 0 for stability
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);
                for j in 0..n {
                    if j != p && j != q {
                        let ajp = a.get(j, p);
                        let ajq = a.get(j, q);
                        let np = ajp - s * (ajq + tau * ajp);
                        let nq = ajq + s * (ajp - tau * ajq);
                        a.set(j, p, np);
                        a.set(p, j, np);
                        a.set(j, q, nq);
                        a.set(q, j, nq);
                    }
                }
                for j in 0..n {
                    let vjp = v.get(j, p);
                    let vjq = v.get(j, q);
                    v.set(j, p, vjp - s * (vjq + tau * vjp));
                    v.set(j, q, vjq + s * (vjp - tau * vjq));
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).partial_cmp(&a.get(j, j)).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, col, v.get(row, src));
        }
    }
    Ok(EigenDecomposition {
        values,
        vectors,
        sweeps,
    })
}

/// Solve `A x = b` in place by Gaussian elimination with partial pivoting.
/// `a` is consumed as scratch. Used for the small normal-equation systems
/// in the least-squares fitter.
#[allow(clippy::needless_range_loop)] // triangular index loops
pub fn solve_linear(mut a: Matrix, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = a.n_rows();
    assert_eq!(n, a.n_cols());
    assert_eq!(n, b.len());
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if a.get(row, col).abs() > a.get(pivot, col).abs() {
                pivot = row;
            }
        }
        let pval = a.get(pivot, col);
        if pval.abs() < 1e-300 {
            return Err(Error::SingularJacobian);
        }
        if pivot != col {
            for j in 0..n {
                let tmp = a.get(col, j);
                a.set(col, j, a.get(pivot, j));
                a.set(pivot, j, tmp);
            }
            b.swap(col, pivot);
        }
        for row in (col + 1)..n {
            let factor = a.get(row, col) / a.get(col, col);
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                a.add_to(row, j, -factor * a.get(col, j));
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for j in (row + 1)..n {
            acc -= a.get(row, j) * x[j];
        }
        x[row] = acc / a.get(row, row);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonal_matrix() {
        let mut m = Matrix::zeros(3, 3);
        m.set(0, 0, 3.0);
        m.set(1, 1, 1.0);
        m.set(2, 2, 2.0);
        let e = jacobi_eigen(&m).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn jacobi_known_2x2() {
        // eigenvalues of [[2, 1], [1, 2]] are 1 and 3
        let mut m = Matrix::zeros(2, 2);
        m.set(0, 0, 2.0);
        m.set(0, 1, 1.0);
        m.set(1, 0, 1.0);
        m.set(1, 1, 2.0);
        let e = jacobi_eigen(&m).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
        // eigenvector for eigenvalue 1 is (1, -1)/sqrt(2) up to sign
        let v = e.vectors.column(0);
        assert!((v[0].abs() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((v[0] + v[1]).abs() < 1e-12);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn jacobi_reconstructs() {
        // pseudo-random symmetric 8x8, reconstruction residual check
        let n = 8;
        let mut m = Matrix::zeros(n, n);
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for i in 0..n {
            for j in i..n {
                let v = next();
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        let e = jacobi_eigen(&m).unwrap();
        let scale = m.max_abs();
        for k in 0..n {
            let v = e.vectors.column(k);
            for i in 0..n {
                let mut hv = 0.0;
                for j in 0..n {
                    hv += m.get(i, j) * v[j];
                }
                assert!(
                    (hv - e.values[k] * v[i]).abs() < 1e-12 * scale,
                    "residual too large"
                );
            }
        }
        // ascending order
        for k in 1..n {
            assert!(e.values[k] >= e.values[k - 1]);
        }
    }

    #[test]
    fn linear_solve_roundtrip() {
        let mut a = Matrix::zeros(3, 3);
        let rows = [[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]];
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                a.set(i, j, *v);
            }
        }
        let x_true = [1.0, -2.0, 0.5];
        let mut b = vec![0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                b[i] += rows[i][j] * x_true[j];
            }
        }
        let x = solve_linear(a, b).unwrap();
        for (xi, ti) in x.iter().zip(x_true.iter()) {
            assert!((xi - ti).abs() < 1e-12);
        }
    }
}
