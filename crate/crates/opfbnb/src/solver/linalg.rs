//! Minimal dense linear algebra: row-major matrices with an LU factorization
//! (partial pivoting) that solves both A x = b and A^T y = c. Problem sizes
//! here stay in the hundreds of rows, so dense is the simple, deterministic
//! choice.

#[derive(Debug, Clone)]
pub struct DenseMat {
    pub n_rows: usize,
    pub n_cols: usize,
    pub data: Vec<f64>,
}

impl DenseMat {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        DenseMat {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n_cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.n_cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n_cols..(r + 1) * self.n_cols]
    }
}

/// LU factors of a square matrix with row partial pivoting: P A = L U.
pub struct LuFactors {
    n: usize,
    /// Combined L (strict lower, unit diagonal implied) and U.
    lu: Vec<f64>,
    /// Row permutation: piv[k] is the original row moved to position k.
    piv: Vec<usize>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("matrix is singular at pivot {0}")]
pub struct Singular(pub usize);

pub fn lu_factor(a: &DenseMat) -> Result<LuFactors, Singular> {
    assert_eq!(a.n_rows, a.n_cols);
    let n = a.n_rows;
    let mut lu = a.data.clone();
    let mut piv: Vec<usize> = (0..n).collect();
    for k in 0..n {
        // pick pivot row
        let mut p = k;
        let mut best = lu[k * n + k].abs();
        for r in k + 1..n {
            let v = lu[r * n + k].abs();
            if v > best {
                best = v;
                p = r;
            }
        }
        if best < 1e-13 {
            return Err(Singular(k));
        }
        if p != k {
            piv.swap(k, p);
            for c in 0..n {
                lu.swap(k * n + c, p * n + c);
            }
        }
        let pivot = lu[k * n + k];
        for r in k + 1..n {
            let factor = lu[r * n + k] / pivot;
            lu[r * n + k] = factor;
            if factor != 0.0 {
                for c in k + 1..n {
                    lu[r * n + c] -= factor * lu[k * n + c];
                }
            }
        }
    }
    Ok(LuFactors { n, lu, piv })
}

impl LuFactors {
    /// Solves A x = b in place (b becomes x).
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        let mut y = vec![0.0; n];
        for k in 0..n {
            y[k] = b[self.piv[k]];
        }
        // forward: L z = P b
        for k in 0..n {
            let zk = y[k];
            if zk != 0.0 {
                for r in k + 1..n {
                    y[r] -= self.lu[r * n + k] * zk;
                }
            }
        }
        // backward: U x = z
        for k in (0..n).rev() {
            let mut s = y[k];
            for c in k + 1..n {
                s -= self.lu[k * n + c] * y[c];
            }
            y[k] = s / self.lu[k * n + k];
        }
        b.copy_from_slice(&y);
    }

    /// Solves A^T y = c in place (c becomes y).
    pub fn solve_transpose(&self, c: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(c.len(), n);
        // A^T = U^T L^T P, so solve U^T z = c, L^T w = z, then y = P^T w.
        // forward: U^T z = c
        for k in 0..n {
            let mut s = c[k];
            for r in 0..k {
                s -= self.lu[r * n + k] * c[r];
            }
            c[k] = s / self.lu[k * n + k];
        }
        // backward: L^T w = z
        for k in (0..n).rev() {
            let mut s = c[k];
            for r in k + 1..n {
                s -= self.lu[r * n + k] * c[r];
            }
            c[k] = s;
        }
        // undo permutation
        let mut y = vec![0.0; n];
        for k in 0..n {
            y[self.piv[k]] = c[k];
        }
        c.copy_from_slice(&y);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> DenseMat {
        let n_rows = rows.len();
        let n_cols = rows[0].len();
        let mut m = DenseMat::zeros(n_rows, n_cols);
        for (r, row) in rows.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                *m.at_mut(r, c) = *v;
            }
        }
        m
    }

    #[test]
    fn solves_small_system_both_ways() {
        let a = mat(&[&[2.0, 1.0, 1.0], &[4.0, -6.0, 0.0], &[-2.0, 7.0, 2.0]]);
        let lu = lu_factor(&a).unwrap();

        let mut b = vec![5.0, -2.0, 9.0];
        lu.solve(&mut b);
        // check A x = b
        let bx = [
            2.0 * b[0] + b[1] + b[2],
            4.0 * b[0] - 6.0 * b[1],
            -2.0 * b[0] + 7.0 * b[1] + 2.0 * b[2],
        ];
        for (lhs, rhs) in bx.iter().zip([5.0, -2.0, 9.0]) {
            assert!((lhs - rhs).abs() < 1e-12);
        }

        let mut c = vec![1.0, 2.0, 3.0];
        lu.solve_transpose(&mut c);
        let cx = [
            2.0 * c[0] + 4.0 * c[1] - 2.0 * c[2],
            c[0] - 6.0 * c[1] + 7.0 * c[2],
            c[0] + 2.0 * c[2],
        ];
        for (lhs, rhs) in cx.iter().zip([1.0, 2.0, 3.0]) {
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn reports_singularity() {
        let a = mat(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(lu_factor(&a).is_err());
    }
}
