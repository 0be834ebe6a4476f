//! Banded linear solver (LU with partial pivoting, LAPACK-style band
//! storage).
//!
//! The truncated two-dimensional chain maps to a matrix whose nonzeros
//! stay within `kl` sub- and `ku` super-diagonals, so an `O(n kl ku)`
//! factorization replaces a general sparse solve.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BandError {
    #[error("singular matrix: zero pivot at column {0}")]
    Singular(usize),
    #[error("dimension mismatch: matrix {n} rows, rhs {rhs}")]
    DimensionMismatch { n: usize, rhs: usize },
    #[error("entry ({i}, {j}) outside band kl={kl}, ku={ku}")]
    OutOfBand { i: usize, j: usize, kl: usize, ku: usize },
}

/// Square banded matrix with `kl` sub-diagonals and `ku` super-diagonals.
///
/// Storage reserves `kl` extra super-diagonals for pivoting fill-in, as in
/// LAPACK's `gbtrf`: row index `r` of column `j` lives at band offset
/// `kl + ku + r - j`.
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// column-major: data[j * ldab + off]
    data: Vec<f64>,
    ldab: usize,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, data: vec![0.0; n * ldab], ldab }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        j * self.ldab + (self.kl + self.ku + i) - j
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) -> Result<(), BandError> {
        if i >= self.n || j >= self.n || i + self.ku < j || j + self.kl < i {
            return Err(BandError::OutOfBand { i, j, kl: self.kl, ku: self.ku });
        }
        let off = self.offset(i, j);
        self.data[off] = value;
        Ok(())
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) -> Result<(), BandError> {
        if i >= self.n || j >= self.n || i + self.ku < j || j + self.kl < i {
            return Err(BandError::OutOfBand { i, j, kl: self.kl, ku: self.ku });
        }
        let off = self.offset(i, j);
        self.data[off] += value;
        Ok(())
    }

    /// Solves `A x = b` in place, destroying the factor storage.
    ///
    /// Row-oriented Gaussian elimination with partial pivoting; pivoting
    /// widens the effective upper bandwidth to `kl + ku`.
    pub fn solve(mut self, b: &[f64]) -> Result<Vec<f64>, BandError> {
        let n = self.n;
        if b.len() != n {
            return Err(BandError::DimensionMismatch { n, rhs: b.len() });
        }
        let kl = self.kl;
        let ku = self.ku;
        let mut x = b.to_vec();
        for col in 0..n {
            // pivot search within the kl rows below the diagonal
            let last_row = (col + kl).min(n - 1);
            let mut piv = col;
            let mut piv_abs = self.data[self.offset(col, col)].abs();
            for r in col + 1..=last_row {
                let v = self.data[self.offset(r, col)].abs();
                if v > piv_abs {
                    piv_abs = v;
                    piv = r;
                }
            }
            if piv_abs == 0.0 {
                return Err(BandError::Singular(col));
            }
            if piv != col {
                // swap rows col and piv across the reachable columns
                let last_col = (col + kl + ku).min(n - 1);
                for j in col..=last_col {
                    let a = self.offset(col, j);
                    let b_ = self.offset(piv, j);
                    self.data.swap(a, b_);
                }
                x.swap(col, piv);
            }
            let pivot = self.data[self.offset(col, col)];
            let last_col = (col + kl + ku).min(n - 1);
            for r in col + 1..=last_row {
                let factor = self.data[self.offset(r, col)] / pivot;
                if factor == 0.0 {
                    continue;
                }
                let rc = self.offset(r, col);
                self.data[rc] = 0.0;
                for j in col + 1..=last_col {
                    let src = self.data[self.offset(col, j)];
                    if src != 0.0 {
                        let dst = self.offset(r, j);
                        self.data[dst] -= factor * src;
                    }
                }
                x[r] -= factor * x[col];
            }
        }
        // back substitution
        for col in (0..n).rev() {
            let pivot = self.data[self.offset(col, col)];
            let mut acc = x[col];
            let last_col = (col + kl + ku).min(n - 1);
            for j in col + 1..=last_col {
                acc -= self.data[self.offset(col, j)] * x[j];
            }
            x[col] = acc / pivot;
        }
        Ok(x)
    }
}
