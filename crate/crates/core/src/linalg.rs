//! Small dense linear algebra for the KKT and susceptance systems.

use crate::scalar::Scalar;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.n + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.n + c] = v;
    }

    pub fn add(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.n + c] = self.data[r * self.n + c] + v;
    }

    /// Solves `self * x = rhs` by Gaussian elimination with partial pivoting.
    ///
    /// Returns `None` when a pivot falls below `pivot_tol` times the largest
    /// absolute entry of the matrix.
    pub fn solve(&self, rhs: &[T], pivot_tol: T) -> Option<Vec<T>> {
        let n = self.n;
        assert_eq!(rhs.len(), n);
        let mut a = self.data.clone();
        let mut b = rhs.to_vec();
        let scale = a.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        if scale == T::zero() {
            return if n == 0 { Some(Vec::new()) } else { None };
        }
        let threshold = pivot_tol * scale;

        for col in 0..n {
            let (piv, piv_abs) = (col..n)
                .map(|r| (r, a[r * n + col].abs()))
                .fold((col, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if piv_abs <= threshold {
                return None;
            }
            if piv != col {
                for c in 0..n {
                    a.swap(col * n + c, piv * n + c);
                }
                b.swap(col, piv);
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                if f == T::zero() {
                    continue;
                }
                for c in col..n {
                    a[r * n + c] = a[r * n + c] - f * a[col * n + c];
                }
                b[r] = b[r] - f * b[col];
            }
        }

        let mut x = vec![T::zero(); n];
        for r in (0..n).rev() {
            let mut acc = b[r];
            for c in r + 1..n {
                acc = acc - a[r * n + c] * x[c];
            }
            x[r] = acc / a[r * n + r];
        }
        Some(x)
    }

    /// Inverse via column-by-column solves.
    pub fn inverse(&self, pivot_tol: T) -> Option<Self> {
        let n = self.n;
        let mut inv = Self::zeros(n);
        let mut e = vec![T::zero(); n];
        for c in 0..n {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[c] = T::one();
            let col = self.solve(&e, pivot_tol)?;
            for (r, v) in col.into_iter().enumerate() {
                inv.set(r, c, v);
            }
        }
        Some(inv)
    }
}
