use crate::error::{Error, Result};
use crate::scalar::Real;

/// Square band matrix with `kl` sub- and `ku` super-diagonals. Storage
/// reserves `kl` extra super-diagonals for the fill produced by row pivoting.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Real> BandedMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![T::zero(); n * width],
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.kl < i || j > i + self.ku + self.kl || i >= self.n || j >= self.n {
            None
        } else {
            Some(i * self.width + j + self.kl - i)
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.slot(i, j).map_or(T::zero(), |s| self.data[s])
    }

    /// Adds `v` to entry `(i, j)`. Panics outside the declared band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i}, {j}) outside band");
        let s = self.slot(i, j).expect("entry inside storage");
        self.data[s] += v;
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i}, {j}) outside band");
        let s = self.slot(i, j).expect("entry inside storage");
        self.data[s] = v;
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> super::Matrix<T> {
        super::Matrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    /// LU factorization with partial pivoting restricted to the band.
    pub fn factor(mut self) -> Result<BandedLu<T>> {
        let n = self.n;
        let kl = self.kl;
        let reach = self.ku + self.kl;
        let scale = self.max_abs();
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut pmax = self.get(k, k).abs();
            for i in k + 1..=last_row {
                let v = self.get(i, k).abs();
                if v > pmax {
                    p = i;
                    pmax = v;
                }
            }
            if !(pmax > T::epsilon() * scale * T::lit(1e-3)) {
                return Err(Error::SingularMatrix("banded LU"));
            }
            pivots[k] = p;
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.slot(k, j).unwrap();
                    let b = self.slot(p, j).unwrap();
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last_row {
                let si = self.slot(i, k).unwrap();
                let f = self.data[si] / pivot;
                self.data[si] = f;
                if f == T::zero() {
                    continue;
                }
                for j in k + 1..=last_col {
                    let u = self.data[self.slot(k, j).unwrap()];
                    let s = self.slot(i, j).unwrap();
                    self.data[s] -= f * u;
                }
            }
        }
        Ok(BandedLu { m: self, pivots })
    }
}

/// Factorized band matrix.
#[derive(Debug, Clone)]
pub struct BandedLu<T> {
    m: BandedMatrix<T>,
    pivots: Vec<usize>,
}

impl<T: Real> BandedLu<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &[T]) -> Vec<T> {
        let m = &self.m;
        let n = m.n;
        let reach = m.ku + m.kl;
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for j in i.saturating_sub(reach)..i {
                s -= m.get(j, i) * x[j];
            }
            x[i] = s / m.get(i, i);
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for i in k + 1..=(k + m.kl).min(n - 1) {
                s -= m.get(i, k) * x[i];
            }
            x[k] = s;
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
        }
        x
    }

    pub fn solve_in_place(&self, x: &mut [T]) {
        let m = &self.m;
        let n = m.n;
        let reach = m.ku + m.kl;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            for i in k + 1..=(k + m.kl).min(n - 1) {
                x[i] -= m.get(i, k) * xk;
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..=(i + reach).min(n - 1) {
                s -= m.get(i, j) * x[j];
            }
            x[i] = s / m.get(i, i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn pentadiagonal(n: usize) -> BandedMatrix<f64> {
        let mut a = BandedMatrix::zeros(n, 3, 2);
        for i in 0..n {
            for j in i.saturating_sub(3)..=(i + 2).min(n - 1) {
                // small diagonal forces pivoting
                let v = if i == j {
                    0.1
                } else {
                    1.0 + (i * 7 + j * 3) as f64 % 5.0
                };
                a.set(i, j, v * if (i + j) % 2 == 0 { 1.0 } else { -1.0 });
            }
        }
        a
    }

    #[test]
    fn banded_lu_matches_dense_solution() {
        let n = 12;
        let a = pentadiagonal(n);
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let b = a.matvec(&x);
        let dense: Matrix<f64> = a.to_dense();
        let xd = dense.lu().unwrap().solve(&b);
        let xb = a.factor().unwrap().solve(&b);
        for i in 0..n {
            assert!((xb[i] - x[i]).abs() < 1e-10, "{} {}", xb[i], x[i]);
            assert!((xd[i] - x[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn banded_transpose_solve() {
        let n = 10;
        let a = pentadiagonal(n);
        let x: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64 * 0.3).cos()).collect();
        let bt = a.to_dense().transpose().matvec(&x);
        let sol = a.factor().unwrap().solve_transpose(&bt);
        for i in 0..n {
            assert!((sol[i] - x[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_band_is_reported() {
        let a = BandedMatrix::<f64>::zeros(4, 1, 1);
        assert!(a.factor().is_err());
    }
}
