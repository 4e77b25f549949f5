use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn lu(&self) -> Result<DenseLu<T>> {
        DenseLu::new(self.clone())
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct DenseLu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Real> DenseLu<T> {
    pub fn new(mut a: Matrix<T>) -> Result<Self> {
        assert!(a.is_square());
        let n = a.rows;
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        for k in 0..n {
            let (p, pmax) =
                (k..n)
                    .map(|i| (i, a[(i, k)].abs()))
                    .fold((k, -T::one()), |best, c| if c.1 > best.1 { c } else { best });
            if pmax <= T::epsilon() * scale * T::lit(1e-3) || !pmax.is_finite() {
                return Err(Error::SingularMatrix("dense LU"));
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / pivot;
                a[(i, k)] = f;
                if f != T::zero() {
                    for j in k + 1..n {
                        let v = a[(k, j)];
                        a[(i, j)] -= f * v;
                    }
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows;
        // A = P^T L U, so A^T = U^T L^T P
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for j in 0..i {
                s -= self.lu[(j, i)] * y[j];
            }
            y[i] = s / self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.lu[(j, i)] * y[j];
            }
            y[i] = s;
        }
        let mut x = vec![T::zero(); n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }
}
