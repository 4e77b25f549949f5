//! Uniform grids, sampled fields and the discrete operators shared by the
//! steady solver, the spectral assembly and the time stepper.
//!
//! The discrete Laplacian used throughout closes the right end with the
//! reflection `v[n] = v[n-2]`, which encodes a homogeneous Neumann condition
//! at `b`. Together with the trapezoid weights it is self-adjoint:
//! `sum_i w_i a_i (lap b)_i = -sum_cells (a_{i+1}-a_i)(b_{i+1}-b_i)/h`
//! whenever `a[0] = 0` or `b[0] = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    n: usize,
    a: T,
    b: T,
    h: T,
}

impl<T: Real> Grid<T> {
    pub fn new(n: usize, a: T, b: T) -> Result<Self> {
        if n < 3 {
            return Err(Error::GridTooCoarse { n, min: 3 });
        }
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParams(format!(
                "grid interval [{a}, {b}] is empty or not finite"
            )));
        }
        let h = (b - a) / T::count(n - 1);
        Ok(Self { n, a, b, h })
    }

    /// Uniform grid on `[0, 1]`.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(n, T::zero(), T::one())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn start(&self) -> T {
        self.a
    }

    #[inline]
    pub fn end(&self) -> T {
        self.b
    }

    #[inline]
    pub fn spacing(&self) -> T {
        self.h
    }

    /// Node `i`; the last node is returned exactly as `b`.
    #[inline]
    pub fn x(&self, i: usize) -> T {
        if i + 1 == self.n {
            self.b
        } else {
            self.a + T::count(i) * self.h
        }
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Trapezoid weight of node `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> T {
        if i == 0 || i + 1 == self.n {
            self.h * T::lit(0.5)
        } else {
            self.h
        }
    }

    /// Trapezoid rule.
    pub fn integrate(&self, v: &[T]) -> T {
        debug_assert_eq!(v.len(), self.n);
        v.iter().enumerate().map(|(i, &x)| self.weight(i) * x).sum()
    }

    /// Trapezoid inner product.
    pub fn dot(&self, a: &[T], b: &[T]) -> T {
        debug_assert_eq!(a.len(), self.n);
        debug_assert_eq!(b.len(), self.n);
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(i, (&x, &y))| self.weight(i) * x * y)
            .sum()
    }

    pub fn l2_norm(&self, v: &[T]) -> T {
        self.dot(v, v).sqrt()
    }

    /// `sum_cells h ((v_{i+1} - v_i)/h)^2`, the exact `int v_x^2` of the
    /// piecewise-linear interpolant.
    pub fn gradient_energy(&self, v: &[T]) -> T {
        v.windows(2)
            .map(|w| {
                let d = w[1] - w[0];
                d * d
            })
            .sum::<T>()
            / self.h
    }

    /// Forward differences `(v_{i+1} - v_i)/h`, one per cell.
    pub fn forward_diff(&self, v: &[T]) -> Vec<T> {
        v.windows(2).map(|w| (w[1] - w[0]) / self.h).collect()
    }

    /// Discrete Laplacian with the reflection closure at the right end.
    /// Entry 0 is left at zero; the left boundary value is an input only.
    pub fn laplacian(&self, v: &[T]) -> Vec<T> {
        let n = self.n;
        let h2 = self.h * self.h;
        let two = T::lit(2.0);
        let mut out = vec![T::zero(); n];
        for i in 1..n - 1 {
            out[i] = (v[i + 1] - two * v[i] + v[i - 1]) / h2;
        }
        out[n - 1] = two * (v[n - 2] - v[n - 1]) / h2;
        out
    }

    /// First derivative: one-sided second order at the left end, central in
    /// the interior, and zero at the right end (reflection closure).
    pub fn derivative(&self, v: &[T]) -> Vec<T> {
        let n = self.n;
        let two_h = T::lit(2.0) * self.h;
        let mut out = vec![T::zero(); n];
        out[0] = (T::lit(-3.0) * v[0] + T::lit(4.0) * v[1] - v[2]) / two_h;
        for i in 1..n - 1 {
            out[i] = (v[i + 1] - v[i - 1]) / two_h;
        }
        out
    }

    /// One-sided second-order derivative at the right end,
    /// `(3 v_{n-1} - 4 v_{n-2} + v_{n-3}) / 2h`.
    pub fn right_slope(&self, v: &[T]) -> T {
        let n = self.n;
        (T::lit(3.0) * v[n - 1] - T::lit(4.0) * v[n - 2] + v[n - 3]) / (T::lit(2.0) * self.h)
    }

    /// One-sided second-order derivative at the left end.
    pub fn left_slope(&self, v: &[T]) -> T {
        (T::lit(-3.0) * v[0] + T::lit(4.0) * v[1] - v[2]) / (T::lit(2.0) * self.h)
    }

    /// Discrete `H^m` norm built from repeated forward differences:
    /// `sqrt(sum_{k<=m} ||D^k v||^2)` with trapezoid weights for `k = 0` and
    /// cell weights `h` for the differenced sequences.
    pub fn sobolev_norm(&self, v: &[T], order: usize) -> Result<T> {
        if order + 2 > self.n {
            return Err(Error::OrderTooHigh { order, n: self.n });
        }
        let mut total = self.dot(v, v);
        let mut cur: Vec<T> = v.to_vec();
        for _ in 0..order {
            cur = self.forward_diff(&cur);
            total += cur.iter().map(|&d| d * d).sum::<T>() * self.h;
        }
        Ok(total.sqrt())
    }

    /// Discrete `H^1` distance between two sampled functions.
    pub fn h1_distance(&self, a: &[T], b: &[T]) -> T {
        let d: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x - y).collect();
        (self.dot(&d, &d) + self.gradient_energy(&d)).sqrt()
    }

    /// Solves `-lap(phi) = rhs` with `phi[0] = 0` and the reflection closure
    /// at the right end (the tridiagonal system is SPD in the trapezoid
    /// inner product).
    pub fn solve_poisson(&self, rhs: &[T]) -> Result<Vec<T>> {
        let n = self.n;
        let m = n - 1;
        let h2 = self.h * self.h;
        let two = T::lit(2.0);
        // unknowns phi[1..n]
        let mut sub = vec![T::zero(); m];
        let mut diag = vec![T::zero(); m];
        let mut sup = vec![T::zero(); m];
        let mut r = vec![T::zero(); m];
        for k in 0..m {
            let i = k + 1;
            diag[k] = two / h2;
            if i < n - 1 {
                if k > 0 {
                    sub[k] = -T::one() / h2;
                }
                sup[k] = -T::one() / h2;
            } else {
                sub[k] = -two / h2;
            }
            r[k] = rhs[i];
        }
        let sol = crate::linalg::solve_tridiagonal(&sub, &diag, &sup, &r).map_err(|_| Error::SingularPoissonSolve)?;
        let mut phi = Vec::with_capacity(n);
        phi.push(T::zero());
        phi.extend(sol);
        Ok(phi)
    }
}

/// A real function sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field<T> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Real> Field<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { t: grid.x(i).as_f64() });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid<T>, f: impl Fn(T) -> T) -> Result<Self> {
        let values = grid.nodes().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Grid<T>) -> Self {
        Self {
            grid,
            values: vec![T::zero(); grid.len()],
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Piecewise-linear interpolation at `x` (clamped to the grid interval).
    pub fn interpolate(&self, x: T) -> T {
        let g = &self.grid;
        let s = ((x - g.start()) / g.spacing()).max(T::zero());
        let n = g.len();
        let i = s.floor().to_usize().unwrap_or(0).min(n - 2);
        let t = (s - T::count(i)).min(T::one());
        self.values[i] * (T::one() - t) + self.values[i + 1] * t
    }

    /// Resamples onto another grid by piecewise-linear interpolation.
    pub fn resample(&self, grid: Grid<T>) -> Self {
        let values = grid.nodes().into_iter().map(|x| self.interpolate(x)).collect();
        Self { grid, values }
    }
}
