//! Linearized operators at a steady state.
//!
//! `M` is the Jacobi operator of the shooting problem on `[0, 1]`,
//! `M h = -h'' + L^2 (3 v^2 - 1) h` with `h(0) = 0`, `h'(1) = 0`. Its kernel
//! is nontrivial exactly where `df/dz` vanishes.
//!
//! The fourth-order linearization `h -> lap(-lap h + W''(u + c0) h) - beta h_x`
//! is discretized on nodes `1..n-1` as `-A (A + diag W'') - beta D`, with
//! `A = -lap` under `h(0) = 0` and the reflection closure at `L`. The inner
//! factor `m = (A + diag W'') h` carries `m(0) = 0`, `m_x(L) = 0`, so this is
//! the Schur complement of the mixed `(h, m)` system. With this sign
//! convention stable directions have negative real part; for constant
//! `W'' = c` the eigenvalues are `-k (k + c)` over the eigenvalues `k` of `A`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::{
    eigenpair_residual, eigenvalues as dense_eigenvalues, smallest_singular_value_banded, BandedMatrix, Matrix,
};
use crate::model;
use crate::scalar::Real;
use crate::shoot::{self, SteadyState};

/// Largest dense eigenproblem accepted.
pub const MAX_DENSE: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Operator {
    M,
    L4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult<T> {
    pub operator: Operator,
    pub beta: T,
    /// Grid nodes of the discretization (the matrix has `n - 1` rows).
    pub n: usize,
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<Complex<T>>,
    pub min_abs: T,
    pub min_abs_real_part: T,
    pub max_abs_real_part: T,
    pub max_abs_imag: T,
    /// Largest `||A v - lambda v|| / (||v|| ||A||_F)` over five spot-checked
    /// pairs.
    pub max_residual: T,
}

impl<T: Real> SpectrumResult<T> {
    /// `max |Im| / max |Re|`.
    pub fn imag_ratio(&self) -> T {
        if self.max_abs_real_part > T::zero() {
            self.max_abs_imag / self.max_abs_real_part
        } else {
            self.max_abs_imag
        }
    }
}

/// Tridiagonal `M` on nodes `1..n-1` of `[0, 1]` from the rescaled profile
/// `v` (`v[i]` at `y = i/(n-1)`). The reflection row at `y = 1` is
/// symmetrized by the diagonal similarity `diag(1, .., 1, 1/sqrt 2)`, so the
/// singular values are the moduli of the eigenvalues.
pub fn assemble_m_banded<T: Real>(v: &[T], length: T) -> Result<BandedMatrix<T>> {
    let n = v.len();
    if n < 5 {
        return Err(Error::GridTooCoarse { n, min: 5 });
    }
    let h = (T::count(n - 1)).recip();
    let ih2 = (h * h).recip();
    let l2 = length * length;
    let root2 = T::lit(2.0).sqrt();
    let m = n - 1;
    let mut a = BandedMatrix::zeros(m, 1, 1);
    for k in 0..m {
        let i = k + 1;
        a.set(k, k, T::lit(2.0) * ih2 + l2 * model::double_well_curvature(v[i]));
        if k > 0 {
            a.set(k, k - 1, if i == n - 1 { -root2 * ih2 } else { -ih2 });
        }
        if k + 1 < m {
            a.set(k, k + 1, if i + 1 == n - 1 { -root2 * ih2 } else { -ih2 });
        }
    }
    Ok(a)
}

/// Dense `M` at a steady state, on the grid of the stored profile.
pub fn assemble_m<T: Real>(ss: &SteadyState<T>) -> Result<Matrix<T>> {
    Ok(assemble_m_banded(&ss.rescaled_profile(), ss.params.length)?.to_dense())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions<T> {
    /// Nodes of the grid on which `M` is assembled. Shooting states are
    /// re-integrated on this grid.
    pub n: usize,
    pub tol: T,
    pub tol_kernel: T,
    pub tol_degenerate: T,
}

impl<T: Real> Default for KernelOptions<T> {
    fn default() -> Self {
        Self {
            n: 4097,
            tol: T::lit(1e-12),
            tol_kernel: T::lit(1e-3),
            tol_degenerate: T::lit(1e-6),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelIndicator<T> {
    pub sigma_min: T,
    /// `df/dz` of the shooting map at the state.
    pub dzf: T,
    /// Both indicators agree on (non)degeneracy.
    pub consistent: bool,
}

/// Smallest singular value of `M` together with the shooting derivative.
pub fn kernel_indicator<T: Real>(ss: &SteadyState<T>, opts: &KernelOptions<T>) -> Result<KernelIndicator<T>> {
    let p = &ss.params;
    if p.beta != T::zero() {
        return Err(Error::BetaNonzero(p.beta.as_f64()));
    }
    let sol = shoot::integrate_ivp(p, ss.z, opts.tol, opts.n)?;
    let m = assemble_m_banded(sol.v.values(), p.length)?;
    let sigma_min = smallest_singular_value_banded(&m);
    let dzf = sol.dzf;
    let kernel = sigma_min < opts.tol_kernel;
    let degenerate = dzf.abs() < opts.tol_degenerate;
    Ok(KernelIndicator {
        sigma_min,
        dzf,
        consistent: kernel == degenerate,
    })
}

/// Dense fourth-order linearization at `ss` with advection `beta`, on the
/// grid of the stored profile.
pub fn assemble_l4<T: Real>(ss: &SteadyState<T>, beta: T) -> Result<Matrix<T>> {
    let grid = *ss.u.grid();
    let curv: Vec<T> =
        ss.u.values()
            .iter()
            .map(|&u| model::double_well_curvature(u + ss.params.c0))
            .collect();
    assemble_l4_from(&grid, &curv, beta)
}

/// `-A (A + diag(curv)) - beta D` on nodes `1..n-1` of `grid`; `curv[i]` is
/// `W''` at node `i`.
pub fn assemble_l4_from<T: Real>(grid: &Grid<T>, curv: &[T], beta: T) -> Result<Matrix<T>> {
    let n = grid.len();
    if n < 5 {
        return Err(Error::GridTooCoarse { n, min: 5 });
    }
    if curv.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: curv.len(),
        });
    }
    if n - 1 > MAX_DENSE {
        return Err(Error::InvalidParams(format!(
            "dense eigenproblem of size {} exceeds {MAX_DENSE}",
            n - 1
        )));
    }
    let m = n - 1;
    let h = grid.spacing();
    let ih2 = (h * h).recip();
    let two = T::lit(2.0);
    // A = -lap on nodes 1..n-1 (index k = node - 1)
    let a = Matrix::from_fn(m, m, |r, c| {
        let i = r + 1;
        if r == c {
            two * ih2
        } else if c + 1 == r {
            if i == n - 1 {
                -two * ih2
            } else {
                -ih2
            }
        } else if c == r + 1 {
            -ih2
        } else {
            T::zero()
        }
    });
    let mut inner = a.clone();
    for k in 0..m {
        inner[(k, k)] += curv[k + 1];
    }
    let mut op = a.matmul(&inner);
    let adv = beta / (two * h);
    for k in 0..m {
        for j in 0..m {
            op[(k, j)] = -op[(k, j)];
        }
        let i = k + 1;
        if i < n - 1 {
            op[(k, k + 1)] -= adv;
            if k > 0 {
                op[(k, k - 1)] += adv;
            }
        }
    }
    Ok(op)
}

/// Full spectrum with summary statistics and spot-checked residuals.
pub fn eigenvalues<T: Real>(a: &Matrix<T>, operator: Operator, beta: T) -> Result<SpectrumResult<T>> {
    if !a.is_square() || a.rows() > MAX_DENSE {
        return Err(Error::InvalidParams(format!(
            "eigenvalues need a square matrix of size <= {MAX_DENSE}, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let ev = dense_eigenvalues(a)?;
    let k = ev.len();
    let picks: Vec<usize> = if k <= 5 {
        (0..k).collect()
    } else {
        (0..5).map(|j| j * (k - 1) / 4).collect()
    };
    let mut max_residual = T::zero();
    for &j in &picks {
        max_residual = max_residual.max(eigenpair_residual(a, ev[j])?);
    }
    let fold = |f: fn(&Complex<T>) -> T, init: T, pick: fn(T, T) -> T| ev.iter().map(f).fold(init, pick);
    Ok(SpectrumResult {
        operator,
        beta,
        n: a.rows() + 1,
        min_abs: fold(|c| c.norm(), T::infinity(), T::min),
        min_abs_real_part: fold(|c| c.re.abs(), T::infinity(), T::min),
        max_abs_real_part: fold(|c| c.re.abs(), T::zero(), T::max),
        max_abs_imag: fold(|c| c.im.abs(), T::zero(), T::max),
        eigenvalues: ev,
        max_residual,
    })
}

/// Spectrum of `M` at a steady state.
pub fn spectrum_m<T: Real>(ss: &SteadyState<T>) -> Result<SpectrumResult<T>> {
    eigenvalues(&assemble_m(ss)?, Operator::M, T::zero())
}

/// Spectrum of the fourth-order linearization at a steady state.
pub fn spectrum_l4<T: Real>(ss: &SteadyState<T>, beta: T) -> Result<SpectrumResult<T>> {
    eigenvalues(&assemble_l4(ss, beta)?, Operator::L4, beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGap<T> {
    /// Smallest `|Re lambda|`.
    pub delta: T,
    pub hyperbolic: bool,
}

/// Distance of the fourth-order spectrum from the imaginary axis.
pub fn spectral_gap<T: Real>(ss: &SteadyState<T>, beta: T, tol_gap: T) -> Result<SpectralGap<T>> {
    let s = spectrum_l4(ss, beta)?;
    Ok(SpectralGap {
        delta: s.min_abs_real_part,
        hyperbolic: s.min_abs_real_part > tol_gap,
    })
}

/// Default `tol_gap`.
pub fn default_tol_gap<T: Real>() -> T {
    T::lit(1e-4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Field;
    use crate::model::ModelParams;

    fn flat_state(n: usize, l: f64) -> SteadyState<f64> {
        let p = ModelParams::<f64>::new(l, 0.0).with_nu(0.0);
        let g = Grid::new(n, 0.0, l).unwrap();
        SteadyState {
            params: p,
            z: 0.0,
            u: Field::zeros(g),
            ux: Field::zeros(g),
            mu_residual: 0.0,
            f: Some(0.0),
            dzf: Some(1.0),
            nondegenerate: true,
            index: 0,
        }
    }

    /// Eigenvalues of -lap on nodes 1..N with h(0) = 0 and reflection at N.
    fn dn_laplacian_eigs(nn: usize, h: f64) -> Vec<f64> {
        (1..=nn)
            .map(|j| {
                let th = (2 * j - 1) as f64 * std::f64::consts::PI / (4 * nn) as f64;
                4.0 / (h * h) * th.sin().powi(2)
            })
            .collect()
    }

    #[test]
    fn m_lowest_eigenvalue_for_flat_profile() {
        let s = spectrum_m(&flat_state(129, 1.0)).unwrap();
        let exact = std::f64::consts::FRAC_PI_2.powi(2) - 1.0;
        assert!((s.eigenvalues[0].re - exact).abs() < 1e-3);
        assert_eq!(s.max_abs_imag, 0.0);
    }

    #[test]
    fn m_is_symmetric() {
        let a = assemble_m(&flat_state(33, 1.0)).unwrap();
        let m = a.rows();
        for i in 0..m {
            for j in 0..m {
                assert!((a[(i, j)] - a[(j, i)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn l4_constant_curvature_product_structure() {
        let n = 33;
        let g = Grid::<f64>::new(n, 0.0, 2.0).unwrap();
        let c = 0.7;
        let a = assemble_l4_from(&g, &vec![c; n], 0.0).unwrap();
        let s = eigenvalues(&a, Operator::L4, 0.0).unwrap();
        let mut expect: Vec<f64> = dn_laplacian_eigs(n - 1, g.spacing())
            .into_iter()
            .map(|k| -k * (k + c))
            .collect();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (l, e) in s.eigenvalues.iter().zip(&expect) {
            assert!((l.re - e).abs() < 1e-9 * e.abs().max(1.0), "{l} vs {e}");
            assert!(l.im.abs() < 1e-9 * e.abs().max(1.0));
        }
    }

    #[test]
    fn beta_moves_eigenvalues_linearly() {
        let ss = flat_state(33, 1.0);
        let s0 = spectrum_l4(&ss, 0.0).unwrap();
        let shift = |b: f64| {
            let s = spectrum_l4(&ss, b).unwrap();
            s.eigenvalues[s.eigenvalues.len() - 3..]
                .iter()
                .zip(&s0.eigenvalues[s0.eigenvalues.len() - 3..])
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max)
        };
        let (r1, r2) = (shift(1e-2) / 1e-2, shift(5e-3) / 5e-3);
        assert!(r1.is_finite() && r2.is_finite());
        assert!(r1 < 10.0 * r2.max(1e-12) + 1e-6);
    }

    #[test]
    fn kernel_indicator_on_flat_state() {
        let ki = kernel_indicator(&flat_state(9, 1.0), &KernelOptions::default()).unwrap();
        let exact = std::f64::consts::FRAC_PI_2.powi(2) - 1.0;
        assert!((ki.sigma_min - exact).abs() < 1e-5, "{}", ki.sigma_min - exact);
        assert!((ki.dzf - 1.0f64.cos()).abs() < 1e-9);
        assert!(ki.consistent);
    }
}
