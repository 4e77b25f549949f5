//! Physical model: meniscus profile, double-well potential, chemical
//! potential, energies and the a priori bounds used by the shooting
//! bracket.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::scalar::Real;

/// Parameters of the one-dimensional advective Cahn-Hilliard problem.
///
/// The meniscus center and width default to `L/2` and `L/10`; when they are
/// left at their defaults they follow the domain length, so a family of
/// problems parametrized by `L` keeps the same rescaled meniscus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    /// Domain length `L > 0`.
    pub length: T,
    /// Advection speed `beta >= 0`.
    pub beta: T,
    /// Boundary concentration `c0`.
    pub c0: T,
    /// Meniscus coupling `nu >= 0`.
    pub nu: T,
    /// Meniscus center; `None` means `L/2`.
    pub x_mns: Option<T>,
    /// Meniscus thickness; `None` means `L/10`.
    pub l_mns: Option<T>,
}

impl<T: Real> ModelParams<T> {
    pub fn new(length: T, c0: T) -> Self {
        Self {
            length,
            beta: T::zero(),
            c0,
            nu: T::one(),
            x_mns: None,
            l_mns: None,
        }
    }

    pub fn with_beta(mut self, beta: T) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_nu(mut self, nu: T) -> Self {
        self.nu = nu;
        self
    }

    pub fn with_length(mut self, length: T) -> Self {
        self.length = length;
        self
    }

    pub fn with_meniscus(mut self, center: T, width: T) -> Self {
        self.x_mns = Some(center);
        self.l_mns = Some(width);
        self
    }

    pub fn meniscus_center(&self) -> T {
        self.x_mns.unwrap_or(self.length * T::lit(0.5))
    }

    pub fn meniscus_width(&self) -> T {
        self.l_mns.unwrap_or(self.length * T::lit(0.1))
    }

    /// Checks the parameter invariants. With `strict` the boundary
    /// concentration must lie in `(-1, 0)`.
    pub fn validate(&self, strict: bool) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        let all = [self.length, self.beta, self.c0, self.nu];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("parameters must be finite".into());
        }
        if !(self.length > T::zero()) {
            return bad(format!("L > 0 required, got L = {}", self.length));
        }
        if !(self.meniscus_width() > T::zero()) {
            return bad(format!("l_mns > 0 required, got {}", self.meniscus_width()));
        }
        if !self.meniscus_center().is_finite() {
            return bad("x_mns must be finite".into());
        }
        if self.beta < T::zero() {
            return bad(format!("beta >= 0 required, got {}", self.beta));
        }
        if self.nu < T::zero() {
            return bad(format!("nu >= 0 required, got {}", self.nu));
        }
        if strict && !(self.c0 > -T::one() && self.c0 < T::zero()) {
            return bad(format!("strict mode requires c0 in (-1, 0), got {}", self.c0));
        }
        Ok(())
    }
}

/// Meniscus profile `-(1 + tanh((x - x_mns)/l_mns))/2`.
#[inline]
pub fn meniscus<T: Real>(x: T, p: &ModelParams<T>) -> T {
    -T::lit(0.5) * (T::one() + ((x - p.meniscus_center()) / p.meniscus_width()).tanh())
}

/// Derivative of the meniscus profile in `x`.
#[inline]
pub fn meniscus_slope<T: Real>(x: T, p: &ModelParams<T>) -> T {
    let w = p.meniscus_width();
    let c = ((x - p.meniscus_center()) / w).cosh();
    -T::lit(0.5) / (w * c * c)
}

/// Double well `(s^2 - 1)^2 / 4`.
#[inline]
pub fn double_well<T: Real>(s: T) -> T {
    let a = s * s - T::one();
    T::lit(0.25) * a * a
}

/// `W0''(s) = 3 s^2 - 1`.
#[inline]
pub fn double_well_curvature<T: Real>(s: T) -> T {
    T::lit(3.0) * s * s - T::one()
}

/// `W(x, s) = W0(s) + nu zeta(x) s`.
#[inline]
pub fn potential_w<T: Real>(x: T, s: T, p: &ModelParams<T>) -> T {
    double_well(s) + p.nu * meniscus(x, p) * s
}

/// `dW/ds = s^3 - s + nu zeta(x)`.
#[inline]
pub fn dw_ds<T: Real>(x: T, s: T, p: &ModelParams<T>) -> T {
    s * s * s - s + p.nu * meniscus(x, p)
}

/// `mu = -u_xx + (u + c0)^3 - (u + c0) + nu zeta` with central differences
/// inside and one-sided four-point second-order stencils at both ends.
pub fn chemical_potential<T: Real>(u: &Field<T>, p: &ModelParams<T>) -> Result<Field<T>> {
    let g = *u.grid();
    let n = g.len();
    if n < 5 {
        return Err(Error::GridTooCoarse { n, min: 5 });
    }
    let v = u.values();
    let h2 = g.spacing() * g.spacing();
    let (two, four, five) = (T::lit(2.0), T::lit(4.0), T::lit(5.0));
    let mut uxx = vec![T::zero(); n];
    uxx[0] = (two * v[0] - five * v[1] + four * v[2] - v[3]) / h2;
    for i in 1..n - 1 {
        uxx[i] = (v[i + 1] - two * v[i] + v[i - 1]) / h2;
    }
    uxx[n - 1] = (two * v[n - 1] - five * v[n - 2] + four * v[n - 3] - v[n - 4]) / h2;
    let mu = (0..n).map(|i| -uxx[i] + dw_ds(g.x(i), v[i] + p.c0, p)).collect();
    Field::new(g, mu)
}

/// `int [ u_x^2/2 + W(x, u + c0) ] dx`; the gradient term is integrated
/// exactly for the piecewise-linear interpolant, the potential by the
/// trapezoid rule.
pub fn energy<T: Real>(u: &Field<T>, p: &ModelParams<T>) -> T {
    let g = u.grid();
    let v = u.values();
    let w: Vec<T> = (0..g.len()).map(|i| potential_w(g.x(i), v[i] + p.c0, p)).collect();
    T::lit(0.5) * g.gradient_energy(v) + g.integrate(&w)
}

/// Modified energy `int W0(u + c0) + ||u_x||^2/2 + ||(-lap)^{-1/2} u||^2`,
/// the last term evaluated as `(u, phi)` with `-phi_xx = u`, `phi(0) = 0`,
/// `phi_x(L) = 0`.
pub fn energy_e1<T: Real>(u: &Field<T>, p: &ModelParams<T>) -> Result<T> {
    let g = u.grid();
    let v = u.values();
    let w: Vec<T> = v.iter().map(|&x| double_well(x + p.c0)).collect();
    Ok(g.integrate(&w) + T::lit(0.5) * g.gradient_energy(v) + inverse_laplacian_energy(u)?)
}

/// `(u, (-lap)^{-1} u)` with the mixed Dirichlet/Neumann closure.
pub fn inverse_laplacian_energy<T: Real>(u: &Field<T>) -> Result<T> {
    let g = u.grid();
    let phi = g.solve_poisson(u.values())?;
    Ok(g.dot(u.values(), &phi))
}

/// Bracket `(z_l, z_r)` for the initial slope `u_x(0)` of any steady state:
/// `sqrt(2) z_l = -|c0^2 - 1|`, `sqrt(2) z_r = sqrt(5 - 4 c0 + (c0^2 - 1)^2)`.
pub fn shooting_bounds<T: Real>(c0: T) -> (T, T) {
    let a = c0 * c0 - T::one();
    let s2 = T::SQRT_2();
    let zl = -a.abs() / s2;
    let zr = (T::lit(5.0) - T::lit(4.0) * c0 + a * a).sqrt() / s2;
    (zl, zr)
}

/// Unique real root of `v^3 - v - 1 = 0`.
pub fn v_max<T: Real>() -> T {
    // Cardano gives the starting point; two Newton steps clean up rounding.
    let s = T::lit(69.0).sqrt();
    let nine = T::lit(9.0);
    let eighteen = T::lit(18.0);
    let mut v = ((nine + s) / eighteen).cbrt() + ((nine - s) / eighteen).cbrt();
    for _ in 0..2 {
        let f = v * v * v - v - T::one();
        let df = T::lit(3.0) * v * v - T::one();
        v -= f / df;
    }
    v
}

/// Both sides of `t^4 - 2t^2 - 4t + 6 = (t^2 - 2)^2 + 2(t - 1)^2`.
pub fn sos_identity<T: Real>(t: T) -> (T, T) {
    let t2 = t * t;
    let lhs = t2 * t2 - T::lit(2.0) * t2 - T::lit(4.0) * t + T::lit(6.0);
    let a = t2 - T::lit(2.0);
    let b = t - T::one();
    (lhs, a * a + T::lit(2.0) * b * b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn params() -> ModelParams<f64> {
        ModelParams::<f64>::new(2.0, -0.3)
    }

    #[test]
    fn meniscus_center_and_tails() {
        let p = params();
        assert_eq!(meniscus(p.meniscus_center(), &p), -0.5);
        assert!((meniscus(1e3, &p) + 1.0).abs() < 1e-15);
        assert!(meniscus(-1e3, &p).abs() < 1e-15);
    }

    #[test]
    fn meniscus_slope_matches_difference_quotient() {
        let p = params();
        for &x in &[0.1, 0.9, 1.0, 1.3] {
            let d = 1e-6;
            let fd = (meniscus(x + d, &p) - meniscus(x - d, &p)) / (2.0 * d);
            assert!((fd - meniscus_slope(x, &p)).abs() < 1e-7);
        }
    }

    #[test]
    fn potential_values() {
        let p0 = params().with_nu(0.0);
        assert_eq!(potential_w(0.3, 1.0, &p0), 0.0);
        assert_eq!(potential_w(0.3, 0.0, &p0), 0.25);
        let p1 = params();
        let xm = p1.meniscus_center();
        assert!((potential_w(xm, 1.0, &p1) + 0.5).abs() < 1e-15);
        for s in [-1.0, 0.0, 1.0] {
            assert_eq!(dw_ds(0.7, s, &p0), 0.0);
        }
        assert!((dw_ds(xm, 0.0, &p1) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn dw_ds_is_derivative_of_potential() {
        let p = params();
        let (x, s, d) = (0.8, 0.37, 1e-5);
        let fd = (potential_w(x, s + d, &p) - potential_w(x, s - d, &p)) / (2.0 * d);
        let exact = dw_ds(x, s, &p);
        assert!(((fd - exact) / exact).abs() < 1e-8);
    }

    #[test]
    fn chemical_potential_of_zero_field() {
        let g = Grid::<f64>::new(17, 0.0, 2.0).unwrap();
        let p = params();
        let mu = chemical_potential(&Field::zeros(g), &p).unwrap();
        for (i, m) in mu.values().iter().enumerate() {
            let x = g.x(i);
            let expect = p.c0.powi(3) - p.c0 + meniscus(x, &p);
            assert!((m - expect).abs() < 1e-14);
        }
        let p00 = ModelParams::<f64>::new(2.0, 0.0).with_nu(0.0);
        let mu0 = chemical_potential(&Field::zeros(g), &p00).unwrap();
        assert!(mu0.values().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn central_stencil_is_exact_on_quadratics() {
        let g = Grid::<f64>::new(21, 0.0, 1.0).unwrap();
        let p = ModelParams::<f64>::new(1.0, 0.0).with_nu(0.0);
        let u = Field::from_fn(g, |x| x * x).unwrap();
        let mu = chemical_potential(&u, &p).unwrap();
        for i in 0..21 {
            let s = u.values()[i];
            let uxx_part = mu.values()[i] - (s * s * s - s);
            assert!((uxx_part + 2.0).abs() < 1e-9, "node {i}: {uxx_part}");
        }
    }

    #[test]
    fn chemical_potential_needs_five_nodes() {
        let g = Grid::<f64>::new(4, 0.0, 1.0).unwrap();
        assert!(matches!(
            chemical_potential(&Field::zeros(g), &params()),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn energy_of_zero_field() {
        let g = Grid::<f64>::new(33, 0.0, 2.0).unwrap();
        let p00 = ModelParams::<f64>::new(2.0, 0.0).with_nu(0.0);
        assert!((energy(&Field::zeros(g), &p00) - 0.5).abs() < 1e-14);
        let p = params();
        let zeta: Vec<f64> = g.nodes().iter().map(|&x| meniscus(x, &p)).collect();
        let expect = 2.0 * double_well(p.c0) + p.nu * p.c0 * g.integrate(&zeta);
        assert!((energy(&Field::zeros(g), &p) - expect).abs() < 1e-14);
        let e1 = energy_e1(&Field::zeros(g), &p).unwrap();
        assert!((e1 - 2.0 * double_well(p.c0)).abs() < 1e-14);
    }

    #[test]
    fn inverse_laplacian_eigenfunction() {
        let l = 1.5;
        let g = Grid::<f64>::new(2049, 0.0, l).unwrap();
        let k = std::f64::consts::PI / (2.0 * l);
        let u = Field::from_fn(g, |x| (k * x).sin()).unwrap();
        let got = inverse_laplacian_energy(&u).unwrap();
        let norm2 = g.dot(u.values(), u.values());
        let expect = norm2 / (k * k);
        assert!(((got - expect) / expect).abs() < 1e-6, "{got} vs {expect}");
    }

    #[test]
    fn shooting_bounds_values() {
        let (zl, zr) = shooting_bounds::<f64>(1.0);
        assert_eq!(zl, 0.0);
        assert!(zr > 0.0);
        assert_eq!(shooting_bounds::<f64>(-1.0).0, 0.0);
        let (zl, zr) = shooting_bounds::<f64>(0.0);
        assert!((zl + 0.707_106_781_186_547_5).abs() < 1e-12);
        assert!((zr - 3f64.sqrt()).abs() < 1e-12);
        let (zl, zr) = shooting_bounds::<f64>(-0.9);
        assert!((zl + 0.13435).abs() < 1e-5);
        assert!((zr - 2.077_991_819).abs() < 1e-8);
    }

    #[test]
    fn v_max_root() {
        let v: f64 = v_max();
        assert!((v * v * v - v - 1.0).abs() < 1e-12);
        // bisection oracle
        let (mut lo, mut hi) = (1.0f64, 2.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid * mid - mid - 1.0 > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!(v > 1.3 && v < 1.33);
        assert!((v - lo).abs() < 1e-14);
        let vf: f32 = v_max();
        assert!((vf as f64 - v).abs() < 1e-6);
    }

    #[test]
    fn validation() {
        assert!(params().validate(true).is_ok());
        assert!(ModelParams::<f64>::new(-1.0, -0.3).validate(false).is_err());
        assert!(ModelParams::<f64>::new(1.0, 0.5).validate(false).is_ok());
        assert!(ModelParams::<f64>::new(1.0, 0.5).validate(true).is_err());
        assert!(params().with_beta(-0.1).validate(false).is_err());
        assert!(params().with_meniscus(1.0, 0.0).validate(false).is_err());
    }
}
