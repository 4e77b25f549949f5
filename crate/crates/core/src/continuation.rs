//! Steady states of the full problem by Newton's method on a mixed
//! finite-difference discretization, and natural continuation in `beta`
//! and in `L`.
//!
//! Unknowns are interleaved as `x[2i] = u_i`, `x[2i+1] = mu_i`. Rows 0 and 1
//! impose `u_0 = mu_0 = 0`; for `i >= 1`
//!
//! ```text
//! x-row 2i:     mu_i + (lap u)_i - W'(u_i + c0)
//! x-row 2i + 1: (lap mu)_i - beta (D u)_i
//! ```
//!
//! where `lap` closes the Neumann conditions at `x = L` by even reflection
//! (see [`Grid::laplacian`]) and `D` is the central difference, zero at `L`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::linalg::{smallest_singular_value_banded, BandedMatrix};
use crate::model::{self, ModelParams};
use crate::scalar::{sup_diff, sup_norm, Real};
use crate::shoot::{self, ShootOptions, SteadyState, ZeroStart};

/// Bandwidths of the interleaved Jacobian.
pub const KL: usize = 3;
pub const KU: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions<T> {
    pub tol: T,
    pub max_iter: usize,
    /// Smallest singular value of the Jacobian below which the system is
    /// reported singular.
    pub tol_singular: T,
}

impl<T: Real> Default for NewtonOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-10),
            max_iter: 30,
            tol_singular: T::lit(1e-4),
        }
    }
}

/// A discrete `(u, mu)` pair on a common grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedState<T> {
    pub u: Field<T>,
    pub mu: Field<T>,
}

impl<T: Real> MixedState<T> {
    pub fn new(u: Field<T>, mu: Field<T>) -> Result<Self> {
        if u.grid() != mu.grid() {
            return Err(Error::LengthMismatch {
                expected: u.len(),
                got: mu.len(),
            });
        }
        Ok(Self { u, mu })
    }

    /// `u` interpolated onto `grid` with `mu = 0`.
    pub fn from_steady(ss: &SteadyState<T>, grid: Grid<T>) -> Self {
        Self {
            u: ss.u.resample(grid),
            mu: Field::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Grid<T> {
        self.u.grid()
    }

    pub fn pack(&self) -> Vec<T> {
        self.u
            .values()
            .iter()
            .zip(self.mu.values())
            .flat_map(|(&u, &m)| [u, m])
            .collect()
    }

    pub fn unpack(grid: Grid<T>, x: &[T]) -> Result<Self> {
        if x.len() != 2 * grid.len() {
            return Err(Error::LengthMismatch {
                expected: 2 * grid.len(),
                got: x.len(),
            });
        }
        let u = x.iter().step_by(2).copied().collect();
        let mu = x.iter().skip(1).step_by(2).copied().collect();
        Ok(Self {
            u: Field::new(grid, u)?,
            mu: Field::new(grid, mu)?,
        })
    }
}

fn check_grid<T: Real>(grid: &Grid<T>, p: &ModelParams<T>) -> Result<()> {
    if grid.len() < 9 {
        return Err(Error::GridTooCoarse { n: grid.len(), min: 9 });
    }
    let tol = T::lit(1e-12) * T::one().max(p.length);
    if grid.start() != T::zero() || (grid.end() - p.length).abs() > tol {
        return Err(Error::InvalidParams(format!(
            "grid [{}, {}] does not match L = {}",
            grid.start(),
            grid.end(),
            p.length
        )));
    }
    Ok(())
}

/// Residual of the mixed steady system at `x = pack(u, mu)`.
pub fn assemble_steady_residual<T: Real>(grid: &Grid<T>, x: &[T], p: &ModelParams<T>) -> Result<Vec<T>> {
    check_grid(grid, p)?;
    let s = MixedState::unpack(*grid, x)?;
    let (u, mu) = (s.u.values(), s.mu.values());
    let lap_u = grid.laplacian(u);
    let lap_mu = grid.laplacian(mu);
    let du = grid.derivative(u);
    let mut r = vec![T::zero(); x.len()];
    r[0] = u[0];
    r[1] = mu[0];
    for i in 1..grid.len() {
        r[2 * i] = mu[i] + lap_u[i] - model::dw_ds(grid.x(i), u[i] + p.c0, p);
        r[2 * i + 1] = lap_mu[i] - p.beta * du[i];
    }
    Ok(r)
}

/// Exact Jacobian of [`assemble_steady_residual`].
pub fn steady_jacobian<T: Real>(grid: &Grid<T>, x: &[T], p: &ModelParams<T>) -> Result<BandedMatrix<T>> {
    check_grid(grid, p)?;
    let n = grid.len();
    if x.len() != 2 * n {
        return Err(Error::LengthMismatch {
            expected: 2 * n,
            got: x.len(),
        });
    }
    let h = grid.spacing();
    let ih2 = (h * h).recip();
    let two = T::lit(2.0);
    let adv = p.beta / (two * h);
    let mut j = BandedMatrix::zeros(2 * n, KL, KU);
    j.set(0, 0, T::one());
    j.set(1, 1, T::one());
    for i in 1..n {
        let (ru, rm) = (2 * i, 2 * i + 1);
        let curv = model::double_well_curvature(x[2 * i] + p.c0);
        j.add(ru, 2 * i + 1, T::one());
        j.add(ru, 2 * i, -two * ih2 - curv);
        j.add(rm, 2 * i + 1, -two * ih2);
        if i < n - 1 {
            j.add(ru, 2 * i - 2, ih2);
            j.add(ru, 2 * i + 2, ih2);
            j.add(rm, 2 * i - 1, ih2);
            j.add(rm, 2 * i + 3, ih2);
            j.add(rm, 2 * i + 2, -adv);
            j.add(rm, 2 * i - 2, adv);
        } else {
            j.add(ru, 2 * i - 2, two * ih2);
            j.add(rm, 2 * i - 1, two * ih2);
        }
    }
    Ok(j)
}

/// A converged Newton solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonSolution<T> {
    pub state: SteadyState<T>,
    pub mu: Field<T>,
    /// Sup norm of the discrete residual.
    pub residual: T,
    pub iterations: usize,
    /// Smallest singular value of the Jacobian at the solution.
    pub sigma_min: T,
    /// `||J||_F / sigma_min`.
    pub condition: T,
}

/// Damped Newton iteration on the mixed system. The step is halved while the
/// residual grows. Convergence means a residual below `tol`, or a step at
/// the rounding level of the iterate with the residual at the rounding
/// level of the Jacobian.
pub fn newton_steady<T: Real>(
    initial: &MixedState<T>,
    p: &ModelParams<T>,
    opts: &NewtonOptions<T>,
) -> Result<NewtonSolution<T>> {
    let grid = *initial.grid();
    p.validate(false)?;
    let mut x = initial.pack();
    let mut r = assemble_steady_residual(&grid, &x, p)?;
    let mut res = sup_norm(&r);
    if !(res < T::one()) {
        return Err(Error::InvalidParams(format!(
            "Newton initial residual {res} is not below 1"
        )));
    }
    let mut iterations = 0;
    loop {
        let jac = steady_jacobian(&grid, &x, p)?;
        let jnorm = jac.norm();
        let floor = T::lit(16.0) * T::epsilon() * jac.max_abs() * T::one().max(sup_norm(&x));
        if res < opts.tol {
            return finish(grid, x, p, res, iterations, jac, jnorm, opts);
        }
        if iterations == opts.max_iter {
            break;
        }
        let sigma = if iterations == 0 {
            smallest_singular_value_banded(&jac)
        } else {
            T::infinity()
        };
        if sigma < opts.tol_singular {
            return Err(Error::SingularMatrix("steady Jacobian"));
        }
        let lu = jac.factor()?;
        let mut dx = r.clone();
        lu.solve_in_place(&mut dx);
        let mut lam = T::one();
        let (x_new, r_new, res_new) = loop {
            let mut cand: Vec<T> = x.iter().zip(&dx).map(|(&a, &d)| a - lam * d).collect();
            // the Dirichlet rows are linear; pin them against LU rounding
            cand[0] = T::zero();
            cand[1] = T::zero();
            let rc = assemble_steady_residual(&grid, &cand, p)?;
            let rn = sup_norm(&rc);
            if rn <= res || lam < T::lit(1.0 / 1024.0) {
                break (cand, rc, rn);
            }
            lam *= T::lit(0.5);
        };
        iterations += 1;
        let step = lam * sup_norm(&dx);
        x = x_new;
        r = r_new;
        res = res_new;
        if !res.is_finite() {
            return Err(Error::NonFinite { t: 0.0 });
        }
        let tiny = step <= T::lit(4.0) * T::epsilon() * T::one().max(sup_norm(&x));
        if tiny && res < floor {
            let jac = steady_jacobian(&grid, &x, p)?;
            let jnorm = jac.norm();
            return finish(grid, x, p, res, iterations, jac, jnorm, opts);
        }
    }
    Err(Error::NoConvergence {
        what: "steady Newton",
        iterations: opts.max_iter,
        residual: res.as_f64(),
    })
}

#[allow(clippy::too_many_arguments)]
fn finish<T: Real>(
    grid: Grid<T>,
    x: Vec<T>,
    p: &ModelParams<T>,
    residual: T,
    iterations: usize,
    jac: BandedMatrix<T>,
    jnorm: T,
    opts: &NewtonOptions<T>,
) -> Result<NewtonSolution<T>> {
    let sigma_min = smallest_singular_value_banded(&jac);
    let s = MixedState::unpack(grid, &x)?;
    let state = steady_state_from_mixed(&s, p, sigma_min >= opts.tol_singular)?;
    Ok(NewtonSolution {
        state,
        mu: s.mu,
        residual,
        iterations,
        sigma_min,
        condition: jnorm / sigma_min,
    })
}

/// Wraps a discrete solution as a [`SteadyState`]; `mu_residual` is the
/// distance between the stored `mu` and the chemical potential recomputed
/// from `u`.
pub fn steady_state_from_mixed<T: Real>(
    s: &MixedState<T>,
    p: &ModelParams<T>,
    nondegenerate: bool,
) -> Result<SteadyState<T>> {
    let grid = *s.grid();
    let mu_check = model::chemical_potential(&s.u, p)?;
    let ux = grid.derivative(s.u.values());
    Ok(SteadyState {
        params: *p,
        z: p.length * ux[0],
        mu_residual: sup_diff(mu_check.values(), s.mu.values()),
        u: s.u.clone(),
        ux: Field::new(grid, ux)?,
        f: None,
        dzf: None,
        nondegenerate,
        index: 0,
    })
}

/// Solves the discrete system at the parameters of a shooting state, seeded
/// with that state resampled onto an `n`-node grid.
pub fn discrete_from_shooting<T: Real>(
    ss: &SteadyState<T>,
    n: usize,
    opts: &NewtonOptions<T>,
) -> Result<NewtonSolution<T>> {
    let grid = Grid::new(n, T::zero(), ss.params.length)?;
    let mut sol = newton_steady(&MixedState::from_steady(ss, grid), &ss.params, opts)?;
    sol.state.index = ss.index;
    Ok(sol)
}

/// Discrete H^4-like norm: root of the summed squared L^2 norms of `v` and
/// of its first four forward differences.
pub fn h4_norm<T: Real>(grid: &Grid<T>, v: &[T]) -> Result<T> {
    grid.sobolev_norm(v, 4)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchParameter {
    Beta,
    Length,
}

/// One point of a branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSample<T> {
    pub value: T,
    pub state: SteadyState<T>,
    /// Newton iterations (beta) or shooting `df/dz` (length) diagnostics.
    pub iterations: usize,
    pub residual: T,
    /// `||u_beta - u_0||` in the H^4-like norm (beta branches only).
    pub distance: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch<T> {
    pub parameter: BranchParameter,
    pub samples: Vec<BranchSample<T>>,
    /// `||u_beta - u_0|| / beta` at every requested positive target.
    pub ratios: Vec<(T, T)>,
    /// Why the branch stopped early, if it did.
    pub terminated: Option<String>,
}

impl<T: Real> Branch<T> {
    /// Largest ratio `||u_beta - u_0|| / beta` along the branch.
    pub fn max_ratio(&self) -> Option<T> {
        self.ratios.iter().map(|r| r.1).reduce(T::max)
    }

    /// Largest parameter value reached.
    pub fn reached(&self) -> Option<T> {
        self.samples.last().map(|s| s.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions<T> {
    pub n: usize,
    pub newton: NewtonOptions<T>,
    /// Give up when the step in `beta` falls below this.
    pub min_step: T,
}

impl<T: Real> Default for ContinuationOptions<T> {
    fn default() -> Self {
        Self {
            n: 513,
            newton: NewtonOptions::default(),
            min_step: T::lit(1e-8),
        }
    }
}

/// Natural continuation from a nondegenerate `beta = 0` state through the
/// requested `beta` values (visited in ascending order). A failed Newton
/// solve halves the step. The first sample is the discrete `beta = 0`
/// solution, which is the reference `u_0` of the ratios.
pub fn continue_in_beta<T: Real>(
    seed: &SteadyState<T>,
    targets: &[T],
    opts: &ContinuationOptions<T>,
) -> Result<Branch<T>> {
    if seed.params.beta != T::zero() {
        return Err(Error::BetaNonzero(seed.params.beta.as_f64()));
    }
    if !seed.nondegenerate {
        return Err(Error::DegenerateSeed);
    }
    let mut targets: Vec<T> = targets.to_vec();
    if targets.iter().any(|b| !b.is_finite() || *b < T::zero()) {
        return Err(Error::InvalidParams("beta targets must be finite and >= 0".into()));
    }
    targets.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    targets.dedup();

    let base = discrete_from_shooting(seed, opts.n, &opts.newton)?;
    let grid = *base.state.u.grid();
    let u0 = base.state.u.values().to_vec();
    let distance = |u: &Field<T>| -> Result<T> {
        let d: Vec<T> = u.values().iter().zip(&u0).map(|(&a, &b)| a - b).collect();
        h4_norm(&grid, &d)
    };
    let mut current = MixedState::new(base.state.u.clone(), base.mu.clone())?;
    let mut samples = vec![BranchSample {
        value: T::zero(),
        state: base.state.clone(),
        iterations: base.iterations,
        residual: base.residual,
        distance: Some(T::zero()),
    }];
    let mut ratios = Vec::new();
    let mut beta = T::zero();
    for &target in &targets {
        if target == T::zero() {
            continue;
        }
        let mut step = target - beta;
        while beta < target {
            let next = if beta + step >= target { target } else { beta + step };
            let p = seed.params.with_beta(next);
            match newton_steady(&current, &p, &opts.newton) {
                Ok(sol) => {
                    beta = next;
                    current = MixedState::new(sol.state.u.clone(), sol.mu.clone())?;
                    let d = distance(&sol.state.u)?;
                    if beta == target {
                        ratios.push((beta, d / beta));
                        samples.push(BranchSample {
                            value: beta,
                            state: sol.state,
                            iterations: sol.iterations,
                            residual: sol.residual,
                            distance: Some(d),
                        });
                    }
                }
                Err(e) => {
                    step *= T::lit(0.5);
                    if step < opts.min_step {
                        return Ok(Branch {
                            parameter: BranchParameter::Beta,
                            samples,
                            ratios,
                            terminated: Some(format!(
                                "{}: stalled at beta = {beta} before {target}: {e}",
                                Error::ContinuationStalled {
                                    reached: beta.as_f64(),
                                    target: target.as_f64()
                                }
                            )),
                        });
                    }
                }
            }
        }
    }
    Ok(Branch {
        parameter: BranchParameter::Beta,
        samples,
        ratios,
        terminated: None,
    })
}

/// Like [`continue_in_beta`] but a stall is an error.
pub fn continue_in_beta_strict<T: Real>(
    seed: &SteadyState<T>,
    targets: &[T],
    opts: &ContinuationOptions<T>,
) -> Result<Branch<T>> {
    let branch = continue_in_beta(seed, targets, opts)?;
    if branch.terminated.is_some() {
        let target = targets.iter().copied().fold(T::zero(), T::max);
        return Err(Error::ContinuationStalled {
            reached: branch.reached().unwrap_or(T::zero()).as_f64(),
            target: target.as_f64(),
        });
    }
    Ok(branch)
}

/// Traces the zero `z(L)` of the shooting map from a `beta = 0` seed through
/// the given lengths (in the given order), with a linear predictor in `L`
/// and [`shoot::polish_zero`] as corrector. The branch ends, flagged, when
/// `|df/dz|` drops below the degeneracy threshold, changes sign, or the
/// corrector fails.
pub fn continue_in_l<T: Real>(seed: &SteadyState<T>, l_targets: &[T], opts: &ShootOptions<T>) -> Result<Branch<T>> {
    if seed.params.beta != T::zero() {
        return Err(Error::BetaNonzero(seed.params.beta.as_f64()));
    }
    if !seed.nondegenerate {
        return Err(Error::DegenerateSeed);
    }
    let dzf0 = seed.dzf.unwrap_or(T::one());
    let mut samples = vec![BranchSample {
        value: seed.params.length,
        state: seed.clone(),
        iterations: 0,
        residual: seed.f.unwrap_or(T::zero()).abs(),
        distance: None,
    }];
    let mut terminated = None;
    for &l in l_targets {
        let last = samples.last().expect("nonempty");
        let z_pred = if samples.len() >= 2 {
            let prev = &samples[samples.len() - 2];
            let slope = (last.state.z - prev.state.z) / (last.value - prev.value);
            last.state.z + slope * (l - last.value)
        } else {
            last.state.z
        };
        let p = seed.params.with_length(l);
        match shoot::polish_zero(&p, ZeroStart::Guess(z_pred), opts) {
            Ok(ss) => {
                let dzf = ss.dzf.unwrap_or(T::zero());
                if dzf.abs() < opts.tol_degenerate || dzf * dzf0 < T::zero() {
                    terminated = Some(format!(
                        "df/dz = {dzf} at L = {l}: branch point between L = {} and L = {l}",
                        last.value
                    ));
                    break;
                }
                samples.push(BranchSample {
                    value: l,
                    residual: ss.f.unwrap_or(T::zero()).abs(),
                    state: ss,
                    iterations: 0,
                    distance: None,
                });
            }
            Err(e) => {
                terminated = Some(format!("corrector failed at L = {l}: {e}"));
                break;
            }
        }
    }
    Ok(Branch {
        parameter: BranchParameter::Length,
        samples,
        ratios: Vec::new(),
        terminated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trivial(n: usize) -> (Grid<f64>, ModelParams<f64>) {
        let p = ModelParams::<f64>::new(1.0, 0.0).with_nu(0.0);
        (Grid::new(n, 0.0, 1.0).unwrap(), p)
    }

    #[test]
    fn zero_state_has_zero_residual() {
        let (g, p) = trivial(17);
        let r = assemble_steady_residual(&g, &vec![0.0; 34], &p).unwrap();
        assert!(r.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_coefficient_stencil() {
        let (g, p) = trivial(9);
        let j = steady_jacobian(&g, &[0.0; 18], &p).unwrap();
        let ih2 = 64.0;
        // mu-equation row at node 3: u-stencil of lap plus 1 (from -W'' = +1)
        assert_eq!(j.get(6, 4), ih2);
        assert_eq!(j.get(6, 6), -2.0 * ih2 + 1.0);
        assert_eq!(j.get(6, 8), ih2);
        assert_eq!(j.get(6, 7), 1.0);
        assert_eq!(j.get(7, 5), ih2);
        assert_eq!(j.get(7, 7), -2.0 * ih2);
        assert_eq!(j.get(7, 9), ih2);
        assert_eq!(j.get(16, 14), 2.0 * ih2);
        assert_eq!(j.get(17, 15), 2.0 * ih2);
    }

    #[test]
    fn grid_must_match_length() {
        let (g, p) = trivial(17);
        let p2 = p.with_length(2.0);
        assert!(assemble_steady_residual(&g, &vec![0.0; 34], &p2).is_err());
        let small = Grid::new(5, 0.0, 1.0).unwrap();
        assert!(matches!(
            assemble_steady_residual(&small, &[0.0; 10], &p),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn pack_round_trip() {
        let g = Grid::<f64>::new(9, 0.0, 2.0).unwrap();
        let s = MixedState::new(Field::from_fn(g, |x| x).unwrap(), Field::from_fn(g, |x| -x).unwrap()).unwrap();
        let x = s.pack();
        assert_eq!(x[2], 0.25);
        assert_eq!(x[3], -0.25);
        assert_eq!(MixedState::unpack(g, &x).unwrap(), s);
    }

    #[test]
    fn newton_keeps_trivial_solution() {
        let (g, p) = trivial(33);
        let s = MixedState::new(Field::zeros(g), Field::zeros(g)).unwrap();
        let sol = newton_steady(&s, &p, &NewtonOptions::default()).unwrap();
        assert_eq!(sol.iterations, 0);
        assert!(sup_norm(sol.state.u.values()) == 0.0);
    }

    #[test]
    fn rejects_poor_initial_guess() {
        let (g, p) = trivial(33);
        let s = MixedState::new(Field::from_fn(g, |x| 5.0 * x).unwrap(), Field::zeros(g)).unwrap();
        assert!(newton_steady(&s, &p, &NewtonOptions::default()).is_err());
    }
}
