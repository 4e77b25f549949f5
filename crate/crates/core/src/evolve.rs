//! Time integration of `u_t = mu_xx - beta u_x`,
//! `mu = -u_xx + W'(x, u + c0)`, with `u = mu = 0` at `x = 0` and
//! `u_x = mu_x = 0` at `x = L`.
//!
//! One step of size `dt` solves the banded linear system
//!
//! ```text
//! u' - dt lap mu'           = u - dt beta D u
//! mu' + lap u' - S u'       = W'(u) - S u
//! ```
//!
//! so the fourth-order part and the stabilization `S (u' - u)` are implicit
//! and the cubic and the advection are explicit. With the reflection
//! closure and trapezoid weights the discrete Laplacian is symmetric, and
//! the diagnostics below use the matching discrete energy
//! `E = sum (du)^2 / 2h + sum w W`, for which the semi-discrete equations
//! satisfy `dE/dt = -sum (dmu)^2 / h - beta sum w mu D u` exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::linalg::BandedMatrix;
use crate::model::{self, ModelParams};
use crate::scalar::Real;
use crate::shoot::SteadyState;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions<T> {
    pub dt: T,
    pub t_final: T,
    pub n: usize,
    /// Fixed stabilization; `None` refreshes `max |W''| + 1` every step.
    pub stabilization: Option<T>,
    pub record_every: usize,
    pub stop_tol: T,
    /// Consecutive records below `stop_tol` that count as a plateau.
    pub plateau_records: usize,
    /// Keep the profile in every `snapshot_every`-th record (0: never).
    pub snapshot_every: usize,
    /// Discrete H^1 distance below which the final state is identified with
    /// a catalog member.
    pub omega_tol: T,
}

impl<T: Real> EvolveOptions<T> {
    /// Defaults for a domain of length `l`.
    pub fn for_length(l: T) -> Self {
        let r = l / T::PI();
        Self {
            dt: T::lit(1e-3) * T::one().min(r * r),
            t_final: T::lit(10.0),
            n: 257,
            stabilization: None,
            record_every: 10,
            stop_tol: T::lit(1e-9),
            plateau_records: 100,
            snapshot_every: 0,
            omega_tol: T::lit(1e-4),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.dt > T::zero()
            && self.t_final > T::zero()
            && self.n >= 33
            && self.record_every >= 1
            && self.stop_tol > T::zero()
            && self.omega_tol > T::zero()
            && self.stabilization.is_none_or(|s| s >= T::zero());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "evolve options need dt > 0, T > 0, n >= 33, record_every >= 1, positive tolerances and S >= 0 (dt = {}, T = {}, n = {})",
                self.dt, self.t_final, self.n
            )))
        }
    }
}

/// Default stabilization for the current state.
pub fn default_stabilization<T: Real>(u: &[T], c0: T) -> T {
    u.iter()
        .map(|&v| model::double_well_curvature(v + c0).abs())
        .fold(T::zero(), T::max)
        + T::one()
}

/// Discrete chemical potential `-lap u + W'` with `mu_0 = 0`.
pub fn discrete_mu<T: Real>(grid: &Grid<T>, u: &[T], p: &ModelParams<T>) -> Vec<T> {
    let lap = grid.laplacian(u);
    let mut mu: Vec<T> = (0..grid.len())
        .map(|i| -lap[i] + model::dw_ds(grid.x(i), u[i] + p.c0, p))
        .collect();
    mu[0] = T::zero();
    mu
}

fn check_initial<T: Real>(u: &Field<T>, p: &ModelParams<T>) -> Result<()> {
    let g = u.grid();
    let tol = T::lit(1e-12) * T::one().max(p.length);
    if g.start() != T::zero() || (g.end() - p.length).abs() > tol {
        return Err(Error::InvalidParams(format!(
            "field on [{}, {}] does not match L = {}",
            g.start(),
            g.end(),
            p.length
        )));
    }
    if u.values()[0] != T::zero() {
        return Err(Error::InvalidParams(format!(
            "u(0) = {} violates the boundary condition",
            u.values()[0]
        )));
    }
    Ok(())
}

/// One step; returns `(u', mu')`.
pub fn step_mixed<T: Real>(u: &Field<T>, p: &ModelParams<T>, dt: T, s: T) -> Result<(Field<T>, Field<T>)> {
    let grid = *u.grid();
    let n = grid.len();
    let v = u.values();
    let h = grid.spacing();
    let ih2 = (h * h).recip();
    let two = T::lit(2.0);
    let du = grid.derivative(v);
    let lap = grid.laplacian(v);
    let mut a = BandedMatrix::zeros(2 * n, 2, 2);
    let mut rhs = vec![T::zero(); 2 * n];
    a.set(0, 0, T::one());
    a.set(1, 1, T::one());
    for i in 1..n {
        let (rm, ru) = (2 * i, 2 * i + 1);
        // mu' + lap u' - S u' = W'(u) - S u
        a.add(rm, 2 * i + 1, T::one());
        a.add(rm, 2 * i, -two * ih2 - s);
        // u' - dt lap mu' = u - dt beta D u
        a.add(ru, 2 * i, T::one());
        a.add(ru, 2 * i + 1, two * dt * ih2);
        if i < n - 1 {
            a.add(rm, 2 * i - 2, ih2);
            a.add(rm, 2 * i + 2, ih2);
            a.add(ru, 2 * i - 1, -dt * ih2);
            a.add(ru, 2 * i + 3, -dt * ih2);
        } else {
            a.add(rm, 2 * i - 2, two * ih2);
            a.add(ru, 2 * i - 1, -two * dt * ih2);
        }
        // increment form: unknowns are (u' - u, mu')
        rhs[rm] = model::dw_ds(grid.x(i), v[i] + p.c0, p) - lap[i];
        rhs[ru] = -dt * p.beta * du[i];
    }
    let lu = a.factor().map_err(|_| Error::SingularMatrix("time step"))?;
    lu.solve_in_place(&mut rhs);
    if rhs.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { t: f64::NAN });
    }
    // rows 0 and 1 are identities; pivoting can leave rounding there
    rhs[0] = T::zero();
    rhs[1] = T::zero();
    let un: Vec<T> = rhs.iter().step_by(2).zip(v).map(|(&d, &u)| u + d).collect();
    let mun: Vec<T> = rhs.iter().skip(1).step_by(2).copied().collect();
    Ok((Field::new(grid, un)?, Field::new(grid, mun)?))
}

/// One step with the stabilization chosen by `opts`.
pub fn step<T: Real>(u: &Field<T>, p: &ModelParams<T>, opts: &EvolveOptions<T>) -> Result<Field<T>> {
    check_initial(u, p)?;
    let s = opts
        .stabilization
        .unwrap_or_else(|| default_stabilization(u.values(), p.c0));
    Ok(step_mixed(u, p, opts.dt, s)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample<T> {
    pub t: T,
    pub u: Option<Field<T>>,
    pub energy: T,
    pub e1: T,
    /// `sum (d mu)^2 / h`.
    pub mu_v2: T,
    /// `-beta sum w u_x mu`.
    pub advect: T,
    /// Energy-law residual over the interval ending here (0 at `t = 0`).
    pub dedt_residual: T,
    pub dist_h1: Vec<T>,
    pub ut_norm: T,
    /// Discrete H^0..H^4 norms.
    pub hm_norms: [T; 5],
    /// `sum w u`.
    pub mass: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub params: ModelParams<T>,
    pub options: EvolveOptions<T>,
    pub grid: Grid<T>,
    pub samples: Vec<TrajectorySample<T>>,
    pub final_u: Field<T>,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveReport<T> {
    pub converged: bool,
    pub omega_index: Option<usize>,
    pub final_dist: T,
    pub t_plateau: Option<T>,
    pub absorb_pass: bool,
    pub m1_bound: T,
    pub t_entry: Option<T>,
    pub final_t: T,
    pub steps: usize,
}

struct Recorder<T: Real> {
    grid: Grid<T>,
    p: ModelParams<T>,
    catalog: Vec<Vec<T>>,
}

impl<T: Real> Recorder<T> {
    fn sample(&self, t: T, u: &[T], ut_norm: T, keep: bool) -> Result<TrajectorySample<T>> {
        let g = &self.grid;
        let field = Field::new(*g, u.to_vec())?;
        let mu = discrete_mu(g, u, &self.p);
        let du = g.derivative(u);
        let ux_mu: Vec<T> = du.iter().zip(&mu).map(|(&a, &b)| a * b).collect();
        let mut hm = [T::zero(); 5];
        for (m, slot) in hm.iter_mut().enumerate() {
            *slot = g.sobolev_norm(u, m)?;
        }
        Ok(TrajectorySample {
            t,
            energy: model::energy(&field, &self.p),
            e1: model::energy_e1(&field, &self.p)?,
            mu_v2: g.gradient_energy(&mu),
            advect: -self.p.beta * g.integrate(&ux_mu),
            dedt_residual: T::zero(),
            dist_h1: self.catalog.iter().map(|c| g.h1_distance(u, c)).collect(),
            ut_norm,
            hm_norms: hm,
            mass: g.integrate(u),
            u: keep.then_some(field),
        })
    }
}

fn residual_between<T: Real>(a: &TrajectorySample<T>, b: &TrajectorySample<T>) -> T {
    let half = T::lit(0.5);
    (b.energy - a.energy) / (b.t - a.t) + half * (a.mu_v2 + b.mu_v2) - half * (a.advect + b.advect)
}

/// Integrates from `u0` until `t_final` or a plateau of `ut_norm`, then
/// identifies the final state with the nearest catalog member.
pub fn evolve<T: Real>(
    u0: &Field<T>,
    p: &ModelParams<T>,
    opts: &EvolveOptions<T>,
    catalog: &[SteadyState<T>],
) -> Result<(Trajectory<T>, EvolveReport<T>)> {
    opts.validate()?;
    p.validate(false)?;
    check_initial(u0, p)?;
    let grid = *u0.grid();
    let rec = Recorder {
        grid,
        p: *p,
        catalog: catalog.iter().map(|s| s.u.resample(grid).into_values()).collect(),
    };
    let keep = |k: usize| opts.snapshot_every > 0 && k.is_multiple_of(opts.snapshot_every);
    let mut samples = vec![rec.sample(T::zero(), u0.values(), T::zero(), keep(0))?];
    let n_steps = (opts.t_final / opts.dt).ceil().to_usize().unwrap_or(usize::MAX);
    let mut u = u0.clone();
    let mut streak = 0usize;
    let mut streak_start = None;
    let mut t_plateau = None;
    let mut steps = 0;
    for k in 1..=n_steps {
        let s = opts
            .stabilization
            .unwrap_or_else(|| default_stabilization(u.values(), p.c0));
        let t = T::count(k) * opts.dt;
        let (un, _) = step_mixed(&u, p, opts.dt, s).map_err(|e| match e {
            Error::NonFinite { .. } => Error::NonFinite { t: t.as_f64() },
            other => other,
        })?;
        let diff: Vec<T> = un
            .values()
            .iter()
            .zip(u.values())
            .map(|(&a, &b)| (a - b) / opts.dt)
            .collect();
        let ut_norm = grid.l2_norm(&diff);
        u = un;
        steps = k;
        if k % opts.record_every == 0 || k == n_steps {
            let idx = samples.len();
            let mut smp = rec.sample(t, u.values(), ut_norm, keep(idx))?;
            smp.dedt_residual = residual_between(samples.last().expect("nonempty"), &smp);
            samples.push(smp);
            if ut_norm < opts.stop_tol {
                if streak == 0 {
                    streak_start = Some(t);
                }
                streak += 1;
                if streak >= opts.plateau_records {
                    t_plateau = streak_start;
                    break;
                }
            } else {
                streak = 0;
            }
        }
    }
    let last = samples.last().expect("nonempty");
    let (best, final_dist) =
        last.dist_h1.iter().enumerate().fold(
            (None, T::infinity()),
            |(bi, bd), (i, &d)| if d < bd { (Some(i), d) } else { (bi, bd) },
        );
    let converged = t_plateau.is_some();
    let omega_index = if converged && final_dist < opts.omega_tol {
        best
    } else {
        None
    };
    let traj = Trajectory {
        params: *p,
        options: *opts,
        grid,
        samples,
        final_u: u,
        steps,
    };
    let absorb = absorbing_audit(&traj, T::lit(0.05))?;
    let report = EvolveReport {
        converged,
        omega_index,
        final_dist,
        t_plateau,
        absorb_pass: absorb.passed,
        m1_bound: absorb.m1,
        t_entry: absorb.t_entry,
        final_t: traj.samples.last().expect("nonempty").t,
        steps,
    };
    Ok((traj, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyAudit<T> {
    /// Largest `|dE/dt + mu_v2 + beta int u_x mu|` over record intervals.
    pub max_abs_residual: T,
    /// Largest energy increase between consecutive records.
    pub max_increase: T,
    /// At `beta = 0`: no increase beyond the slack.
    pub monotone: Option<bool>,
}

/// Energy-law residuals along a trajectory.
pub fn energy_audit<T: Real>(traj: &Trajectory<T>, slack: T) -> Result<EnergyAudit<T>> {
    let s = &traj.samples;
    if s.len() < 3 {
        return Err(Error::InvalidParams(format!(
            "energy audit needs at least 3 samples, got {}",
            s.len()
        )));
    }
    let mut max_abs_residual = T::zero();
    let mut max_increase = T::neg_infinity();
    for w in s.windows(2) {
        max_abs_residual = max_abs_residual.max(residual_between(&w[0], &w[1]).abs());
        max_increase = max_increase.max(w[1].energy - w[0].energy);
    }
    let monotone = (traj.params.beta == T::zero()).then_some(max_increase <= slack);
    Ok(EnergyAudit {
        max_abs_residual,
        max_increase,
        monotone,
    })
}

/// Constants of the absorbing-ball estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingConstants<T> {
    pub k1: T,
    pub k2: T,
    pub m1: T,
    /// `L^4 + 4`, the relaxation time of the envelope.
    pub tau: T,
}

/// `K1`, `K2`, `M1` for the parameters; `||zeta_x||^2` by the trapezoid rule
/// on `grid`.
pub fn absorbing_constants<T: Real>(p: &ModelParams<T>, grid: &Grid<T>) -> AbsorbingConstants<T> {
    let l = p.length;
    let l4 = l.powi(4);
    let l5 = l4 * l;
    let l9 = l5 * l4;
    let k1 = T::lit(235.0) * l / T::lit(4.0) + l5 + T::lit(8.0) * l9;
    let zx: Vec<T> = (0..grid.len())
        .map(|i| {
            let d = p.nu * model::meniscus_slope(grid.x(i), p);
            d * d
        })
        .collect();
    let tau = l4 + T::lit(4.0);
    let k2 = l * (T::lit(144.0) * (l4 + T::lit(2.0)) + T::one()) / (T::lit(4.0) * tau)
        + grid.integrate(&zx)
        + T::lit(2.0) * k1;
    AbsorbingConstants {
        k1,
        k2,
        m1: tau * k2 + T::one(),
        tau,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingAudit<T> {
    pub k1: T,
    pub k2: T,
    pub m1: T,
    /// First recorded time with `E1 <= M1`.
    pub t_entry: Option<T>,
    /// `E1 <= M1` at every record from `t_entry` on.
    pub stays_in_ball: bool,
    /// `E1 <= envelope + slack |envelope|` at every record.
    pub within_envelope: bool,
    /// Largest `(E1 - envelope) / |envelope|`.
    pub max_envelope_excess: T,
    pub passed: bool,
}

/// Gronwall envelope of `E1` at time `t`.
pub fn gronwall_envelope<T: Real>(c: &AbsorbingConstants<T>, e1_0: T, t: T) -> T {
    let floor = c.tau * c.k2;
    (e1_0 - floor) * (-t / c.tau).exp() + floor
}

/// Checks the absorbing ball and the Gronwall envelope along a trajectory.
pub fn absorbing_audit<T: Real>(traj: &Trajectory<T>, slack: T) -> Result<AbsorbingAudit<T>> {
    let p = &traj.params;
    if !(p.beta >= T::zero() && p.beta <= T::one()) {
        return Err(Error::InvalidParams(format!(
            "absorbing audit needs beta in [0, 1], got {}",
            p.beta
        )));
    }
    let c = absorbing_constants(p, &traj.grid);
    let e1_0 = traj.samples[0].e1;
    let t_entry = traj.samples.iter().find(|s| s.e1 <= c.m1).map(|s| s.t);
    let stays_in_ball = t_entry.is_some_and(|te| traj.samples.iter().filter(|s| s.t >= te).all(|s| s.e1 <= c.m1));
    let mut max_excess = T::neg_infinity();
    for s in &traj.samples {
        let env = gronwall_envelope(&c, e1_0, s.t);
        max_excess = max_excess.max((s.e1 - env) / env.abs().max(T::min_positive_value()));
    }
    let within_envelope = max_excess <= slack;
    Ok(AbsorbingAudit {
        k1: c.k1,
        k2: c.k2,
        m1: c.m1,
        t_entry,
        stays_in_ball,
        within_envelope,
        max_envelope_excess: max_excess,
        passed: stays_in_ball && within_envelope,
    })
}

/// `(t, ||u||_{H^m})` at every record.
pub fn smoothing_norms<T: Real>(traj: &Trajectory<T>, m: usize) -> Result<Vec<(T, T)>> {
    if m > 4 {
        return Err(Error::OrderTooHigh {
            order: m,
            n: traj.grid.len(),
        });
    }
    Ok(traj.samples.iter().map(|s| (s.t, s.hm_norms[m])).collect())
}

/// Supremum of the H^m norm over records with `t >= tau`.
pub fn sup_norm_after<T: Real>(traj: &Trajectory<T>, m: usize, tau: T) -> Result<T> {
    Ok(smoothing_norms(traj, m)?
        .into_iter()
        .filter(|(t, _)| *t >= tau)
        .map(|(_, v)| v)
        .fold(T::zero(), T::max))
}

/// Pseudo-random initial datum: a combination of the first `modes`
/// eigenfunctions `sin((k - 1/2) pi x / L)` of the boundary conditions with
/// coefficients `U(-1, 1) / k^2`, scaled to a discrete H^1 norm drawn from
/// `[0.2, 1] max_h1`.
pub fn seeded_initial_data<T: Real>(grid: Grid<T>, seed: u64, modes: usize, max_h1: T) -> Result<Field<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = (1..=modes).map(|k| rng.gen_range(-1.0..1.0) / (k * k) as f64).collect();
    let target = max_h1 * T::lit(rng.gen_range(0.2..1.0));
    let l = grid.end();
    let mut v: Vec<T> = (0..grid.len())
        .map(|i| {
            let x = grid.x(i);
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &a)| T::lit(a) * ((T::count(k) + T::lit(0.5)) * T::PI() * x / l).sin())
                .sum()
        })
        .collect();
    v[0] = T::zero();
    let norm = grid.sobolev_norm(&v, 1)?;
    if norm > T::zero() {
        let sc = target / norm;
        v.iter_mut().for_each(|x| *x *= sc);
    }
    Field::new(grid, v)
}
