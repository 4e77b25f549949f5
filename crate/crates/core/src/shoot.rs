//! Shooting method for the steady problem at `beta = 0`.
//!
//! In the rescaled variable `y = x/L` a steady state is `v(y) = u(Ly) + c0`
//! with `-v'' + L^2 (v^3 - v + nu zeta(Ly)) = 0`, `v(0) = c0`, `v'(1) = 0`.
//! The initial value problem with `v'(0) = z` is integrated together with
//! its variational equation `h'' = L^2 (3v^2 - 1) h`, `h(0) = 0`,
//! `h'(0) = 1`, so one pass yields both the miss `f(L, z) = v'(1)` and its
//! exact derivative `df/dz = h'(1)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::model::{self, ModelParams};
use crate::ode::{self, Dopri5Options};
use crate::scalar::{sup_norm, Real};

/// Numerical settings of the shooting solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootOptions<T> {
    /// Local error target of the Runge-Kutta integrator.
    pub tol: T,
    /// Nodes of the output grids.
    pub n_out: usize,
    /// Samples of the slope scan.
    pub n_scan: usize,
    /// Scan margin beyond the a priori bracket, as a fraction of its width.
    pub margin_frac: T,
    /// Polishing target `|f| < tol_f`.
    pub tol_f: T,
    /// `|df/dz|` below this marks a degenerate zero.
    pub tol_degenerate: T,
    /// Local minima of `|f|` below this are tangential-zero candidates.
    pub tol_tangent: T,
    /// Zeros closer than this in `z` are merged.
    pub dedup: T,
    pub max_newton: usize,
}

impl<T: Real> Default for ShootOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-10),
            n_out: 513,
            n_scan: 512,
            margin_frac: T::lit(0.05),
            tol_f: T::lit(1e-10),
            tol_degenerate: T::lit(1e-6),
            tol_tangent: T::lit(1e-6),
            dedup: T::lit(1e-8),
            max_newton: 50,
        }
    }
}

/// A full shooting trajectory on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootSolution<T> {
    pub params: ModelParams<T>,
    pub z: T,
    pub v: Field<T>,
    pub vy: Field<T>,
    pub h: Field<T>,
    pub hy: Field<T>,
    pub f: T,
    pub dzf: T,
    pub accepted_steps: usize,
    pub max_abs_v: T,
    pub max_abs_vy: T,
}

/// A steady state in the original variable `u` on `[0, L]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState<T> {
    pub params: ModelParams<T>,
    /// Rescaled initial slope `v'(0) = L u_x(0)`.
    pub z: T,
    pub u: Field<T>,
    /// `u_x` on the same grid.
    pub ux: Field<T>,
    /// Sup norm of the discrete chemical potential (or of the discrete
    /// steady residual for states that come from the Newton solver).
    pub mu_residual: T,
    /// Miss `f(L, z)` of the shooting map; `None` for Newton states.
    pub f: Option<T>,
    /// `df/dz` at the state; `None` for Newton states.
    pub dzf: Option<T>,
    pub nondegenerate: bool,
    pub index: usize,
}

impl<T: Real> SteadyState<T> {
    /// Rescaled profile `v = u + c0` (node `i` sits at `y = i/(n-1)`).
    pub fn rescaled_profile(&self) -> Vec<T> {
        self.u.values().iter().map(|&u| u + self.params.c0).collect()
    }
}

/// A point where `f = df/dz = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint<T> {
    pub l_star: T,
    pub z_star: T,
    pub f_residual: T,
    pub dzf_residual: T,
    /// Central-difference estimate of `d^2 f / dz^2`.
    pub second_deriv_dz2f: T,
}

#[inline]
fn blowup_bound<T: Real>() -> T {
    T::lit(10.0) * T::one().max(model::v_max::<T>())
}

fn rhs<T: Real>(p: &ModelParams<T>) -> impl Fn(T, &[T; 4]) -> [T; 4] + '_ {
    let l = p.length;
    let l2 = l * l;
    move |y, s| {
        if l2 == T::zero() {
            return [s[1], T::zero(), s[3], T::zero()];
        }
        let v = s[0];
        let zeta = p.nu * model::meniscus(l * y, p);
        [
            s[1],
            l2 * (v * v * v - v + zeta),
            s[3],
            l2 * model::double_well_curvature(v) * s[2],
        ]
    }
}

fn check_tol<T: Real>(tol: T) -> Result<()> {
    if !(tol >= T::lit(1e-13) && tol <= T::lit(1e-6)) {
        return Err(Error::InvalidParams(format!(
            "integration tolerance must lie in [1e-13, 1e-6], got {tol}"
        )));
    }
    Ok(())
}

/// Integrates the augmented initial value problem and samples it on a
/// uniform grid of `n_out` nodes over `[0, 1]`.
pub fn integrate_ivp<T: Real>(p: &ModelParams<T>, z: T, tol: T, n_out: usize) -> Result<ShootSolution<T>> {
    check_tol(tol)?;
    let grid = Grid::unit(n_out)?;
    let bound = blowup_bound::<T>();
    let mut samples: Vec<[T; 4]> = Vec::with_capacity(n_out);
    samples.push([p.c0, z, T::zero(), T::one()]);
    let mut next = 1usize;
    let mut max_v = p.c0.abs();
    let mut max_vy = z.abs();
    // the sampled profile is differentiated twice on the output grid, so
    // steps are capped at the output spacing to keep interpolation error
    // near the rounding level
    let mut opts = Dopri5Options::with_tol(tol);
    opts.max_step = grid.spacing();
    let (end, stats) = ode::integrate(
        rhs(p),
        [p.c0, z, T::zero(), T::one()],
        T::zero(),
        T::one(),
        &opts,
        |step| {
            if step.y1[0].abs() > bound {
                return Err(Error::BlowUp {
                    y: step.t1.as_f64(),
                    value: step.y1[0].as_f64(),
                });
            }
            while next < n_out && (grid.x(next) <= step.t1 || next + 1 == n_out && step.t1 >= T::one()) {
                let s = if next + 1 == n_out {
                    step.y1
                } else {
                    step.eval(grid.x(next))
                };
                max_v = max_v.max(s[0].abs());
                max_vy = max_vy.max(s[1].abs());
                samples.push(s);
                next += 1;
            }
            max_v = max_v.max(step.y1[0].abs());
            max_vy = max_vy.max(step.y1[1].abs());
            Ok(())
        },
    )?;
    debug_assert_eq!(samples.len(), n_out);
    let col = |k: usize| Field::new(grid, samples.iter().map(|s| s[k]).collect());
    Ok(ShootSolution {
        params: *p,
        z,
        v: col(0)?,
        vy: col(1)?,
        h: col(2)?,
        hy: col(3)?,
        f: end[1],
        dzf: end[3],
        accepted_steps: stats.accepted,
        max_abs_v: max_v,
        max_abs_vy: max_vy,
    })
}

/// Miss function `f(L, z) = v'(1)` and its derivative `h'(1)`.
pub fn shoot_f<T: Real>(p: &ModelParams<T>, z: T, tol: T) -> Result<(T, T)> {
    check_tol(tol)?;
    let bound = blowup_bound::<T>();
    let opts = Dopri5Options::with_tol(tol);
    let (end, _) = ode::integrate(
        rhs(p),
        [p.c0, z, T::zero(), T::one()],
        T::zero(),
        T::one(),
        &opts,
        |step| {
            if step.y1[0].abs() > bound {
                Err(Error::BlowUp {
                    y: step.t1.as_f64(),
                    value: step.y1[0].as_f64(),
                })
            } else {
                Ok(())
            }
        },
    )?;
    Ok((end[1], end[3]))
}

/// Like [`shoot_f`], but a shot that blows up is reported as a miss of
/// `+inf` or `-inf` following the sign of `v`: past the blow-up bound the
/// solution is monotone, so the sign of `v'(1)` is known.
pub fn shoot_miss<T: Real>(p: &ModelParams<T>, z: T, tol: T) -> Result<(T, T)> {
    match shoot_f(p, z, tol) {
        Err(Error::BlowUp { value, .. }) => {
            let inf = if value > 0.0 { T::infinity() } else { T::neg_infinity() };
            Ok((inf, T::nan()))
        }
        other => other,
    }
}

/// Slope interval scanned for zeros: the a priori bracket `[L z_l, L z_r]`
/// widened by `margin_frac` of its width on each side.
pub fn scan_interval<T: Real>(p: &ModelParams<T>, margin_frac: T) -> (T, T) {
    let (zl, zr) = model::shooting_bounds(p.c0);
    let l = p.length;
    let margin = margin_frac * l * (zr - zl);
    (l * zl - margin, l * zr + margin)
}

/// Result of a slope scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scan<T> {
    pub z: Vec<T>,
    /// `None` where the integration failed; blown-up shots are `+-inf`.
    pub f: Vec<Option<T>>,
    /// Intervals with a sign change of `f`.
    pub brackets: Vec<(T, T)>,
    /// Refined local minima of `|f|` below the tangency threshold.
    pub tangent_candidates: Vec<T>,
    pub failures: usize,
}

/// Samples `f` on `n_scan` uniformly spaced slopes and reports every sign
/// change plus every candidate tangential zero.
pub fn scan_zeros<T: Real>(p: &ModelParams<T>, opts: &ShootOptions<T>) -> Result<Scan<T>> {
    if opts.n_scan < 64 {
        return Err(Error::InvalidParams(format!(
            "n_scan >= 64 required, got {}",
            opts.n_scan
        )));
    }
    check_tol(opts.tol)?;
    let (lo, hi) = scan_interval(p, opts.margin_frac);
    let n = opts.n_scan;
    let z: Vec<T> = (0..n).map(|i| lo + (hi - lo) * T::count(i) / T::count(n - 1)).collect();
    let f: Vec<Option<T>> = z
        .par_iter()
        .map(|&zi| shoot_miss(p, zi, opts.tol).ok().map(|r| r.0))
        .collect();
    let failures = f.iter().filter(|v| v.is_none()).count();
    let mut brackets = Vec::new();
    for i in 0..n - 1 {
        if let (Some(a), Some(b)) = (f[i], f[i + 1]) {
            if a == T::zero() {
                brackets.push((z[i], z[i]));
            } else if a * b < T::zero() {
                brackets.push((z[i], z[i + 1]));
            }
        }
    }
    if let Some(b) = f[n - 1] {
        if b == T::zero() {
            brackets.push((z[n - 1], z[n - 1]));
        }
    }
    let mut tangent_candidates = Vec::new();
    for i in 1..n - 1 {
        let (Some(a), Some(b), Some(c)) = (f[i - 1], f[i], f[i + 1]) else {
            continue;
        };
        let finite = a.is_finite() && b.is_finite() && c.is_finite();
        let no_sign_change = finite && a * b > T::zero() && b * c > T::zero();
        if no_sign_change && b.abs() <= a.abs() && b.abs() <= c.abs() {
            if let Some(zt) = refine_tangency(p, z[i - 1], z[i + 1], opts) {
                tangent_candidates.push(zt);
            }
        }
    }
    Ok(Scan {
        z,
        f,
        brackets,
        tangent_candidates,
        failures,
    })
}

/// Golden-section search of `|f|` on `[a, b]`; returns the minimizer when the
/// minimum is below the tangency threshold.
fn refine_tangency<T: Real>(p: &ModelParams<T>, mut a: T, mut b: T, opts: &ShootOptions<T>) -> Option<T> {
    let g = (T::lit(5.0).sqrt() - T::one()) * T::lit(0.5);
    let eval = |z: T| shoot_f(p, z, opts.tol).ok().map(|r| r.0.abs());
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    for _ in 0..80 {
        if (b - a).abs() <= T::lit(1e-13) * (T::one() + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = eval(d)?;
        }
    }
    let (zm, fm) = if fc < fd { (c, fc) } else { (d, fd) };
    (fm < opts.tol_tangent).then_some(zm)
}

/// Where a polishing run starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZeroStart<T> {
    Bracket(T, T),
    Guess(T),
}

/// Newton iteration on `f(L, .)`, safeguarded by bisection when a bracket
/// is available, followed by reconstruction of `u` on `[0, L]`.
pub fn polish_zero<T: Real>(p: &ModelParams<T>, start: ZeroStart<T>, opts: &ShootOptions<T>) -> Result<SteadyState<T>> {
    let tol = opts.tol;
    let eval = |z: T| shoot_miss(p, z, tol);
    let mut bracket = None;
    let mut z = match start {
        ZeroStart::Bracket(a, b) => {
            let (fa, _) = eval(a)?;
            if fa == T::zero() {
                return state_from_shot(p, a, opts);
            }
            let (fb, _) = eval(b)?;
            if fb == T::zero() {
                return state_from_shot(p, b, opts);
            }
            if fa * fb > T::zero() {
                return Err(Error::NoBracket {
                    lo: a.as_f64(),
                    hi: b.as_f64(),
                });
            }
            // orient so that f(lo) < 0 < f(hi)
            bracket = Some(if fa < T::zero() { (a, b) } else { (b, a) });
            T::lit(0.5) * (a + b)
        }
        ZeroStart::Guess(z0) => z0,
    };
    if bracket.is_none() {
        return polish_from_guess(p, z, opts);
    }
    let mut last = T::infinity();
    for _ in 0..opts.max_newton {
        let (f, dzf) = eval(z)?;
        last = f.abs();
        if f.abs() < attainable_tol(opts.tol_f, z, dzf) {
            return finish_on_output_grid(p, z, opts);
        }
        let mut z_new = if dzf != T::zero() { z - f / dzf } else { T::nan() };
        if let Some((neg, pos)) = bracket.as_mut() {
            if f < T::zero() {
                *neg = z;
            } else {
                *pos = z;
            }
            let (lo, hi) = if *neg < *pos { (*neg, *pos) } else { (*pos, *neg) };
            if !(z_new > lo && z_new < hi) {
                z_new = T::lit(0.5) * (lo + hi);
            }
            if (hi - lo).abs() <= T::epsilon() * T::lit(4.0) * (T::one() + z.abs()) {
                break;
            }
        } else if !z_new.is_finite() {
            break;
        }
        z = z_new;
    }
    Err(Error::NoConvergence {
        what: "shooting Newton",
        iterations: opts.max_newton,
        residual: last.as_f64(),
    })
}

/// Damped Newton from a guess: iterates stay inside the scan interval, and
/// a step that fails to integrate or does not reduce `|f|` is halved.
fn polish_from_guess<T: Real>(p: &ModelParams<T>, z0: T, opts: &ShootOptions<T>) -> Result<SteadyState<T>> {
    let (lo, hi) = scan_interval(p, opts.margin_frac);
    let mut z = z0.max(lo).min(hi);
    let (mut f, mut dzf) = shoot_miss(p, z, opts.tol)?;
    for _ in 0..opts.max_newton {
        if f.abs() < attainable_tol(opts.tol_f, z, dzf) {
            return finish_on_output_grid(p, z, opts);
        }
        if dzf == T::zero() || !dzf.is_finite() {
            break;
        }
        let mut step = -f / dzf;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = (z + step).max(lo).min(hi);
            if let Ok((fc, dc)) = shoot_miss(p, cand, opts.tol) {
                if fc.abs() < f.abs() {
                    z = cand;
                    f = fc;
                    dzf = dc;
                    accepted = true;
                    break;
                }
            }
            step *= T::lit(0.5);
        }
        if !accepted {
            break;
        }
    }
    Err(Error::NoConvergence {
        what: "shooting Newton",
        iterations: opts.max_newton,
        residual: f.abs().as_f64(),
    })
}

/// The sampled trajectory uses a capped step sequence, so its miss differs
/// from that of [`shoot_f`] by the integration error, which grows with
/// `|df/dz|`. A few Newton corrections on the sampled trajectory itself
/// make the stored `f` describe the stored profile.
fn finish_on_output_grid<T: Real>(p: &ModelParams<T>, z: T, opts: &ShootOptions<T>) -> Result<SteadyState<T>> {
    let mut sol = integrate_ivp(p, z, opts.tol, opts.n_out)?;
    for _ in 0..3 {
        if sol.f.abs() < attainable_tol(opts.tol_f, sol.z, sol.dzf) {
            break;
        }
        let z_new = sol.z - sol.f / sol.dzf;
        if !z_new.is_finite() {
            break;
        }
        let cand = integrate_ivp(p, z_new, opts.tol, opts.n_out)?;
        if !(cand.f.abs() < sol.f.abs()) {
            break;
        }
        sol = cand;
    }
    state_from_solution(&sol, opts)
}

/// `tol_f`, floored at the resolution of `f` near `z`: one ulp of `z`
/// moves `f` by about `|dzf| eps |z|`, which exceeds `tol_f` for long
/// domains where `df/dz` grows exponentially in `L`.
pub fn attainable_tol<T: Real>(tol_f: T, z: T, dzf: T) -> T {
    let floor = T::lit(64.0) * T::epsilon() * T::one().max(z.abs()) * dzf.abs();
    if floor.is_finite() {
        tol_f.max(floor)
    } else {
        tol_f
    }
}

/// Builds the steady state carried by the shot with slope `z` (no
/// root-finding).
pub fn state_from_shot<T: Real>(p: &ModelParams<T>, z: T, opts: &ShootOptions<T>) -> Result<SteadyState<T>> {
    let sol = integrate_ivp(p, z, opts.tol, opts.n_out)?;
    state_from_solution(&sol, opts)
}

pub fn state_from_solution<T: Real>(sol: &ShootSolution<T>, opts: &ShootOptions<T>) -> Result<SteadyState<T>> {
    let p = sol.params;
    let l = p.length;
    let grid = Grid::new(sol.v.len(), T::zero(), l)?;
    let u: Vec<T> = sol.v.values().iter().map(|&v| v - p.c0).collect();
    let ux: Vec<T> = sol.vy.values().iter().map(|&vy| vy / l).collect();
    let u = Field::new(grid, u)?;
    let mu = model::chemical_potential(&u, &p)?;
    Ok(SteadyState {
        params: p,
        z: sol.z,
        mu_residual: sup_norm(mu.values()),
        ux: Field::new(grid, ux)?,
        u,
        f: Some(sol.f),
        dzf: Some(sol.dzf),
        nondegenerate: sol.dzf.abs() > opts.tol_degenerate,
        index: 0,
    })
}

/// All steady states found at the given parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog<T> {
    pub params: ModelParams<T>,
    pub states: Vec<SteadyState<T>>,
    /// Tangency candidates that Newton could not resolve.
    pub unresolved: Vec<T>,
    pub n_scan: usize,
    pub scan_failures: usize,
    /// Completeness is limited by the scan resolution.
    pub caveat: String,
}

/// Scan, polish and deduplicate all zeros of `f(L, .)`.
pub fn find_steady_states<T: Real>(p: &ModelParams<T>, opts: &ShootOptions<T>) -> Result<Catalog<T>> {
    if p.beta != T::zero() {
        return Err(Error::BetaNonzero(p.beta.as_f64()));
    }
    p.validate(false)?;
    let scan = scan_zeros(p, opts)?;
    let mut states = Vec::new();
    for &(a, b) in &scan.brackets {
        let s = if a == b {
            state_from_shot(p, a, opts)?
        } else {
            polish_zero(p, ZeroStart::Bracket(a, b), opts)?
        };
        states.push(s);
    }
    let mut unresolved = Vec::new();
    for &zt in &scan.tangent_candidates {
        match polish_zero(p, ZeroStart::Guess(zt), opts) {
            Ok(s) => states.push(s),
            Err(_) => unresolved.push(zt),
        }
    }
    states.sort_by(|a, b| a.z.partial_cmp(&b.z).unwrap_or(std::cmp::Ordering::Equal));
    states.dedup_by(|later, earlier| (later.z - earlier.z).abs() < opts.dedup);
    for (i, s) in states.iter_mut().enumerate() {
        s.index = i;
    }
    let (lo, hi) = scan_interval(p, opts.margin_frac);
    let caveat = format!(
        "zeros resolved by a {}-point scan of z in [{}, {}]; zeros closer than the scan spacing {} may be missed",
        opts.n_scan,
        lo,
        hi,
        (hi - lo) / T::count(opts.n_scan - 1)
    );
    Ok(Catalog {
        params: *p,
        states,
        unresolved,
        n_scan: opts.n_scan,
        scan_failures: scan.failures,
        caveat,
    })
}

/// Outcome of [`check_persistence_bounds`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PersistenceReport<T> {
    /// The shot is not a steady state, so the bounds do not apply.
    NotSteady { f: T },
    Checked {
        passed: bool,
        max_abs_v: T,
        bound_v: T,
        max_abs_vy: T,
        bound_vy: T,
    },
}

impl<T: Real> PersistenceReport<T> {
    pub fn passed(&self) -> bool {
        matches!(self, Self::Checked { passed: true, .. })
    }
}

/// Checks `max|v| <= max(1, v_M)` and
/// `max|v'| <= L max(|z_l|, z_r) + L^2 max(1, v_M)` on a steady shot.
pub fn check_persistence_bounds<T: Real>(sol: &ShootSolution<T>, tol_f: T, slack: T) -> PersistenceReport<T> {
    if !(sol.f.abs() < tol_f) {
        return PersistenceReport::NotSteady { f: sol.f };
    }
    let p = &sol.params;
    let vm = T::one().max(model::v_max());
    let (zl, zr) = model::shooting_bounds(p.c0);
    let l = p.length;
    let bound_v = vm;
    let bound_vy = l * zl.abs().max(zr) + l * l * vm;
    let max_abs_v = sol.max_abs_v.max(sup_norm(sol.v.values()));
    let max_abs_vy = sol.max_abs_vy.max(sup_norm(sol.vy.values()));
    PersistenceReport::Checked {
        passed: max_abs_v <= bound_v + slack && max_abs_vy <= bound_vy + slack,
        max_abs_v,
        bound_v,
        max_abs_vy,
        bound_vy,
    }
}

/// One zero of `f` recorded during a length sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord<T> {
    pub length: T,
    pub z: T,
    pub f: T,
    pub dzf: T,
}

/// Output of [`detect_branch_points`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchScan<T> {
    pub lengths: Vec<T>,
    /// Zeros per sweep sample, sorted by `z`.
    pub records: Vec<Vec<SweepRecord<T>>>,
    pub points: Vec<BranchPoint<T>>,
    pub warnings: Vec<String>,
}

/// Branch-point settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchOptions<T> {
    /// `|f|` and `|df/dz|` below this at a converged branch point.
    pub tol_branch: T,
    pub max_newton: usize,
}

impl<T: Real> Default for BranchOptions<T> {
    fn default() -> Self {
        Self {
            tol_branch: T::lit(1e-6),
            max_newton: 40,
        }
    }
}

/// Sweeps `L` over `nL` uniformly spaced values in `[l_lo, l_hi]`, records
/// every zero of `f`, and refines each place where zeros appear, vanish or
/// change the sign of `df/dz` into a branch point with a two-dimensional
/// Newton iteration on `(L, z) -> (f, df/dz)`.
pub fn detect_branch_points<T: Real>(
    template: &ModelParams<T>,
    l_lo: T,
    l_hi: T,
    n_l: usize,
    opts: &ShootOptions<T>,
    bopts: &BranchOptions<T>,
) -> Result<BranchScan<T>> {
    if !(l_lo > T::zero() && l_hi > l_lo) || n_l < 16 {
        return Err(Error::InvalidParams(format!(
            "branch sweep needs 0 < L_lo < L_hi and nL >= 16, got [{l_lo}, {l_hi}], nL = {n_l}"
        )));
    }
    let lengths: Vec<T> = (0..n_l)
        .map(|i| l_lo + (l_hi - l_lo) * T::count(i) / T::count(n_l - 1))
        .collect();
    let catalogs: Vec<Result<Catalog<T>>> = lengths
        .par_iter()
        .map(|&l| find_steady_states(&template.with_length(l), opts))
        .collect();
    let mut records = Vec::with_capacity(n_l);
    let mut tangents: Vec<Vec<T>> = Vec::with_capacity(n_l);
    let mut warnings = Vec::new();
    for (l, cat) in lengths.iter().zip(catalogs) {
        match cat {
            Ok(c) => {
                records.push(
                    c.states
                        .iter()
                        .map(|s| SweepRecord {
                            length: *l,
                            z: s.z,
                            f: s.f.unwrap_or(T::zero()),
                            dzf: s.dzf.unwrap_or(T::zero()),
                        })
                        .collect(),
                );
                tangents.push(c.unresolved);
            }
            Err(e) => {
                warnings.push(format!("L = {l}: {e}"));
                records.push(Vec::new());
                tangents.push(Vec::new());
            }
        }
    }
    let spacing = (l_hi - l_lo) / T::count(n_l - 1);
    let mut seeds: Vec<(T, T)> = Vec::new();
    for k in 0..n_l - 1 {
        let (a, b) = (&records[k], &records[k + 1]);
        let small = |r: &SweepRecord<T>| r.dzf.abs() < bopts.tol_branch;
        for r in a.iter().chain(b.iter()).filter(|r| small(r)) {
            seeds.push((r.length, r.z));
        }
        if a.len() != b.len() {
            let (more, fewer_t) = if a.len() > b.len() {
                (a, &tangents[k + 1])
            } else {
                (b, &tangents[k])
            };
            if let Some(seed) = closest_opposite_pair(more) {
                seeds.push(seed);
            }
            let other_l = if a.len() > b.len() { lengths[k + 1] } else { lengths[k] };
            seeds.extend(fewer_t.iter().map(|&z| (other_l, z)));
        } else {
            // same count: a sign flip of df/dz on matched zeros
            for (ra, rb) in a.iter().zip(b.iter()) {
                if ra.dzf * rb.dzf < T::zero() {
                    seeds.push((T::lit(0.5) * (ra.length + rb.length), T::lit(0.5) * (ra.z + rb.z)));
                }
            }
        }
    }
    let mut points: Vec<BranchPoint<T>> = Vec::new();
    for (l0, z0) in seeds {
        match refine_branch_point(template, l0, z0, opts, bopts) {
            Ok(bp) => {
                let far_from_sweep = bp.l_star < l_lo - spacing || bp.l_star > l_hi + spacing;
                let duplicate = points.iter().any(|q| {
                    (q.l_star - bp.l_star).abs() < T::lit(1e-6) * (T::one() + bp.l_star)
                        && (q.z_star - bp.z_star).abs() < T::lit(1e-5) * (T::one() + bp.z_star.abs())
                });
                if far_from_sweep {
                    warnings.push(format!("branch point at L = {} outside the sweep, dropped", bp.l_star));
                } else if !duplicate {
                    points.push(bp);
                }
            }
            Err(e) => warnings.push(format!("candidate (L = {l0}, z = {z0}): {e}")),
        }
    }
    points.sort_by(|a, b| a.l_star.partial_cmp(&b.l_star).unwrap_or(std::cmp::Ordering::Equal));
    Ok(BranchScan {
        lengths,
        records,
        points,
        warnings,
    })
}

fn closest_opposite_pair<T: Real>(recs: &[SweepRecord<T>]) -> Option<(T, T)> {
    recs.windows(2)
        .filter(|w| w[0].dzf * w[1].dzf <= T::zero())
        .min_by(|a, b| {
            (a[1].z - a[0].z)
                .partial_cmp(&(b[1].z - b[0].z))
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .map(|w| (w[0].length, T::lit(0.5) * (w[0].z + w[1].z)))
}

/// Newton iteration on `(L, z) -> (f, df/dz)` with finite differences for
/// the `L` column and for `d^2 f/dz^2`.
pub fn refine_branch_point<T: Real>(
    template: &ModelParams<T>,
    l0: T,
    z0: T,
    opts: &ShootOptions<T>,
    bopts: &BranchOptions<T>,
) -> Result<BranchPoint<T>> {
    let tol = opts.tol.min(T::lit(1e-12)).max(T::lit(1e-13));
    let eval = |l: T, z: T| shoot_f(&template.with_length(l), z, tol);
    let (mut l, mut z) = (l0, z0);
    let mut res = T::infinity();
    for _ in 0..bopts.max_newton {
        let (f, g) = eval(l, z)?;
        let dl = T::lit(1e-5) * T::one().max(l.abs());
        let dz = T::lit(1e-5) * T::one().max(z.abs());
        let (fp, gp) = eval(l + dl, z)?;
        let (fm, gm) = eval(l - dl, z)?;
        let (_, gzp) = eval(l, z + dz)?;
        let (_, gzm) = eval(l, z - dz)?;
        let f_l = (fp - fm) / (T::lit(2.0) * dl);
        let g_l = (gp - gm) / (T::lit(2.0) * dl);
        let g_z = (gzp - gzm) / (T::lit(2.0) * dz);
        res = f.abs().max(g.abs());
        // Jacobian [[f_l, g], [g_l, g_z]]
        let det = f_l * g_z - g * g_l;
        if det == T::zero() || !det.is_finite() {
            return Err(Error::SingularMatrix("branch-point Newton"));
        }
        let step_l = (f * g_z - g * g) / det;
        let step_z = (f_l * g - g_l * f) / det;
        let mut lam = T::one();
        // keep L positive
        while l - lam * step_l <= T::zero() && lam > T::lit(1e-6) {
            lam *= T::lit(0.5);
        }
        l -= lam * step_l;
        z -= lam * step_z;
        let small_step = (lam * step_l).abs() < T::lit(1e-12) * (T::one() + l.abs())
            && (lam * step_z).abs() < T::lit(1e-12) * (T::one() + z.abs());
        if small_step || res < T::lit(1e-11) {
            let (f, g) = eval(l, z)?;
            if f.abs() < bopts.tol_branch && g.abs() < bopts.tol_branch {
                let (_, gzp) = eval(l, z + dz)?;
                let (_, gzm) = eval(l, z - dz)?;
                return Ok(BranchPoint {
                    l_star: l,
                    z_star: z,
                    f_residual: f,
                    dzf_residual: g,
                    second_deriv_dz2f: (gzp - gzm) / (T::lit(2.0) * dz),
                });
            }
        }
    }
    Err(Error::NoConvergence {
        what: "branch-point Newton",
        iterations: bopts.max_newton,
        residual: res.as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_length_is_linear() {
        let p = ModelParams::<f64>::new(0.0, -0.3);
        let sol = integrate_ivp(&p, 0.7, 1e-10, 11).unwrap();
        assert_eq!(sol.f, 0.7);
        assert_eq!(sol.dzf, 1.0);
        for (i, v) in sol.v.values().iter().enumerate() {
            assert!((v - (-0.3 + 0.7 * i as f64 / 10.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn initial_values_are_exact() {
        let p = ModelParams::<f64>::new(1.0, -0.3);
        let sol = integrate_ivp(&p, 0.2, 1e-10, 33).unwrap();
        assert_eq!(sol.v.values()[0], -0.3);
        assert_eq!(sol.vy.values()[0], 0.2);
        assert_eq!(sol.h.values()[0], 0.0);
        assert_eq!(sol.hy.values()[0], 1.0);
        assert_eq!(*sol.vy.values().last().unwrap(), sol.f);
        assert_eq!(*sol.hy.values().last().unwrap(), sol.dzf);
    }

    #[test]
    fn tolerance_range_is_enforced() {
        let p = ModelParams::<f64>::new(1.0, -0.3);
        assert!(shoot_f(&p, 0.0, 1e-5).is_err());
        assert!(shoot_f(&p, 0.0, 1e-14).is_err());
    }

    #[test]
    fn large_slope_blows_up() {
        let p = ModelParams::<f64>::new(10.0, -0.3);
        assert!(matches!(shoot_f(&p, 200.0, 1e-10), Err(Error::BlowUp { .. })));
    }

    #[test]
    fn beta_must_vanish() {
        let p = ModelParams::<f64>::new(1.0, -0.3).with_beta(0.1);
        assert!(matches!(
            find_steady_states(&p, &ShootOptions::default()),
            Err(Error::BetaNonzero(_))
        ));
    }

    #[test]
    fn symmetric_problem_has_trivial_zero() {
        let p = ModelParams::<f64>::new(1.0, 0.0).with_nu(0.0);
        let (f, _) = shoot_f(&p, 0.0, 1e-10).unwrap();
        assert_eq!(f, 0.0);
        let (lo, hi) = scan_interval(&p, 0.05);
        assert!(lo < 0.0 && hi > 0.0);
        let cat = find_steady_states(&p, &ShootOptions::default()).unwrap();
        assert!(cat.states.iter().any(|s| s.z.abs() < 1e-12));
    }

    #[test]
    fn persistence_report_gates_on_steadiness() {
        let p = ModelParams::<f64>::new(1.0, -0.3);
        let sol = integrate_ivp(&p, 1.0, 1e-10, 33).unwrap();
        assert!(matches!(
            check_persistence_bounds(&sol, 1e-8, 1e-9),
            PersistenceReport::NotSteady { .. }
        ));
        let p0 = ModelParams::<f64>::new(1.0, 0.0).with_nu(0.0);
        let sol0 = integrate_ivp(&p0, 0.0, 1e-10, 33).unwrap();
        match check_persistence_bounds(&sol0, 1e-8, 1e-9) {
            PersistenceReport::Checked { passed, max_abs_v, .. } => {
                assert!(passed);
                assert_eq!(max_abs_v, 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
