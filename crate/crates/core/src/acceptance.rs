//! Acceptance checks A1-A12. Each check runs at its stated tolerance and
//! reports pass/fail with the observed numbers and its runtime against the
//! budget.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::continuation::{self, ContinuationOptions, NewtonOptions};
use crate::error::Result;
use crate::evolve::{self, EvolveOptions};
use crate::grid::Grid;
use crate::model::{self, ModelParams};
use crate::scalar::sup_diff;
use crate::shoot::{self, BranchOptions, ShootOptions, SteadyState};
use crate::spectrum::{self, KernelOptions};

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
}

impl Outcome {
    /// One summary line.
    pub fn line(&self) -> String {
        format!(
            "{:<4}{} {} ({:.1} s, budget {} s): {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs(),
            self.detail
        )
    }
}

pub struct Criterion {
    pub id: &'static str,
    pub title: &'static str,
    pub budget_secs: u64,
    check: fn() -> Result<(bool, String)>,
}

impl Criterion {
    pub fn run(&self) -> Outcome {
        let start = Instant::now();
        let (ok, detail) = match (self.check)() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let elapsed = start.elapsed();
        let budget = Duration::from_secs(self.budget_secs);
        let in_time = elapsed <= budget;
        Outcome {
            id: self.id,
            title: self.title,
            passed: ok && in_time,
            detail: if in_time {
                detail
            } else {
                format!("{detail}; over the runtime budget")
            },
            elapsed,
            budget,
        }
    }
}

pub fn criteria() -> Vec<Criterion> {
    vec![
        Criterion {
            id: "A1",
            title: "small-L uniqueness",
            budget_secs: 10,
            check: a1,
        },
        Criterion {
            id: "A2",
            title: "bracket confinement",
            budget_secs: 120,
            check: a2,
        },
        Criterion {
            id: "A3",
            title: "variational derivative",
            budget_secs: 30,
            check: a3,
        },
        Criterion {
            id: "A4",
            title: "shooting vs finite differences",
            budget_secs: 60,
            check: a4,
        },
        Criterion {
            id: "A5",
            title: "beta-continuation scaling",
            budget_secs: 60,
            check: a5,
        },
        Criterion {
            id: "A6",
            title: "kernel equivalence at branch points",
            budget_secs: 300,
            check: a6,
        },
        Criterion {
            id: "A7",
            title: "real spectrum at beta = 0",
            budget_secs: 60,
            check: a7,
        },
        Criterion {
            id: "A8",
            title: "energy equality",
            budget_secs: 120,
            check: a8,
        },
        Criterion {
            id: "A9",
            title: "absorbing ball",
            budget_secs: 180,
            check: a9,
        },
        Criterion {
            id: "A10",
            title: "stabilization",
            budget_secs: 600,
            check: a10,
        },
        Criterion {
            id: "A11",
            title: "persistence bounds",
            budget_secs: 10,
            check: a11,
        },
        Criterion {
            id: "A12",
            title: "sum-of-squares identity",
            budget_secs: 1,
            check: a12,
        },
    ]
}

pub fn criterion(id: &str) -> Option<Criterion> {
    criteria().into_iter().find(|c| c.id.eq_ignore_ascii_case(id))
}

pub fn run_all() -> Vec<Outcome> {
    criteria().iter().map(Criterion::run).collect()
}

fn default_params(l: f64) -> ModelParams<f64> {
    ModelParams::new(l, -0.3)
}

/// Parameters with two folds in `L` in `[1, 6]`.
pub fn fold_params(l: f64) -> ModelParams<f64> {
    ModelParams::new(l, 0.0).with_nu(0.1)
}

fn a1() -> Result<(bool, String)> {
    let opts = ShootOptions::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for l in [0.1, 0.2, 0.3] {
        let p = default_params(l);
        let cat = shoot::find_steady_states(&p, &opts)?;
        let dense = shoot::scan_zeros(&p, &ShootOptions { n_scan: 10_000, ..opts })?;
        let n_dense = dense.brackets.len() + dense.tangent_candidates.len();
        ok &= cat.states.len() == 1 && n_dense == 1;
        parts.push(format!("L={l}: {} state(s), dense scan {n_dense}", cat.states.len()));
    }
    Ok((ok, parts.join("; ")))
}

fn a2() -> Result<(bool, String)> {
    let opts = ShootOptions::default();
    let mut total = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut ok = true;
    for p0 in [default_params(1.0), fold_params(1.0)] {
        for k in 0..50 {
            let l = 0.1 + 9.9 * k as f64 / 49.0;
            let p = p0.with_length(l);
            let cat = shoot::find_steady_states(&p, &opts)?;
            let (zl, zr) = model::shooting_bounds(p.c0);
            ok &= !cat.states.is_empty();
            for s in &cat.states {
                total += 1;
                let excess = (l * zl - s.z).max(s.z - l * zr);
                worst = worst.max(excess);
            }
        }
    }
    ok &= worst <= 1e-8;
    Ok((
        ok,
        format!(
            "{total} zeros over 2 x 50 lengths in [0.1, 10]; largest excursion beyond [L z_l, L z_r] = {worst:.3e}"
        ),
    ))
}

fn a3() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let tol = 1e-12;
    let delta = 1e-6;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    while count < 100 {
        let l: f64 = rng.gen_range(0.1..4.0);
        let c0: f64 = rng.gen_range(-0.9..0.9);
        let p = ModelParams::new(l, c0);
        let (zl, zr) = model::shooting_bounds(c0);
        let z = rng.gen_range(l * zl..l * zr);
        let (Ok((_, dzf)), Ok((fp, _)), Ok((fm, _))) = (
            shoot::shoot_f(&p, z, tol),
            shoot::shoot_f(&p, z + delta, tol),
            shoot::shoot_f(&p, z - delta, tol),
        ) else {
            continue;
        };
        let fd = (fp - fm) / (2.0 * delta);
        worst = worst.max((dzf - fd).abs() / fd.abs().max(1.0));
        count += 1;
    }
    Ok((
        worst < 1e-5,
        format!("max |dzf - FD| / max(1, |FD|) = {worst:.3e} over {count} points"),
    ))
}

fn a4() -> Result<(bool, String)> {
    let opts = ShootOptions::default();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for l in [0.25, 0.5, 1.0, 1.5, 2.0] {
        let cat = shoot::find_steady_states(&default_params(l), &opts)?;
        for s in &cat.states {
            let sol = continuation::discrete_from_shooting(s, 513, &NewtonOptions::default())?;
            worst = worst.max(sup_diff(s.u.values(), sol.state.u.values()));
            count += 1;
        }
    }
    Ok((
        worst < 1e-6 && count >= 5,
        format!("{count} states at L in {{0.25, 0.5, 1, 1.5, 2}}; max sup difference {worst:.3e}"),
    ))
}

fn a5() -> Result<(bool, String)> {
    let cat = shoot::find_steady_states(&default_params(1.0), &ShootOptions::default())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for s in cat.states.iter().filter(|s| s.nondegenerate) {
        let b = continuation::continue_in_beta_strict(s, &[1e-2, 5e-3, 2.5e-3], &ContinuationOptions::default())?;
        let r: Vec<f64> = b.ratios.iter().map(|x| x.1).collect();
        for i in 0..r.len() {
            for j in 0..i {
                ok &= (r[i] - r[j]).abs() <= 0.2 * r[i].min(r[j]);
            }
        }
        ok &= r.len() == 3 && b.samples.iter().all(|x| x.residual < 1e-9);
        parts.push(format!(
            "state {}: ratios {:?}",
            s.index,
            r.iter().map(|x| format!("{x:.5}")).collect::<Vec<_>>()
        ));
    }
    ok &= !parts.is_empty();
    Ok((ok, parts.join("; ")))
}

fn a6() -> Result<(bool, String)> {
    let (lo, hi, nl) = (1.0, 6.0, 200);
    let opts = ShootOptions {
        n_scan: 256,
        ..ShootOptions::default()
    };
    let bopts = BranchOptions::default();
    let template = fold_params(1.0);
    let scan = shoot::detect_branch_points(&template, lo, hi, nl, &opts, &bopts)?;
    let spacing = (hi - lo) / (nl - 1) as f64;
    let kopts = KernelOptions::default();
    let mut ok = !scan.points.is_empty();
    let mut parts = Vec::new();
    for bp in &scan.points {
        let at = shoot::state_from_shot(&template.with_length(bp.l_star), bp.z_star, &opts)?;
        let sigma_star = spectrum::kernel_indicator(&at, &kopts)?.sigma_min;
        let k = scan.lengths.iter().position(|&l| l > bp.l_star).unwrap_or(nl - 1);
        let mut flank = f64::INFINITY;
        for kk in [k.saturating_sub(1), k] {
            if let Some(rec) = scan.records[kk]
                .iter()
                .min_by(|a, b| (a.z - bp.z_star).abs().total_cmp(&(b.z - bp.z_star).abs()))
            {
                let s = shoot::state_from_shot(&template.with_length(rec.length), rec.z, &opts)?;
                flank = flank.min(spectrum::kernel_indicator(&s, &kopts)?.sigma_min);
            }
        }
        ok &= sigma_star * 1e3 <= flank && bp.dzf_residual.abs() < bopts.tol_branch;
        parts.push(format!(
            "L*={:.6}: sigma_min {sigma_star:.2e} vs flanking {flank:.2e}",
            bp.l_star
        ));
    }
    let mut stray = 0;
    for recs in &scan.records {
        for r in recs {
            let near = scan.points.iter().any(|bp| (r.length - bp.l_star).abs() <= spacing);
            if !near && r.dzf.abs() < bopts.tol_branch {
                stray += 1;
            }
        }
    }
    let isolated = scan.points.windows(2).all(|w| w[1].l_star - w[0].l_star > spacing);
    ok &= stray == 0 && isolated;
    Ok((
        ok,
        format!(
            "{} branch point(s) for c0 = 0, nu = 0.1 on [{lo}, {hi}] with {nl} samples: {}; small |dzf| elsewhere: {stray}",
            scan.points.len(),
            parts.join(", ")
        ),
    ))
}

fn catalog_257(p: &ModelParams<f64>) -> Result<Vec<SteadyState<f64>>> {
    Ok(shoot::find_steady_states(
        p,
        &ShootOptions {
            n_out: 257,
            ..ShootOptions::default()
        },
    )?
    .states)
}

fn a7() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    let mut count = 0;
    let sets = [
        default_params(0.5),
        default_params(1.0),
        default_params(2.0),
        fold_params(3.0),
        fold_params(5.5),
    ];
    for p in &sets {
        for s in catalog_257(p)? {
            let sp = spectrum::spectrum_l4(&s, 0.0)?;
            worst = worst.max(sp.imag_ratio());
            worst_res = worst_res.max(sp.max_residual);
            count += 1;
        }
    }
    Ok((
        worst < 1e-6 && count > 0,
        format!(
            "{count} states, n = 257: max |Im|/max |Re| = {worst:.3e}; scaled eigenpair residual <= {worst_res:.1e}"
        ),
    ))
}

fn a8() -> Result<(bool, String)> {
    let grid = Grid::new(257, 0.0, 1.0)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for beta in [0.0, 0.05] {
        let p = default_params(1.0).with_beta(beta);
        let mut prev: Option<f64> = None;
        let mut ratios = Vec::new();
        for dt in [1e-5, 5e-6] {
            let mut o = EvolveOptions::for_length(1.0);
            o.dt = dt;
            o.t_final = 0.01;
            o.record_every = 1;
            let mut worst: f64 = 0.0;
            for seed in 0..3 {
                let u0 = evolve::seeded_initial_data(grid, seed, 6, 1.0)?;
                let (tr, _) = evolve::evolve(&u0, &p, &o, &[])?;
                let audit = evolve::energy_audit(&tr, 1e-10)?;
                worst = worst.max(audit.max_abs_residual);
                ok &= audit.monotone != Some(false);
            }
            if let Some(pr) = prev {
                ratios.push(pr / worst);
            }
            prev = Some(worst);
        }
        ok &= ratios.iter().all(|r| (1.4..=2.6).contains(r));
        parts.push(format!("beta={beta}: max|r| ratio under dt halving {:.3}", ratios[0]));
    }
    // monotone energy on longer runs at the default step
    let p = default_params(1.0);
    let mut o = EvolveOptions::for_length(1.0);
    o.t_final = 1.0;
    o.record_every = 1;
    let mut max_inc = f64::NEG_INFINITY;
    for seed in 0..10 {
        let u0 = evolve::seeded_initial_data(grid, seed, 6, 1.0)?;
        let (tr, _) = evolve::evolve(&u0, &p, &o, &[])?;
        let audit = evolve::energy_audit(&tr, 1e-10)?;
        max_inc = max_inc.max(audit.max_increase);
        ok &= audit.monotone == Some(true);
    }
    parts.push(format!(
        "beta=0, 10 seeds to t=1: largest energy increase {max_inc:.2e}"
    ));
    Ok((ok, parts.join("; ")))
}

fn a9() -> Result<(bool, String)> {
    let grid = Grid::new(257, 0.0, 1.0)?;
    let mut ok = true;
    let mut parts = Vec::new();
    for beta in [0.0, 0.05] {
        let p = default_params(1.0).with_beta(beta);
        let mut o = EvolveOptions::for_length(1.0);
        o.t_final = 2.0;
        let mut worst_excess = f64::NEG_INFINITY;
        let mut latest_entry: f64 = 0.0;
        let mut m1 = 0.0;
        for seed in 0..5 {
            let u0 = evolve::seeded_initial_data(grid, 100 + seed, 6, 1.0)?;
            let (tr, _) = evolve::evolve(&u0, &p, &o, &[])?;
            let a = evolve::absorbing_audit(&tr, 0.05)?;
            ok &= a.passed;
            worst_excess = worst_excess.max(a.max_envelope_excess);
            latest_entry = latest_entry.max(a.t_entry.unwrap_or(f64::INFINITY));
            m1 = a.m1;
        }
        parts.push(format!(
            "beta={beta}: M1 = {m1:.2}, latest t_entry = {latest_entry}, max envelope excess {worst_excess:.2e}"
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn a10() -> Result<(bool, String)> {
    let l = 1.0;
    let p0 = default_params(l);
    // L = 1 must be clear of branch points
    let sweep = shoot::detect_branch_points(&p0, 0.5, 1.5, 21, &ShootOptions::default(), &BranchOptions::default())?;
    let spacing = 1.0 / 20.0;
    let clear = sweep.points.iter().all(|bp| (bp.l_star - l).abs() > spacing);
    let cat0 = shoot::find_steady_states(&p0, &ShootOptions::default())?;
    let grid = Grid::new(257, 0.0, l)?;
    let mut ok = clear;
    let mut parts = vec![format!("branch points near L=1: {}", sweep.points.len())];
    for beta in [0.0, 0.01] {
        let p = p0.with_beta(beta);
        let mut catalog = Vec::new();
        for s in &cat0.states {
            let copts = ContinuationOptions {
                n: 257,
                ..ContinuationOptions::default()
            };
            let b = continuation::continue_in_beta_strict(s, &[beta], &copts)?;
            catalog.push(b.samples.last().expect("nonempty").state.clone());
        }
        let mut worst: f64 = 0.0;
        let mut converged = 0;
        let mut invariant = 0;
        for seed in 0..10 {
            let u0 = evolve::seeded_initial_data(grid, 1000 + seed, 6, 1.0)?;
            let mut o = EvolveOptions::for_length(l);
            o.t_final = 20.0;
            let (_, r1) = evolve::evolve(&u0, &p, &o, &catalog)?;
            o.dt /= 2.0;
            let (_, r2) = evolve::evolve(&u0, &p, &o, &catalog)?;
            if r1.converged && r1.omega_index.is_some() && r1.final_dist < 1e-4 {
                converged += 1;
            }
            if r1.omega_index.is_some() && r1.omega_index == r2.omega_index {
                invariant += 1;
            }
            worst = worst.max(r1.final_dist);
        }
        ok &= converged == 10 && invariant == 10;
        parts.push(format!(
            "beta={beta}: {converged}/10 converged, {invariant}/10 same limit at dt/2, max final H1 distance {worst:.2e}"
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn a11() -> Result<(bool, String)> {
    let opts = ShootOptions::default();
    let mut count = 0;
    let mut ok = true;
    let sets = [
        default_params(0.5),
        default_params(1.0),
        default_params(2.0),
        default_params(4.0),
        fold_params(3.0),
        fold_params(5.5),
    ];
    for p in &sets {
        for s in shoot::find_steady_states(p, &opts)?.states {
            let sol = shoot::integrate_ivp(p, s.z, opts.tol, opts.n_out)?;
            let tol_f = shoot::attainable_tol(1e-8, s.z, sol.dzf);
            let r = shoot::check_persistence_bounds(&sol, tol_f, 1e-9);
            ok &= r.passed();
            count += 1;
        }
    }
    Ok((ok && count > 0, format!("{count} catalog states checked")))
}

fn a12() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let t: f64 = rng.gen_range(-100.0..100.0);
        let (lhs, rhs) = model::sos_identity(t);
        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE));
    }
    Ok((
        worst < 1e-10,
        format!("max relative difference {worst:.2e} at 100 points"),
    ))
}
