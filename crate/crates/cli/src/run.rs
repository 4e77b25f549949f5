//! Command dispatch.

use std::io::Write;
use std::path::Path;

use lbfilm_core::continuation::{self, BranchParameter, ContinuationOptions};
use lbfilm_core::spectrum::{self, KernelOptions, SpectrumResult};
use lbfilm_core::{acceptance, evolve, shoot, Grid, ModelParams, SteadyState};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::output::{self, columns, CsvSink, JsonLines};

/// What a command did: a one-line summary plus anything that `--strict`
/// turns into a failure.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub summary: String,
    pub warnings: Vec<String>,
}

/// Runs `cfg.command`, writing into `cfg.output_dir`.
pub fn run(cfg: &RunConfig, strict: bool) -> Result<Outcome, CliError> {
    let dir = cfg.output_dir.as_path();
    match cfg.command {
        Command::Steady => steady(cfg, dir),
        Command::Branches => branches(cfg, dir),
        Command::BranchPoints => branch_points(cfg, dir),
        Command::Spectrum => spectrum_cmd(cfg, dir),
        Command::Evolve => evolve_cmd(cfg, dir),
        Command::Sweep => sweep(cfg, dir, strict),
        Command::Verify => verify(),
    }
}

#[derive(Serialize)]
struct StateRecord<'a> {
    index: usize,
    #[serde(rename = "L")]
    length: f64,
    c0: f64,
    beta: f64,
    nu: f64,
    z: f64,
    f: Option<f64>,
    dzf: Option<f64>,
    nondegenerate: bool,
    mu_residual: f64,
    profile: &'a str,
}

/// Steady states at `cfg.params`: the shooting catalog at `beta = 0`,
/// otherwise the catalog continued in `beta` on `n` nodes.
fn steady_states(cfg: &RunConfig, n: usize) -> Result<(Vec<SteadyState>, Vec<String>), CliError> {
    let base = cfg.params.with_beta(0.0);
    let opts = lbfilm_core::ShootOptions { n_out: n, ..cfg.shoot };
    let cat = shoot::find_steady_states(&base, &opts)?;
    let mut warnings = Vec::new();
    if !cat.unresolved.is_empty() {
        warnings.push(format!(
            "{} unresolved tangency candidate(s) at z = {:?}",
            cat.unresolved.len(),
            cat.unresolved
        ));
    }
    if cat.scan_failures > 0 {
        warnings.push(format!("{} scan point(s) failed to integrate", cat.scan_failures));
    }
    if cfg.params.beta == 0.0 {
        return Ok((cat.states, warnings));
    }
    let copts = ContinuationOptions { n, ..cfg.continuation };
    let mut states = Vec::new();
    for s in &cat.states {
        if !s.nondegenerate {
            warnings.push(format!(
                "state z = {} is degenerate and cannot be continued in beta",
                s.z
            ));
            continue;
        }
        match continuation::continue_in_beta_strict(s, &[cfg.params.beta], &copts) {
            Ok(b) => {
                let mut st = b.samples.last().expect("nonempty branch").state.clone();
                st.index = states.len();
                states.push(st);
            }
            Err(e) => warnings.push(format!("state z = {}: {e}", s.z)),
        }
    }
    Ok((states, warnings))
}

fn write_catalog(cfg: &RunConfig, dir: &Path, states: &[SteadyState], warnings: &[String]) -> Result<(), CliError> {
    let mut out = JsonLines::create(dir, "catalog.jsonl", cfg)?;
    for w in warnings {
        out.comment(&format!("warning: {w}"))?;
    }
    for (k, s) in states.iter().enumerate() {
        let name = format!("profile_{k}.dat");
        let x = s.u.grid().nodes();
        output::write_profile(
            dir,
            &name,
            cfg,
            &format!("steady state {k}, z = {}", output::num(s.z)),
            &x,
            s.u.values(),
        )?;
        let p = &s.params;
        out.record(&StateRecord {
            index: k,
            length: p.length,
            c0: p.c0,
            beta: p.beta,
            nu: p.nu,
            z: s.z,
            f: s.f,
            dzf: s.dzf,
            nondegenerate: s.nondegenerate,
            mu_residual: s.mu_residual,
            profile: &name,
        })?;
    }
    out.finish()
}

fn steady(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let n = if cfg.params.beta == 0.0 {
        cfg.shoot.n_out
    } else {
        cfg.continuation.n
    };
    let (states, warnings) = steady_states(cfg, n)?;
    write_catalog(cfg, dir, &states, &warnings)?;
    Ok(Outcome {
        summary: format!("{} steady state(s)", states.len()),
        warnings,
    })
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![b],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Serialize)]
struct BranchRecord {
    state: usize,
    parameter: BranchParameter,
    samples: usize,
    reached: Option<f64>,
    max_ratio: Option<f64>,
    terminated: Option<String>,
}

fn branches(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let b = &cfg.branches;
    let base = cfg.params.with_beta(0.0);
    let cat = shoot::find_steady_states(&base, &cfg.shoot)?;
    let mut warnings = Vec::new();
    let mut index = JsonLines::create(dir, "branches.jsonl", cfg)?;
    let mut done = 0;
    for (k, seed) in cat.states.iter().enumerate() {
        if !seed.nondegenerate {
            warnings.push(format!("state {k} (z = {}) is degenerate; no branch", seed.z));
            continue;
        }
        let branch = match b.parameter {
            BranchParameter::Length => {
                let l = cfg.params.length;
                let targets: Vec<f64> = linspace(b.start.unwrap_or(l), b.stop.unwrap_or(2.0 * l), b.count)
                    .into_iter()
                    .filter(|t| *t != l)
                    .collect();
                continuation::continue_in_l(seed, &targets, &cfg.shoot)?
            }
            BranchParameter::Beta => {
                let stop = b.stop.unwrap_or(0.01);
                let targets = linspace(b.start.unwrap_or(stop / b.count as f64), stop, b.count);
                continuation::continue_in_beta(seed, &targets, &cfg.continuation)?
            }
        };
        let name = format!("branch_{k}.csv");
        match b.parameter {
            BranchParameter::Length => {
                let mut csv = CsvSink::create(dir, &name, cfg, &columns(&["L", "z", "f", "dzf"]))?;
                for s in &branch.samples {
                    csv.row(&[
                        s.value,
                        s.state.z,
                        s.state.f.unwrap_or(f64::NAN),
                        s.state.dzf.unwrap_or(f64::NAN),
                    ])?;
                }
                csv.finish()?;
            }
            BranchParameter::Beta => {
                let mut csv = CsvSink::create(
                    dir,
                    &name,
                    cfg,
                    &columns(&["beta", "residual", "iterations", "distance", "ratio"]),
                )?;
                for s in &branch.samples {
                    let d = s.distance.unwrap_or(f64::NAN);
                    let ratio = if s.value > 0.0 { d / s.value } else { f64::NAN };
                    csv.row(&[s.value, s.residual, s.iterations as f64, d, ratio])?;
                }
                csv.finish()?;
            }
        }
        if let Some(t) = &branch.terminated {
            warnings.push(format!("branch {k}: {t}"));
        }
        index.record(&BranchRecord {
            state: k,
            parameter: branch.parameter,
            samples: branch.samples.len(),
            reached: branch.reached(),
            max_ratio: branch.max_ratio(),
            terminated: branch.terminated.clone(),
        })?;
        done += 1;
    }
    index.finish()?;
    Ok(Outcome {
        summary: format!("{done} branch(es) from {} state(s)", cat.states.len()),
        warnings,
    })
}

fn branch_points(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let bp = &cfg.branch_points;
    let scan = shoot::detect_branch_points(&cfg.params, bp.l_min, bp.l_max, bp.count, &cfg.shoot, &bp.options)?;
    let mut out = JsonLines::create(dir, "branch_points.jsonl", cfg)?;
    for w in &scan.warnings {
        out.comment(&format!("warning: {w}"))?;
    }
    for p in &scan.points {
        out.record(p)?;
    }
    out.finish()?;
    let mut csv = CsvSink::create(dir, "zeros.csv", cfg, &columns(&["L", "z", "f", "dzf"]))?;
    for r in scan.records.iter().flatten() {
        csv.row(&[r.length, r.z, r.f, r.dzf])?;
    }
    csv.finish()?;
    Ok(Outcome {
        summary: format!("{} branch point(s) on [{}, {}]", scan.points.len(), bp.l_min, bp.l_max),
        warnings: scan.warnings,
    })
}

#[derive(Serialize)]
struct SpectrumRecord {
    state: usize,
    operator: spectrum::Operator,
    beta: f64,
    n: usize,
    min_abs: f64,
    min_abs_real_part: f64,
    max_abs_real_part: f64,
    max_abs_imag: f64,
    max_residual: f64,
    hyperbolic: Option<bool>,
    kernel_sigma_min: Option<f64>,
    kernel_dzf: Option<f64>,
    kernel_consistent: Option<bool>,
    eigenvalues: String,
}

fn write_eigenvalues(cfg: &RunConfig, dir: &Path, name: &str, s: &SpectrumResult<f64>) -> Result<(), CliError> {
    let mut csv = CsvSink::create(dir, name, cfg, &columns(&["re", "im"]))?;
    for e in &s.eigenvalues {
        csv.row(&[e.re, e.im])?;
    }
    csv.finish()
}

fn spectrum_cmd(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let sp = &cfg.spectrum;
    let beta = cfg.params.beta;
    let (states, mut warnings) = steady_states(cfg, sp.n)?;
    if sp.operator.wants_m() && !sp.operator.wants_l4() && beta != 0.0 {
        warnings.push("M is the linearization at beta = 0; skipped".into());
    }
    let mut out = JsonLines::create(dir, "spectrum.jsonl", cfg)?;
    let mut hyperbolic = 0;
    for (k, s) in states.iter().enumerate() {
        if sp.operator.wants_m() && beta == 0.0 {
            let m = spectrum::spectrum_m(s)?;
            let name = format!("spectrum_m_{k}.csv");
            write_eigenvalues(cfg, dir, &name, &m)?;
            let kernel = if sp.kernel_n > 0 {
                let ko = KernelOptions {
                    n: sp.kernel_n,
                    tol: cfg.shoot.tol,
                    tol_degenerate: cfg.shoot.tol_degenerate,
                    ..KernelOptions::default()
                };
                Some(spectrum::kernel_indicator(s, &ko)?)
            } else {
                None
            };
            if kernel.is_some_and(|k| !k.consistent) {
                warnings.push(format!("state {k}: kernel indicators disagree"));
            }
            out.record(&SpectrumRecord {
                state: k,
                operator: m.operator,
                beta,
                n: m.n,
                min_abs: m.min_abs,
                min_abs_real_part: m.min_abs_real_part,
                max_abs_real_part: m.max_abs_real_part,
                max_abs_imag: m.max_abs_imag,
                max_residual: m.max_residual,
                hyperbolic: None,
                kernel_sigma_min: kernel.map(|k| k.sigma_min),
                kernel_dzf: kernel.map(|k| k.dzf),
                kernel_consistent: kernel.map(|k| k.consistent),
                eigenvalues: name,
            })?;
        }
        if sp.operator.wants_l4() {
            let l4 = spectrum::spectrum_l4(s, beta)?;
            let name = format!("spectrum_l4_{k}.csv");
            write_eigenvalues(cfg, dir, &name, &l4)?;
            let hyp = l4.min_abs_real_part > sp.tol_gap;
            if hyp {
                hyperbolic += 1;
            } else {
                warnings.push(format!(
                    "state {k}: spectral gap {} below {}",
                    l4.min_abs_real_part, sp.tol_gap
                ));
            }
            out.record(&SpectrumRecord {
                state: k,
                operator: l4.operator,
                beta,
                n: l4.n,
                min_abs: l4.min_abs,
                min_abs_real_part: l4.min_abs_real_part,
                max_abs_real_part: l4.max_abs_real_part,
                max_abs_imag: l4.max_abs_imag,
                max_residual: l4.max_residual,
                hyperbolic: Some(hyp),
                kernel_sigma_min: None,
                kernel_dzf: None,
                kernel_consistent: None,
                eigenvalues: name,
            })?;
        }
    }
    out.finish()?;
    let summary = if sp.operator.wants_l4() {
        format!("{} state(s), {hyperbolic} hyperbolic", states.len())
    } else {
        format!("{} state(s)", states.len())
    };
    Ok(Outcome { summary, warnings })
}

/// Catalog for the omega-limit classification: discrete states on the
/// evolution grid.
fn evolve_catalog(cfg: &RunConfig, grid_n: usize) -> Result<(Vec<SteadyState>, Vec<String>), CliError> {
    if cfg.params.beta != 0.0 {
        return steady_states(cfg, grid_n);
    }
    let (states, mut warnings) = steady_states(cfg, cfg.shoot.n_out)?;
    let mut out = Vec::new();
    for s in states {
        if !s.nondegenerate {
            warnings.push(format!("state z = {} is degenerate; kept as sampled", s.z));
            out.push(s);
            continue;
        }
        match continuation::discrete_from_shooting(&s, grid_n, &cfg.continuation.newton) {
            Ok(sol) => out.push(sol.state),
            Err(e) => {
                warnings.push(format!(
                    "state z = {}: no discrete counterpart ({e}); kept as sampled",
                    s.z
                ));
                out.push(s);
            }
        }
    }
    Ok((out, warnings))
}

fn evolve_cmd(cfg: &RunConfig, dir: &Path) -> Result<Outcome, CliError> {
    let e = &cfg.evolve;
    let p = cfg.params;
    let opts = e.options(p.length);
    let (catalog, mut warnings) = evolve_catalog(cfg, e.n)?;
    write_catalog(cfg, dir, &catalog, &[])?;
    let grid = Grid::new(e.n, 0.0, p.length)?;
    let reports: Vec<Result<lbfilm_core::EvolveReport, CliError>> = (0..e.runs)
        .into_par_iter()
        .map(|r| {
            let seed = cfg.seed.wrapping_add(r as u64);
            let u0 = evolve::seeded_initial_data(grid, seed, e.modes, e.max_h1)?;
            let (traj, report) = evolve::evolve(&u0, &p, &opts, &catalog)?;
            write_trajectory(cfg, dir, r, &traj, catalog.len())?;
            let mut out = JsonLines::create(dir, &format!("report_{r}.jsonl"), cfg)?;
            out.comment(&format!("run {r}, seed {seed}"))?;
            out.record(&report)?;
            out.finish()?;
            Ok(report)
        })
        .collect();
    let mut converged = 0;
    for (r, rep) in reports.into_iter().enumerate() {
        let rep = rep?;
        if rep.converged && rep.omega_index.is_some() {
            converged += 1;
        } else {
            warnings.push(format!(
                "run {r}: not identified with a catalog state (converged = {}, distance {})",
                rep.converged, rep.final_dist
            ));
        }
    }
    Ok(Outcome {
        summary: format!("{converged}/{} run(s) converged to a catalog state", e.runs),
        warnings,
    })
}

fn write_trajectory(
    cfg: &RunConfig,
    dir: &Path,
    r: usize,
    traj: &lbfilm_core::Trajectory,
    k: usize,
) -> Result<(), CliError> {
    let mut cols = columns(&["t", "E", "E1", "muV2", "advect", "dEdt_residual", "ut_norm"]);
    cols.extend((0..k).map(|i| format!("dist_{i}")));
    let mut csv = CsvSink::create(dir, &format!("trajectory_{r}.csv"), cfg, &cols)?;
    let mut norms = CsvSink::create(
        dir,
        &format!("norms_{r}.csv"),
        cfg,
        &columns(&["t", "mass", "H0", "H1", "H2", "H3", "H4"]),
    )?;
    let x = traj.grid.nodes();
    for (i, s) in traj.samples.iter().enumerate() {
        let mut row = vec![s.t, s.energy, s.e1, s.mu_v2, s.advect, s.dedt_residual, s.ut_norm];
        row.extend(&s.dist_h1);
        csv.row(&row)?;
        let mut nrow = vec![s.t, s.mass];
        nrow.extend(s.hm_norms);
        norms.row(&nrow)?;
        if let Some(u) = &s.u {
            let note = format!("run {r}, record {i}, t = {}", output::num(s.t));
            output::write_profile(dir, &format!("snapshot_{r}_{i}.dat"), cfg, &note, &x, u.values())?;
        }
    }
    csv.finish()?;
    norms.finish()
}

fn sweep(cfg: &RunConfig, dir: &Path, strict: bool) -> Result<Outcome, CliError> {
    let cells = cfg.sweep_cells();
    let results: Vec<(ModelParams, Result<Outcome, CliError>)> = cells
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut sub = cfg.clone();
            sub.command = cfg.sweep.task;
            sub.params = *p;
            sub.output_dir = dir.join(format!("cell_{i:04}"));
            let res = sub
                .validate(false)
                .map_err(CliError::from)
                .and_then(|_| run(&sub, strict));
            (*p, res)
        })
        .collect();
    let mut csv = CsvSink::create(
        dir,
        "index.csv",
        cfg,
        &columns(&["cell", "L", "c0", "beta", "nu", "status", "summary", "message"]),
    )?;
    let mut ok = 0;
    let mut warnings = Vec::new();
    for (i, (p, res)) in results.iter().enumerate() {
        let (status, summary, message) = match res {
            Ok(o) => {
                ok += 1;
                if !o.warnings.is_empty() {
                    warnings.push(format!("cell {i}: {}", o.warnings.join("; ")));
                }
                ("ok", o.summary.clone(), o.warnings.join("; "))
            }
            Err(e) => {
                warnings.push(format!("cell {i} failed: {e}"));
                ("error", String::new(), e.to_string())
            }
        };
        csv.text_row(&[
            format!("cell_{i:04}"),
            output::num(p.length),
            output::num(p.c0),
            output::num(p.beta),
            output::num(p.nu),
            status.to_string(),
            summary,
            message,
        ])?;
    }
    csv.finish()?;
    let failed = results.len() - ok;
    if ok == 0 || (strict && failed > 0) {
        return Err(CliError::Failed(format!(
            "{failed} of {} sweep cell(s) failed",
            results.len()
        )));
    }
    Ok(Outcome {
        summary: format!("{ok}/{} cell(s) succeeded", results.len()),
        warnings,
    })
}

fn verify() -> Result<Outcome, CliError> {
    let mut failed = Vec::new();
    let stdout = std::io::stdout();
    for c in acceptance::criteria() {
        let out = c.run();
        let mut lock = stdout.lock();
        writeln!(lock, "{}", out.line())?;
        lock.flush()?;
        if !out.passed {
            failed.push(out.id);
        }
    }
    if failed.is_empty() {
        Ok(Outcome {
            summary: "all acceptance criteria passed".into(),
            warnings: Vec::new(),
        })
    } else {
        Err(CliError::Failed(format!("failed: {}", failed.join(", "))))
    }
}
