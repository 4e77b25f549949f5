//! Run configuration: a line-oriented `key = value` format with `#`
//! comments and `[section]` headers. Parameter keys may also appear before
//! the first header. Unknown sections and keys are rejected.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use lbfilm_core::continuation::{BranchParameter, ContinuationOptions};
use lbfilm_core::shoot::BranchOptions;
use lbfilm_core::{EvolveOptions, ModelParams, ShootOptions};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Command {
    Steady,
    Branches,
    BranchPoints,
    Spectrum,
    Evolve,
    Sweep,
    Verify,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Steady,
        Command::Branches,
        Command::BranchPoints,
        Command::Spectrum,
        Command::Evolve,
        Command::Sweep,
        Command::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Steady => "steady",
            Command::Branches => "branches",
            Command::BranchPoints => "branch-points",
            Command::Spectrum => "spectrum",
            Command::Evolve => "evolve",
            Command::Sweep => "sweep",
            Command::Verify => "verify",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumOperator {
    M,
    L4,
    Both,
}

impl SpectrumOperator {
    fn name(self) -> &'static str {
        match self {
            SpectrumOperator::M => "m",
            SpectrumOperator::L4 => "l4",
            SpectrumOperator::Both => "both",
        }
    }

    pub fn wants_m(self) -> bool {
        matches!(self, SpectrumOperator::M | SpectrumOperator::Both)
    }

    pub fn wants_l4(self) -> bool {
        matches!(self, SpectrumOperator::L4 | SpectrumOperator::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchSettings {
    pub parameter: BranchParameter,
    /// `None`: `L` for length branches, `beta_max / count` for beta branches.
    pub start: Option<f64>,
    /// `None`: `2 L` for length branches, `0.01` for beta branches.
    pub stop: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPointSettings {
    pub l_min: f64,
    pub l_max: f64,
    pub count: usize,
    pub options: BranchOptions<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSettings {
    pub operator: SpectrumOperator,
    pub n: usize,
    pub tol_gap: f64,
    /// Nodes for the kernel indicator of `M`; 0 disables it.
    pub kernel_n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveSettings {
    /// `None`: the default for the domain length.
    pub dt: Option<f64>,
    pub t_final: f64,
    pub n: usize,
    pub stabilization: Option<f64>,
    pub record_every: usize,
    pub stop_tol: f64,
    pub plateau_records: usize,
    pub snapshot_every: usize,
    pub omega_tol: f64,
    /// Independent runs, seeded `seed, seed + 1, ...`.
    pub runs: usize,
    pub modes: usize,
    pub max_h1: f64,
}

impl EvolveSettings {
    pub fn options(&self, length: f64) -> EvolveOptions {
        let base = EvolveOptions::for_length(length);
        EvolveOptions {
            dt: self.dt.unwrap_or(base.dt),
            t_final: self.t_final,
            n: self.n,
            stabilization: self.stabilization,
            record_every: self.record_every,
            stop_tol: self.stop_tol,
            plateau_records: self.plateau_records,
            snapshot_every: self.snapshot_every,
            omega_tol: self.omega_tol,
        }
    }
}

impl Default for EvolveSettings {
    fn default() -> Self {
        let base = EvolveOptions::for_length(1.0);
        Self {
            dt: None,
            // runs end early on a plateau; the slowest modes need t ~ 50-100
            t_final: 100.0,
            n: base.n,
            stabilization: None,
            record_every: base.record_every,
            stop_tol: base.stop_tol,
            plateau_records: base.plateau_records,
            snapshot_every: 0,
            omega_tol: base.omega_tol,
            runs: 1,
            modes: 6,
            max_h1: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Axis {
    Length,
    C0,
    Beta,
    Nu,
}

impl Axis {
    const ALL: [Axis; 4] = [Axis::Length, Axis::C0, Axis::Beta, Axis::Nu];

    pub fn key(self) -> &'static str {
        match self {
            Axis::Length => "L",
            Axis::C0 => "c0",
            Axis::Beta => "beta",
            Axis::Nu => "nu",
        }
    }

    pub fn apply(self, p: ModelParams, v: f64) -> ModelParams {
        let mut p = p;
        match self {
            Axis::Length => p.length = v,
            Axis::C0 => p.c0 = v,
            Axis::Beta => p.beta = v,
            Axis::Nu => p.nu = v,
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub task: Command,
    /// Axes in the fixed order `L, c0, beta, nu`.
    pub axes: Vec<(Axis, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub params: ModelParams,
    pub shoot: ShootOptions,
    pub continuation: ContinuationOptions<f64>,
    pub branches: BranchSettings,
    pub branch_points: BranchPointSettings,
    pub spectrum: SpectrumSettings,
    pub evolve: EvolveSettings,
    pub sweep: SweepSettings,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        Self {
            command,
            seed: 0,
            output_dir: PathBuf::from("out"),
            params: ModelParams::new(1.0, -0.3),
            shoot: ShootOptions::default(),
            continuation: ContinuationOptions::default(),
            branches: BranchSettings {
                parameter: BranchParameter::Length,
                start: None,
                stop: None,
                count: 21,
            },
            branch_points: BranchPointSettings {
                l_min: 0.5,
                l_max: 6.0,
                count: 100,
                options: BranchOptions::default(),
            },
            spectrum: SpectrumSettings {
                operator: SpectrumOperator::Both,
                n: 257,
                tol_gap: lbfilm_core::spectrum::default_tol_gap(),
                kernel_n: 4097,
            },
            evolve: EvolveSettings::default(),
            sweep: SweepSettings {
                task: Command::Steady,
                axes: Vec::new(),
            },
        }
    }

    /// Checks every constraint; the message names the violated one.
    pub fn validate(&self, strict: bool) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        self.params
            .validate(strict)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let s = &self.shoot;
        let positive = [
            ("shoot.tol", s.tol),
            ("shoot.margin_frac", s.margin_frac),
            ("shoot.tol_f", s.tol_f),
            ("shoot.tol_degenerate", s.tol_degenerate),
            ("shoot.tol_tangent", s.tol_tangent),
            ("shoot.dedup", s.dedup),
            ("newton.tol", self.continuation.newton.tol),
            ("newton.tol_singular", self.continuation.newton.tol_singular),
            ("newton.min_step", self.continuation.min_step),
            ("branch_points.tol_branch", self.branch_points.options.tol_branch),
            ("spectrum.tol_gap", self.spectrum.tol_gap),
            ("evolve.t_final", self.evolve.t_final),
            ("evolve.stop_tol", self.evolve.stop_tol),
            ("evolve.omega_tol", self.evolve.omega_tol),
            ("evolve.max_h1", self.evolve.max_h1),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} > 0 required, got {v}"));
            }
        }
        if !(1e-13..=1e-6).contains(&s.tol) {
            return bad(format!("shoot.tol must lie in [1e-13, 1e-6], got {}", s.tol));
        }
        if s.n_out < 9 {
            return bad(format!("shoot.n_out >= 9 required, got {}", s.n_out));
        }
        if s.n_scan < 64 {
            return bad(format!("shoot.n_scan >= 64 required, got {}", s.n_scan));
        }
        if self.continuation.n < 9 {
            return bad(format!("newton.n >= 9 required, got {}", self.continuation.n));
        }
        if self.branches.count < 1 {
            return bad("branches.count >= 1 required".into());
        }
        for (name, v) in [
            ("branches.start", self.branches.start),
            ("branches.stop", self.branches.stop),
        ] {
            if let Some(v) = v {
                if !v.is_finite() || v < 0.0 {
                    return bad(format!("{name} must be finite and >= 0, got {v}"));
                }
            }
        }
        let bp = &self.branch_points;
        if !(bp.l_min > 0.0 && bp.l_max > bp.l_min) {
            return bad(format!(
                "branch_points needs 0 < l_min < l_max, got [{}, {}]",
                bp.l_min, bp.l_max
            ));
        }
        if bp.count < 2 {
            return bad("branch_points.count >= 2 required".into());
        }
        if self.spectrum.n < 5 || self.spectrum.n - 1 > lbfilm_core::spectrum::MAX_DENSE {
            return bad(format!(
                "spectrum.n must lie in [5, {}], got {}",
                lbfilm_core::spectrum::MAX_DENSE + 1,
                self.spectrum.n
            ));
        }
        if self.spectrum.kernel_n != 0 && self.spectrum.kernel_n < 5 {
            return bad("spectrum.kernel_n must be 0 or >= 5".into());
        }
        let e = &self.evolve;
        if let Some(dt) = e.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("evolve.dt > 0 required, got {dt}"));
            }
        }
        if let Some(st) = e.stabilization {
            if !(st >= 0.0 && st.is_finite()) {
                return bad(format!("evolve.stabilization >= 0 required, got {st}"));
            }
        }
        if e.n < 33 {
            return bad(format!("evolve.n >= 33 required, got {}", e.n));
        }
        if e.record_every < 1 || e.runs < 1 || e.modes < 1 {
            return bad("evolve.record_every, evolve.runs and evolve.modes must be >= 1".into());
        }
        if self.command == Command::Sweep {
            if self.sweep.axes.is_empty() {
                return bad("sweep needs at least one axis (L, c0, beta or nu)".into());
            }
            if let Some((a, _)) = self.sweep.axes.iter().find(|(_, v)| v.is_empty()) {
                return bad(format!("sweep range {} is empty", a.key()));
            }
            if matches!(self.sweep.task, Command::Sweep | Command::Verify) {
                return bad(format!("sweep.task cannot be {}", self.sweep.task));
            }
        }
        Ok(())
    }

    /// Parameter tuples of the sweep, sorted lexicographically by
    /// `(L, c0, beta, nu)`.
    pub fn sweep_cells(&self) -> Vec<ModelParams> {
        let mut cells = vec![self.params];
        for (axis, values) in &self.sweep.axes {
            cells = cells
                .iter()
                .flat_map(|p| values.iter().map(move |&v| axis.apply(*p, v)))
                .collect();
        }
        cells.sort_by(|a, b| {
            let key = |p: &ModelParams| [p.length, p.c0, p.beta, p.nu];
            key(a).partial_cmp(&key(b)).expect("finite sweep values")
        });
        cells
    }

    /// The canonical text form; [`parse_config`] reads it back to an equal
    /// value.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let p = &self.params;
        let s = &self.shoot;
        let c = &self.continuation;
        let b = &self.branches;
        let bp = &self.branch_points;
        let sp = &self.spectrum;
        let e = &self.evolve;
        let _ = writeln!(w, "command = {}", self.command);
        let _ = writeln!(w, "seed = {}", self.seed);
        let _ = writeln!(w, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(w, "\n[params]");
        let _ = writeln!(w, "L = {}", f(p.length));
        let _ = writeln!(w, "c0 = {}", f(p.c0));
        let _ = writeln!(w, "beta = {}", f(p.beta));
        let _ = writeln!(w, "nu = {}", f(p.nu));
        let _ = writeln!(w, "x_mns = {}", auto(p.x_mns));
        let _ = writeln!(w, "l_mns = {}", auto(p.l_mns));
        let _ = writeln!(w, "\n[shoot]");
        let _ = writeln!(w, "tol = {}", f(s.tol));
        let _ = writeln!(w, "n_out = {}", s.n_out);
        let _ = writeln!(w, "n_scan = {}", s.n_scan);
        let _ = writeln!(w, "margin_frac = {}", f(s.margin_frac));
        let _ = writeln!(w, "tol_f = {}", f(s.tol_f));
        let _ = writeln!(w, "tol_degenerate = {}", f(s.tol_degenerate));
        let _ = writeln!(w, "tol_tangent = {}", f(s.tol_tangent));
        let _ = writeln!(w, "dedup = {}", f(s.dedup));
        let _ = writeln!(w, "max_newton = {}", s.max_newton);
        let _ = writeln!(w, "\n[newton]");
        let _ = writeln!(w, "n = {}", c.n);
        let _ = writeln!(w, "tol = {}", f(c.newton.tol));
        let _ = writeln!(w, "max_iter = {}", c.newton.max_iter);
        let _ = writeln!(w, "tol_singular = {}", f(c.newton.tol_singular));
        let _ = writeln!(w, "min_step = {}", f(c.min_step));
        let _ = writeln!(w, "\n[branches]");
        let _ = writeln!(
            w,
            "parameter = {}",
            match b.parameter {
                BranchParameter::Beta => "beta",
                BranchParameter::Length => "length",
            }
        );
        let _ = writeln!(w, "start = {}", auto(b.start));
        let _ = writeln!(w, "stop = {}", auto(b.stop));
        let _ = writeln!(w, "count = {}", b.count);
        let _ = writeln!(w, "\n[branch_points]");
        let _ = writeln!(w, "l_min = {}", f(bp.l_min));
        let _ = writeln!(w, "l_max = {}", f(bp.l_max));
        let _ = writeln!(w, "count = {}", bp.count);
        let _ = writeln!(w, "tol_branch = {}", f(bp.options.tol_branch));
        let _ = writeln!(w, "max_newton = {}", bp.options.max_newton);
        let _ = writeln!(w, "\n[spectrum]");
        let _ = writeln!(w, "operator = {}", sp.operator.name());
        let _ = writeln!(w, "n = {}", sp.n);
        let _ = writeln!(w, "tol_gap = {}", f(sp.tol_gap));
        let _ = writeln!(w, "kernel_n = {}", sp.kernel_n);
        let _ = writeln!(w, "\n[evolve]");
        let _ = writeln!(w, "dt = {}", auto(e.dt));
        let _ = writeln!(w, "t_final = {}", f(e.t_final));
        let _ = writeln!(w, "n = {}", e.n);
        let _ = writeln!(w, "stabilization = {}", auto(e.stabilization));
        let _ = writeln!(w, "record_every = {}", e.record_every);
        let _ = writeln!(w, "stop_tol = {}", f(e.stop_tol));
        let _ = writeln!(w, "plateau_records = {}", e.plateau_records);
        let _ = writeln!(w, "snapshot_every = {}", e.snapshot_every);
        let _ = writeln!(w, "omega_tol = {}", f(e.omega_tol));
        let _ = writeln!(w, "runs = {}", e.runs);
        let _ = writeln!(w, "modes = {}", e.modes);
        let _ = writeln!(w, "max_h1 = {}", f(e.max_h1));
        let _ = writeln!(w, "\n[sweep]");
        let _ = writeln!(w, "task = {}", self.sweep.task);
        for (axis, values) in &self.sweep.axes {
            let list: Vec<String> = values.iter().map(|&v| f(v)).collect();
            let _ = writeln!(w, "{} = {}", axis.key(), list.join(", "));
        }
        out
    }
}

/// Shortest text that parses back to the same `f64`.
fn f(v: f64) -> String {
    format!("{v:?}")
}

fn auto(v: Option<f64>) -> String {
    v.map_or_else(|| "auto".to_string(), f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Top,
    Params,
    Shoot,
    Newton,
    Branches,
    BranchPoints,
    Spectrum,
    Evolve,
    Sweep,
}

impl Section {
    fn from_header(name: &str) -> Option<Self> {
        Some(match name {
            "params" => Section::Params,
            "shoot" => Section::Shoot,
            "newton" => Section::Newton,
            "branches" => Section::Branches,
            "branch_points" => Section::BranchPoints,
            "spectrum" => Section::Spectrum,
            "evolve" => Section::Evolve,
            "sweep" => Section::Sweep,
            _ => return None,
        })
    }
}

/// Parses and validates a configuration. The `command` key is required.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with(text, None, false)
}

/// Like [`parse_config`]; `command` supplies the command when the text has
/// none and must agree with it otherwise. `strict` tightens parameter
/// validation.
pub fn parse_config_with(text: &str, command: Option<Command>, strict: bool) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::defaults(command.unwrap_or(Command::Steady));
    let mut file_command = None;
    let mut section = Section::Top;
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |message: String| ConfigError::Parse { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(format!("malformed section header `{content}`")))?
                .trim();
            section = Section::from_header(name).ok_or_else(|| err(format!("unknown section `[{name}]`")))?;
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(err("empty key".into()));
        }
        if value.is_empty() {
            return Err(err(format!("missing value for `{key}`")));
        }
        // parameter keys at the top level live in [params]
        let effective = if section == Section::Top && is_param_key(key) {
            Section::Params
        } else {
            section
        };
        if !seen.insert((effective as u8, key.to_string())) {
            return Err(err(format!("duplicate key `{key}`")));
        }
        set_key(&mut cfg, &mut file_command, effective, key, value).map_err(err)?;
    }
    cfg.command = match (file_command, command) {
        (Some(a), Some(b)) if a != b => {
            return Err(ConfigError::Invalid(format!(
                "command `{b}` on the command line disagrees with `command = {a}` in the file"
            )))
        }
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => return Err(ConfigError::Invalid("missing key `command`".into())),
    };
    cfg.validate(strict)?;
    Ok(cfg)
}

fn is_param_key(key: &str) -> bool {
    matches!(key, "L" | "c0" | "beta" | "nu" | "x_mns" | "l_mns")
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse::<T>()
        .map_err(|_| format!("`{key}`: cannot parse `{value}`"))
}

fn opt_num(key: &str, value: &str) -> Result<Option<f64>, String> {
    if value == "auto" {
        Ok(None)
    } else {
        num(key, value).map(Some)
    }
}

/// `a, b, c` or `start:stop:count` (inclusive, uniformly spaced).
fn values(key: &str, value: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let a: f64 = num(key, parts[0])?;
        let b: f64 = num(key, parts[1])?;
        let n: usize = num(key, parts[2])?;
        return Ok(match n {
            0 => Vec::new(),
            1 => vec![a],
            _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
        });
    }
    if parts.len() != 1 {
        return Err(format!("`{key}`: expected a list or start:stop:count, got `{value}`"));
    }
    value.split(',').map(|v| num::<f64>(key, v.trim())).collect()
}

fn set_key(
    cfg: &mut RunConfig,
    command: &mut Option<Command>,
    section: Section,
    key: &str,
    value: &str,
) -> Result<(), String> {
    let unknown = || {
        let where_ = match section {
            Section::Top => "at the top level".to_string(),
            other => format!("in section [{}]", section_name(other)),
        };
        Err(format!("unknown key `{key}` {where_}"))
    };
    match section {
        Section::Top => match key {
            "command" => *command = Some(value.parse()?),
            "seed" => cfg.seed = num(key, value)?,
            "output_dir" => cfg.output_dir = PathBuf::from(value),
            _ => return unknown(),
        },
        Section::Params => {
            let p = &mut cfg.params;
            match key {
                "L" => p.length = num(key, value)?,
                "c0" => p.c0 = num(key, value)?,
                "beta" => p.beta = num(key, value)?,
                "nu" => p.nu = num(key, value)?,
                "x_mns" => p.x_mns = opt_num(key, value)?,
                "l_mns" => p.l_mns = opt_num(key, value)?,
                _ => return unknown(),
            }
        }
        Section::Shoot => {
            let s = &mut cfg.shoot;
            match key {
                "tol" => s.tol = num(key, value)?,
                "n_out" => s.n_out = num(key, value)?,
                "n_scan" => s.n_scan = num(key, value)?,
                "margin_frac" => s.margin_frac = num(key, value)?,
                "tol_f" => s.tol_f = num(key, value)?,
                "tol_degenerate" => s.tol_degenerate = num(key, value)?,
                "tol_tangent" => s.tol_tangent = num(key, value)?,
                "dedup" => s.dedup = num(key, value)?,
                "max_newton" => s.max_newton = num(key, value)?,
                _ => return unknown(),
            }
        }
        Section::Newton => {
            let c = &mut cfg.continuation;
            match key {
                "n" => c.n = num(key, value)?,
                "tol" => c.newton.tol = num(key, value)?,
                "max_iter" => c.newton.max_iter = num(key, value)?,
                "tol_singular" => c.newton.tol_singular = num(key, value)?,
                "min_step" => c.min_step = num(key, value)?,
                _ => return unknown(),
            }
        }
        Section::Branches => {
            let b = &mut cfg.branches;
            match key {
                "parameter" => {
                    b.parameter = match value {
                        "beta" => BranchParameter::Beta,
                        "length" | "L" => BranchParameter::Length,
                        _ => return Err(format!("`parameter` must be `beta` or `length`, got `{value}`")),
                    }
                }
                "start" => b.start = opt_num(key, value)?,
                "stop" => b.stop = opt_num(key, value)?,
                "count" => b.count = num(key, value)?,
                _ => return unknown(),
            }
        }
        Section::BranchPoints => {
            let bp = &mut cfg.branch_points;
            match key {
                "l_min" => bp.l_min = num(key, value)?,
                "l_max" => bp.l_max = num(key, value)?,
                "count" => bp.count = num(key, value)?,
                "tol_branch" => bp.options.tol_branch = num(key, value)?,
                "max_newton" => bp.options.max_newton = num(key, value)?,
                _ => return unknown(),
            }
        }
        Section::Spectrum => {
            let sp = &mut cfg.spectrum;
            match key {
                "operator" => {
                    sp.operator = match value {
                        "m" | "M" => SpectrumOperator::M,
                        "l4" | "L4" => SpectrumOperator::L4,
                        "both" => SpectrumOperator::Both,
                        _ => return Err(format!("`operator` must be m, l4 or both, got `{value}`")),
                    }
                }
                "n" => sp.n = num(key, value)?,
                "tol_gap" => sp.tol_gap = num(key, value)?,
                "kernel_n" => sp.kernel_n = num(key, value)?,
                _ => return unknown(),
            }
        }
        Section::Evolve => {
            let e = &mut cfg.evolve;
            match key {
                "dt" => e.dt = opt_num(key, value)?,
                "t_final" => e.t_final = num(key, value)?,
                "n" => e.n = num(key, value)?,
                "stabilization" => e.stabilization = opt_num(key, value)?,
                "record_every" => e.record_every = num(key, value)?,
                "stop_tol" => e.stop_tol = num(key, value)?,
                "plateau_records" => e.plateau_records = num(key, value)?,
                "snapshot_every" => e.snapshot_every = num(key, value)?,
                "omega_tol" => e.omega_tol = num(key, value)?,
                "runs" => e.runs = num(key, value)?,
                "modes" => e.modes = num(key, value)?,
                "max_h1" => e.max_h1 = num(key, value)?,
                _ => return unknown(),
            }
        }
        Section::Sweep => {
            if key == "task" {
                cfg.sweep.task = value.parse()?;
            } else if let Some(axis) = Axis::ALL.into_iter().find(|a| a.key() == key) {
                cfg.sweep.axes.push((axis, values(key, value)?));
                cfg.sweep.axes.sort_by_key(|(a, _)| *a);
            } else {
                return unknown();
            }
        }
    }
    Ok(())
}

fn section_name(s: Section) -> &'static str {
    match s {
        Section::Top => "",
        Section::Params => "params",
        Section::Shoot => "shoot",
        Section::Newton => "newton",
        Section::Branches => "branches",
        Section::BranchPoints => "branch_points",
        Section::Spectrum => "spectrum",
        Section::Evolve => "evolve",
        Section::Sweep => "sweep",
    }
}
