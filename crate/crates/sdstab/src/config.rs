//! Scenario files: a flat `key = value` format with dotted keys.
//!
//! One file describes one scenario. Keys are grouped into the blocks
//! `system.*`, `loop.*`, `perturbation.*`, `analysis.*`, `output.*` and
//! `fd.*`; `#` starts a comment. Unknown keys are rejected and every problem
//! in a file is reported, not just the first one. All defaults are filled in
//! at parse time so a report can echo the complete resolved configuration.
//!
//! ```text
//! # heated rod, perturbed boundary
//! system.kind = heat
//! system.N = 32
//! loop.tau = 0.05
//! perturbation.c = 0.05
//! analysis.periods = 50
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::heat::{
    build_diagonal_system, build_heat_system, cosine_mode, DiagonalSystemSpec, FdGrid, FdScheme,
    HeatSystemSpec,
};
use crate::perturbation::RankOnePerturbation;
use crate::sampled::{ControlOperator, SampledSystem};
use crate::spectral::{DiagonalGenerator, DualFunctional, ExtrapolationVector, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Heat,
    Diagonal,
    Custom,
}

impl SystemKind {
    fn as_str(&self) -> &'static str {
        match self {
            SystemKind::Heat => "heat",
            SystemKind::Diagonal => "diagonal",
            SystemKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// All coefficients 1.
    Ones,
    /// First coordinate vector.
    Unit,
    /// Explicit coefficients, zero-padded to the truncation.
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum FdInitial {
    /// Spatially constant profile 1.
    Uniform,
    /// `1 + cos(pi xi)`: mass on the first two modes.
    FirstModes,
    /// Explicit samples on the grid.
    List(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputFormats {
    pub csv: bool,
    pub json: bool,
}

/// Fully resolved scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub kind: SystemKind,
    pub truncation: usize,
    pub q: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub zeta: f64,
    pub eigenvalues: Option<Vec<f64>>,
    pub tau: f64,
    pub omega: f64,
    pub control: Option<Vec<f64>>,
    pub feedback: Option<Vec<f64>>,
    pub x0: InitialState,
    pub scale: f64,
    pub direction: Option<Vec<f64>>,
    pub boundary: Vec<f64>,
    pub c_grid: Option<Vec<f64>>,
    pub periods: usize,
    pub substeps: usize,
    pub seed: u64,
    pub tol_c: f64,
    pub c_max: f64,
    pub prescan: usize,
    pub t_points: usize,
    pub volterra_tol: f64,
    pub volterra_max_iters: usize,
    pub probe_trials: usize,
    pub probe_t1: f64,
    pub out_dir: String,
    pub formats: OutputFormats,
    pub full_states: bool,
    pub fd_points: usize,
    pub fd_dt: f64,
    pub fd_scheme: FdScheme,
    pub fd_z0: FdInitial,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            kind: SystemKind::Heat,
            truncation: 64,
            q: 2.0,
            kappa: std::f64::consts::PI.powi(2),
            gamma: 2.0,
            zeta: 0.0,
            eigenvalues: None,
            tau: 0.05,
            omega: 0.0,
            control: None,
            feedback: None,
            x0: InitialState::Ones,
            scale: 0.0,
            direction: None,
            boundary: vec![-1.0],
            c_grid: None,
            periods: 50,
            substeps: 10,
            seed: 0,
            tol_c: 1e-6,
            c_max: 1.0,
            prescan: 32,
            t_points: 64,
            volterra_tol: 1e-10,
            volterra_max_iters: 200,
            probe_trials: 12,
            probe_t1: 0.1,
            out_dir: "out".into(),
            formats: OutputFormats { csv: true, json: true },
            full_states: false,
            fd_points: 401,
            fd_dt: 1e-4,
            fd_scheme: FdScheme::Trapezoidal,
            fd_z0: FdInitial::FirstModes,
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "system.kind",
    "system.N",
    "system.q",
    "system.kappa",
    "system.gamma",
    "system.zeta",
    "system.eigenvalues",
    "loop.tau",
    "loop.omega",
    "loop.b",
    "loop.F",
    "loop.x0",
    "perturbation.c",
    "perturbation.d",
    "perturbation.h",
    "perturbation.c_grid",
    "analysis.periods",
    "analysis.substeps",
    "analysis.seed",
    "analysis.tol_c",
    "analysis.c_max",
    "analysis.prescan",
    "analysis.t_points",
    "analysis.volterra_tol",
    "analysis.volterra_max_iters",
    "analysis.probe_trials",
    "analysis.probe_t1",
    "output.dir",
    "output.formats",
    "output.full_states",
    "fd.points",
    "fd.dt",
    "fd.scheme",
    "fd.z0",
];

fn parse_f64(key: &str, value: &str, issues: &mut Vec<String>) -> Option<f64> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() => Some(v),
        _ => {
            issues.push(format!("{key}: expected a finite number, got '{value}'"));
            None
        }
    }
}

fn parse_usize(key: &str, value: &str, issues: &mut Vec<String>) -> Option<usize> {
    match value.parse::<usize>() {
        Ok(v) => Some(v),
        Err(_) => {
            issues.push(format!("{key}: expected a nonnegative integer, got '{value}'"));
            None
        }
    }
}

fn parse_u64(key: &str, value: &str, issues: &mut Vec<String>) -> Option<u64> {
    match value.parse::<u64>() {
        Ok(v) => Some(v),
        Err(_) => {
            issues.push(format!("{key}: expected a nonnegative integer, got '{value}'"));
            None
        }
    }
}

fn parse_bool(key: &str, value: &str, issues: &mut Vec<String>) -> Option<bool> {
    match value {
        "true" | "yes" | "on" => Some(true),
        "false" | "no" | "off" => Some(false),
        _ => {
            issues.push(format!("{key}: expected true/false, got '{value}'"));
            None
        }
    }
}

fn parse_list(key: &str, value: &str, issues: &mut Vec<String>) -> Option<Vec<f64>> {
    let mut out = Vec::new();
    for item in value.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        match item.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            _ => {
                issues.push(format!("{key}: '{item}' is not a finite number"));
                return None;
            }
        }
    }
    if out.is_empty() {
        issues.push(format!("{key}: expected at least one number"));
        return None;
    }
    Some(out)
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str_checked(&text)
    }

    /// Parse and validate, reporting every offending key at once.
    pub fn from_str_checked(text: &str) -> Result<Self> {
        let mut issues: Vec<String> = Vec::new();
        let mut seen: BTreeMap<String, String> = BTreeMap::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                issues.push(format!("line {}: expected 'key = value', got '{line}'", lineno + 1));
                continue;
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                issues.push(format!("{key}: unknown key"));
                continue;
            }
            if seen.insert(key.clone(), value).is_some() {
                issues.push(format!("{key}: duplicate key"));
            }
        }

        let mut cfg = ScenarioConfig::default();
        let mut explicit_q = false;
        let mut explicit_n = false;
        for (key, value) in &seen {
            match key.as_str() {
                "system.kind" => match value.as_str() {
                    "heat" => cfg.kind = SystemKind::Heat,
                    "diagonal" => cfg.kind = SystemKind::Diagonal,
                    "custom" => cfg.kind = SystemKind::Custom,
                    other => issues.push(format!(
                        "system.kind: expected heat|diagonal|custom, got '{other}'"
                    )),
                },
                "system.N" => {
                    if let Some(v) = parse_usize(key, value, &mut issues) {
                        cfg.truncation = v;
                        explicit_n = true;
                    }
                }
                "system.q" => {
                    if let Some(v) = parse_f64(key, value, &mut issues) {
                        cfg.q = v;
                        explicit_q = true;
                    }
                }
                "system.kappa" => {
                    if let Some(v) = parse_f64(key, value, &mut issues) {
                        cfg.kappa = v;
                    }
                }
                "system.gamma" => {
                    if let Some(v) = parse_f64(key, value, &mut issues) {
                        cfg.gamma = v;
                    }
                }
                "system.zeta" => {
                    if let Some(v) = parse_f64(key, value, &mut issues) {
                        cfg.zeta = v;
                    }
                }
                "system.eigenvalues" => cfg.eigenvalues = parse_list(key, value, &mut issues),
                "loop.tau" => {
                    if let Some(v) = parse_f64(key, value, &mut issues) {
                        cfg.tau = v;
                    }
                }
                "loop.omega" => {
                    if let Some(v) = parse_f64(key, value, &mut issues) {
                        cfg.omega = v;
                    }
                }
                "loop.b" => cfg.control = parse_list(key, value, &mut issues),
                "loop.F" => cfg.feedback = parse_list(key, value, &mut issues),
                "loop.x0" => match value.as_str() {
                    "ones" => cfg.x0 = InitialState::Ones,
                    "unit" => cfg.x0 = InitialState::Unit,
                    list => {
                        if let Some(v) = parse_list(key, list, &mut issues) {
                            cfg.x0 = InitialState::List(v);
                        }
                    }
                },
                "perturbation.c" => {
                    if let Some(v) = parse_f64(key, value, &mut issues) {
                        cfg.scale = v;
                    }
                }
                "perturbation.d" => cfg.direction = parse_list(key, value, &mut issues),
                "perturbation.h" => {
                    if let Some(v) = parse_list(key, value, &mut issues) {
                        cfg.boundary = v;
                    }
                }
                "perturbation.c_grid" => cfg.c_grid = parse_list(key, value, &mut issues),
                "analysis.periods" => {
                    if let Some(v) = parse_usize(key, value, &mut issues) {
                        cfg.periods = v;
                    }
                }
                "analysis.substeps" => {
                    if let Some(v) = parse_usize(key, value, &mut issues) {
                        cfg.substeps = v;
                    }
                }
                "analysis.seed" => {
                    if let Some(v) = parse_u64(key, value, &mut issues) {
                        cfg.seed = v;
                    }
                }
                "analysis.tol_c" => {
                    if let Some(v) = parse_f64(key, value, &mut issues) {
                        cfg.tol_c = v;
                    }
                }
                "analysis.c_max" => {
                    if let Some(v) = parse_f64(key, value, &mut issues) {
                        cfg.c_max = v;
                    }
                }
                "analysis.prescan" => {
                    if let Some(v) = parse_usize(key, value, &mut issues) {
                        cfg.prescan = v;
                    }
                }
                "analysis.t_points" => {
                    if let Some(v) = parse_usize(key, value, &mut issues) {
                        cfg.t_points = v;
                    }
                }
                "analysis.volterra_tol" => {
                    if let Some(v) = parse_f64(key, value, &mut issues) {
                        cfg.volterra_tol = v;
                    }
                }
                "analysis.volterra_max_iters" => {
                    if let Some(v) = parse_usize(key, value, &mut issues) {
                        cfg.volterra_max_iters = v;
                    }
                }
                "analysis.probe_trials" => {
                    if let Some(v) = parse_usize(key, value, &mut issues) {
                        cfg.probe_trials = v;
                    }
                }
                "analysis.probe_t1" => {
                    if let Some(v) = parse_f64(key, value, &mut issues) {
                        cfg.probe_t1 = v;
                    }
                }
                "output.dir" => cfg.out_dir = value.clone(),
                "output.formats" => {
                    let mut formats = OutputFormats { csv: false, json: false };
                    let mut ok = true;
                    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        match item {
                            "csv" => formats.csv = true,
                            "json" => formats.json = true,
                            other => {
                                issues.push(format!(
                                    "output.formats: expected csv|json entries, got '{other}'"
                                ));
                                ok = false;
                            }
                        }
                    }
                    if ok && !(formats.csv || formats.json) {
                        issues.push("output.formats: expected at least one format".into());
                    } else if ok {
                        cfg.formats = formats;
                    }
                }
                "output.full_states" => {
                    if let Some(v) = parse_bool(key, value, &mut issues) {
                        cfg.full_states = v;
                    }
                }
                "fd.points" => {
                    if let Some(v) = parse_usize(key, value, &mut issues) {
                        cfg.fd_points = v;
                    }
                }
                "fd.dt" => {
                    if let Some(v) = parse_f64(key, value, &mut issues) {
                        cfg.fd_dt = v;
                    }
                }
                "fd.scheme" => match value.as_str() {
                    "trapezoidal" => cfg.fd_scheme = FdScheme::Trapezoidal,
                    "implicit_euler" => cfg.fd_scheme = FdScheme::ImplicitEuler,
                    other => issues.push(format!(
                        "fd.scheme: expected trapezoidal|implicit_euler, got '{other}'"
                    )),
                },
                "fd.z0" => match value.as_str() {
                    "uniform" => cfg.fd_z0 = FdInitial::Uniform,
                    "first-modes" => cfg.fd_z0 = FdInitial::FirstModes,
                    list => {
                        if let Some(v) = parse_list(key, list, &mut issues) {
                            cfg.fd_z0 = FdInitial::List(v);
                        }
                    }
                },
                _ => unreachable!("key filtered against KNOWN_KEYS"),
            }
        }

        // Custom systems are pinned to their eigenvalue list; an unspecified
        // truncation follows it.
        if cfg.kind == SystemKind::Custom {
            if let Some(eigen) = &cfg.eigenvalues {
                if !explicit_n {
                    cfg.truncation = eigen.len();
                } else if cfg.truncation != eigen.len() {
                    issues.push(format!(
                        "system.N: must match the eigenvalue list length {} for custom systems, got {}",
                        eigen.len(),
                        cfg.truncation
                    ));
                }
            }
        }

        cfg.validate(explicit_q, &mut issues);
        if issues.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config { issues })
        }
    }

    fn validate(&self, explicit_q: bool, issues: &mut Vec<String>) {
        if !(self.tau > 0.0) {
            issues.push(format!("loop.tau: must be positive, got {}", self.tau));
        }
        if !(self.omega >= 0.0) {
            issues.push(format!("loop.omega: must be nonnegative, got {}", self.omega));
        }
        if !(0.0..=1.0).contains(&self.scale) {
            issues.push(format!("perturbation.c: must lie in [0, 1], got {}", self.scale));
        }
        if !(self.q > 1.0) {
            issues.push(format!("system.q: must exceed 1, got {}", self.q));
        }
        if self.truncation < 1 {
            issues.push("system.N: must be at least 1".into());
        }
        match self.kind {
            SystemKind::Heat => {
                if self.truncation < 2 {
                    issues.push("system.N: heat systems need at least 2 modes".into());
                }
                if explicit_q && (self.q - 2.0).abs() > 1e-12 {
                    issues.push("system.q: the heat system lives on l^2; q must be 2".into());
                }
                if self.control.is_some() {
                    issues.push("loop.b: the heat control column is fixed by the model".into());
                }
                if self.direction.is_some() {
                    issues.push(
                        "perturbation.d: the heat perturbation column is fixed by the model".into(),
                    );
                }
                if self.eigenvalues.is_some() {
                    issues.push("system.eigenvalues: only valid for system.kind = custom".into());
                }
            }
            SystemKind::Diagonal => {
                if !(self.kappa > 0.0) {
                    issues.push(format!("system.kappa: must be positive, got {}", self.kappa));
                }
                if !(self.gamma > 0.0) {
                    issues.push(format!("system.gamma: must be positive, got {}", self.gamma));
                }
                if self.eigenvalues.is_some() {
                    issues.push("system.eigenvalues: only valid for system.kind = custom".into());
                }
                let floor = (self.gamma + 1.0) / self.gamma;
                if self.q < floor && self.gamma > 0.0 {
                    issues.push(format!(
                        "system.q: must be at least (gamma+1)/gamma = {floor} for the diagonal family, got {}",
                        self.q
                    ));
                }
            }
            SystemKind::Custom => {
                match &self.eigenvalues {
                    None => issues
                        .push("system.eigenvalues: required for system.kind = custom".into()),
                    Some(eigen) => {
                        if eigen.is_empty() {
                            issues.push("system.eigenvalues: must be nonempty".into());
                        }
                    }
                }
                if self.control.is_none() {
                    issues.push("loop.b: required for system.kind = custom".into());
                }
            }
        }
        if !(self.tol_c > 0.0) {
            issues.push(format!("analysis.tol_c: must be positive, got {}", self.tol_c));
        }
        if !(self.c_max > 0.0 && self.c_max <= 1.0) {
            issues.push(format!("analysis.c_max: must lie in (0, 1], got {}", self.c_max));
        }
        if self.prescan < 2 {
            issues.push("analysis.prescan: must be at least 2".into());
        }
        if self.periods < 1 {
            issues.push("analysis.periods: must be at least 1".into());
        }
        if self.substeps < 1 {
            issues.push("analysis.substeps: must be at least 1".into());
        }
        if self.t_points < 2 {
            issues.push("analysis.t_points: must be at least 2".into());
        }
        if self.probe_trials < 10 {
            issues.push("analysis.probe_trials: must be at least 10".into());
        }
        if !(self.probe_t1 > 0.0) {
            issues.push(format!("analysis.probe_t1: must be positive, got {}", self.probe_t1));
        }
        if self.fd_points < 16 {
            issues.push("fd.points: must be at least 16".into());
        }
        if !(self.fd_dt > 0.0) {
            issues.push(format!("fd.dt: must be positive, got {}", self.fd_dt));
        }
        if let Some(grid) = &self.c_grid {
            if grid.iter().any(|c| !(0.0..=1.0).contains(c)) {
                issues.push("perturbation.c_grid: entries must lie in [0, 1]".into());
            }
        }
        if !(self.volterra_tol > 0.0) {
            issues.push(format!(
                "analysis.volterra_tol: must be positive, got {}",
                self.volterra_tol
            ));
        }
        if self.volterra_max_iters < 1 {
            issues.push("analysis.volterra_max_iters: must be at least 1".into());
        }
    }

    /// Shipped default feedback when `loop.F` is absent: `-10 <., e_0>`.
    pub fn feedback_or_default(&self) -> Vec<f64> {
        self.feedback.clone().unwrap_or_else(|| vec![-10.0])
    }

    /// Build the sampled system this scenario describes.
    pub fn build_system(&self) -> Result<SampledSystem> {
        self.build_system_at(self.truncation)
    }

    /// Build at an explicit truncation order (the `--truncation` override and
    /// the doubling diagnostic).
    pub fn build_system_at(&self, truncation: usize) -> Result<SampledSystem> {
        match self.kind {
            SystemKind::Heat => {
                let spec = HeatSystemSpec {
                    truncation,
                    feedback: self.feedback_or_default(),
                    boundary: self.boundary.clone(),
                    scale: self.scale,
                    tau: self.tau,
                    omega: self.omega,
                };
                build_heat_system(&spec)
            }
            SystemKind::Diagonal => {
                let mut spec =
                    DiagonalSystemSpec::new(self.kappa, self.gamma, self.zeta, self.q, truncation);
                spec.control = self.control.clone().unwrap_or_default();
                spec.direction = self.direction.clone().unwrap_or_default();
                spec.boundary = self.boundary.clone();
                spec.feedback = self.feedback_or_default();
                spec.scale = self.scale;
                spec.tau = self.tau;
                spec.omega = self.omega;
                build_diagonal_system(&spec)
            }
            SystemKind::Custom => {
                let eigen = self
                    .eigenvalues
                    .clone()
                    .ok_or_else(|| Error::Config {
                        issues: vec!["system.eigenvalues: required for custom systems".into()],
                    })?;
                if truncation != eigen.len() {
                    return Err(Error::Config {
                        issues: vec![format!(
                            "system.N: custom systems are pinned to their eigenvalue list \
                             (length {}), cannot build at {truncation}",
                            eigen.len()
                        )],
                    });
                }
                let n = eigen.len();
                let gen = DiagonalGenerator::new(eigen, self.q)?;
                let pad = |coeffs: &[f64]| -> Vec<f64> {
                    let mut v = coeffs.to_vec();
                    v.resize(n, 0.0);
                    v.truncate(n);
                    v
                };
                let control = ControlOperator::new(ExtrapolationVector::bounded(pad(
                    self.control.as_deref().unwrap_or(&[]),
                ))?);
                let feedback = DualFunctional::new(pad(&self.feedback_or_default()), self.q)?;
                let perturbation = RankOnePerturbation::new(
                    ExtrapolationVector::bounded(pad(self.direction.as_deref().unwrap_or(&[])))?,
                    DualFunctional::new(pad(&self.boundary), self.q)?,
                    self.scale,
                )?;
                SampledSystem::new(gen, control, feedback, perturbation, self.tau, self.omega)
            }
        }
    }

    /// Resolve the initial state against a built system.
    pub fn initial_state(&self, sys: &SampledSystem) -> Result<StateVector> {
        let n = sys.generator().truncation();
        let coeffs = match &self.x0 {
            InitialState::Ones => vec![1.0; n],
            InitialState::Unit => {
                let mut v = vec![0.0; n];
                v[0] = 1.0;
                v
            }
            InitialState::List(list) => {
                let mut v = list.clone();
                if v.len() > n {
                    return Err(Error::Config {
                        issues: vec![format!(
                            "loop.x0: {} coefficients but the truncation is {n}",
                            v.len()
                        )],
                    });
                }
                v.resize(n, 0.0);
                v
            }
        };
        sys.generator().state(coeffs)
    }

    pub fn fd_grid(&self) -> Result<FdGrid> {
        FdGrid::new(self.fd_points, self.fd_dt, self.fd_scheme)
    }

    /// Spatial initial profile for the finite-difference oracle.
    pub fn fd_initial_profile(&self) -> Result<Vec<f64>> {
        let g = self.fd_points;
        let dx = 1.0 / (g - 1) as f64;
        Ok(match &self.fd_z0 {
            FdInitial::Uniform => vec![1.0; g],
            FdInitial::FirstModes => {
                (0..g).map(|i| 1.0 + cosine_mode(1, i as f64 * dx) / 2.0f64.sqrt()).collect()
            }
            FdInitial::List(list) => {
                if list.len() != g {
                    return Err(Error::Config {
                        issues: vec![format!(
                            "fd.z0: {} samples but fd.points is {g}",
                            list.len()
                        )],
                    });
                }
                list.clone()
            }
        })
    }

    /// Every resolved key, in stable order, for embedding into reports.
    pub fn echo(&self) -> Vec<(String, String)> {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        let mut out: Vec<(String, String)> = vec![
            ("system.kind".into(), self.kind.as_str().into()),
            ("system.N".into(), format!("{}", self.truncation)),
            ("system.q".into(), format!("{}", self.q)),
            ("loop.tau".into(), format!("{}", self.tau)),
            ("loop.omega".into(), format!("{}", self.omega)),
            (
                "loop.F".into(),
                list(&self.feedback_or_default()),
            ),
            (
                "loop.x0".into(),
                match &self.x0 {
                    InitialState::Ones => "ones".into(),
                    InitialState::Unit => "unit".into(),
                    InitialState::List(v) => list(v),
                },
            ),
            ("perturbation.c".into(), format!("{}", self.scale)),
            ("perturbation.h".into(), list(&self.boundary)),
            ("analysis.periods".into(), format!("{}", self.periods)),
            ("analysis.substeps".into(), format!("{}", self.substeps)),
            ("analysis.seed".into(), format!("{}", self.seed)),
            ("analysis.tol_c".into(), format!("{}", self.tol_c)),
            ("analysis.c_max".into(), format!("{}", self.c_max)),
            ("analysis.prescan".into(), format!("{}", self.prescan)),
            ("analysis.t_points".into(), format!("{}", self.t_points)),
            ("analysis.volterra_tol".into(), format!("{}", self.volterra_tol)),
            ("analysis.volterra_max_iters".into(), format!("{}", self.volterra_max_iters)),
            ("analysis.probe_trials".into(), format!("{}", self.probe_trials)),
            ("analysis.probe_t1".into(), format!("{}", self.probe_t1)),
            ("output.dir".into(), self.out_dir.clone()),
            (
                "output.formats".into(),
                match (self.formats.csv, self.formats.json) {
                    (true, true) => "csv,json".into(),
                    (true, false) => "csv".into(),
                    (false, true) => "json".into(),
                    (false, false) => String::new(),
                },
            ),
            ("output.full_states".into(), format!("{}", self.full_states)),
            ("fd.points".into(), format!("{}", self.fd_points)),
            ("fd.dt".into(), format!("{}", self.fd_dt)),
            (
                "fd.scheme".into(),
                match self.fd_scheme {
                    FdScheme::Trapezoidal => "trapezoidal".into(),
                    FdScheme::ImplicitEuler => "implicit_euler".into(),
                },
            ),
            (
                "fd.z0".into(),
                match &self.fd_z0 {
                    FdInitial::Uniform => "uniform".into(),
                    FdInitial::FirstModes => "first-modes".into(),
                    FdInitial::List(v) => list(v),
                },
            ),
        ];
        match self.kind {
            SystemKind::Diagonal => {
                out.push(("system.kappa".into(), format!("{}", self.kappa)));
                out.push(("system.gamma".into(), format!("{}", self.gamma)));
                out.push(("system.zeta".into(), format!("{}", self.zeta)));
            }
            SystemKind::Custom => {
                if let Some(eigen) = &self.eigenvalues {
                    out.push(("system.eigenvalues".into(), list(eigen)));
                }
            }
            SystemKind::Heat => {}
        }
        if let Some(b) = &self.control {
            out.push(("loop.b".into(), list(b)));
        }
        if let Some(d) = &self.direction {
            out.push(("perturbation.d".into(), list(d)));
        }
        if let Some(grid) = &self.c_grid {
            out.push(("perturbation.c_grid".into(), list(grid)));
        }
        out.sort();
        out
    }
}
