//! Flat TOML run configuration.
//!
//! Every key is optional in the file. Missing keys are filled from defaults
//! that depend on the subcommand (a two-level run defaults to the single-site
//! problem, a detuning sweep to the structured bath, and so on). The resolved
//! config has every key set and is what the manifest records, so feeding a
//! manifest back in reproduces the run.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bath::{Bath, GaussianKernelBath, OhmicBath, PhaseSign, StructuredBath, Temperature};
use crate::dynamics::{Formulation, IntegratorConfig};
use crate::error::{Error, Result};
use crate::experiments::{
    geometric_grid, linear_grid, Couplings, ScheduleChoice, SweepAxis, SweepSpec,
};
use crate::problem::{reference_linear_time, AdiabaticProblem};
use crate::rates::RateMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    SweepTime,
    SweepDetuning,
    TwoLevel,
    Gapmap,
    GoldenRule,
    CalibrateSchedule,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Subcommand::Simulate,
        Subcommand::SweepTime,
        Subcommand::SweepDetuning,
        Subcommand::TwoLevel,
        Subcommand::Gapmap,
        Subcommand::GoldenRule,
        Subcommand::CalibrateSchedule,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Simulate => "simulate",
            Subcommand::SweepTime => "sweep-time",
            Subcommand::SweepDetuning => "sweep-detuning",
            Subcommand::TwoLevel => "two-level",
            Subcommand::Gapmap => "gapmap",
            Subcommand::GoldenRule => "golden-rule",
            Subcommand::CalibrateSchedule => "calibrate-schedule",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subcommand::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Subcommand::ALL.iter().map(|c| c.name()).collect();
            Error::config(format!(
                "subcommand: unknown value \"{s}\"{}; expected one of {}",
                suggestion(s, &names),
                names.join(", ")
            ))
        })
    }
}

/// All configuration keys. `None` means "use the default".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Option<String>,

    /// `grover` or `single-site`.
    pub problem: Option<String>,
    /// Qubit count of the Grover problem.
    pub n: Option<u32>,
    /// Initial amplitude of the single-site problem.
    pub a0: Option<f64>,
    /// `linear` or `optimal`.
    pub schedule: Option<String>,

    /// `thermal`, `structured`, `gaussian` or `none`.
    pub bath: Option<String>,
    /// Couplings for complex-rate runs (and real-rate runs unless `eta_real` is set).
    pub eta: Option<Vec<f64>>,
    pub eta_real: Option<Vec<f64>>,
    /// Rate modes: any of `complex`, `real`.
    pub modes: Option<Vec<String>>,
    pub omega_c: Option<f64>,
    pub s_exp: Option<f64>,
    /// Inverse temperature; `inf` is zero temperature.
    pub beta: Option<f64>,
    pub omega0: Option<f64>,
    pub delta_l: Option<Vec<f64>>,
    /// `1` for `e^{+iΔ_L t}`, `-1` for `e^{−iΔ_L t}`.
    pub phase_sign: Option<i64>,
    pub kernel_width: Option<f64>,

    /// Total time of a single run; defaults to `t_max`.
    pub t: Option<f64>,
    /// Absolute `T_max`; when absent `T_max = t_max_multiplier · 4N/π`.
    pub t_max: Option<f64>,
    pub t_max_multiplier: Option<f64>,
    pub t_points: Option<usize>,
    pub t_min_fraction: Option<f64>,

    pub delta_l_min: Option<f64>,
    pub delta_l_max: Option<f64>,
    pub delta_l_points: Option<usize>,

    pub step: Option<f64>,
    /// Correlation grid step; `0` picks it automatically.
    pub grid_step: Option<f64>,
    pub tail_tol: Option<f64>,
    /// `matrix`, `bloch` or `unitary`.
    pub formulation: Option<String>,
    pub samples: Option<usize>,

    pub s_points: Option<usize>,
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub omega_points: Option<usize>,

    pub target: Option<f64>,
    pub target_tolerance: Option<f64>,
}

/// Key names accepted in files and `--set`.
pub const KEYS: &[&str] = &[
    "subcommand",
    "problem",
    "n",
    "a0",
    "schedule",
    "bath",
    "eta",
    "eta_real",
    "modes",
    "omega_c",
    "s_exp",
    "beta",
    "omega0",
    "delta_l",
    "phase_sign",
    "kernel_width",
    "t",
    "t_max",
    "t_max_multiplier",
    "t_points",
    "t_min_fraction",
    "delta_l_min",
    "delta_l_max",
    "delta_l_points",
    "step",
    "grid_step",
    "tail_tol",
    "formulation",
    "samples",
    "s_points",
    "omega_min",
    "omega_max",
    "omega_points",
    "target",
    "target_tolerance",
];

fn suggestion(word: &str, candidates: &[&str]) -> String {
    candidates
        .iter()
        .map(|c| (strsim::jaro_winkler(&word.to_lowercase(), c), *c))
        .filter(|(score, _)| *score > 0.8)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map_or(String::new(), |(_, c)| format!(" (did you mean \"{c}\"?)"))
}

fn check_keys(table: &toml::Table) -> Result<()> {
    for key in table.keys() {
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::config(format!(
                "unknown key \"{key}\"{}",
                suggestion(key, KEYS)
            )));
        }
    }
    Ok(())
}

/// Parses `key=value`, reading the value as a TOML literal and falling back
/// to a bare string.
pub fn parse_override(text: &str) -> Result<(String, toml::Value)> {
    let (key, value) = text
        .split_once('=')
        .ok_or_else(|| Error::config(format!("override \"{text}\" must have the form key=value")))?;
    let key = key.trim().to_string();
    let value = value.trim();
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((key, parsed))
}

impl RunConfig {
    /// Parses a config document, applying `overrides` on top.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            text.parse().map_err(|e: toml::de::Error| Error::config(e.to_string()))?;
        for o in overrides {
            let (key, value) = parse_override(o)?;
            // Scalars are accepted where a list is expected.
            let value = match (key.as_str(), value) {
                ("eta" | "eta_real" | "modes" | "delta_l", v @ toml::Value::Array(_)) => v,
                ("eta" | "eta_real" | "modes" | "delta_l", v) => toml::Value::Array(vec![v]),
                (_, v) => v,
            };
            table.insert(key, value);
        }
        check_keys(&table)?;
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(e.to_string()))
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_toml(&text, overrides)
            .map_err(|e| Error::config(format!("{}: {}", path.display(), strip_prefix(&e))))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Fills every unset key with the default for `command` and validates.
    pub fn resolve(&self, command: Subcommand) -> Result<Resolved> {
        if let Some(s) = &self.subcommand {
            let named: Subcommand = s.parse()?;
            if named != command {
                return Err(Error::config(format!(
                    "subcommand: config names \"{named}\" but \"{command}\" was requested"
                )));
            }
        }
        let mut c = self.clone();
        c.subcommand = Some(command.name().to_string());
        let two_level = command == Subcommand::TwoLevel;
        let detuning = command == Subcommand::SweepDetuning;

        c.problem.get_or_insert_with(|| if two_level { "single-site" } else { "grover" }.into());
        c.n.get_or_insert(10);
        c.a0.get_or_insert(0.5f64.sqrt());
        c.schedule.get_or_insert_with(|| "linear".into());
        c.bath.get_or_insert_with(|| {
            if two_level || detuning { "structured" } else { "thermal" }.into()
        });
        c.eta.get_or_insert_with(|| match command {
            Subcommand::SweepDetuning => vec![0.01, 0.05, 0.1, 0.4],
            Subcommand::TwoLevel => vec![0.01, 0.05, 0.2],
            Subcommand::SweepTime => vec![0.05, 0.1],
            _ => vec![0.05],
        });
        if detuning {
            c.eta_real.get_or_insert_with(|| vec![0.01, 0.05, 0.2]);
        }
        c.modes.get_or_insert_with(|| {
            if detuning { vec!["complex".into(), "real".into()] } else { vec!["complex".into()] }
        });
        c.omega_c.get_or_insert(0.25);
        c.s_exp.get_or_insert(1.0);
        c.beta.get_or_insert(f64::INFINITY);
        c.omega0.get_or_insert(if two_level { 0.5 } else { 0.25 });
        c.delta_l.get_or_insert_with(|| if two_level { vec![0.5] } else { vec![0.2] });
        c.phase_sign.get_or_insert(1);
        c.kernel_width.get_or_insert(0.1);
        if two_level {
            c.t_max.get_or_insert(10.0);
        }
        c.t_max_multiplier.get_or_insert(0.8);
        c.t_points.get_or_insert(12);
        c.t_min_fraction.get_or_insert(1.0 / 12.0);
        c.delta_l_min.get_or_insert(0.05);
        c.delta_l_max.get_or_insert(0.6);
        c.delta_l_points.get_or_insert(23);
        c.step.get_or_insert(0.1);
        c.grid_step.get_or_insert(0.0);
        c.tail_tol.get_or_insert(1e-6);
        c.formulation.get_or_insert_with(|| "matrix".into());
        c.samples.get_or_insert(200);
        c.s_points.get_or_insert(101);
        c.omega_min.get_or_insert(0.0);
        c.omega_max.get_or_insert(1.0);
        c.omega_points.get_or_insert(101);
        c.target.get_or_insert(0.55);
        c.target_tolerance.get_or_insert(0.1);

        let resolved = Resolved::build(command, c)?;
        Ok(resolved)
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

fn range_error(field: &str, value: impl fmt::Display, legal: &str) -> Error {
    Error::config(format!("{field}: value {value} out of range; must be {legal}"))
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(range_error(field, v, "finite and > 0"))
    }
}

fn nonneg(field: &str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(range_error(field, v, "finite and >= 0"))
    }
}

fn at_least_one(field: &str, v: usize) -> Result<usize> {
    if v >= 1 {
        Ok(v)
    } else {
        Err(range_error(field, v, ">= 1"))
    }
}

fn choice<T: Copy>(field: &str, value: &str, options: &[(&str, T)]) -> Result<T> {
    options.iter().find(|(name, _)| *name == value).map(|(_, v)| *v).ok_or_else(|| {
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        Error::config(format!(
            "{field}: unknown value \"{value}\"{}; expected one of {}",
            suggestion(value, &names),
            names.join(", ")
        ))
    })
}

/// A fully resolved and validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub command: Subcommand,
    /// Every key set; this is what the manifest echoes.
    pub config: RunConfig,
    pub problem: AdiabaticProblem,
    pub schedule: ScheduleChoice,
    /// Bath variants with the first coupling applied; `None` for `bath = "none"`.
    pub baths: Vec<Bath>,
    pub couplings: Vec<Couplings>,
    pub t_max: f64,
    pub total_time: f64,
    pub integrator: IntegratorConfig,
}

impl Resolved {
    fn build(command: Subcommand, c: RunConfig) -> Result<Self> {
        let get = |o: Option<f64>| o.expect("resolved");
        let problem = match choice(
            "problem",
            c.problem.as_deref().unwrap(),
            &[("grover", 0), ("single-site", 1)],
        )? {
            0 => {
                let n = c.n.unwrap();
                if !(1..=crate::problem::MAX_QUBITS).contains(&n) {
                    return Err(range_error("n", n, "in [1, 30]"));
                }
                AdiabaticProblem::grover(n)?
            }
            _ => {
                let a0 = get(c.a0);
                if !(a0 > 0.0 && a0 < 1.0) {
                    return Err(range_error("a0", a0, "in the open interval (0, 1)"));
                }
                AdiabaticProblem::single_site(a0)?
            }
        };
        let schedule = choice(
            "schedule",
            c.schedule.as_deref().unwrap(),
            &[("linear", ScheduleChoice::Linear), ("optimal", ScheduleChoice::Optimal)],
        )?;

        let etas = c.eta.clone().unwrap();
        for &e in &etas {
            nonneg("eta", e)?;
        }
        if let Some(real) = &c.eta_real {
            for &e in real {
                nonneg("eta_real", e)?;
            }
        }
        let mut couplings = Vec::new();
        for m in c.modes.as_ref().unwrap() {
            let mode = choice(
                "modes",
                m,
                &[("complex", RateMode::Complex), ("real", RateMode::RealOnly)],
            )?;
            if couplings.iter().any(|x: &Couplings| x.mode == mode) {
                return Err(Error::config(format!("modes: \"{m}\" listed twice")));
            }
            let list = match (mode, &c.eta_real) {
                (RateMode::RealOnly, Some(real)) => real.clone(),
                _ => etas.clone(),
            };
            couplings.push(Couplings { mode, etas: list });
        }
        if couplings.is_empty() {
            return Err(Error::config("modes: at least one rate mode is required"));
        }

        let eta0 = etas.first().copied().unwrap_or(0.0);
        let omega_c = positive("omega_c", get(c.omega_c))?;
        let s_exp = positive("s_exp", get(c.s_exp))?;
        let beta = get(c.beta);
        if !(beta > 0.0) {
            return Err(range_error("beta", beta, "> 0 (inf for zero temperature)"));
        }
        let omega0 = positive("omega0", get(c.omega0))?;
        let phase_sign = match c.phase_sign.unwrap() {
            1 => PhaseSign::Plus,
            -1 => PhaseSign::Minus,
            other => return Err(range_error("phase_sign", other, "1 or -1")),
        };
        let delta_ls = c.delta_l.clone().unwrap();
        if delta_ls.is_empty() {
            return Err(Error::config("delta_l: at least one value is required"));
        }
        if let Some(bad) = delta_ls.iter().find(|v| !v.is_finite()) {
            return Err(range_error("delta_l", bad, "finite"));
        }
        let kernel_width = positive("kernel_width", get(c.kernel_width))?;
        let temperature = if beta == f64::INFINITY { Temperature::Zero } else { Temperature::Beta(beta) };
        let bath_name = c.bath.as_deref().unwrap();
        let baths = match choice(
            "bath",
            bath_name,
            &[("thermal", 0), ("structured", 1), ("gaussian", 2), ("none", 3)],
        )? {
            0 => vec![Bath::Ohmic(OhmicBath::new(eta0, s_exp, omega_c, temperature)?)],
            1 => delta_ls
                .iter()
                .map(|&dl| StructuredBath::new(eta0, omega0, dl, phase_sign).map(Bath::Structured))
                .collect::<Result<_>>()?,
            2 => vec![Bath::GaussianKernel(GaussianKernelBath::new(eta0, kernel_width)?)],
            _ => Vec::new(),
        };

        let t_max = match c.t_max {
            Some(t) => positive("t_max", t)?,
            None => positive("t_max_multiplier", get(c.t_max_multiplier))?
                * reference_linear_time(&problem),
        };
        let total_time = match c.t {
            Some(t) => positive("t", t)?,
            None => t_max,
        };
        positive("t_max_multiplier", get(c.t_max_multiplier))?;
        at_least_one("t_points", c.t_points.unwrap())?;
        let fraction = get(c.t_min_fraction);
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(range_error("t_min_fraction", fraction, "in (0, 1]"));
        }
        let (dl_min, dl_max) = (get(c.delta_l_min), get(c.delta_l_max));
        if !dl_min.is_finite() {
            return Err(range_error("delta_l_min", dl_min, "finite"));
        }
        if !(dl_max > dl_min && dl_max.is_finite()) {
            return Err(range_error("delta_l_max", dl_max, "finite and > delta_l_min"));
        }
        at_least_one("delta_l_points", c.delta_l_points.unwrap())?;

        let step = positive("step", get(c.step))?;
        if step > 0.1 * (1.0 + 1e-12) {
            return Err(range_error("step", step, "<= 0.1 (0.1 / max gap)"));
        }
        let grid_step = nonneg("grid_step", get(c.grid_step))?;
        let tail_tol = get(c.tail_tol);
        if !(tail_tol > 0.0 && tail_tol < 1.0) {
            return Err(range_error("tail_tol", tail_tol, "in (0, 1)"));
        }
        let formulation = choice(
            "formulation",
            c.formulation.as_deref().unwrap(),
            &[
                ("matrix", Formulation::MatrixRedfield),
                ("bloch", Formulation::BlochPaper),
                ("unitary", Formulation::ClosedUnitary),
            ],
        )?;
        let integrator = IntegratorConfig {
            step,
            grid_step: (grid_step > 0.0).then_some(grid_step),
            tail_tol,
            formulation,
            samples: at_least_one("samples", c.samples.unwrap())?,
            ..IntegratorConfig::default()
        };

        at_least_one("s_points", c.s_points.unwrap())?;
        at_least_one("omega_points", c.omega_points.unwrap())?;
        let (w_min, w_max) = (get(c.omega_min), get(c.omega_max));
        if !w_min.is_finite() {
            return Err(range_error("omega_min", w_min, "finite"));
        }
        if !(w_max > w_min && w_max.is_finite()) {
            return Err(range_error("omega_max", w_max, "finite and > omega_min"));
        }
        let target = get(c.target);
        if !(0.0..=1.0).contains(&target) {
            return Err(range_error("target", target, "in [0, 1]"));
        }
        nonneg("target_tolerance", get(c.target_tolerance))?;

        let needs_bath = matches!(command, Subcommand::Gapmap | Subcommand::GoldenRule);
        if needs_bath && baths.is_empty() {
            return Err(Error::config(format!("bath: {command} needs a bath other than \"none\"")));
        }
        if command == Subcommand::SweepDetuning && bath_name != "structured" {
            return Err(Error::config("bath: sweep-detuning needs bath = \"structured\""));
        }
        if command == Subcommand::Simulate && (etas.len() > 1 || c.modes.as_ref().unwrap().len() > 1)
        {
            return Err(Error::config("eta: simulate takes a single coupling and a single mode"));
        }

        Ok(Self {
            command,
            config: c,
            problem,
            schedule,
            baths,
            couplings,
            t_max,
            total_time,
            integrator,
        })
    }

    /// Sweep over total time or detuning, as the subcommand requires.
    pub fn sweep_spec(&self) -> SweepSpec {
        let c = &self.config;
        let axis = match self.command {
            Subcommand::SweepDetuning => SweepAxis::Detuning {
                values: linear_grid(
                    c.delta_l_min.unwrap(),
                    c.delta_l_max.unwrap(),
                    c.delta_l_points.unwrap(),
                ),
                total_time: self.total_time,
            },
            _ => SweepAxis::TotalTime(geometric_grid(
                c.t_min_fraction.unwrap() * self.t_max,
                self.t_max,
                c.t_points.unwrap(),
            )),
        };
        let baths = match self.command {
            // The detuning axis replaces Δ_L, so one template suffices.
            Subcommand::SweepDetuning => self.baths.iter().take(1).copied().collect(),
            _ => self.baths.clone(),
        };
        SweepSpec {
            problem: self.problem,
            schedule: self.schedule,
            axis,
            baths,
            couplings: if self.baths.is_empty() { Vec::new() } else { self.couplings.clone() },
            t_max: self.t_max,
            integrator: self.integrator,
        }
    }

    pub fn s_grid(&self) -> Vec<f64> {
        linear_grid(0.0, 1.0, self.config.s_points.unwrap())
    }

    pub fn omega_grid(&self) -> Vec<f64> {
        let c = &self.config;
        linear_grid(c.omega_min.unwrap(), c.omega_max.unwrap(), c.omega_points.unwrap())
    }

    /// The single bath and mode of a `simulate` run.
    pub fn single_run(&self) -> (Option<Bath>, RateMode) {
        (self.baths.first().copied(), self.couplings[0].mode)
    }
}
