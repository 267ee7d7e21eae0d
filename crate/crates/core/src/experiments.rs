//! Parameter sweeps over total time, detuning and coupling, plus the
//! gap/spectral-density tables used to judge the two-level approximation.
//!
//! Sweep points run in parallel on the rayon pool. Every point depends only
//! on its own configuration and rows are sorted before they are returned,
//! so results do not depend on the number of worker threads.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::bath::{Bath, Temperature};
use crate::dynamics::{integrate, IntegratorConfig, Trajectory};
use crate::error::{Error, Result};
use crate::output::{num, CsvTable};
use crate::problem::{reference_linear_time, AdiabaticProblem, ProblemKind, Schedule};
use crate::rates::RateMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleChoice {
    Linear,
    Optimal,
}

impl ScheduleChoice {
    pub fn build(self, total_time: f64, problem: &AdiabaticProblem) -> Result<Schedule> {
        match self {
            ScheduleChoice::Linear => Schedule::linear(total_time),
            ScheduleChoice::Optimal => Schedule::optimal(total_time, problem),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ScheduleChoice::Linear => "linear",
            ScheduleChoice::Optimal => "optimal",
        }
    }
}

/// `count` geometrically spaced points from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![hi],
        _ => {
            let ratio = (hi / lo).ln() / (count - 1) as f64;
            let mut grid: Vec<f64> = (0..count).map(|k| lo * (ratio * k as f64).exp()).collect();
            grid[count - 1] = hi;
            grid
        }
    }
}

/// `count` evenly spaced points from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect(),
    }
}

/// Couplings swept for one rate mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Couplings {
    pub mode: RateMode,
    pub etas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    TotalTime(Vec<f64>),
    /// Band-edge detuning of a structured bath at fixed total time.
    Detuning { values: Vec<f64>, total_time: f64 },
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::TotalTime(_) => "T",
            SweepAxis::Detuning { .. } => "delta_l",
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            SweepAxis::TotalTime(v) => v,
            SweepAxis::Detuning { values, .. } => values,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub problem: AdiabaticProblem,
    pub schedule: ScheduleChoice,
    pub axis: SweepAxis,
    /// Bath variants; their couplings are replaced by each entry of `couplings`.
    pub baths: Vec<Bath>,
    pub couplings: Vec<Couplings>,
    /// Reference time used for the `T/T_max` column.
    pub t_max: f64,
    pub integrator: IntegratorConfig,
}

impl SweepSpec {
    /// Time sweep over `points` geometric values from `min_fraction·T_max`
    /// to `T_max = multiplier · 4N/π`.
    pub fn total_time(
        problem: AdiabaticProblem,
        baths: Vec<Bath>,
        couplings: Vec<Couplings>,
        multiplier: f64,
        points: usize,
        min_fraction: f64,
    ) -> Self {
        let t_max = multiplier * reference_linear_time(&problem);
        Self {
            problem,
            schedule: ScheduleChoice::Linear,
            axis: SweepAxis::TotalTime(geometric_grid(min_fraction * t_max, t_max, points)),
            baths,
            couplings,
            t_max,
            integrator: IntegratorConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let values = self.axis.values();
        if values.is_empty() {
            return Err(Error::config(format!("{} grid is empty", self.axis.name())));
        }
        if values.windows(2).any(|w| !(w[1] > w[0])) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(format!(
                "{} grid must be finite and strictly increasing",
                self.axis.name()
            )));
        }
        match &self.axis {
            SweepAxis::TotalTime(v) => {
                if !(v[0] > 0.0) {
                    return Err(Error::config("T grid values must be positive"));
                }
            }
            SweepAxis::Detuning { total_time, .. } => {
                if !(*total_time > 0.0 && total_time.is_finite()) {
                    return Err(Error::config(format!("T = {total_time} must be positive")));
                }
                if self.baths.iter().any(|b| !matches!(b, Bath::Structured(_))) {
                    return Err(Error::config("a detuning sweep needs a structured bath"));
                }
            }
        }
        if self.baths.is_empty() {
            return Err(Error::config("at least one bath is required"));
        }
        for c in &self.couplings {
            if let Some(eta) = c.etas.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
                return Err(Error::config(format!(
                    "eta = {eta} out of range: couplings must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }
}

/// Final-state summary of one integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub success: f64,
    pub max_bloch_norm_sq: f64,
    pub flagged: bool,
    pub max_slow_gap_ratio: f64,
    pub step: f64,
    pub grid_step: f64,
}

impl RunSummary {
    pub fn from_trajectory(trajectory: &Trajectory) -> Self {
        let d = &trajectory.diagnostics;
        Self {
            success: trajectory.final_success(),
            max_bloch_norm_sq: d.max_bloch_norm_sq,
            flagged: d.flagged,
            max_slow_gap_ratio: d.max_slow_gap_ratio,
            step: d.step,
            grid_step: d.grid_step,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: f64,
    pub total_time: f64,
    /// `None` for the closed-system baseline.
    pub mode: Option<RateMode>,
    pub eta: f64,
    /// Δ_L for structured baths, β for thermal ones, the width for kernels.
    pub bath_param: Option<f64>,
    /// Numerical failures are kept per row instead of aborting the sweep.
    pub outcome: std::result::Result<RunSummary, String>,
}

impl SweepRow {
    pub fn success(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|o| o.success)
    }

    fn sort_key(&self) -> (f64, u8, f64, f64) {
        let mode = match self.mode {
            None => 0,
            Some(RateMode::Complex) => 1,
            Some(RateMode::RealOnly) => 2,
        };
        (self.axis, mode, self.bath_param.unwrap_or(f64::NEG_INFINITY), self.eta)
    }
}

fn row_order(a: &SweepRow, b: &SweepRow) -> Ordering {
    let (ka, kb) = (a.sort_key(), b.sort_key());
    ka.0.total_cmp(&kb.0)
        .then(ka.1.cmp(&kb.1))
        .then(ka.2.total_cmp(&kb.2))
        .then(ka.3.total_cmp(&kb.3))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis_name: &'static str,
    pub t_max: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Closed-system success at an axis value.
    pub fn closed(&self, axis: f64) -> Option<f64> {
        self.rows.iter().find(|r| r.axis == axis && r.mode.is_none()).and_then(SweepRow::success)
    }

    /// Success for one open-system configuration at an axis value.
    pub fn open(&self, axis: f64, mode: RateMode, eta: f64, bath_param: Option<f64>) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| {
                r.axis == axis && r.mode == Some(mode) && r.eta == eta && r.bath_param == bath_param
            })
            .and_then(SweepRow::success)
    }

    pub fn axis_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.rows.iter().map(|r| r.axis).collect();
        v.dedup();
        v
    }

    pub fn table(&self) -> CsvTable {
        let mut table = CsvTable::new([
            self.axis_name,
            "T",
            "T_over_Tmax",
            "mode",
            "eta",
            "bath_param",
            "success",
            "max_bloch_norm_sq",
            "flagged",
            "max_slow_gap_ratio",
            "error",
        ]);
        for r in &self.rows {
            let (summary, error) = match &r.outcome {
                Ok(s) => (Some(*s), String::new()),
                Err(e) => (None, e.replace([',', '\n'], ";")),
            };
            let field = |f: fn(&RunSummary) -> String| summary.as_ref().map_or(String::new(), f);
            table.push(vec![
                num(r.axis),
                num(r.total_time),
                num(r.total_time / self.t_max),
                r.mode.map_or("closed", RateMode::label).to_string(),
                num(r.eta),
                r.bath_param.map_or(String::new(), num),
                field(|s| num(s.success)),
                field(|s| num(s.max_bloch_norm_sq)),
                field(|s| s.flagged.to_string()),
                field(|s| num(s.max_slow_gap_ratio)),
                error,
            ]);
        }
        table.meta("t_max", num(self.t_max));
        table
    }
}

fn bath_param(bath: &Bath) -> f64 {
    match bath {
        Bath::Structured(b) => b.delta_l,
        Bath::Ohmic(b) => match b.temperature {
            Temperature::Zero => f64::INFINITY,
            Temperature::Beta(beta) => beta,
        },
        Bath::GaussianKernel(b) => b.width,
    }
}

struct Job {
    axis: f64,
    total_time: f64,
    bath: Option<Bath>,
    mode: Option<RateMode>,
}

fn run_job(spec: &SweepSpec, job: &Job) -> SweepRow {
    let outcome = spec
        .schedule
        .build(job.total_time, &spec.problem)
        .and_then(|schedule| {
            integrate(
                &spec.problem,
                &schedule,
                job.bath.as_ref(),
                job.mode.unwrap_or(RateMode::Complex),
                &spec.integrator,
            )
        })
        .map(|t| RunSummary::from_trajectory(&t))
        .map_err(|e| e.to_string());
    SweepRow {
        axis: job.axis,
        total_time: job.total_time,
        mode: job.mode,
        eta: job.bath.map_or(0.0, |b| b.coupling()),
        bath_param: job.bath.as_ref().map(bath_param),
        outcome,
    }
}

/// Runs every (axis value × bath × mode × coupling) point plus the closed
/// baseline at each axis value.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let mut jobs = Vec::new();
    let open = |axis: f64, total_time: f64, bath: Bath, jobs: &mut Vec<Job>| {
        for c in &spec.couplings {
            for &eta in &c.etas {
                jobs.push(Job {
                    axis,
                    total_time,
                    bath: Some(bath.with_coupling(eta)),
                    mode: Some(c.mode),
                });
            }
        }
    };
    match &spec.axis {
        SweepAxis::TotalTime(values) => {
            for &t in values {
                jobs.push(Job { axis: t, total_time: t, bath: None, mode: None });
                for bath in &spec.baths {
                    open(t, t, *bath, &mut jobs);
                }
            }
        }
        SweepAxis::Detuning { values, total_time } => {
            for &dl in values {
                jobs.push(Job { axis: dl, total_time: *total_time, bath: None, mode: None });
                for bath in &spec.baths {
                    open(dl, *total_time, bath.with_detuning(dl), &mut jobs);
                }
            }
        }
    }
    let mut rows: Vec<SweepRow> = jobs.par_iter().map(|job| run_job(spec, job)).collect();
    rows.sort_by(row_order);
    Ok(SweepResult { axis_name: spec.axis.name(), t_max: spec.t_max, rows })
}

/// Success versus total time for each coupling, with the closed baseline.
pub fn sweep_total_time(spec: &SweepSpec) -> Result<SweepResult> {
    if !matches!(spec.axis, SweepAxis::TotalTime(_)) {
        return Err(Error::config("sweep-time needs a total-time axis"));
    }
    run_sweep(spec)
}

/// Success versus band-edge detuning at fixed total time.
pub fn sweep_detuning(spec: &SweepSpec) -> Result<SweepResult> {
    if !matches!(spec.axis, SweepAxis::Detuning { .. }) {
        return Err(Error::config("sweep-detuning needs a detuning axis"));
    }
    run_sweep(spec)
}

/// Time sweep of a single-site two-level problem.
pub fn two_level_run(spec: &SweepSpec) -> Result<SweepResult> {
    if !matches!(spec.problem.kind(), ProblemKind::SingleSite { .. }) {
        return Err(Error::config("two-level runs need a single-site problem"));
    }
    sweep_total_time(spec)
}

/// Instantaneous level spacings along `s`. The third level sits at `E2 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRow {
    pub s: f64,
    pub e10: f64,
    pub e21: f64,
    pub e20: f64,
}

pub fn gap_row(problem: &AdiabaticProblem, s: f64) -> GapRow {
    let alpha = problem.gap(s);
    let (e0, e1, e2) = (0.5 - 0.5 * alpha, 0.5 + 0.5 * alpha, 1.0);
    GapRow { s, e10: e1 - e0, e21: e2 - e1, e20: e2 - e0 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapMap {
    pub gaps: Vec<GapRow>,
    /// `(s, ω, J(ω))` background for overlay plots.
    pub density: Vec<(f64, f64, f64)>,
}

impl GapMap {
    pub fn table(&self) -> CsvTable {
        let mut table = CsvTable::new(["kind", "s", "omega", "e1_e0", "e2_e1", "e2_e0", "j"]);
        for g in &self.gaps {
            table.push(vec![
                "gap".into(),
                num(g.s),
                String::new(),
                num(g.e10),
                num(g.e21),
                num(g.e20),
                String::new(),
            ]);
        }
        for &(s, w, j) in &self.density {
            let empty = String::new;
            table.push(vec!["density".into(), num(s), num(w), empty(), empty(), empty(), num(j)]);
        }
        table
    }
}

pub fn gap_spectral_map(
    problem: &AdiabaticProblem,
    bath: &Bath,
    s_grid: &[f64],
    omega_grid: &[f64],
) -> GapMap {
    let gaps = s_grid.iter().map(|&s| gap_row(problem, s)).collect();
    let density = s_grid
        .iter()
        .flat_map(|&s| omega_grid.iter().map(move |&w| (s, w, bath.spectral_density(w))))
        .collect();
    GapMap { gaps, density }
}

/// `J(E_j − E_i)` for the level pairs (0,1), (1,2) and (0,2). The
/// transition matrix elements are not included, so this is only a proxy
/// for the golden-rule rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenRuleRow {
    pub gaps: GapRow,
    pub j01: f64,
    pub j12: f64,
    pub j02: f64,
}

pub fn golden_rule_profile(
    problem: &AdiabaticProblem,
    bath: &Bath,
    s_grid: &[f64],
) -> Vec<GoldenRuleRow> {
    s_grid
        .iter()
        .map(|&s| {
            let gaps = gap_row(problem, s);
            GoldenRuleRow {
                gaps,
                j01: bath.spectral_density(gaps.e10),
                j12: bath.spectral_density(gaps.e21),
                j02: bath.spectral_density(gaps.e20),
            }
        })
        .collect()
}

pub fn golden_rule_table(rows: &[GoldenRuleRow]) -> CsvTable {
    let mut table =
        CsvTable::new(["s", "omega_01", "omega_12", "omega_02", "j_01", "j_12", "j_02"]);
    for r in rows {
        table.push(vec![
            num(r.gaps.s),
            num(r.gaps.e10),
            num(r.gaps.e21),
            num(r.gaps.e20),
            num(r.j01),
            num(r.j12),
            num(r.j02),
        ]);
    }
    table.meta("j_columns", "spectral density only; transition matrix elements not included");
    table
}

/// Closed-system success of both schedules at one total time, and the
/// schedule closest to a target success (if within tolerance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub total_time: f64,
    pub target: f64,
    pub tolerance: f64,
    pub linear: f64,
    pub optimal: f64,
    pub chosen: Option<ScheduleChoice>,
}

impl Calibration {
    pub fn table(&self) -> CsvTable {
        let mut table = CsvTable::new(["schedule", "T", "success", "distance_to_target"]);
        for (choice, p) in
            [(ScheduleChoice::Linear, self.linear), (ScheduleChoice::Optimal, self.optimal)]
        {
            table.push(vec![
                choice.label().into(),
                num(self.total_time),
                num(p),
                num((p - self.target).abs()),
            ]);
        }
        table
            .meta("target", num(self.target))
            .meta("tolerance", num(self.tolerance))
            .meta("chosen", self.chosen.map_or("none", ScheduleChoice::label));
        table
    }
}

pub fn calibrate_schedule(
    problem: &AdiabaticProblem,
    total_time: f64,
    target: f64,
    tolerance: f64,
    integrator: &IntegratorConfig,
) -> Result<Calibration> {
    let run = |choice: ScheduleChoice| -> Result<f64> {
        let schedule = choice.build(total_time, problem)?;
        Ok(integrate(problem, &schedule, None, RateMode::Complex, integrator)?.final_success())
    };
    let (linear, optimal) = (run(ScheduleChoice::Linear)?, run(ScheduleChoice::Optimal)?);
    let (dl, dopt) = ((linear - target).abs(), (optimal - target).abs());
    let (best, distance) =
        if dl <= dopt { (ScheduleChoice::Linear, dl) } else { (ScheduleChoice::Optimal, dopt) };
    Ok(Calibration {
        total_time,
        target,
        tolerance,
        linear,
        optimal,
        chosen: (distance <= tolerance).then_some(best),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{OhmicBath, PhaseSign, StructuredBath};

    fn structured(dl: f64) -> Bath {
        Bath::Structured(StructuredBath::new(0.0, 0.25, dl, PhaseSign::Minus).unwrap())
    }

    #[test]
    fn grids() {
        let g = geometric_grid(1.0, 100.0, 3);
        assert!((g[1] - 10.0).abs() < 1e-12);
        assert_eq!(g[2], 100.0);
        let l = linear_grid(0.05, 0.6, 23);
        assert_eq!(l.len(), 23);
        assert!((l[1] - 0.075).abs() < 1e-15);
        assert!((l[22] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn gap_rows_telescope() {
        let p = AdiabaticProblem::grover(10).unwrap();
        for k in 0..=20 {
            let g = gap_row(&p, k as f64 / 20.0);
            assert_eq!(g.e21 + g.e10, g.e20);
        }
        let g = gap_row(&p, 0.5);
        assert!((g.e10 - 1.0 / 32.0).abs() < 1e-15);
        assert!((g.e21 - 0.484375).abs() < 1e-15);
    }

    #[test]
    fn gap_map_shape() {
        let p = AdiabaticProblem::grover(4).unwrap();
        let s = linear_grid(0.0, 1.0, 7);
        let w = linear_grid(0.0, 1.0, 5);
        let map = gap_spectral_map(&p, &structured(0.28), &s, &w);
        assert_eq!(map.table().rows.len(), 7 * 5 + 7);
    }

    #[test]
    fn golden_rule_gap_and_thermal() {
        let p = AdiabaticProblem::grover(10).unwrap();
        let gapped = golden_rule_profile(&p, &structured(0.28).with_coupling(0.1), &[0.5]);
        assert_eq!(gapped[0].j01, 0.0);
        let ohmic = Bath::Ohmic(OhmicBath::ohmic(0.05, 0.25, Temperature::Zero).unwrap());
        let rows = golden_rule_profile(&p, &ohmic, &linear_grid(0.0, 1.0, 51));
        assert!(rows.iter().all(|r| r.j01 > 0.0));
        assert!((rows[0].j01 - 0.05 * (-4.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn validation_rejects_bad_grids() {
        let p = AdiabaticProblem::grover(4).unwrap();
        let couplings = vec![Couplings { mode: RateMode::Complex, etas: vec![0.1] }];
        let mut spec = SweepSpec::total_time(p, vec![structured(0.2)], couplings, 0.8, 3, 0.1);
        assert!(spec.validate().is_ok());
        spec.axis = SweepAxis::TotalTime(vec![2.0, 1.0]);
        assert!(spec.validate().is_err());
        spec.axis = SweepAxis::TotalTime(vec![]);
        assert!(spec.validate().is_err());
        spec.axis = SweepAxis::TotalTime(vec![1.0]);
        spec.couplings[0].etas = vec![-0.1];
        assert!(spec.validate().unwrap_err().to_string().contains("eta"));
    }

    #[test]
    fn sweep_rows_and_baseline() {
        let p = AdiabaticProblem::grover(3).unwrap();
        let couplings = vec![
            Couplings { mode: RateMode::Complex, etas: vec![0.0, 0.1] },
            Couplings { mode: RateMode::RealOnly, etas: vec![0.1] },
        ];
        let spec = SweepSpec::total_time(p, vec![structured(0.2)], couplings, 1.0, 3, 0.2);
        let result = sweep_total_time(&spec).unwrap();
        assert_eq!(result.rows.len(), 3 * 4);
        for t in result.axis_values() {
            let closed = result.closed(t).unwrap();
            assert_eq!(result.open(t, RateMode::Complex, 0.0, Some(0.2)), Some(closed));
            let standalone = integrate(
                &p,
                &Schedule::linear(t).unwrap(),
                None,
                RateMode::Complex,
                &spec.integrator,
            )
            .unwrap()
            .final_success();
            assert_eq!(closed, standalone);
        }
    }

    #[test]
    fn calibration_picks_closest() {
        let p = AdiabaticProblem::grover(6).unwrap();
        let t = reference_linear_time(&p);
        let c = calibrate_schedule(&p, t, 0.99, 0.05, &IntegratorConfig::default()).unwrap();
        assert_eq!(c.chosen, Some(ScheduleChoice::Optimal));
        let none = calibrate_schedule(&p, t, -5.0, 0.01, &IntegratorConfig::default()).unwrap();
        assert_eq!(none.chosen, None);
    }
}
