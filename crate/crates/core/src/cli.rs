//! Command-line front end: reads the config, runs one subcommand and writes
//! its CSV together with a `manifest.toml` that can be fed back via
//! `--config` to reproduce the run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand as ClapSubcommand};

use crate::config::{Resolved, RunConfig, Subcommand};
use crate::dynamics::integrate;
use crate::error::{Error, Result};
use crate::experiments::{
    calibrate_schedule, gap_spectral_map, golden_rule_profile, golden_rule_table, sweep_detuning,
    sweep_total_time, two_level_run,
};
use crate::output::{num, trajectory_table, CsvTable};

const CONFIG_HELP: &str = "\
Configuration keys (flat TOML; --set KEY=VALUE overrides the file):
  problem = grover | single-site       [grover; single-site for two-level]
  n = 10                               qubits, 1..=30
  a0 = 0.7071067811865476              single-site initial amplitude, (0, 1)
  schedule = linear | optimal          [linear]
  bath = thermal | structured | gaussian | none
                                       [thermal; structured for two-level and sweep-detuning]
  eta = [0.05, 0.1]                    couplings, >= 0 (sweep-time default shown)
  eta_real = [...]                     couplings for real-rate runs [eta]
  modes = [\"complex\", \"real\"]          [complex; both for sweep-detuning]
  omega_c = 0.25, s_exp = 1.0, beta = inf      thermal bath
  omega0 = 0.25, delta_l = [0.2], phase_sign = 1   structured bath
                                       [omega0 0.5, delta_l 0.5 for two-level]
  kernel_width = 0.1                   gaussian kernel bath
  t                                    total time of one run [t_max]
  t_max                                absolute T_max [t_max_multiplier * 4N/pi; 10 for two-level]
  t_max_multiplier = 0.8               [1.0 for calibrate-schedule]
  t_points = 12, t_min_fraction = 1/12 geometric T grid
  delta_l_min = 0.05, delta_l_max = 0.6, delta_l_points = 23
  step = 0.1                           RK4 step, <= 0.1, capped at T/1000
  grid_step = 0                        correlation grid step, 0 = automatic
  tail_tol = 1e-6, formulation = matrix | bloch | unitary, samples = 200
  s_points = 101, omega_min = 0, omega_max = 1, omega_points = 101
  target = 0.55, target_tolerance = 0.1   calibrate-schedule

Exit codes: 0 ok, 2 config error, 3 numerical error, 4 I/O error.";

#[derive(Debug, Parser)]
#[command(name = "redfield-aqc", version, about = "Bloch-Redfield simulation of adiabatic quantum search in open systems", after_long_help = CONFIG_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,

    /// TOML config file (a previous manifest.toml works too).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Override one config key, e.g. --set eta=[0.05,0.1].
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Worker threads for sweeps (default: number of cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, ClapSubcommand)]
pub enum Command {
    /// Integrate one run and write its trajectory.
    Simulate,
    /// Final success versus total time.
    SweepTime,
    /// Final success versus band-edge detuning of the structured bath.
    SweepDetuning,
    /// Time sweep of the single-site two-level problem.
    TwoLevel,
    /// Level spacings along s with the spectral density as background.
    Gapmap,
    /// Spectral density at each level spacing along s.
    GoldenRule,
    /// Closed-system success of both schedules at one total time.
    CalibrateSchedule,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Simulate => Subcommand::Simulate,
            Command::SweepTime => Subcommand::SweepTime,
            Command::SweepDetuning => Subcommand::SweepDetuning,
            Command::TwoLevel => Subcommand::TwoLevel,
            Command::Gapmap => Subcommand::Gapmap,
            Command::GoldenRule => Subcommand::GoldenRule,
            Command::CalibrateSchedule => Subcommand::CalibrateSchedule,
        }
    }
}

/// Files written by a run and one-line findings for the manifest.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub findings: Vec<String>,
}

/// Parses the config, applies overrides and resolves the subcommand.
pub fn load(cli: &Cli) -> Result<Resolved> {
    let raw = match &cli.config {
        Some(path) => RunConfig::from_file(path, &cli.set)?,
        None => RunConfig::from_toml("", &cli.set)?,
    };
    let command = match (cli.command, &raw.subcommand) {
        (Some(c), _) => c.into(),
        (None, Some(name)) => name.parse()?,
        (None, None) => {
            return Err(Error::config(
                "subcommand: none given on the command line or in the config",
            ))
        }
    };
    if command == Subcommand::CalibrateSchedule && raw.t_max_multiplier.is_none() {
        let mut raw = raw;
        raw.t_max_multiplier = Some(1.0);
        return raw.resolve(command);
    }
    raw.resolve(command)
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let resolved = load(cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::config("jobs: value 0 out of range; must be >= 1"));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().map_err(|e| Error::config(format!("jobs: {e}")))?;
    fs::create_dir_all(&cli.out)
        .map_err(|e| Error::io(format!("creating {}", cli.out.display()), e))?;

    let started = Instant::now();
    let mut outcome = pool.install(|| dispatch(&resolved, &cli.out))?;
    let manifest = cli.out.join("manifest.toml");
    write_manifest(&manifest, &resolved, &outcome, started.elapsed().as_secs_f64())?;
    outcome.files.push(manifest);
    Ok(outcome)
}

/// `# key=value` lines echoing every resolved config key.
fn config_meta(resolved: &Resolved, table: &mut CsvTable) {
    let mut meta = vec![("code_version".to_string(), env!("CARGO_PKG_VERSION").to_string())];
    let doc: toml::Table = resolved.config.to_toml().parse().expect("config round-trips");
    for (key, value) in doc {
        meta.push((key, value.to_string()));
    }
    meta.append(&mut table.meta);
    table.meta = meta;
}

fn emit(resolved: &Resolved, dir: &Path, name: &str, mut table: CsvTable) -> Result<PathBuf> {
    config_meta(resolved, &mut table);
    let path = dir.join(name);
    table.write(&path)?;
    Ok(path)
}

fn dispatch(r: &Resolved, dir: &Path) -> Result<Outcome> {
    let mut out = Outcome::default();
    match r.command {
        Subcommand::Simulate => {
            let schedule = r.schedule.build(r.total_time, &r.problem)?;
            let (bath, mode) = r.single_run();
            let trajectory = integrate(&r.problem, &schedule, bath.as_ref(), mode, &r.integrator)?;
            out.findings.push(format!("final_success = {}", num(trajectory.final_success())));
            if trajectory.diagnostics.flagged {
                out.findings.push("physicality monitor tripped (|r|^2 > 1.05)".into());
            }
            out.files.push(emit(r, dir, "trajectory.csv", trajectory_table(&trajectory))?);
        }
        Subcommand::SweepTime | Subcommand::TwoLevel | Subcommand::SweepDetuning => {
            let spec = r.sweep_spec();
            let (result, name) = match r.command {
                Subcommand::SweepTime => (sweep_total_time(&spec)?, "sweep_time.csv"),
                Subcommand::TwoLevel => (two_level_run(&spec)?, "two_level.csv"),
                _ => (sweep_detuning(&spec)?, "sweep_detuning.csv"),
            };
            let failed = result.rows.iter().filter(|row| row.outcome.is_err()).count();
            if failed > 0 {
                log::warn!("{failed} sweep points failed; see the error column");
                out.findings.push(format!("{failed} sweep points failed"));
            }
            out.files.push(emit(r, dir, name, result.table())?);
        }
        Subcommand::Gapmap => {
            let map = gap_spectral_map(&r.problem, &r.baths[0], &r.s_grid(), &r.omega_grid());
            out.files.push(emit(r, dir, "gapmap.csv", map.table())?);
        }
        Subcommand::GoldenRule => {
            let rows = golden_rule_profile(&r.problem, &r.baths[0], &r.s_grid());
            out.files.push(emit(r, dir, "golden_rule.csv", golden_rule_table(&rows))?);
        }
        Subcommand::CalibrateSchedule => {
            let c = &r.config;
            let cal = calibrate_schedule(
                &r.problem,
                r.total_time,
                c.target.unwrap(),
                c.target_tolerance.unwrap(),
                &r.integrator,
            )?;
            out.findings.push(format!(
                "at T = {} closed success is {} (linear) and {} (optimal)",
                num(cal.total_time),
                num(cal.linear),
                num(cal.optimal)
            ));
            out.findings.push(match cal.chosen {
                Some(choice) => format!(
                    "figure schedule: {} (within {} of target {})",
                    choice.label(),
                    cal.tolerance,
                    cal.target
                ),
                None => format!("no schedule within {} of target {}", cal.tolerance, cal.target),
            });
            out.files.push(emit(r, dir, "calibration.csv", cal.table())?);
        }
    }
    Ok(out)
}

fn write_manifest(path: &Path, r: &Resolved, outcome: &Outcome, seconds: f64) -> Result<()> {
    let mut text = String::new();
    let _ = writeln!(text, "# redfield-aqc {} manifest", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(text, "# wall_time_s = {seconds:.3}");
    for f in &outcome.files {
        let _ = writeln!(text, "# output = {}", f.display());
    }
    for finding in &outcome.findings {
        let _ = writeln!(text, "# {finding}");
    }
    text.push_str(&r.config.to_toml());
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}
