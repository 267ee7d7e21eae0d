//! Open-system dynamics in the instantaneous eigenbasis.
//!
//! Three formulations share one fixed-step RK4 driver:
//!
//! * `MatrixRedfield` integrates `(ρ00, ρ01)` from the second-order master
//!   equation projected onto the moving eigenbasis. It is the reference.
//! * `BlochPaper` integrates the Bloch vector `(ρx, ρy, ρz)` with the
//!   equations written through the rate combinations `Γ_R^±`, `Γ_I^±`.
//! * `ClosedUnitary` solves the lab-frame Schrödinger equation in the
//!   `{|m⟩, |m⊥⟩}` basis and projects onto the eigenbasis; closed systems only.
//!
//! Conventions: `|0⟩` is the instantaneous ground state, `σz|0⟩ = |0⟩`, so
//! `ρ00 = (1 + ρz)/2` and `ρ01 = (ρx − iρy)/2`. The coupling operator is
//! `σz` of the `{|m⟩, |m⊥⟩}` basis, which reads `A = −c σz − s σx` in the
//! eigenbasis with `c = cos 2θ`, `s = sin 2θ`.

use log::warn;
use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::bath::{Bath, CorrelationGrid, DEFAULT_MAX_GRID_LEN};
use crate::error::{Error, Result};
use crate::problem::{AdiabaticProblem, FrameSnapshot, Schedule};
use crate::rates::{rates_at, RateMode, RateSet};

/// Slack on `|r|² ≤ 1` before a run is marked as leaving the Bloch ball.
pub const POSITIVITY_TOL: f64 = 1e-6;
/// Excess of `|r|²` over one that flags a run as unphysical.
pub const FLAG_TOL: f64 = 0.05;
/// `|r|²` beyond which the integration is declared divergent.
const DIVERGENCE_LIMIT: f64 = 1e4;

/// Reduced density matrix in the instantaneous eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityState {
    /// Population of the instantaneous ground state.
    pub p0: f64,
    /// `ρ01 = ⟨0|ρ|1⟩`
    pub coherence: Complex64,
}

impl DensityState {
    pub fn new(p0: f64, coherence: Complex64) -> Self {
        Self { p0, coherence }
    }

    pub fn ground() -> Self {
        Self::new(1.0, Complex64::new(0.0, 0.0))
    }

    pub fn maximally_mixed() -> Self {
        Self::new(0.5, Complex64::new(0.0, 0.0))
    }

    pub fn from_bloch([x, y, z]: [f64; 3]) -> Self {
        Self::new(0.5 * (1.0 + z), Complex64::new(0.5 * x, -0.5 * y))
    }

    pub fn bloch(&self) -> [f64; 3] {
        [2.0 * self.coherence.re, -2.0 * self.coherence.im, 2.0 * self.p0 - 1.0]
    }

    /// Bloch components of a state derivative `(ṗ0, ρ̇01)`.
    pub fn bloch_derivative(&self) -> [f64; 3] {
        [2.0 * self.coherence.re, -2.0 * self.coherence.im, 2.0 * self.p0]
    }

    pub fn bloch_norm_sq(&self) -> f64 {
        self.bloch().iter().map(|v| v * v).sum()
    }

    /// `tr ρ² = (1 + |r|²)/2`
    pub fn purity(&self) -> f64 {
        0.5 * (1.0 + self.bloch_norm_sq())
    }

    pub fn matrix(&self) -> Matrix2<Complex64> {
        Matrix2::new(
            Complex64::new(self.p0, 0.0),
            self.coherence,
            self.coherence.conj(),
            Complex64::new(1.0 - self.p0, 0.0),
        )
    }

    fn to_vec(self) -> [f64; 3] {
        [self.p0, self.coherence.re, self.coherence.im]
    }

    fn from_vec(v: [f64; 3]) -> Self {
        Self::new(v[0], Complex64::new(v[1], v[2]))
    }
}

/// Population of the instantaneous ground state; at `s = 1` this is the
/// probability of reading out the target.
pub fn success_probability(state: &DensityState) -> f64 {
    state.p0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    MatrixRedfield,
    BlochPaper,
    ClosedUnitary,
}

impl Formulation {
    pub fn label(self) -> &'static str {
        match self {
            Formulation::MatrixRedfield => "matrix",
            Formulation::BlochPaper => "bloch",
            Formulation::ClosedUnitary => "unitary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Requested RK4 step; capped at `T/1000` for each run.
    pub step: f64,
    /// Correlation grid step. `None` picks the largest step that resolves the
    /// bath and puts every RK4 stage time on a grid node.
    pub grid_step: Option<f64>,
    /// Relative cut below which correlation tails are dropped.
    pub tail_tol: f64,
    pub formulation: Formulation,
    /// Minimum number of stored trajectory samples.
    pub samples: usize,
    pub record_rates: bool,
    pub max_grid_len: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: 0.1,
            grid_step: None,
            tail_tol: 1e-6,
            formulation: Formulation::MatrixRedfield,
            samples: 200,
            record_rates: false,
            max_grid_len: DEFAULT_MAX_GRID_LEN,
        }
    }
}

impl IntegratorConfig {
    pub fn with_step(self, step: f64) -> Self {
        Self { step, ..self }
    }

    pub fn with_formulation(self, formulation: Formulation) -> Self {
        Self { formulation, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub state: DensityState,
    pub frame: FrameSnapshot,
    pub rates: Option<RateSet>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub steps: usize,
    pub step: f64,
    pub grid_step: f64,
    pub max_bloch_norm_sq: f64,
    /// `|r|²` exceeded `1 + POSITIVITY_TOL` at some step.
    pub left_bloch_ball: bool,
    /// `|r|²` exceeded `1 + FLAG_TOL`: weak-coupling treatment broke down.
    pub flagged: bool,
    /// `max_t |dα/dt|/α · τ_C`, the frozen-gap validity ratio.
    pub max_slow_gap_ratio: f64,
    /// Operational correlation time τ_C (tail cut of the grid).
    pub correlation_time: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub diagnostics: Diagnostics,
}

impl Trajectory {
    pub fn final_point(&self) -> &TrajectoryPoint {
        self.points.last().expect("trajectory has at least one point")
    }

    pub fn final_success(&self) -> f64 {
        success_probability(&self.final_point().state)
    }
}

/// Eigenbasis master-equation derivative of `(ρ00, ρ01)`.
///
/// `dρ/dt = −i[H, ρ] + [ρ, W] − [A, Λρ − ρΛ†]` with `H = diag(E0, E1)`,
/// `W` the generator of the basis rotation (`|0̇⟩ = −θ̇|1⟩`, `|1̇⟩ = θ̇|0⟩`),
/// and `Λ_kl = A_kl R_kl` where `R00 = R11 = Γ00`, `R01 = Γ01`, `R10 = Γ10`.
pub fn rhs_matrix(frame: &FrameSnapshot, state: &DensityState, rates: &RateSet) -> DensityState {
    let re = |x: f64| Complex64::new(x, 0.0);
    let zero = re(0.0);
    let rho = state.matrix();
    let h = Matrix2::new(re(frame.e0), zero, zero, re(frame.e1));
    let w = Matrix2::new(zero, re(frame.theta_dot), re(-frame.theta_dot), zero);
    let (c, s) = (frame.c, frame.s_trig);
    let a = Matrix2::new(re(-c), re(-s), re(-s), re(c));
    let lambda = Matrix2::new(
        a[(0, 0)] * rates.g00,
        a[(0, 1)] * rates.g01,
        a[(1, 0)] * rates.g10,
        a[(1, 1)] * rates.g00,
    );
    let x = lambda * rho - rho * lambda.adjoint();
    let minus_i = Complex64::new(0.0, -1.0);
    let d = (h * rho - rho * h) * minus_i + (rho * w - w * rho) - (a * x - x * a);
    DensityState::new(d[(0, 0)].re, d[(0, 1)])
}

/// Bloch-vector derivative in terms of the rate combinations.
///
/// ```text
/// ρ̇x = 2cs Γ_R^− − 4c² ReΓ00 ρx + α ρy + 2(cs Γ_R^+ + θ̇) ρz
/// ρ̇y = 2cs (Γ_I^+ − 2 ImΓ00) + (2s² Γ_I^− − α) ρx
///       − 2(2c² ReΓ00 + s² Γ_R^+) ρy + 2cs Γ_I^− ρz
/// ρ̇z = −2s² Γ_R^− + (4cs ReΓ00 − 2θ̇) ρx − 2s² Γ_R^+ ρz
/// ```
pub fn rhs_bloch(frame: &FrameSnapshot, bloch: [f64; 3], rates: &RateSet) -> [f64; 3] {
    let [x, y, z] = bloch;
    let (c, s, alpha, td) = (frame.c, frame.s_trig, frame.alpha, frame.theta_dot);
    let (rp, rm) = (rates.gamma_r_plus(), rates.gamma_r_minus());
    let (ip, im) = (rates.gamma_i_plus(), rates.gamma_i_minus());
    let (re00, im00) = (rates.re00(), rates.im00());
    let cs = c * s;
    let (c2, s2) = (c * c, s * s);
    [
        2.0 * cs * rm - 4.0 * c2 * re00 * x + alpha * y + 2.0 * (cs * rp + td) * z,
        2.0 * cs * (ip - 2.0 * im00) + (2.0 * s2 * im - alpha) * x
            - 2.0 * (2.0 * c2 * re00 + s2 * rp) * y
            + 2.0 * cs * im * z,
        -2.0 * s2 * rm + (4.0 * cs * re00 - 2.0 * td) * x - 2.0 * s2 * rp * z,
    ]
}

fn rk4<const N: usize, F>(y: [f64; N], h: f64, mut f: F) -> [f64; N]
where
    F: FnMut(usize, &[f64; N]) -> [f64; N],
{
    let axpy = |a: &[f64; N], k: &[f64; N], c: f64| {
        let mut out = *a;
        for (o, v) in out.iter_mut().zip(k) {
            *o += c * v;
        }
        out
    };
    let k1 = f(0, &y);
    let k2 = f(1, &axpy(&y, &k1, 0.5 * h));
    let k3 = f(1, &axpy(&y, &k2, 0.5 * h));
    let k4 = f(2, &axpy(&y, &k3, h));
    let mut out = y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Largest gap along the schedule, sampled densely.
fn max_gap(problem: &AdiabaticProblem) -> f64 {
    (0..=1000).map(|k| problem.gap(k as f64 / 1000.0)).fold(0.0, f64::max)
}

/// Integrates from the instantaneous ground state at `t = 0`.
pub fn integrate(
    problem: &AdiabaticProblem,
    schedule: &Schedule,
    bath: Option<&Bath>,
    mode: RateMode,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    integrate_from(problem, schedule, bath, mode, config, DensityState::ground())
}

pub fn integrate_from(
    problem: &AdiabaticProblem,
    schedule: &Schedule,
    bath: Option<&Bath>,
    mode: RateMode,
    config: &IntegratorConfig,
    initial: DensityState,
) -> Result<Trajectory> {
    let total = schedule.total_time();
    let alpha_max = max_gap(problem);
    if !(config.step > 0.0) || config.step > 0.1 / alpha_max * (1.0 + 1e-12) {
        return Err(Error::config(format!(
            "integrator step {} must lie in (0, {}] (0.1 / max gap)",
            config.step,
            0.1 / alpha_max
        )));
    }
    let steps = (total / config.step.min(total / 1000.0) - 1e-9).ceil().max(1.0) as usize;
    let h = total / steps as f64;

    let bath = bath.filter(|b| b.coupling() != 0.0);
    if config.formulation == Formulation::ClosedUnitary && bath.is_some() {
        return Err(Error::config("the unitary formulation requires a closed system (eta = 0)"));
    }
    let grid = match bath {
        Some(b) => {
            let grid_step = match config.grid_step {
                Some(step) => step,
                None => {
                    let limit = b.max_grid_step(alpha_max);
                    let half = 0.5 * h;
                    half / (half / limit - 1e-9).ceil().max(1.0)
                }
            };
            Some(CorrelationGrid::build(
                *b,
                total,
                grid_step,
                config.tail_tol,
                alpha_max,
                config.max_grid_len,
            )?)
        }
        None => None,
    };
    let correlation_time = grid.as_ref().map_or(0.0, |g| g.tail_time());

    let evaluate = |t: f64| -> Result<(FrameSnapshot, RateSet)> {
        let s = schedule.s(t)?;
        let frame = problem.frame(s, schedule.sdot(t)?)?;
        let rates = match &grid {
            Some(g) => rates_at(g, t.min(total), frame.alpha, mode)?,
            None => RateSet::zero(t, frame.alpha),
        };
        Ok((frame, rates))
    };

    let stride = (steps / config.samples.max(1)).max(1);
    let mut points = Vec::with_capacity(steps / stride + 2);
    let (mut frame, mut rates) = evaluate(0.0)?;
    let mut state = initial;
    let mut diagnostics = Diagnostics {
        steps,
        step: h,
        grid_step: grid.as_ref().map_or(f64::NAN, |g| g.step()),
        max_bloch_norm_sq: state.bloch_norm_sq(),
        left_bloch_ball: false,
        flagged: false,
        max_slow_gap_ratio: 0.0,
        correlation_time,
    };
    let record = |t: f64, state: DensityState, frame: FrameSnapshot, rates: RateSet| {
        TrajectoryPoint { t, state, frame, rates: config.record_rates.then_some(rates) }
    };
    points.push(record(0.0, state, frame, rates));

    // Lab-frame amplitudes (ψ_m, ψ_⊥) for the unitary formulation.
    let mut psi = {
        let (g, _) = frame.eigenvectors();
        [g[0], 0.0, g[1], 0.0]
    };

    for k in 0..steps {
        let t0 = k as f64 * h;
        let t1 = if k + 1 == steps { total } else { (k + 1) as f64 * h };
        let mid = evaluate(t0 + 0.5 * h)?;
        let end = evaluate(t1)?;
        let stages = [(frame, rates), mid, end];

        state = match config.formulation {
            Formulation::MatrixRedfield => DensityState::from_vec(rk4(state.to_vec(), h, |i, y| {
                let (f, r) = &stages[i];
                rhs_matrix(f, &DensityState::from_vec(*y), r).to_vec()
            })),
            Formulation::BlochPaper => DensityState::from_bloch(rk4(state.bloch(), h, |i, y| {
                let (f, r) = &stages[i];
                rhs_bloch(f, *y, r)
            })),
            Formulation::ClosedUnitary => {
                psi = rk4(psi, h, |i, y| lab_schrodinger(&stages[i].0, y));
                project_onto_eigenbasis(&stages[2].0, &psi)
            }
        };
        (frame, rates) = end;

        let norm_sq = state.bloch_norm_sq();
        if !norm_sq.is_finite() || norm_sq > DIVERGENCE_LIMIT {
            return Err(Error::numerical(format!(
                "integration diverged at t = {t1} (|r|^2 = {norm_sq:e})"
            )));
        }
        diagnostics.max_bloch_norm_sq = diagnostics.max_bloch_norm_sq.max(norm_sq);
        if grid.is_some() {
            let ratio = frame.alpha_dot.abs() / frame.alpha * correlation_time;
            diagnostics.max_slow_gap_ratio = diagnostics.max_slow_gap_ratio.max(ratio);
        }
        if (k + 1) % stride == 0 || k + 1 == steps {
            points.push(record(t1, state, frame, rates));
        }
    }

    diagnostics.left_bloch_ball = diagnostics.max_bloch_norm_sq > 1.0 + POSITIVITY_TOL;
    diagnostics.flagged = diagnostics.max_bloch_norm_sq > 1.0 + FLAG_TOL;
    if diagnostics.flagged {
        warn!(
            "unphysical state: |r|^2 reached {:.4} (bath {}, {} rates); weak-coupling treatment is unreliable here",
            diagnostics.max_bloch_norm_sq,
            bath.map_or("none", |b| b.label()),
            mode.label()
        );
    }
    Ok(Trajectory { points, diagnostics })
}

/// `i dψ/dt = H ψ` with `H = ½(Ω σx − Δ σz)` in the `{|m⟩, |m⊥⟩}` basis.
fn lab_schrodinger(frame: &FrameSnapshot, y: &[f64; 4]) -> [f64; 4] {
    let a = Complex64::new(y[0], y[1]);
    let b = Complex64::new(y[2], y[3]);
    let ha = 0.5 * (-frame.delta * a + frame.omega * b);
    let hb = 0.5 * (frame.omega * a + frame.delta * b);
    let minus_i = Complex64::new(0.0, -1.0);
    let (da, db) = (minus_i * ha, minus_i * hb);
    [da.re, da.im, db.re, db.im]
}

fn project_onto_eigenbasis(frame: &FrameSnapshot, psi: &[f64; 4]) -> DensityState {
    let (g, e) = frame.eigenvectors();
    let a = Complex64::new(psi[0], psi[1]);
    let b = Complex64::new(psi[2], psi[3]);
    let c0 = g[0] * a + g[1] * b;
    let c1 = e[0] * a + e[1] * b;
    DensityState::new(c0.norm_sqr(), c0 * c1.conj())
}
