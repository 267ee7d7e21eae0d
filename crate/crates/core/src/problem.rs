//! Two-level adiabatic problems, interpolation schedules and the
//! instantaneous eigenframe.
//!
//! The Hamiltonian acts on the subspace spanned by the target `|m⟩` and its
//! complement `|m⊥⟩` as `H(s) = ½(Ω(s)σx − Δ(s)σz)` (plus a constant ½ that
//! only shifts energies). Both Δ and Ω are affine in `s`, so their
//! derivatives are exact constants.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Largest supported qubit count; keeps `N = 2^n` exactly representable.
pub const MAX_QUBITS: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemKind {
    /// Adiabatic search over `N = 2^qubits` items, reduced to two levels.
    Grover { qubits: u32 },
    /// A genuine two-level system started in `a0|0⟩ + b0|1⟩` with target `|1⟩`.
    SingleSite { a0: f64 },
}

/// The reduced two-level Hamiltonian `H(s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticProblem {
    kind: ProblemKind,
    /// Database size `N` (Grover) or the equivalent `1/b0²` (single site).
    size: f64,
    a0: f64,
    b0: f64,
}

impl AdiabaticProblem {
    pub fn grover(qubits: u32) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&qubits) {
            return Err(Error::config(format!(
                "n = {qubits} out of range: qubit count must lie in [1, {MAX_QUBITS}]"
            )));
        }
        let size = (1u64 << qubits) as f64;
        Ok(Self {
            kind: ProblemKind::Grover { qubits },
            size,
            a0: ((size - 1.0) / size).sqrt(),
            b0: 1.0 / size.sqrt(),
        })
    }

    pub fn single_site(a0: f64) -> Result<Self> {
        if !(a0 > 0.0 && a0 < 1.0) {
            return Err(Error::config(format!(
                "a0 = {a0} out of range: amplitude must lie in the open interval (0, 1)"
            )));
        }
        let b0 = (1.0 - a0 * a0).sqrt();
        Ok(Self { kind: ProblemKind::SingleSite { a0 }, size: 1.0 / (b0 * b0), a0, b0 })
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    /// `N` for Grover; `1/b0²` for the single-site problem, which makes the
    /// Grover schedule formulas applicable verbatim.
    pub fn size(&self) -> f64 {
        self.size
    }

    pub fn amplitudes(&self) -> (f64, f64) {
        (self.a0, self.b0)
    }

    pub fn delta(&self, s: f64) -> f64 {
        match self.kind {
            ProblemKind::Grover { .. } => 2.0 * (1.0 - s) / self.size + (2.0 * s - 1.0),
            ProblemKind::SingleSite { .. } => {
                (1.0 - s) * (self.b0 * self.b0 - self.a0 * self.a0) + s
            }
        }
    }

    pub fn omega(&self, s: f64) -> f64 {
        match self.kind {
            ProblemKind::Grover { .. } => 2.0 * (s - 1.0) * (self.size - 1.0).sqrt() / self.size,
            ProblemKind::SingleSite { .. } => -2.0 * (1.0 - s) * self.a0 * self.b0,
        }
    }

    pub fn delta_prime(&self) -> f64 {
        match self.kind {
            ProblemKind::Grover { .. } => 2.0 - 2.0 / self.size,
            ProblemKind::SingleSite { .. } => 1.0 - (self.b0 * self.b0 - self.a0 * self.a0),
        }
    }

    pub fn omega_prime(&self) -> f64 {
        match self.kind {
            ProblemKind::Grover { .. } => 2.0 * (self.size - 1.0).sqrt() / self.size,
            ProblemKind::SingleSite { .. } => 2.0 * self.a0 * self.b0,
        }
    }

    /// Instantaneous gap `α(s) = E1 − E0`.
    pub fn gap(&self, s: f64) -> f64 {
        self.delta(s).hypot(self.omega(s))
    }

    /// Mixing angle θ with `sin θ ≥ 0`, taken from the double angle so that
    /// no `0/0` appears anywhere on the schedule.
    pub fn theta(&self, s: f64) -> f64 {
        let alpha = self.gap(s);
        let c = -self.delta(s) / alpha;
        let st = -self.omega(s) / alpha;
        st.atan2(c).rem_euclid(TAU) / 2.0
    }

    /// `dθ/ds`, exact for affine Δ and Ω.
    pub fn theta_prime(&self, s: f64) -> f64 {
        let (d, o) = (self.delta(s), self.omega(s));
        (d * self.omega_prime() - o * self.delta_prime()) / (2.0 * (d * d + o * o))
    }

    /// Instantaneous eigenframe at schedule value `s`, moving at `ds/dt = sdot`.
    pub fn frame(&self, s: f64, sdot: f64) -> Result<FrameSnapshot> {
        let delta = self.delta(s);
        let omega = self.omega(s);
        let alpha = delta.hypot(omega);
        if !(alpha > 0.0) {
            return Err(Error::numerical(format!("degenerate gap at s = {s}")));
        }
        let c = -delta / alpha;
        let s_trig = -omega / alpha;
        let theta = s_trig.atan2(c).rem_euclid(TAU) / 2.0;
        let alpha2 = alpha * alpha;
        let theta_dot =
            (delta * self.omega_prime() - omega * self.delta_prime()) / (2.0 * alpha2) * sdot;
        let alpha_dot = (delta * self.delta_prime() + omega * self.omega_prime()) / alpha * sdot;
        Ok(FrameSnapshot {
            s,
            delta,
            omega,
            alpha,
            theta,
            c,
            s_trig,
            e0: 0.5 - alpha / 2.0,
            e1: 0.5 + alpha / 2.0,
            e2: 1.0,
            theta_dot,
            alpha_dot,
        })
    }

    /// Minimum of the gap over `[0, 1]` by golden-section search.
    pub fn min_gap(&self) -> (f64, f64) {
        // α² is a convex quadratic in s, so golden section converges globally.
        let f = |s: f64| self.gap(s);
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (0.0f64, 1.0f64);
        let mut x1 = b - inv_phi * (b - a);
        let mut x2 = a + inv_phi * (b - a);
        let (mut f1, mut f2) = (f(x1), f(x2));
        while b - a > 1e-14 {
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = f(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = f(x2);
            }
        }
        let s = 0.5 * (a + b);
        (s, f(s))
    }

    /// Adiabatic time scale `max_s |⟨1|dH/ds|0⟩| / α²` sampled on a uniform grid.
    ///
    /// For a real two-level Hamiltonian `⟨1|dH/ds|0⟩ = α dθ/ds`. This is a
    /// diagnostic; schedules never consult it.
    pub fn adiabatic_time_scale(&self, samples: usize) -> f64 {
        let samples = samples.max(2);
        (0..samples)
            .map(|k| {
                let s = k as f64 / (samples - 1) as f64;
                self.theta_prime(s).abs() / self.gap(s)
            })
            .fold(0.0, f64::max)
    }
}

/// Instantaneous eigenframe quantities at one schedule value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSnapshot {
    pub s: f64,
    pub delta: f64,
    pub omega: f64,
    pub alpha: f64,
    pub theta: f64,
    /// `cos 2θ = −Δ/α`
    pub c: f64,
    /// `sin 2θ = −Ω/α`
    pub s_trig: f64,
    pub e0: f64,
    pub e1: f64,
    pub e2: f64,
    pub theta_dot: f64,
    pub alpha_dot: f64,
}

impl FrameSnapshot {
    /// Ground and excited eigenvectors in the `{|m⟩, |m⊥⟩}` basis.
    pub fn eigenvectors(&self) -> ([f64; 2], [f64; 2]) {
        let (sin, cos) = self.theta.sin_cos();
        ([sin, cos], [-cos, sin])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleKind {
    /// `s(t) = t/T`
    Linear,
    /// Local-adiabatic schedule tracking the Grover gap.
    Optimal,
    /// Frozen Hamiltonian at a fixed `s`; used for static-frame checks.
    Fixed(f64),
}

/// Interpolation `s(t)` over `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    kind: ScheduleKind,
    total_time: f64,
    /// Adiabatic error parameter ε (optimal schedule only).
    epsilon: f64,
    size: f64,
}

impl Schedule {
    pub fn linear(total_time: f64) -> Result<Self> {
        check_total_time(total_time)?;
        Ok(Self { kind: ScheduleKind::Linear, total_time, epsilon: f64::NAN, size: f64::NAN })
    }

    /// Optimal schedule with ε calibrated so that `s(T) = 1` exactly.
    pub fn optimal(total_time: f64, problem: &AdiabaticProblem) -> Result<Self> {
        check_total_time(total_time)?;
        let size = problem.size();
        let root = (size - 1.0).sqrt();
        let epsilon = size * root.atan() / (total_time * root);
        Ok(Self { kind: ScheduleKind::Optimal, total_time, epsilon, size })
    }

    /// Optimal schedule for a given ε; the total time follows from `s(T) = 1`.
    pub fn optimal_for_epsilon(epsilon: f64, problem: &AdiabaticProblem) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::config(format!("epsilon = {epsilon} must be positive")));
        }
        let size = problem.size();
        let root = (size - 1.0).sqrt();
        let total_time = size * root.atan() / (epsilon * root);
        Ok(Self { kind: ScheduleKind::Optimal, total_time, epsilon, size })
    }

    pub fn fixed(s: f64, total_time: f64) -> Result<Self> {
        check_total_time(total_time)?;
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::config(format!("fixed s = {s} must lie in [0, 1]")));
        }
        Ok(Self { kind: ScheduleKind::Fixed(s), total_time, epsilon: f64::NAN, size: f64::NAN })
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    /// Calibrated ε for the optimal schedule, `NaN` otherwise.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn clamp_time(&self, t: f64) -> Result<f64> {
        let slack = 1e-12 * self.total_time;
        if !(t >= -slack && t <= self.total_time + slack) {
            return Err(Error::domain(format!(
                "t = {t} outside schedule range [0, {}]",
                self.total_time
            )));
        }
        Ok(t.clamp(0.0, self.total_time))
    }

    fn optimal_phase(&self, t: f64) -> (f64, f64) {
        let root = (self.size - 1.0).sqrt();
        (2.0 * self.epsilon * t * root / self.size - root.atan(), root)
    }

    pub fn s(&self, t: f64) -> Result<f64> {
        let t = self.clamp_time(t)?;
        Ok(match self.kind {
            ScheduleKind::Linear => t / self.total_time,
            ScheduleKind::Fixed(s) => s,
            ScheduleKind::Optimal => {
                if t == 0.0 {
                    0.0
                } else if t == self.total_time {
                    1.0
                } else {
                    let (phase, root) = self.optimal_phase(t);
                    0.5 * (1.0 + phase.tan() / root)
                }
            }
        })
    }

    pub fn sdot(&self, t: f64) -> Result<f64> {
        let t = self.clamp_time(t)?;
        Ok(match self.kind {
            ScheduleKind::Linear => 1.0 / self.total_time,
            ScheduleKind::Fixed(_) => 0.0,
            ScheduleKind::Optimal => {
                let (phase, _) = self.optimal_phase(t);
                let tan = phase.tan();
                self.epsilon / self.size * (1.0 + tan * tan)
            }
        })
    }
}

fn check_total_time(total_time: f64) -> Result<()> {
    if !(total_time > 0.0 && total_time.is_finite()) {
        return Err(Error::config(format!("total time T = {total_time} must be positive")));
    }
    Ok(())
}

/// `T_lin = 4N/π`, the reference run time used to scale sweep axes.
pub fn reference_linear_time(problem: &AdiabaticProblem) -> f64 {
    4.0 * problem.size() / PI
}

/// `T_opt ≈ π√N/(2ε)`, the large-N run time of the optimal schedule.
pub fn optimal_time_estimate(problem: &AdiabaticProblem, epsilon: f64) -> f64 {
    PI * problem.size().sqrt() / (2.0 * epsilon)
}
