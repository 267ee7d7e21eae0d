//! Complex dissipation rates `Γ00`, `Γ01`, `Γ10` in the frozen-gap form
//!
//! ```text
//! Γ00(t) = ∫_0^t g(τ) dτ
//! Γ01(t) = ∫_0^t g(τ) e^{+iα(t)τ} dτ
//! Γ10(t) = ∫_0^t g(τ) e^{−iα(t)τ} dτ
//! ```
//!
//! evaluated by composite Simpson quadrature over the cached correlation
//! grid, with the oscillatory factor evaluated exactly at every node.

use num_complex::Complex64;

use crate::bath::{Bath, CorrelationGrid, GaussianKernelBath};
use crate::dynamics::{self, DensityState, Formulation, IntegratorConfig};
use crate::error::{Error, Result};
use crate::problem::{AdiabaticProblem, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateMode {
    Complex,
    /// Imaginary parts discarded before any combination is formed.
    RealOnly,
}

impl RateMode {
    pub fn label(self) -> &'static str {
        match self {
            RateMode::Complex => "complex",
            RateMode::RealOnly => "real",
        }
    }
}

/// Rates at one instant, for the gap `alpha` frozen at that instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSet {
    pub t: f64,
    pub alpha: f64,
    pub g00: Complex64,
    pub g01: Complex64,
    pub g10: Complex64,
}

impl RateSet {
    pub fn zero(t: f64, alpha: f64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self { t, alpha, g00: z, g01: z, g10: z }
    }

    pub fn apply(self, mode: RateMode) -> Self {
        match mode {
            RateMode::Complex => self,
            RateMode::RealOnly => Self {
                g00: Complex64::new(self.g00.re, 0.0),
                g01: Complex64::new(self.g01.re, 0.0),
                g10: Complex64::new(self.g10.re, 0.0),
                ..self
            },
        }
    }

    /// `Re(Γ10 + Γ01)`
    pub fn gamma_r_plus(&self) -> f64 {
        (self.g10 + self.g01).re
    }

    /// `Re(Γ10 − Γ01)`
    pub fn gamma_r_minus(&self) -> f64 {
        (self.g10 - self.g01).re
    }

    /// `Im(Γ10 + Γ01)`
    pub fn gamma_i_plus(&self) -> f64 {
        (self.g10 + self.g01).im
    }

    /// `Im(Γ10 − Γ01)`
    pub fn gamma_i_minus(&self) -> f64 {
        (self.g10 - self.g01).im
    }

    pub fn re00(&self) -> f64 {
        self.g00.re
    }

    pub fn im00(&self) -> f64 {
        self.g00.im
    }
}

// Nodes between exact re-evaluations of the phase factor.
const PHASE_RESYNC: usize = 64;

/// Rates at time `t` for the frozen gap `alpha`.
pub fn rates_at(grid: &CorrelationGrid, t: f64, alpha: f64, mode: RateMode) -> Result<RateSet> {
    let h = grid.step();
    if !(t >= 0.0) || t > grid.horizon() * (1.0 + 1e-12) + 1e-12 {
        return Err(Error::domain(format!(
            "rate requested at t = {t}, outside the correlation grid [0, {}]",
            grid.horizon()
        )));
    }
    if !(alpha >= 0.0) {
        return Err(Error::domain(format!("gap alpha = {alpha} must be non-negative")));
    }
    let samples = grid.samples();
    let ratio = t / h;
    let mut nodes = (ratio + 1e-9).floor() as usize;
    let mut remainder = t - nodes as f64 * h;
    if remainder.abs() < 1e-9 * h {
        remainder = 0.0;
    }
    if nodes >= grid.tail_cut() {
        nodes = grid.tail_cut().saturating_sub(1);
        remainder = 0.0;
    }

    let mut s0 = Complex64::new(0.0, 0.0);
    let mut sp = Complex64::new(0.0, 0.0);
    let mut sm = Complex64::new(0.0, 0.0);

    if nodes >= 1 {
        let rot = Complex64::from_polar(1.0, alpha * h);
        let reach = if nodes == 1 { 2 } else { nodes };
        let mut phase = Complex64::new(1.0, 0.0);
        for (k, g) in samples.iter().enumerate().take(reach + 1) {
            if k % PHASE_RESYNC == 0 {
                phase = Complex64::from_polar(1.0, alpha * h * k as f64);
            }
            let w = node_weight(k, nodes);
            if w != 0.0 {
                let wg = g * w;
                s0 += wg;
                sp += wg * phase;
                sm += wg * phase.conj();
            }
            phase *= rot;
        }
        s0 *= h;
        sp *= h;
        sm *= h;
    }

    if remainder > 0.0 {
        let (r0, rp, rm) = remainder_integral(samples, h, nodes, remainder, alpha);
        s0 += r0;
        sp += rp;
        sm += rm;
    }

    Ok(RateSet { t, alpha, g00: s0, g01: sp, g10: sm }.apply(mode))
}

/// Composite weight (in units of the step) of node `k` for an integral over
/// `nodes` intervals: Simpson on an even prefix, Simpson 3/8 on a trailing
/// odd block, and a quadratic-extrapolated single interval when `nodes == 1`.
fn node_weight(k: usize, nodes: usize) -> f64 {
    if nodes == 1 {
        return match k {
            0 => 5.0 / 12.0,
            1 => 8.0 / 12.0,
            2 => -1.0 / 12.0,
            _ => 0.0,
        };
    }
    if k > nodes {
        return 0.0;
    }
    let simpson_end = if nodes.is_multiple_of(2) { nodes } else { nodes - 3 };
    let mut w = 0.0;
    if simpson_end > 0 && k <= simpson_end {
        w += if k == 0 || k == simpson_end {
            1.0 / 3.0
        } else if k % 2 == 1 {
            4.0 / 3.0
        } else {
            2.0 / 3.0
        };
    }
    if nodes % 2 == 1 && k >= nodes - 3 {
        w += if k == nodes - 3 || k == nodes { 3.0 / 8.0 } else { 9.0 / 8.0 };
    }
    w
}

/// Integral over `[nodes·h, nodes·h + r]` with `g` interpolated by a cubic
/// through four neighbouring nodes and the phase evaluated exactly.
fn remainder_integral(
    samples: &[Complex64],
    h: f64,
    nodes: usize,
    r: f64,
    alpha: f64,
) -> (Complex64, Complex64, Complex64) {
    const GL_X: [f64; 4] = [
        -0.861_136_311_594_052_6,
        -0.339_981_043_584_856_3,
        0.339_981_043_584_856_3,
        0.861_136_311_594_052_6,
    ];
    const GL_W: [f64; 4] = [
        0.347_854_845_137_453_9,
        0.652_145_154_862_546_1,
        0.652_145_154_862_546_1,
        0.347_854_845_137_453_9,
    ];
    let first = nodes.saturating_sub(1).min(samples.len().saturating_sub(4));
    let stencil = [first, first + 1, first + 2, first + 3];
    let start = nodes as f64 * h;
    let mut out = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for (x, w) in GL_X.iter().zip(GL_W) {
        let tau = start + 0.5 * r * (x + 1.0);
        let u = tau / h;
        let mut g = Complex64::new(0.0, 0.0);
        for (i, &ni) in stencil.iter().enumerate() {
            let mut basis = 1.0;
            for (j, &nj) in stencil.iter().enumerate() {
                if i != j {
                    basis *= (u - nj as f64) / (ni as f64 - nj as f64);
                }
            }
            g += samples[ni] * basis;
        }
        let wg = g * (0.5 * r * w);
        let phase = Complex64::from_polar(1.0, alpha * tau);
        out.0 += wg;
        out.1 += wg * phase;
        out.2 += wg * phase.conj();
    }
    out
}

/// Outcome of the delta-bath dephasing check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingFit {
    /// Fitted decay rate of `|ρ01(t)|`.
    pub rate: f64,
    /// Pure-dephasing rate `4 ReΓ00(∞) = 4 w` for a kernel of weight `w`.
    pub lindblad_rate: f64,
    /// Largest absolute residual of `ln|ρ01|` about the fitted line.
    pub max_residual: f64,
}

/// Runs the full dynamics with a frozen Hamiltonian and a narrow Gaussian
/// stand-in for a delta-correlated bath, then fits the exponential decay of
/// the eigenbasis coherence.
///
/// The Hamiltonian is frozen at `s = 1`, where the coupling operator is
/// diagonal in the eigenbasis, so the only dissipative effect is pure
/// dephasing at rate `4 ReΓ00`.
pub fn markovian_limit_check(
    problem: &AdiabaticProblem,
    weight: f64,
    width: f64,
) -> Result<DephasingFit> {
    let bath = Bath::GaussianKernel(GaussianKernelBath::new(weight, width)?);
    let lindblad_rate = 4.0 * weight;
    // Observe for three e-foldings (or a fixed window when undamped).
    let window = if weight > 0.0 { 3.0 / lindblad_rate } else { 50.0 };
    let total = (window + 10.0 * width).max(20.0 * width);
    let schedule = Schedule::fixed(1.0, total)?;
    let step = (0.02 * width).min(total / 2000.0);
    let config = IntegratorConfig {
        step,
        grid_step: Some(step / 2.0),
        formulation: Formulation::MatrixRedfield,
        samples: 400,
        ..IntegratorConfig::default()
    };
    let initial = DensityState::new(0.5, Complex64::new(0.5, 0.0));
    let traj = dynamics::integrate_from(
        problem,
        &schedule,
        Some(&bath),
        RateMode::Complex,
        &config,
        initial,
    )?;

    let fit_start = 5.0 * width;
    let (ts, logs): (Vec<f64>, Vec<f64>) = traj
        .points
        .iter()
        .filter(|p| p.t >= fit_start)
        .map(|p| (p.t, p.state.coherence.norm().ln()))
        .unzip();
    if ts.len() < 10 {
        return Err(Error::numerical("dephasing fit: too few samples after the transient"));
    }
    let n = ts.len() as f64;
    let mt = ts.iter().sum::<f64>() / n;
    let ml = logs.iter().sum::<f64>() / n;
    let sxx: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    let sxy: f64 = ts.iter().zip(&logs).map(|(t, l)| (t - mt) * (l - ml)).sum();
    let slope = sxy / sxx;
    let intercept = ml - slope * mt;
    let max_residual = ts
        .iter()
        .zip(&logs)
        .map(|(t, l)| (l - (intercept + slope * t)).abs())
        .fold(0.0, f64::max);
    if max_residual > 0.05 {
        return Err(Error::numerical(format!(
            "dephasing fit: coherence decay is not exponential (max log residual {max_residual:.3e})"
        )));
    }
    Ok(DephasingFit { rate: -slope, lindblad_rate, max_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{OhmicBath, PhaseSign, StructuredBath, Temperature, DEFAULT_MAX_GRID_LEN};
    use crate::quad;

    fn structured_grid(horizon: f64) -> CorrelationGrid {
        let bath = Bath::Structured(StructuredBath::new(0.1, 0.5, 0.5, PhaseSign::Plus).unwrap());
        CorrelationGrid::build(bath, horizon, 0.05, 0.0, 1.0, DEFAULT_MAX_GRID_LEN).unwrap()
    }

    fn oracle(bath: &Bath, t: f64, alpha: f64, sign: f64) -> Complex64 {
        let panels = ((t * (alpha + 1.0)).ceil() as usize).max(4);
        quad::integrate(
            |tau| bath.correlation(tau).unwrap() * Complex64::from_polar(1.0, sign * alpha * tau),
            0.0,
            t,
            panels,
            1e-13,
        )
        .unwrap()
        .value
    }

    #[test]
    fn weights_integrate_polynomials_exactly() {
        for nodes in 1..12usize {
            // ∫_0^n x^2 dx with unit spacing
            let sum: f64 = (0..=nodes + 1)
                .map(|k| node_weight(k, nodes) * (k as f64).powi(2))
                .sum();
            let exact = (nodes as f64).powi(3) / 3.0;
            assert!((sum - exact).abs() < 1e-10, "nodes = {nodes}");
        }
    }

    #[test]
    fn zero_time_gives_zero_rates() {
        let grid = structured_grid(10.0);
        let r = rates_at(&grid, 0.0, 0.4, RateMode::Complex).unwrap();
        assert_eq!(r, RateSet::zero(0.0, 0.4));
    }

    #[test]
    fn zero_gap_degenerates() {
        let grid = structured_grid(30.0);
        for t in [0.05, 3.3, 17.123, 30.0] {
            let r = rates_at(&grid, t, 0.0, RateMode::Complex).unwrap();
            assert!((r.g01 - r.g00).norm() < 1e-10);
            assert!((r.g10 - r.g00).norm() < 1e-10);
        }
    }

    #[test]
    fn structured_rate_matches_adaptive_quadrature() {
        let grid = structured_grid(60.0);
        let r = rates_at(&grid, 50.0, 0.25, RateMode::Complex).unwrap();
        let bath = *grid.bath();
        assert!((r.g01 - oracle(&bath, 50.0, 0.25, 1.0)).norm() < 1e-6);
        assert!((r.g10 - oracle(&bath, 50.0, 0.25, -1.0)).norm() < 1e-6);
        assert!((r.g00 - oracle(&bath, 50.0, 0.0, 1.0)).norm() < 1e-6);
    }

    #[test]
    fn off_grid_times_use_interpolated_remainder() {
        let bath = Bath::Ohmic(OhmicBath::ohmic(0.05, 0.25, Temperature::Zero).unwrap());
        let grid = CorrelationGrid::build(bath, 40.0, 0.05, 0.0, 1.0, DEFAULT_MAX_GRID_LEN).unwrap();
        for &(t, alpha) in &[(0.013, 0.9), (0.071, 0.3), (7.777, 0.5), (39.99, 1.0)] {
            let r = rates_at(&grid, t, alpha, RateMode::Complex).unwrap();
            assert!((r.g01 - oracle(&bath, t, alpha, 1.0)).norm() < 1e-9, "t = {t}");
            assert!((r.g10 - oracle(&bath, t, alpha, -1.0)).norm() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn real_only_zeroes_imaginary_parts() {
        let grid = structured_grid(20.0);
        let r = rates_at(&grid, 12.0, 0.3, RateMode::RealOnly).unwrap();
        assert_eq!(r.gamma_i_plus(), 0.0);
        assert_eq!(r.gamma_i_minus(), 0.0);
        assert_eq!(r.im00(), 0.0);
        let c = rates_at(&grid, 12.0, 0.3, RateMode::Complex).unwrap();
        assert_eq!(r.gamma_r_plus(), c.gamma_r_plus());
        assert_ne!(c.gamma_i_plus(), 0.0);
    }

    #[test]
    fn rates_linear_in_coupling() {
        let make = |eta| {
            let bath = Bath::Ohmic(OhmicBath::ohmic(eta, 0.25, Temperature::Zero).unwrap());
            let grid = CorrelationGrid::build(bath, 30.0, 0.05, 0.0, 1.0, DEFAULT_MAX_GRID_LEN).unwrap();
            rates_at(&grid, 25.0, 0.6, RateMode::Complex).unwrap()
        };
        let (a, b) = (make(0.05), make(0.1));
        assert!((b.g01 - 2.0 * a.g01).norm() < 1e-15);
        assert!((b.g10 - 2.0 * a.g10).norm() < 1e-15);
        assert!((b.g00 - 2.0 * a.g00).norm() < 1e-15);
    }

    #[test]
    fn tail_truncation_drops_late_correlations() {
        let bath = Bath::Structured(StructuredBath::new(0.1, 0.5, 0.5, PhaseSign::Plus).unwrap());
        let full = CorrelationGrid::build(bath, 100.0, 0.05, 0.0, 1.0, DEFAULT_MAX_GRID_LEN).unwrap();
        let cut = CorrelationGrid::build(bath, 100.0, 0.05, 1e-2, 1.0, DEFAULT_MAX_GRID_LEN).unwrap();
        assert!(cut.tail_time() < 100.0);
        let a = rates_at(&full, 90.0, 0.3, RateMode::Complex).unwrap();
        let b = rates_at(&cut, 90.0, 0.3, RateMode::Complex).unwrap();
        let tail = rates_at(&full, cut.tail_time() - 0.05, 0.3, RateMode::Complex).unwrap();
        assert!((b.g01 - tail.g01).norm() < 1e-12);
        assert!((a.g01 - b.g01).norm() > 0.0);
    }

    #[test]
    fn beyond_horizon_is_domain_error() {
        let grid = structured_grid(10.0);
        assert!(matches!(rates_at(&grid, 10.5, 0.3, RateMode::Complex), Err(Error::Domain(_))));
        assert!(matches!(rates_at(&grid, -0.1, 0.3, RateMode::Complex), Err(Error::Domain(_))));
    }

    #[test]
    fn structured_real_part_settles() {
        let grid = structured_grid(400.0);
        let a = rates_at(&grid, 150.0, 0.3, RateMode::Complex).unwrap();
        let b = rates_at(&grid, 390.0, 0.3, RateMode::Complex).unwrap();
        assert!((a.g01.re - b.g01.re).abs() < 1e-4);
    }
}
