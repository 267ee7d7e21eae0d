//! Environment models: bath correlation functions `g(t)`, spectral
//! densities `J(ω)` and the cached correlation grid used by the rate
//! quadrature.
//!
//! All correlation functions follow the convention
//! `g(t) = ∫ dω J(ω) [coth(βω/2) cos ωt − i sin ωt]`, so a zero-temperature
//! bath has `g(t) = ∫ dω J(ω) e^{−iωt}`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad;

/// Inverse temperature of a thermal bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temperature {
    Zero,
    /// Finite inverse temperature β > 0.
    Beta(f64),
}

/// Ohmic-family bath `J(ω) = η ω^s ω_c^{1−s} e^{−ω/ω_c}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OhmicBath {
    pub eta: f64,
    pub s_exp: f64,
    pub omega_c: f64,
    pub temperature: Temperature,
}

impl OhmicBath {
    pub fn new(eta: f64, s_exp: f64, omega_c: f64, temperature: Temperature) -> Result<Self> {
        check_nonneg("eta", eta)?;
        check_positive("s_exp", s_exp)?;
        check_positive("omega_c", omega_c)?;
        if let Temperature::Beta(beta) = temperature {
            check_positive("beta", beta)?;
        }
        Ok(Self { eta, s_exp, omega_c, temperature })
    }

    pub fn ohmic(eta: f64, omega_c: f64, temperature: Temperature) -> Result<Self> {
        Self::new(eta, 1.0, omega_c, temperature)
    }

    pub fn spectral_density(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        self.eta
            * omega.powf(self.s_exp)
            * self.omega_c.powf(1.0 - self.s_exp)
            * (-omega / self.omega_c).exp()
    }

    /// `η ω_c² / (1 + iω_c t)²`, valid for the ohmic zero-temperature bath.
    pub fn closed_form(&self, t: f64) -> Option<Complex64> {
        if self.temperature != Temperature::Zero || self.s_exp != 1.0 {
            return None;
        }
        let denom = Complex64::new(1.0, self.omega_c * t);
        Some(self.eta * self.omega_c * self.omega_c / (denom * denom))
    }

    /// Upper frequency cut for the correlation quadrature.
    fn frequency_cut(&self) -> f64 {
        let thermal = match self.temperature {
            Temperature::Zero => 0.0,
            Temperature::Beta(beta) => 10.0 + 5.0 / (beta * self.omega_c),
        };
        self.omega_c * thermal.max(40.0)
    }

    /// Correlation function by direct oscillatory quadrature over ω.
    pub fn correlation_quadrature(&self, t: f64) -> Result<Complex64> {
        if self.eta == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let cut = self.frequency_cut();
        let panels = if t.abs() > 0.0 { (cut * 4.0 * t.abs() / PI).ceil() as usize } else { 1 };
        let panels = panels.max(8);
        let scale = self.eta * self.omega_c * self.omega_c;
        let integrand = |w: f64| {
            let j = self.spectral_density(w);
            let (sin, cos) = (w * t).sin_cos();
            let thermal = match self.temperature {
                Temperature::Zero => 1.0,
                Temperature::Beta(beta) => 1.0 / (0.5 * beta * w).tanh(),
            };
            Complex64::new(j * thermal * cos, -j * sin)
        };
        let q = quad::integrate(integrand, 0.0, cut, panels, 1e-13 * scale).map_err(|e| {
            Error::numerical(format!("thermal correlation at t = {t}: {e}"))
        })?;
        Ok(q.value)
    }

    /// Correlation function: closed form when available, quadrature otherwise.
    pub fn correlation(&self, t: f64) -> Result<Complex64> {
        match self.closed_form(t) {
            Some(g) => Ok(g),
            None => self.correlation_quadrature(t),
        }
    }
}

/// Sign of the detuning phase in the structured-bath correlation.
///
/// `Plus` follows from summing `g_k² e^{−i(k²/2m − Δ_L)t}` over the modes
/// and puts the bath spectrum on `ω ≥ −Δ_L`. `Minus` puts it on `ω ≥ Δ_L`,
/// matching `J(ω)` below, so gaps smaller than `Δ_L` see no resonant modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseSign {
    #[default]
    Plus,
    Minus,
}

impl PhaseSign {
    pub fn value(self) -> f64 {
        match self {
            PhaseSign::Plus => 1.0,
            PhaseSign::Minus => -1.0,
        }
    }
}

/// Photonic-crystal-like bath with a gap below the band edge `Δ_L`.
///
/// `g(t) = Ω_L² e^{±iΔ_L t} (1 + iω_0 t)^{−3/2}` with
/// `Ω_L² = η ω_0^{3/2} / (8√π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuredBath {
    pub eta: f64,
    pub omega0: f64,
    pub delta_l: f64,
    pub phase_sign: PhaseSign,
}

impl StructuredBath {
    pub fn new(eta: f64, omega0: f64, delta_l: f64, phase_sign: PhaseSign) -> Result<Self> {
        check_nonneg("eta", eta)?;
        check_positive("omega0", omega0)?;
        if !delta_l.is_finite() {
            return Err(Error::config(format!("delta_l = {delta_l} must be finite")));
        }
        Ok(Self { eta, omega0, delta_l, phase_sign })
    }

    /// `Ω_L²`, the value of `g(0)`.
    pub fn rabi_squared(&self) -> f64 {
        self.eta * self.omega0.powf(1.5) / (8.0 * PI.sqrt())
    }

    pub fn correlation(&self, t: f64) -> Complex64 {
        let nu = Complex64::new(1.0, self.omega0 * t);
        let phase = Complex64::from_polar(1.0, self.phase_sign.value() * self.delta_l * t);
        self.rabi_squared() * phase * nu.powf(-1.5)
    }

    /// Zero below the band edge, square-root onset above it.
    pub fn spectral_density(&self, omega: f64) -> f64 {
        let x = omega - self.delta_l;
        if x <= 0.0 {
            return 0.0;
        }
        self.eta * (2.0 * x).sqrt() * (-2.0 * x / self.omega0).exp()
    }
}

/// Narrow real Gaussian kernel `g(t) = (2w/(σ√(2π))) e^{−t²/(2σ²)}`,
/// normalised so that `∫_0^∞ g = w`. Approximates a delta-correlated bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernelBath {
    pub weight: f64,
    pub width: f64,
}

impl GaussianKernelBath {
    pub fn new(weight: f64, width: f64) -> Result<Self> {
        check_nonneg("weight", weight)?;
        check_positive("width", width)?;
        Ok(Self { weight, width })
    }

    pub fn correlation(&self, t: f64) -> Complex64 {
        let norm = 2.0 * self.weight / (self.width * (2.0 * PI).sqrt());
        Complex64::new(norm * (-0.5 * (t / self.width).powi(2)).exp(), 0.0)
    }

    /// Two-sided spectrum `S(ω)` with `g(t) = ∫_{−∞}^{∞} S(ω) e^{−iωt} dω`.
    pub fn spectral_density(&self, omega: f64) -> f64 {
        self.weight / PI * (-0.5 * (omega * self.width).powi(2)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bath {
    Ohmic(OhmicBath),
    Structured(StructuredBath),
    GaussianKernel(GaussianKernelBath),
}

impl Bath {
    pub fn correlation(&self, t: f64) -> Result<Complex64> {
        match self {
            Bath::Ohmic(b) => b.correlation(t),
            Bath::Structured(b) => Ok(b.correlation(t)),
            Bath::GaussianKernel(b) => Ok(b.correlation(t)),
        }
    }

    pub fn spectral_density(&self, omega: f64) -> f64 {
        match self {
            Bath::Ohmic(b) => b.spectral_density(omega),
            Bath::Structured(b) => b.spectral_density(omega),
            Bath::GaussianKernel(b) => b.spectral_density(omega),
        }
    }

    /// Dimensionless coupling (η, or the kernel weight).
    pub fn coupling(&self) -> f64 {
        match self {
            Bath::Ohmic(b) => b.eta,
            Bath::Structured(b) => b.eta,
            Bath::GaussianKernel(b) => b.weight,
        }
    }

    /// Same bath with the coupling replaced.
    pub fn with_coupling(&self, coupling: f64) -> Bath {
        match *self {
            Bath::Ohmic(b) => Bath::Ohmic(OhmicBath { eta: coupling, ..b }),
            Bath::Structured(b) => Bath::Structured(StructuredBath { eta: coupling, ..b }),
            Bath::GaussianKernel(b) => {
                Bath::GaussianKernel(GaussianKernelBath { weight: coupling, ..b })
            }
        }
    }

    /// Structured bath with the band edge moved to `delta_l`; other baths
    /// are returned unchanged.
    pub fn with_detuning(&self, delta_l: f64) -> Bath {
        match *self {
            Bath::Structured(b) => Bath::Structured(StructuredBath { delta_l, ..b }),
            other => other,
        }
    }

    /// Largest grid step resolving both the correlation decay and
    /// oscillations at frequencies up to `alpha_max`.
    pub fn max_grid_step(&self, alpha_max: f64) -> f64 {
        let decay = match self {
            Bath::Ohmic(b) => 0.1 / b.omega_c,
            Bath::Structured(b) => (0.1 / b.omega0).min(0.1 / (alpha_max + b.delta_l.abs())),
            Bath::GaussianKernel(b) => 0.1 * b.width,
        };
        decay.min(0.05 / alpha_max)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Bath::Ohmic(_) => "thermal",
            Bath::Structured(_) => "structured",
            Bath::GaussianKernel(_) => "gaussian",
        }
    }
}

/// Default cap on the number of cached samples (about 160 MB).
pub const DEFAULT_MAX_GRID_LEN: usize = 10_000_000;

/// Uniformly sampled correlation function `g(k h)`.
#[derive(Debug, Clone)]
pub struct CorrelationGrid {
    bath: Bath,
    horizon: f64,
    step: f64,
    samples: Vec<Complex64>,
    tail_cut: usize,
}

impl CorrelationGrid {
    /// Samples `g` on `[0, horizon]` (plus a few guard nodes for end
    /// interpolation). `tail_cut` is the first node where
    /// `|g| < tail_tol |g(0)|`; rate integrals ignore everything beyond it.
    pub fn build(
        bath: Bath,
        horizon: f64,
        step: f64,
        tail_tol: f64,
        alpha_max: f64,
        max_len: usize,
    ) -> Result<Self> {
        check_positive("grid horizon", horizon)?;
        check_positive("grid step", step)?;
        if !(0.0..1.0).contains(&tail_tol) {
            return Err(Error::config(format!("tail_tol = {tail_tol} must lie in [0, 1)")));
        }
        let limit = bath.max_grid_step(alpha_max);
        if step > limit * (1.0 + 1e-12) {
            return Err(Error::config(format!(
                "grid step {step} too coarse: must be at most {limit} to resolve the bath and gap"
            )));
        }
        let nodes = (horizon / step - 1e-9).ceil() as usize + 4;
        if nodes > max_len {
            return Err(Error::config(format!(
                "correlation grid needs {nodes} samples, above the cap of {max_len}"
            )));
        }
        let samples = (0..nodes)
            .map(|k| bath.correlation(k as f64 * step))
            .collect::<Result<Vec<_>>>()?;
        let g0 = samples[0].norm();
        let tail_cut = if tail_tol == 0.0 || g0 == 0.0 {
            nodes
        } else {
            samples.iter().position(|g| g.norm() < tail_tol * g0).unwrap_or(nodes)
        };
        Ok(Self { bath, horizon, step, samples, tail_cut })
    }

    pub fn bath(&self) -> &Bath {
        &self.bath
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn tail_cut(&self) -> usize {
        self.tail_cut
    }

    /// Time beyond which correlations are treated as zero; doubles as the
    /// operational bath correlation time.
    pub fn tail_time(&self) -> f64 {
        self.tail_cut as f64 * self.step
    }

    /// CSV dump: `t,re_g,im_g`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,re_g,im_g\n");
        for (k, g) in self.samples.iter().enumerate() {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", k as f64 * self.step, g.re, g.im));
        }
        out
    }
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(Error::config(format!("{name} = {value} must be positive and finite")));
    }
    Ok(())
}

fn check_nonneg(name: &str, value: f64) -> Result<()> {
    if !(value >= 0.0 && value.is_finite()) {
        return Err(Error::config(format!("{name} = {value} must be non-negative and finite")));
    }
    Ok(())
}
