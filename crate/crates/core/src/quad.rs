//! Adaptive Gauss-Kronrod (7/15) quadrature for complex-valued integrands.
//!
//! Used for the finite-temperature correlation function and as the
//! independent oracle for the grid-based rate integrals.

#![allow(clippy::excessive_precision)]

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
}

/// One 15-point Kronrod panel with its embedded 7-point Gauss estimate.
pub fn gk15<F>(f: &F, a: f64, b: f64) -> (Complex64, f64)
where
    F: Fn(f64) -> Complex64,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    ((kronrod * half), ((kronrod - gauss) * half).norm())
}

/// Adaptive bisection driven by an absolute tolerance, starting from
/// `panels` equal sub-intervals of `[a, b]`.
pub fn integrate<F>(f: F, a: f64, b: f64, panels: usize, abs_tol: f64) -> Result<Quadrature>
where
    F: Fn(f64) -> Complex64,
{
    const MAX_DEPTH: u32 = 40;
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let mut total = Quadrature { value: Complex64::new(0.0, 0.0), error: 0.0, evaluations: 0 };
    let per_panel = abs_tol / panels as f64;
    // Explicit stack of (a, b, tolerance, depth).
    let mut stack: Vec<(f64, f64, f64, u32)> = Vec::with_capacity(64);
    for k in (0..panels).rev() {
        let lo = a + width * k as f64;
        let hi = if k + 1 == panels { b } else { a + width * (k + 1) as f64 };
        stack.push((lo, hi, per_panel, 0));
    }
    while let Some((lo, hi, tol, depth)) = stack.pop() {
        let (value, err) = gk15(&f, lo, hi);
        total.evaluations += 15;
        if err <= tol || depth >= MAX_DEPTH {
            total.value += value;
            total.error += err;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, 0.5 * tol, depth + 1));
            stack.push((lo, mid, 0.5 * tol, depth + 1));
        }
    }
    if total.error > abs_tol {
        return Err(Error::numerical(format!(
            "quadrature on [{a}, {b}] did not converge: error estimate {:e} > tolerance {abs_tol:e}",
            total.error
        )));
    }
    Ok(total)
}
