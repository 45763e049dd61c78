//! Adaptive Gauss–Kronrod (G7/K15) quadrature for complex integrands.

use thiserror::Error;

use super::C64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: usize = 40;
const MAX_EVALS: usize = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("quadrature did not converge (estimated error {0:e})")]
    NoConvergence(f64),
    #[error("integrand returned a non-finite value at t = {0}")]
    NonFinite(f64),
}

/// Kronrod value, error estimate, and the Kronrod estimate of `∫|f|`.
fn gk15<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> Result<(C64, f64, f64), QuadError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(QuadError::NonFinite(c));
    }
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut abs = fc.norm() * WGK[7];
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        if !f1.is_finite() {
            return Err(QuadError::NonFinite(c - x));
        }
        if !f2.is_finite() {
            return Err(QuadError::NonFinite(c + x));
        }
        k += (f1 + f2) * WGK[j];
        abs += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            g += (f1 + f2) * WG[j / 2];
        }
    }
    Ok((k * h, ((k - g) * h).norm(), abs * h.abs()))
}

/// `∫_a^b f(t) dt` to `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: FnMut(f64) -> C64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<C64, QuadError> {
    if a == b {
        return Ok(C64::default());
    }
    let (whole, err, resabs) = gk15(&mut f, a, b)?;
    let mut evals = 15;
    let mut total = C64::default();
    // stack of (a, b, value, err, depth)
    let mut stack = vec![(a, b, whole, err, resabs, 0usize)];
    let scale = whole.norm();
    while let Some((lo, hi, val, e, va, depth)) = stack.pop() {
        let width = (hi - lo).abs() / (b - a).abs();
        let target = abs_tol.max(rel_tol * scale) * width.max(1e-300);
        // below this the estimate is round-off
        let floor = 50.0 * f64::EPSILON * va;
        if e <= target.max(1e-15 * val.norm()).max(floor) || depth >= MAX_DEPTH {
            if depth >= MAX_DEPTH && e > (target * 1e3).max(floor) {
                return Err(QuadError::NoConvergence(e));
            }
            total += val;
            continue;
        }
        if evals > MAX_EVALS {
            return Err(QuadError::NoConvergence(e));
        }
        let mid = 0.5 * (lo + hi);
        let (v1, e1, a1) = gk15(&mut f, lo, mid)?;
        let (v2, e2, a2) = gk15(&mut f, mid, hi)?;
        evals += 30;
        // bisection no longer helps: the estimate is noise in `f`
        if e1 + e2 > 0.9 * e && e <= abs_tol.max(rel_tol * scale) * 1e-2 {
            total += val;
            continue;
        }
        stack.push((mid, hi, v2, e2, a2, depth + 1));
        stack.push((lo, mid, v1, e1, a1, depth + 1));
    }
    Ok(total)
}

/// `∫ f(z) dz` along the straight segment `z0 → z1`.
pub fn integrate_segment<F: FnMut(C64) -> C64>(mut f: F, z0: C64, z1: C64, abs_tol: f64, rel_tol: f64) -> Result<C64, QuadError> {
    let d = z1 - z0;
    let v = integrate(|t| f(z0 + d * t), 0.0, 1.0, abs_tol, rel_tol)?;
    Ok(v * d)
}
