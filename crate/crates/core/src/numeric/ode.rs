//! Dormand–Prince 5(4) embedded Runge–Kutta for complex vector fields with a
//! real independent variable.

use thiserror::Error;

use super::C64;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MAX_STEPS: usize = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size collapsed at t = {0}")]
    StepCollapse(f64),
    #[error("too many steps")]
    TooManySteps,
}

/// Result of a single trial step.
pub struct Step {
    pub y: Vec<C64>,
    /// Scaled error norm; the step is acceptable when `<= 1`.
    pub err: f64,
}

/// One Dormand–Prince step of size `h`. Returns `None` if the right-hand
/// side cannot be evaluated at some stage.
pub fn dopri5_step<F>(f: &F, t: f64, y: &[C64], h: f64, rtol: f64, atol: f64) -> Option<Step>
where
    F: Fn(f64, &[C64]) -> Option<Vec<C64>>,
{
    let n = y.len();
    let mut k: Vec<Vec<C64>> = Vec::with_capacity(7);
    let mut stage = vec![C64::default(); n];
    for s in 0..7 {
        for i in 0..n {
            let mut acc = y[i];
            for (j, kj) in k.iter().enumerate() {
                if A[s][j] != 0.0 {
                    acc += kj[i] * (h * A[s][j]);
                }
            }
            stage[i] = acc;
        }
        let ks = f(t + C[s] * h, &stage)?;
        if ks.iter().any(|v| !v.is_finite()) {
            return None;
        }
        k.push(ks);
    }
    // stage 7 is evaluated at the 5th-order solution (FSAL)
    let y5 = stage;
    let mut err: f64 = 0.0;
    for i in 0..n {
        let mut e = C64::default();
        for s in 0..7 {
            e += k[s][i] * E[s];
        }
        let sc = atol + rtol * y[i].norm().max(y5[i].norm());
        err = err.max((e * h).norm() / sc);
    }
    Some(Step { y: y5, err })
}

/// Step-size update factor from an error norm.
pub fn step_factor(err: f64) -> f64 {
    if err == 0.0 {
        5.0
    } else {
        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
    }
}

/// Integrate `y' = f(t, y)` from `t0` to `t1`.
pub fn integrate<F>(f: F, t0: f64, t1: f64, y0: &[C64], rtol: f64, atol: f64) -> Result<Vec<C64>, OdeError>
where
    F: Fn(f64, &[C64]) -> Option<Vec<C64>>,
{
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0.to_vec());
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h = span.abs() * 0.01;
    let h_min = span.abs() * 1e-14;
    for _ in 0..MAX_STEPS {
        let remaining = (t1 - t) * dir;
        if remaining <= 0.0 {
            return Ok(y);
        }
        let hh = h.min(remaining);
        match dopri5_step(&f, t, &y, hh * dir, rtol, atol) {
            Some(step) if step.err <= 1.0 => {
                t += hh * dir;
                if hh == remaining {
                    t = t1;
                }
                y = step.y;
                h = hh * step_factor(step.err);
            }
            Some(step) => h = hh * step_factor(step.err).min(0.9),
            None => h = hh * 0.25,
        }
        if h < h_min {
            return Err(OdeError::StepCollapse(t));
        }
    }
    Err(OdeError::TooManySteps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let y = integrate(|_, y| Some(vec![y[0] * C64::new(0.0, 1.0)]), 0.0, std::f64::consts::PI, &[C64::new(1.0, 0.0)], 1e-12, 1e-14).unwrap();
        assert!((y[0] - C64::new(-1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn backward_integration() {
        let y = integrate(|_, y| Some(vec![y[0]]), 1.0, 0.0, &[C64::new(1.0, 0.0)], 1e-12, 1e-14).unwrap();
        assert!((y[0].re - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn harmonic_oscillator_period() {
        let f = |_: f64, y: &[C64]| Some(vec![y[1], -y[0]]);
        let y = integrate(f, 0.0, 2.0 * std::f64::consts::PI, &[C64::new(1.0, 0.0), C64::default()], 1e-12, 1e-14).unwrap();
        assert!((y[0] - C64::new(1.0, 0.0)).norm() < 1e-9);
        assert!(y[1].norm() < 1e-9);
    }
}
