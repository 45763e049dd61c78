//! Small numerical kernels: polynomial roots, adaptive quadrature and an
//! embedded Runge–Kutta integrator, all over `Complex64`.

pub mod ode;
pub mod quad;
pub mod roots;

use num::complex::Complex64;

pub type C64 = Complex64;

/// Unit complex number `e^{iθ}`.
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}
