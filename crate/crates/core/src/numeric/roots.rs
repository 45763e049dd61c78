//! Aberth–Ehrlich simultaneous root finder with Newton polishing.

use super::C64;

const MAX_ITER: usize = 500;

fn horner(c: &[C64], z: C64) -> (C64, C64) {
    let mut p = C64::default();
    let mut dp = C64::default();
    for a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// All roots of `Σ c_k z^k` (coefficients low to high); trailing zero
/// coefficients are ignored.
pub fn polynomial_roots(c: &[C64]) -> Vec<C64> {
    let mut c: Vec<C64> = c.to_vec();
    while c.last().is_some_and(|x| x.norm() == 0.0) {
        c.pop();
    }
    if c.len() <= 1 {
        return vec![];
    }
    // roots at zero
    let mut zeros = 0;
    while c[0].norm() == 0.0 {
        c.remove(0);
        zeros += 1;
    }
    let n = c.len() - 1;
    let mut out = vec![C64::default(); zeros];
    if n == 0 {
        return out;
    }
    let lead = c[n];
    let monic: Vec<C64> = c.iter().map(|a| a / lead).collect();
    if n == 1 {
        out.push(-monic[0]);
        return out;
    }
    if n == 2 {
        let (b, cc) = (monic[1], monic[0]);
        let disc = (b * b - 4.0 * cc).sqrt();
        let q = if (b.conj() * disc).re >= 0.0 { -0.5 * (b + disc) } else { -0.5 * (b - disc) };
        if q.norm() == 0.0 {
            out.extend([C64::default(), C64::default()]);
        } else {
            out.extend([q, cc / q]);
        }
        return out;
    }
    // Cauchy bound for the initial circle
    let radius = 1.0 + monic[..n].iter().map(|a| a.norm()).fold(0.0, f64::max);
    let r0 = radius.min(monic[0].norm().powf(1.0 / n as f64).max(1e-3) * 1.5).max(1e-3);
    let mut z: Vec<C64> = (0..n)
        .map(|k| C64::from_polar(r0, 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4))
        .collect();
    for _ in 0..MAX_ITER {
        let mut max_step: f64 = 0.0;
        for k in 0..n {
            let (p, dp) = horner(&monic, z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let s: C64 = (0..n).filter(|&j| j != k).map(|j| (z[k] - z[j]).inv()).sum();
            let w = ratio / (C64::new(1.0, 0.0) - ratio * s);
            if w.is_finite() {
                z[k] -= w;
                max_step = max_step.max(w.norm() / z[k].norm().max(1.0));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }
    for zk in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = horner(&monic, *zk);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if !step.is_finite() || step.norm() > 1e-6 * zk.norm().max(1.0) {
                break;
            }
            *zk -= step;
        }
    }
    out.extend(z);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn cubic_roots() {
        // ξ³ + 3ξ = 0
        let mut r = polynomial_roots(&[c(0.0, 0.0), c(3.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        r.sort_by(|a, b| a.im.total_cmp(&b.im));
        let s3 = 3f64.sqrt();
        assert!((r[0] - c(0.0, -s3)).norm() < 1e-12);
        assert!(r[1].norm() < 1e-12);
        assert!((r[2] - c(0.0, s3)).norm() < 1e-12);
    }

    #[test]
    fn random_quintic_residuals() {
        let coeffs = [c(1.0, 2.0), c(-3.0, 0.5), c(0.0, 1.0), c(2.0, -1.0), c(0.3, 0.0), c(1.0, 1.0)];
        let r = polynomial_roots(&coeffs);
        assert_eq!(r.len(), 5);
        for z in r {
            let (p, _) = horner(&coeffs, z);
            assert!(p.norm() < 1e-10, "{p}");
        }
    }

    #[test]
    fn double_root() {
        // (z-1)^2 (z+1)
        let r = polynomial_roots(&[c(1.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0)]);
        let near_one = r.iter().filter(|z| (**z - c(1.0, 0.0)).norm() < 1e-6).count();
        assert_eq!(near_one, 2);
    }
}
