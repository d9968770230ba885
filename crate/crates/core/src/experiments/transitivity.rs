use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Result};

/// `(C', alpha') = (C C1 + C2, alpha1 alpha2 / (K + alpha1 + alpha2))`.
pub fn transitivity_combine(c: f64, k: f64, c1: f64, alpha1: f64, c2: f64, alpha2: f64) -> Result<(f64, f64)> {
    if !(c > 0.0 && c1 > 0.0 && c2 > 0.0) {
        return invalid(format!("constants must be positive (C = {c}, C1 = {c1}, C2 = {c2})"));
    }
    if !(alpha1 > 0.0 && alpha2 > 0.0) {
        return invalid(format!("rates must be positive (alpha1 = {alpha1}, alpha2 = {alpha2})"));
    }
    if !(k >= 0.0) {
        return invalid(format!("K = {k} must be nonnegative"));
    }
    Ok((c * c1 + c2, alpha1 * alpha2 / (k + alpha1 + alpha2)))
}

#[derive(Clone, Debug, Serialize)]
pub struct TransitivityCheck {
    pub rates: (f64, f64),
    pub c_prime: f64,
    pub alpha_prime: f64,
    pub samples: usize,
    /// Samples where a hypothesis bound failed; the instance is then void.
    pub hypothesis_failures: usize,
    pub violations: usize,
    /// Largest `dist(S_t U1, U3) / (C' e^{-alpha' t})`.
    pub worst_ratio: f64,
}

/// Flow `S_t(x, y) = (e^{-a t} x, e^{-b t} y)` on the plane with
/// `U1` a finite point cloud in `|y| <= Y`, `U2 = {0} x [-Y, Y]`, `U3 = {0}`.
/// Then `C = 1`, `K = 0`, `C1 = max |x|`, `alpha1 = a`, `C2 = Y`, `alpha2 = b`.
pub fn synthetic_transitivity(a: f64, b: f64, points: &[(f64, f64)], t_end: f64, n_t: usize) -> Result<TransitivityCheck> {
    if points.is_empty() || n_t < 2 || !(t_end > 0.0) {
        return invalid("need points, at least two times and t_end > 0");
    }
    let y_max = points.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let c1 = points.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    let (cl, kl) = (1.0, 0.0);
    let (c_prime, alpha_prime) = transitivity_combine(cl, kl, c1, a, y_max, b)?;
    let mut check = TransitivityCheck {
        rates: (a, b),
        c_prime,
        alpha_prime,
        samples: n_t,
        hypothesis_failures: 0,
        violations: 0,
        worst_ratio: 0.0,
    };
    let tol = 1e-12;
    for j in 0..n_t {
        let t = t_end * j as f64 / (n_t - 1) as f64;
        let (ea, eb) = ((-a * t).exp(), (-b * t).exp());
        let moved: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (ea * x, eb * y)).collect();
        // Hausdorff semi-distances to the segment and to the origin.
        let d12 = moved.iter().map(|&(x, y)| x.hypot((y.abs() - y_max).max(0.0))).fold(0.0, f64::max);
        let d23 = eb * y_max;
        let d13 = moved.iter().map(|&(x, y)| x.hypot(y)).fold(0.0, f64::max);
        let lip_ok = points.windows(2).all(|w| {
            let before = (w[0].0 - w[1].0).hypot(w[0].1 - w[1].1);
            let after = (ea * (w[0].0 - w[1].0)).hypot(eb * (w[0].1 - w[1].1));
            after <= cl * (kl * t).exp() * before * (1.0 + tol)
        });
        if !lip_ok || d12 > c1 * ea * (1.0 + tol) || d23 > y_max * eb * (1.0 + tol) {
            check.hypothesis_failures += 1;
            continue;
        }
        let bound = c_prime * (-alpha_prime * t).exp();
        let ratio = d13 / bound;
        check.worst_ratio = check.worst_ratio.max(ratio);
        if ratio > 1.0 + tol {
            check.violations += 1;
        }
    }
    Ok(check)
}

/// Seeded random instances of [`synthetic_transitivity`].
pub fn transitivity_suite(instances: usize, n_t: usize, seed: u64) -> Result<Vec<TransitivityCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..instances)
        .map(|_| {
            let a = rng.gen_range(0.05..5.0);
            let b = rng.gen_range(0.05..5.0);
            let n = rng.gen_range(1..30);
            let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(-10.0..10.0), rng.gen_range(-3.0..3.0))).collect();
            let t_end = rng.gen_range(1.0..40.0);
            synthetic_transitivity(a, b, &pts, t_end, n_t)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_constants() {
        assert_eq!(transitivity_combine(1.0, 0.0, 1.0, 1.0, 1.0, 1.0).unwrap(), (2.0, 0.5));
    }

    #[test]
    fn fast_second_stage_gives_first_rate() {
        let (_, a) = transitivity_combine(1.0, 0.3, 1.0, 0.7, 1.0, 1e12).unwrap();
        assert!((a - 0.7).abs() < 1e-9);
    }

    #[test]
    fn rejects_nonpositive_rates() {
        assert!(transitivity_combine(1.0, 0.0, 1.0, 0.0, 1.0, 1.0).is_err());
    }
}
