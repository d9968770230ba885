use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum GronwallVerdict {
    /// The bound holds; `min_slack` is the smallest `bound - Lambda`.
    Holds { min_slack: f64 },
    Violated { index: usize, excess: f64 },
    /// The samples do not satisfy the hypothesis on `h`.
    Inconclusive { reason: String },
}

/// Relative slack used when auditing sampled hypotheses and bounds.
pub const GRONWALL_TOL: f64 = 1e-10;

/// Audits `Lambda(t) <= Lambda(0) e^m e^{-eta t} + k e^m / eta` on samples.
///
/// `h[j]` is read as constant on `[t_j, t_{j+1})`, so the hypothesis
/// `int_s^t h <= eta (t - s) + m` is checked exactly over all grid pairs.
pub fn gronwall_check(t: &[f64], lambda: &[f64], h: &[f64], k: f64, eta: f64, m: f64) -> Result<GronwallVerdict> {
    if t.len() != lambda.len() || t.len() != h.len() || t.len() < 2 {
        return invalid("gronwall check needs matching samples (at least two)");
    }
    if !(eta > 0.0 && k >= 0.0 && m >= 0.0) {
        return invalid(format!("need eta > 0, k >= 0, m >= 0 (got {eta}, {k}, {m})"));
    }
    if t.windows(2).any(|w| !(w[1] > w[0])) || t[0] != 0.0 {
        return invalid("times must start at 0 and increase strictly");
    }
    // max over s <= t of G(t) - G(s), G(t) = int_0^t (h - eta).
    let mut g = 0.0;
    let mut g_min = 0.0f64;
    let mut worst = 0.0f64;
    for j in 0..t.len() - 1 {
        g += (h[j] - eta) * (t[j + 1] - t[j]);
        worst = worst.max(g - g_min);
        g_min = g_min.min(g);
    }
    if worst > m + GRONWALL_TOL * (1.0 + m) {
        return Ok(GronwallVerdict::Inconclusive {
            reason: format!("int_s^t (h - eta) reaches {worst:.6e} > m = {m:.6e}"),
        });
    }
    let em = m.exp();
    let mut min_slack = f64::INFINITY;
    for (j, (&tj, &lj)) in t.iter().zip(lambda).enumerate() {
        let bound = lambda[0] * em * (-eta * tj).exp() + k * em / eta;
        let slack = bound - lj;
        if slack < -GRONWALL_TOL * bound.max(1.0) {
            return Ok(GronwallVerdict::Violated { index: j, excess: -slack });
        }
        min_slack = min_slack.min(slack);
    }
    Ok(GronwallVerdict::Holds { min_slack })
}

/// Solves `Lambda' = (h_j - 2 eta) Lambda + k` exactly on each interval,
/// giving a trajectory that meets the differential hypothesis with equality.
pub fn synthesize_lambda(t: &[f64], h: &[f64], k: f64, eta: f64, lambda0: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(t.len());
    let mut l = lambda0;
    out.push(l);
    for j in 0..t.len() - 1 {
        let a = h[j] - 2.0 * eta;
        let dt = t[j + 1] - t[j];
        let growth = (a * dt).exp();
        // (e^{a dt} - 1) / a, continuous at a = 0.
        let phi = if (a * dt).abs() < 1e-8 { dt * (1.0 + 0.5 * a * dt) } else { (a * dt).exp_m1() / a };
        l = l * growth + k * phi;
        out.push(l);
    }
    out
}

/// Smallest `m` with `int_s^t h <= eta (t - s) + m` for piecewise-constant `h`.
pub fn minimal_m(t: &[f64], h: &[f64], eta: f64) -> f64 {
    let (mut g, mut g_min, mut worst) = (0.0, 0.0f64, 0.0f64);
    for j in 0..t.len() - 1 {
        g += (h[j] - eta) * (t[j + 1] - t[j]);
        worst = worst.max(g - g_min);
        g_min = g_min.min(g);
    }
    worst
}

#[derive(Clone, Debug, Serialize)]
pub struct GronwallSuite {
    pub instances: usize,
    pub holds: usize,
    pub violations: usize,
    pub inconclusive: usize,
    pub min_slack: f64,
}

/// Random admissible instances: oscillating `h` around `eta`, `m` from the samples.
pub fn gronwall_suite(instances: usize, seed: u64) -> Result<GronwallSuite> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut suite = GronwallSuite { instances, holds: 0, violations: 0, inconclusive: 0, min_slack: f64::INFINITY };
    for _ in 0..instances {
        let n = rng.gen_range(50..400);
        let t_end = rng.gen_range(1.0..20.0);
        let t: Vec<f64> = (0..n).map(|j| t_end * j as f64 / (n - 1) as f64).collect();
        let eta = rng.gen_range(0.05..3.0);
        let k = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..5.0) };
        let amp = rng.gen_range(0.0..4.0) * eta;
        let freq = rng.gen_range(0.1..10.0);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let shift: f64 = rng.gen_range(-1.0..1.0) * eta;
        let h: Vec<f64> = t.iter().map(|&s| eta + shift.min(0.0) + amp * (freq * s + phase).sin()).collect();
        let m = minimal_m(&t, &h, eta) + rng.gen_range(0.0..0.5);
        let lambda0 = rng.gen_range(0.0..100.0);
        let lambda = synthesize_lambda(&t, &h, k, eta, lambda0);
        match gronwall_check(&t, &lambda, &h, k, eta, m)? {
            GronwallVerdict::Holds { min_slack } => {
                suite.holds += 1;
                suite.min_slack = suite.min_slack.min(min_slack);
            }
            GronwallVerdict::Violated { .. } => suite.violations += 1,
            GronwallVerdict::Inconclusive { .. } => suite.inconclusive += 1,
        }
    }
    Ok(suite)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, t_end: f64) -> Vec<f64> {
        (0..n).map(|j| t_end * j as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn pure_decay_holds_with_slack() {
        let t = grid(200, 5.0);
        let eta = 0.7;
        let lambda: Vec<f64> = t.iter().map(|&s| 3.0 * (-2.0 * eta * s).exp()).collect();
        let v = gronwall_check(&t, &lambda, &vec![0.0; t.len()], 0.0, eta, 0.0).unwrap();
        assert!(matches!(v, GronwallVerdict::Holds { min_slack } if min_slack >= 0.0));
    }

    #[test]
    fn constant_h_with_source() {
        let t = grid(500, 10.0);
        let eta = 0.5;
        let h = vec![eta; t.len()];
        let lambda = synthesize_lambda(&t, &h, 1.0, eta, 4.0);
        assert!(matches!(gronwall_check(&t, &lambda, &h, 1.0, eta, 0.0).unwrap(), GronwallVerdict::Holds { .. }));
    }

    #[test]
    fn excess_h_is_inconclusive() {
        let t = grid(50, 5.0);
        let h = vec![2.0; t.len()];
        let lambda = synthesize_lambda(&t, &h, 0.0, 0.5, 1.0);
        assert!(matches!(gronwall_check(&t, &lambda, &h, 0.0, 0.5, 0.1).unwrap(), GronwallVerdict::Inconclusive { .. }));
    }
}
