use serde::Serialize;

use crate::error::{invalid, Result};
use crate::scalar::{c, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub enum KernelFamily<T> {
    /// `k(s) = rate * exp(-rate * s)`, so `mu(s) = (1 - omega) rate^2 exp(-rate * s)`.
    Exponential { rate: T },
    /// Piecewise-linear samples of `mu` itself, starting at `s = 0`; zero past the last sample.
    Tabulated { s: Vec<T>, mu: Vec<T> },
}

/// Memory kernel `mu = -(1 - omega) k'` with claimed decay constant `delta`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec<T> {
    pub family: KernelFamily<T>,
    pub omega: T,
    pub delta: T,
}

impl<T: Scalar> KernelSpec<T> {
    pub fn exponential(rate: T, omega: T, delta: T) -> Result<Self> {
        if !(rate > T::zero() && rate.is_finite()) {
            return invalid(format!("kernel rate {rate} must be positive"));
        }
        Self { family: KernelFamily::Exponential { rate }, omega, delta }.checked()
    }

    pub fn tabulated(s: Vec<T>, mu: Vec<T>, omega: T, delta: T) -> Result<Self> {
        if s.len() < 2 || s.len() != mu.len() {
            return invalid("tabulated kernel needs at least two (s, mu) samples of equal length");
        }
        if s[0] != T::zero() {
            return invalid("tabulated kernel must start at s = 0");
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) || s.iter().chain(&mu).any(|x| !x.is_finite()) {
            return invalid("tabulated kernel abscissae must be finite and strictly increasing");
        }
        Self { family: KernelFamily::Tabulated { s, mu }, omega, delta }.checked()
    }

    fn checked(self) -> Result<Self> {
        if !(self.omega > T::zero() && self.omega < T::one()) {
            return invalid(format!("omega = {} must lie in (0, 1)", self.omega));
        }
        if !(self.delta > T::zero() && self.delta.is_finite()) {
            return invalid(format!("delta = {} must be positive", self.delta));
        }
        Ok(self)
    }

    pub fn mu(&self, s: T) -> T {
        match &self.family {
            KernelFamily::Exponential { rate } => (T::one() - self.omega) * *rate * *rate * (-*rate * s).exp(),
            KernelFamily::Tabulated { s: xs, mu } => {
                if s < T::zero() || s > xs[xs.len() - 1] {
                    return T::zero();
                }
                let j = xs.partition_point(|&x| x <= s).clamp(1, xs.len() - 1);
                let th = (s - xs[j - 1]) / (xs[j] - xs[j - 1]);
                mu[j - 1] + th * (mu[j] - mu[j - 1])
            }
        }
    }

    /// `int_0^inf mu`.
    pub fn mass(&self) -> T {
        self.moments(T::zero(), T::infinity(), T::zero())[0]
    }

    /// `int_x^inf mu`.
    pub fn tail_mass(&self, x: T) -> T {
        self.moments(x, T::infinity(), x)[0]
    }

    /// `[int_a^b mu(s) (s - o)^m ds]` for `m = 0, 1, 2`.
    pub fn moments(&self, a: T, b: T, o: T) -> [T; 3] {
        match &self.family {
            KernelFamily::Exponential { rate } => {
                let r = *rate;
                let scale = (T::one() - self.omega) * r * r * (-r * a).exp();
                let j = exp_moments(r, b - a);
                let d = a - o;
                [
                    scale * j[0],
                    scale * (j[1] + d * j[0]),
                    scale * (j[2] + (d + d) * j[1] + d * d * j[0]),
                ]
            }
            KernelFamily::Tabulated { s: xs, .. } => {
                // mu is linear on each table cell, so 3-point Gauss-Legendre is exact.
                let g = [-(c::<T>(0.6)).sqrt(), T::zero(), c::<T>(0.6).sqrt()];
                let gw = [c::<T>(5.0 / 9.0), c::<T>(8.0 / 9.0), c::<T>(5.0 / 9.0)];
                let mut out = [T::zero(); 3];
                let hi = b.min(xs[xs.len() - 1]);
                for w in xs.windows(2) {
                    let (lo, up) = (w[0].max(a), w[1].min(hi));
                    if !(up > lo) {
                        continue;
                    }
                    let (mid, half) = ((lo + up) * c(0.5), (up - lo) * c(0.5));
                    for (x, wt) in g.iter().zip(&gw) {
                        let s = mid + half * *x;
                        let f = self.mu(s) * *wt * half;
                        let y = s - o;
                        out[0] += f;
                        out[1] += f * y;
                        out[2] += f * y * y;
                    }
                }
                out
            }
        }
    }
}

/// `[int_0^L exp(-r y) y^m dy]`, `m = 0, 1, 2`, stable for small `r L`.
fn exp_moments<T: Scalar>(r: T, l: T) -> [T; 3] {
    if l.is_infinite() {
        return [T::one() / r, T::one() / (r * r), c::<T>(2.0) / (r * r * r)];
    }
    let x = r * l;
    if x < c(0.5) {
        let mut out = [T::zero(); 3];
        for (m, o) in out.iter_mut().enumerate() {
            let mut term = l.powi(m as i32 + 1);
            for k in 0..30 {
                *o += term / T::of_usize(m + k + 1);
                term = -term * x / T::of_usize(k + 1);
            }
        }
        return out;
    }
    let e = (-x).exp();
    let j0 = -(-x).exp_m1() / r;
    let j1 = (j0 - l * e) / r;
    let j2 = (j1 + j1 - l * l * e) / r;
    [j0, j1, j2]
}

/// Evaluator for `mu_eps(s) = eps^-2 mu(s / eps)`.
#[derive(Clone, Debug)]
pub struct RescaledKernel<T> {
    pub kernel: KernelSpec<T>,
    pub epsilon: T,
}

pub fn rescale_kernel<T: Scalar>(kernel: &KernelSpec<T>, epsilon: T) -> Result<RescaledKernel<T>> {
    if !(epsilon > T::zero() && epsilon <= T::one()) {
        return invalid(format!("epsilon = {epsilon} must lie in (0, 1]"));
    }
    Ok(RescaledKernel { kernel: kernel.clone(), epsilon })
}

impl<T: Scalar> RescaledKernel<T> {
    pub fn eval(&self, s: T) -> T {
        self.kernel.mu(s / self.epsilon) / (self.epsilon * self.epsilon)
    }

    pub fn mass(&self) -> T {
        self.kernel.mass() / self.epsilon
    }

    pub fn tail_mass(&self, s: T) -> T {
        self.kernel.tail_mass(s / self.epsilon) / self.epsilon
    }

    /// `[int_a^b mu_eps(s) (s - o)^m ds]`, `m = 0, 1, 2`.
    pub fn moments(&self, a: T, b: T, o: T) -> [T; 3] {
        let e = self.epsilon;
        let m = self.kernel.moments(a / e, b / e, o / e);
        [m[0] / e, m[1], m[2] * e]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Signed slack; negative means violated by that amount.
    pub worst_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelReport {
    pub checks: Vec<AssumptionCheck>,
}

impl KernelReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Checks nonnegativity, monotonicity, the decay condition `mu' + delta mu <= 0`
/// and (for the exponential family) unit mass of `k`.
pub fn validate_kernel<T: Scalar>(kernel: &KernelSpec<T>) -> KernelReport {
    let tol = 1e-10;
    let delta = kernel.delta.as_f64();
    let mut checks = Vec::new();
    match &kernel.family {
        KernelFamily::Exponential { rate } => {
            let r = rate.as_f64();
            let (mut min_mu, mut max_d, mut max_decay) = (f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
            for i in 0..=2000 {
                let s = 40.0 / r * i as f64 / 2000.0;
                let mu = kernel.mu(T::of(s)).as_f64();
                let dmu = -r * mu;
                min_mu = min_mu.min(mu);
                max_d = max_d.max(dmu);
                max_decay = max_decay.max(dmu + delta * mu);
            }
            checks.push(AssumptionCheck { name: "nonnegative", passed: min_mu >= 0.0, worst_margin: min_mu });
            checks.push(AssumptionCheck { name: "nonincreasing", passed: max_d <= 0.0, worst_margin: -max_d });
            checks.push(AssumptionCheck {
                name: "exponential-decay",
                passed: max_decay <= tol,
                worst_margin: -max_decay,
            });
            // int_0^inf rate exp(-rate s) ds = 1 identically.
            checks.push(AssumptionCheck { name: "unit-mass", passed: true, worst_margin: 0.0 });
        }
        KernelFamily::Tabulated { s, mu } => {
            let s: Vec<f64> = s.iter().map(|x| x.as_f64()).collect();
            let mu: Vec<f64> = mu.iter().map(|x| x.as_f64()).collect();
            let min_mu = mu.iter().cloned().fold(f64::INFINITY, f64::min);
            let (mut max_d, mut max_decay) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for i in 0..s.len() - 1 {
                let d = (mu[i + 1] - mu[i]) / (s[i + 1] - s[i]);
                max_d = max_d.max(d);
                // Right-endpoint form is exact for sampled exponentials: e^{-h}(1 + h) <= 1.
                max_decay = max_decay.max(d + delta * mu[i + 1]);
            }
            checks.push(AssumptionCheck { name: "nonnegative", passed: min_mu >= 0.0, worst_margin: min_mu });
            checks.push(AssumptionCheck { name: "nonincreasing", passed: max_d <= 0.0, worst_margin: -max_d });
            checks.push(AssumptionCheck {
                name: "exponential-decay",
                passed: max_decay <= tol,
                worst_margin: -max_decay,
            });
            let mass = kernel.mass().as_f64();
            checks.push(AssumptionCheck { name: "integrable", passed: mass > 0.0 && mass.is_finite(), worst_margin: mass });
        }
    }
    KernelReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_values_and_scaling() {
        let k = KernelSpec::<f64>::exponential(1.0, 0.5, 1.0).unwrap();
        assert!((k.mu(0.3) - 0.5 * (-0.3f64).exp()).abs() < 1e-15);
        assert!((k.mass() - 0.5).abs() < 1e-14);
        let r = rescale_kernel(&k, 0.5).unwrap();
        assert!((r.eval(0.7) - 2.0 * (-1.4f64).exp()).abs() < 1e-14);
        assert!((r.mass() - 1.0).abs() < 1e-14);
        assert!(rescale_kernel(&k, 2.0).is_err());
        assert!(rescale_kernel(&k, 0.0).is_err());
    }

    #[test]
    fn moments_match_closed_forms() {
        let k = KernelSpec::<f64>::exponential(1.0, 0.5, 1.0).unwrap();
        let m = k.moments(0.0, f64::INFINITY, 0.0);
        assert!((m[1] - 0.5).abs() < 1e-14 && (m[2] - 1.0).abs() < 1e-14);
        // small cell: series branch against direct expansion
        let (a, b) = (1e-3, 1.0001e-3);
        let m = k.moments(a, b, a);
        assert!((m[0] / (-0.5 * (-a).exp() * (a - b).exp_m1()) - 1.0).abs() < 1e-13);
        assert!((m[1] / m[0] - 0.5e-7).abs() < 1e-12);
    }

    #[test]
    fn validation_flags_decay() {
        let ok = validate_kernel(&KernelSpec::exponential(1.0, 0.5, 1.0).unwrap());
        assert!(ok.all_passed());
        let bad = validate_kernel(&KernelSpec::exponential(1.0, 0.5, 2.0).unwrap());
        assert_eq!(bad.first_failure().unwrap().name, "exponential-decay");
        assert!((bad.first_failure().unwrap().worst_margin + 0.5).abs() < 1e-12);
    }

    #[test]
    fn tabulated_increasing_fails_monotonicity() {
        let k = KernelSpec::tabulated(vec![0.0, 1.0, 2.0], vec![0.1, 0.2, 0.3], 0.5, 1.0).unwrap();
        let rep = validate_kernel(&k);
        assert!(!rep.checks.iter().find(|c| c.name == "nonincreasing").unwrap().passed);
    }

    #[test]
    fn tabulated_moments_are_exact_for_linear_pieces() {
        let k = KernelSpec::<f64>::tabulated(vec![0.0, 2.0], vec![1.0, 0.0], 0.5, 0.1).unwrap();
        let m = k.moments(0.0, 2.0, 0.0);
        // mu = 1 - s/2: mass 1, first moment 2/3, second moment 2/3
        assert!((m[0] - 1.0).abs() < 1e-14);
        assert!((m[1] - 2.0 / 3.0).abs() < 1e-14);
        assert!((m[2] - 2.0 / 3.0).abs() < 1e-14);
    }
}
