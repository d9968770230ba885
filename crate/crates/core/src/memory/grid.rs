use crate::error::{invalid, Error, Result};
use crate::scalar::{c, Scalar};

use super::kernel::{rescale_kernel, KernelSpec, RescaledKernel};

/// Nodes and `mu_eps` quadrature weights for the history variable.
///
/// Weights come from product integration against piecewise-quadratic
/// interpolation on pairs of cells, so `sum_j w_j f(s_j)` is exact for
/// quadratics such as `|s U|^2`. The mass of `(0, s_0)` is lumped onto the
/// first node.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryGrid<T> {
    pub epsilon: T,
    pub delta: T,
    pub s_nodes: Vec<T>,
    pub weights: Vec<T>,
    pub s_max: T,
}

pub const MASS_TRUNCATION_TOL: f64 = 1e-6;

/// Geometric grid from `eps * 1e-3` to `s_max_factor * eps / delta`.
pub fn build_history_grid<T: Scalar>(
    kernel: &KernelSpec<T>,
    epsilon: T,
    n_s: usize,
    s_max_factor: T,
) -> Result<HistoryGrid<T>> {
    if n_s < 16 {
        return invalid(format!("n_s = {n_s}, need at least 16 history nodes"));
    }
    if !(s_max_factor > T::zero()) {
        return invalid("s_max_factor must be positive");
    }
    let s_max = s_max_factor * epsilon / kernel.delta;
    HistoryGrid::from_nodes(kernel, epsilon, geometric_nodes(epsilon * c(1e-3), s_max, n_s))
}

pub fn geometric_nodes<T: Scalar>(s0: T, s_max: T, n: usize) -> Vec<T> {
    let ratio = (s_max / s0).ln() / T::of_usize(n - 1);
    let mut s: Vec<T> = (0..n).map(|j| s0 * (ratio * T::of_usize(j)).exp()).collect();
    s[n - 1] = s_max;
    s
}

impl<T: Scalar> HistoryGrid<T> {
    /// Weights for arbitrary strictly increasing positive nodes; the last node is `s_max`.
    pub fn from_nodes(kernel: &KernelSpec<T>, epsilon: T, s_nodes: Vec<T>) -> Result<Self> {
        let mu = rescale_kernel(kernel, epsilon)?;
        if s_nodes.len() < 2 {
            return invalid("history grid needs at least two nodes");
        }
        if !(s_nodes[0] > T::zero()) || s_nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("history nodes must be positive and strictly increasing");
        }
        if s_nodes[0] > epsilon * c(0.1) {
            return invalid(format!(
                "first history node {} exceeds eps/10 = {} and does not resolve the memory layer",
                s_nodes[0],
                epsilon * c(0.1)
            ));
        }
        let s_max = s_nodes[s_nodes.len() - 1];
        let total = mu.mass();
        let tail = mu.tail_mass(s_max) / total;
        if !(tail <= c(MASS_TRUNCATION_TOL)) {
            return Err(Error::InvalidParameter(format!(
                "kernel mass beyond s_max = {s_max} is {tail} of the total (limit {MASS_TRUNCATION_TOL}); increase s_max_factor"
            )));
        }
        let weights = product_weights(&mu, &s_nodes);
        if weights.iter().any(|w| !(*w >= T::zero())) {
            return invalid("history grid produced a negative quadrature weight; grading is too uneven");
        }
        Ok(Self { epsilon, delta: kernel.delta, s_nodes, weights, s_max })
    }

    /// `n` equispaced nodes `ds, 2 ds, ..., n ds`.
    pub fn uniform(kernel: &KernelSpec<T>, epsilon: T, ds: T, n: usize) -> Result<Self> {
        Self::from_nodes(kernel, epsilon, (1..=n).map(|j| ds * T::of_usize(j)).collect())
    }

    /// Same nodes, weights for another `epsilon`.
    pub fn reweighted(&self, kernel: &KernelSpec<T>, epsilon: T) -> Result<Self> {
        Self::from_nodes(kernel, epsilon, self.s_nodes.clone())
    }

    pub fn len(&self) -> usize {
        self.s_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s_nodes.is_empty()
    }

    pub fn total_weight(&self) -> T {
        self.weights.iter().copied().sum()
    }

    pub fn max_spacing(&self) -> T {
        let mut prev = T::zero();
        let mut m = T::zero();
        for &s in &self.s_nodes {
            m = m.max(s - prev);
            prev = s;
        }
        m
    }
}

fn product_weights<T: Scalar>(mu: &RescaledKernel<T>, s: &[T]) -> Vec<T> {
    let n = s.len();
    let mut w = vec![T::zero(); n];
    w[0] = mu.moments(T::zero(), s[0], T::zero())[0];
    let mut i = 0;
    while i + 2 < n {
        let (x0, x1, x2) = (s[i], s[i + 1], s[i + 2]);
        let (h0, h1) = (x1 - x0, x2 - x1);
        let [m0, m1, m2] = mu.moments(x0, x2, x1);
        let q = [
            (m2 - h1 * m1) / (h0 * (h0 + h1)),
            (m2 + (h0 - h1) * m1 - h0 * h1 * m0) / (-h0 * h1),
            (m2 + h0 * m1) / (h1 * (h0 + h1)),
        ];
        if q.iter().all(|&x| x >= T::zero()) {
            for k in 0..3 {
                w[i + k] += q[k];
            }
        } else {
            // Steep decay across the panel (far tail only): fall back to hats.
            hat_cell(mu, s, i, &mut w);
            hat_cell(mu, s, i + 1, &mut w);
        }
        i += 2;
    }
    if i + 1 < n {
        hat_cell(mu, s, i, &mut w);
    }
    w
}

fn hat_cell<T: Scalar>(mu: &RescaledKernel<T>, s: &[T], i: usize, w: &mut [T]) {
    let (a, b) = (s[i], s[i + 1]);
    let [m0, m1, _] = mu.moments(a, b, a);
    let l = b - a;
    w[i] += m0 - m1 / l;
    w[i + 1] += m1 / l;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mass_is_captured() {
        let k = KernelSpec::<f64>::exponential(1.0, 0.5, 1.0).unwrap();
        for eps in [1.0, 0.1, 0.01] {
            let g = build_history_grid(&k, eps, 128, 30.0).unwrap();
            let rel = g.total_weight() * eps / 0.5 - 1.0;
            assert!(rel.abs() < 5e-7, "eps {eps}: {rel}");
            assert!(g.s_nodes[0] <= eps / 10.0);
            assert!((g.s_max - 30.0 * eps).abs() < 1e-12);
        }
    }

    #[test]
    fn second_moment_is_exact() {
        let k = KernelSpec::<f64>::exponential(1.0, 0.5, 1.0).unwrap();
        let g = build_history_grid(&k, 1.0, 128, 30.0).unwrap();
        let m2: f64 = g.s_nodes.iter().zip(&g.weights).map(|(s, w)| w * s * s).sum();
        assert!((m2 - 1.0).abs() < 1e-4, "{m2}");
    }

    #[test]
    fn rejects_small_or_short() {
        let k = KernelSpec::<f64>::exponential(1.0, 0.5, 1.0).unwrap();
        assert!(build_history_grid(&k, 1.0, 8, 30.0).is_err());
        assert!(build_history_grid(&k, 1.0, 64, 5.0).is_err());
    }
}
