use serde::Serialize;

use crate::domain::{raw_apply_wentzell, raw_inner_x2, raw_norm_v1_sq, DiscreteDomain, StateField};
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

use super::history::HistoryField;

/// Per-node norm used by the weighted history norms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    /// `|.|^2` in the product Lebesgue space.
    L0,
    /// First-order energy.
    L1,
    /// `|A .|^2`.
    L2,
}

impl Level {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            0 => Ok(Self::L0),
            1 => Ok(Self::L1),
            2 => Ok(Self::L2),
            _ => invalid(format!("memory norm level {i} not in {{0, 1, 2}}")),
        }
    }
}

pub(crate) fn node_norm_sq<T: Scalar>(u: &StateField<T>, level: Level, d: &DiscreteDomain<T>, alpha: T, beta: T) -> T {
    match level {
        Level::L0 => raw_inner_x2(u, u, d),
        Level::L1 => raw_norm_v1_sq(u, d, alpha, beta),
        Level::L2 => {
            let a = raw_apply_wentzell(&u.bulk, d, alpha, beta);
            raw_inner_x2(&a, &a, d)
        }
    }
}

/// `sum_j w_j |Phi(s_j)|^2` at the given level.
pub fn memory_norm_sq<T: Scalar>(phi: &HistoryField<T>, level: Level, d: &DiscreteDomain<T>, alpha: T, beta: T) -> Result<T> {
    phi.check(d)?;
    if level == Level::L2 && alpha == T::zero() && beta == T::zero() {
        return invalid("level-2 history norm needs alpha > 0 or beta > 0");
    }
    Ok(raw_memory_norm_sq(phi, level, d, alpha, beta))
}

pub(crate) fn raw_memory_norm_sq<T: Scalar>(phi: &HistoryField<T>, level: Level, d: &DiscreteDomain<T>, alpha: T, beta: T) -> T {
    phi.values
        .iter()
        .zip(&phi.grid.weights)
        .map(|(v, &w)| w * node_norm_sq(v, level, d, alpha, beta))
        .sum()
}

/// `sum_j w_j Phi(s_j)`.
pub fn weighted_sum<T: Scalar>(phi: &HistoryField<T>) -> StateField<T> {
    let mut acc = phi.values[0].scaled(T::zero());
    for (v, &w) in phi.values.iter().zip(&phi.grid.weights) {
        acc.axpy(w, v);
    }
    acc
}

/// `int mu_eps A Phi(s) ds`, applied once to the weighted sum.
pub fn convolve_wentzell<T: Scalar>(phi: &HistoryField<T>, d: &DiscreteDomain<T>, alpha: T, beta: T) -> Result<StateField<T>> {
    phi.check(d)?;
    crate::domain::apply_wentzell(&weighted_sum(phi), d, alpha, beta)
}

/// Backward difference in `s` with `Phi(0) = 0`.
pub fn ds_backward<T: Scalar>(phi: &HistoryField<T>) -> Vec<StateField<T>> {
    let s = &phi.grid.s_nodes;
    (0..s.len())
        .map(|j| {
            if j == 0 {
                phi.values[0].scaled(T::one() / s[0])
            } else {
                phi.values[j].sub(&phi.values[j - 1]).scaled(T::one() / (s[j] - s[j - 1]))
            }
        })
        .collect()
}

/// Three-point derivative in `s` on the nonuniform grid, with `Phi(0) = 0`.
fn ds_central<T: Scalar>(phi: &HistoryField<T>) -> Vec<StateField<T>> {
    let s = &phi.grid.s_nodes;
    let n = s.len();
    let zero = phi.values[0].scaled(T::zero());
    (0..n)
        .map(|j| {
            if j + 1 == n {
                return phi.values[j].sub(&phi.values[j - 1]).scaled(T::one() / (s[j] - s[j - 1]));
            }
            let (sl, fl) = if j == 0 { (T::zero(), &zero) } else { (s[j - 1], &phi.values[j - 1]) };
            let (h0, h1) = (s[j] - sl, s[j + 1] - s[j]);
            let mut out = fl.scaled(-h1 / (h0 * (h0 + h1)));
            out.axpy((h1 - h0) / (h0 * h1), &phi.values[j]);
            out.axpy(h0 / (h1 * (h0 + h1)), &phi.values[j + 1]);
            out
        })
        .collect()
}

fn node_v1<T: Scalar>(phi: &HistoryField<T>, d: &DiscreteDomain<T>, alpha: T, beta: T) -> Vec<T> {
    phi.values.iter().map(|v| raw_norm_v1_sq(v, d, alpha, beta)).collect()
}

fn tail_from_norms<T: Scalar>(phi: &HistoryField<T>, v1: &[T], tau: T) -> T {
    let g = &phi.grid;
    let inv = T::one() / tau;
    g.s_nodes
        .iter()
        .zip(&g.weights)
        .zip(v1)
        .filter(|((&s, _), _)| s < inv || s > tau)
        .map(|((_, &w), &n)| g.epsilon * w * n)
        .sum()
}

/// Part of the weighted first-order norm carried by ages in `(0, 1/tau) U (tau, inf)`.
pub fn tail_function<T: Scalar>(phi: &HistoryField<T>, tau: T, d: &DiscreteDomain<T>, alpha: T, beta: T) -> Result<T> {
    if !(tau >= T::one()) {
        return invalid(format!("tau = {tau} must be at least 1"));
    }
    phi.check(d)?;
    Ok(tail_from_norms(phi, &node_v1(phi, d, alpha, beta), tau))
}

/// `sup tau * tail(tau)` over dyadic `tau = 1, 2, 4, ...` until no node is excluded.
pub fn tail_sup<T: Scalar>(phi: &HistoryField<T>, d: &DiscreteDomain<T>, alpha: T, beta: T) -> T {
    raw_tail_sup(phi, &node_v1(phi, d, alpha, beta))
}

fn raw_tail_sup<T: Scalar>(phi: &HistoryField<T>, v1: &[T]) -> T {
    let g = &phi.grid;
    let reach = g.s_max.max(T::one() / g.s_nodes[0]);
    let mut tau = T::one();
    let mut best = T::zero();
    loop {
        let v = tau * tail_from_norms(phi, v1, tau);
        if v > best {
            best = v;
        }
        if tau > reach {
            return best;
        }
        tau = tau + tau;
    }
}

/// Squared compact-space history norm: level-2 norm, `eps |d_s Phi|^2` and the tail supremum.
pub fn k2_norm_sq<T: Scalar>(phi: &HistoryField<T>, d: &DiscreteDomain<T>, alpha: T, beta: T) -> Result<T> {
    memory_norm_sq(phi, Level::L2, d, alpha, beta)?;
    Ok(raw_k2_norm_sq(phi, d, alpha, beta))
}

pub(crate) fn raw_k2_norm_sq<T: Scalar>(phi: &HistoryField<T>, d: &DiscreteDomain<T>, alpha: T, beta: T) -> T {
    let m2 = raw_memory_norm_sq(phi, Level::L2, d, alpha, beta);
    let ds = ds_backward(phi);
    let grad: T = ds.iter().zip(&phi.grid.weights).map(|(v, &w)| w * raw_inner_x2(v, v, d)).sum();
    m2 + phi.grid.epsilon * grad + raw_tail_sup(phi, &node_v1(phi, d, alpha, beta))
}

/// `sum_j w_j |d_s Phi(s_j)|^2_{V1}`, the squared weighted norm of the transport generator.
pub fn generator_norm_sq<T: Scalar>(phi: &HistoryField<T>, d: &DiscreteDomain<T>, alpha: T, beta: T) -> Result<T> {
    phi.check(d)?;
    Ok(ds_backward(phi)
        .iter()
        .zip(&phi.grid.weights)
        .map(|(v, &w)| w * raw_norm_v1_sq(v, d, alpha, beta))
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DissipationMargin {
    /// Discrete `<T Phi, Phi>` in the weighted first-order inner product.
    pub pairing: f64,
    /// `-(delta / 2 eps) |Phi|^2`.
    pub bound: f64,
    /// `bound - pairing`; nonnegative when the inequality holds.
    pub slack: f64,
}

pub fn dissipation_check<T: Scalar>(phi: &HistoryField<T>, d: &DiscreteDomain<T>, alpha: T, beta: T) -> Result<DissipationMargin> {
    phi.check(d)?;
    let g = &phi.grid;
    let ds = ds_central(phi);
    let mut pairing = T::zero();
    for ((v, dv), &w) in phi.values.iter().zip(&ds).zip(&g.weights) {
        let kv = d.stiffness_apply(&v.bulk, T::one(), alpha, beta);
        let ip: T = kv.iter().zip(&dv.bulk).map(|(&a, &b)| a * b).sum();
        pairing -= w * ip;
    }
    let norm = raw_memory_norm_sq(phi, Level::L1, d, alpha, beta);
    let bound = -(g.delta / (g.epsilon + g.epsilon)) * norm;
    Ok(DissipationMargin { pairing: pairing.as_f64(), bound: bound.as_f64(), slack: (bound - pairing).as_f64() })
}
