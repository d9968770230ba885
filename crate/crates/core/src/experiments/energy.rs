use serde::Serialize;

use crate::domain::StateField;
use crate::error::{Error, Result};
use crate::memory::validate_kernel;
use crate::physics::{check_smallness, estimate_embedding_constant, SmallnessReport};
use crate::scalar::Scalar;
use crate::solver::{evolve, lift_for, scale_to_norm, ProblemConfig};

use super::fit::{fit_decay, DecayFit, MIN_DECAY_SAMPLES};

/// Slack on the absorbing-ball audit, as a fraction of `E(0)`.
pub const ENERGY_TOL_FRACTION: f64 = 0.05;

#[derive(Clone, Debug, Serialize)]
pub struct EnergyDecayReport {
    pub gate: SmallnessReport,
    pub radius: f64,
    pub e0: f64,
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    /// `E(0) exp(-m0 t) + P0 + tol` at each sample.
    pub bound: Vec<f64>,
    /// Smallest `bound - E` over the samples.
    pub worst_margin: f64,
    pub holds: bool,
    /// `ln(R^2) / m0`.
    pub t0_formula: f64,
    /// First sample after which `E <= P0 + 1` stays true; `None` if never reached.
    pub absorbing_time: Option<f64>,
    pub fit: Option<DecayFit>,
}

/// Gate report for `cfg`; needs `alpha > 0` or `beta > 0`.
pub fn smallness_for<T: Scalar>(cfg: &ProblemConfig<T>) -> Result<SmallnessReport> {
    let c_embed = estimate_embedding_constant(&cfg.domain, cfg.alpha, cfg.beta)?;
    check_smallness(&cfg.nonlinearity, cfg.omega, cfg.beta, c_embed, cfg.kernel.delta)
}

/// Runs from `shape` rescaled to `|U0| = radius` with zero history and audits
/// `E(t) <= E(0) exp(-m0 t) + P0 + 0.05 E(0)` at every recorded sample.
pub fn energy_decay_experiment<T: Scalar>(
    cfg: &ProblemConfig<T>,
    shape: &StateField<T>,
    radius: T,
) -> Result<EnergyDecayReport> {
    let kr = validate_kernel(&cfg.kernel);
    if let Some(f) = kr.first_failure() {
        return Err(Error::Assumption { name: f.name.into(), detail: format!("margin {:.3e}", f.worst_margin) });
    }
    let gate = smallness_for(cfg)?;
    if !gate.passed {
        return Err(Error::GateFailed(format!(
            "max(kappa1, kappa3 + beta) = {:.6} is not below omega / C = {:.6} (C = {:.6}); the decay estimate is not guaranteed",
            gate.c_f, gate.threshold, gate.c_embed
        )));
    }
    let u0 = if radius > T::zero() { scale_to_norm(shape, radius, &cfg.domain)? } else { shape.scaled(T::zero()) };
    let state = lift_for(&u0, cfg)?;
    let traj = evolve(&state, cfg)?;
    let times: Vec<f64> = traj.record.samples.iter().map(|s| s.t.as_f64()).collect();
    let energy: Vec<f64> = traj.record.samples.iter().map(|s| s.energy_h0.as_f64()).collect();
    let e0 = energy[0];
    let p0 = gate.p0.unwrap_or(0.0);
    let bound: Vec<f64> =
        times.iter().map(|&t| e0 * (-gate.m0 * t).exp() + p0 + ENERGY_TOL_FRACTION * e0).collect();
    let worst_margin = bound.iter().zip(&energy).map(|(b, e)| b - e).fold(f64::INFINITY, f64::min);
    let r = radius.as_f64();
    let absorbing_time = {
        let ball = p0 + 1.0;
        match energy.iter().rposition(|&e| e > ball) {
            None => Some(times[0]),
            Some(k) if k + 1 < times.len() => Some(times[k + 1]),
            Some(_) => None,
        }
    };
    let fit = if times.len() >= MIN_DECAY_SAMPLES { fit_decay(&times, &energy).ok() } else { None };
    Ok(EnergyDecayReport {
        radius: r,
        e0,
        worst_margin,
        holds: worst_margin >= 0.0,
        t0_formula: if r > 1.0 { (r * r).ln() / gate.m0 } else { 0.0 },
        absorbing_time,
        fit,
        gate,
        times,
        energy,
        bound,
    })
}
