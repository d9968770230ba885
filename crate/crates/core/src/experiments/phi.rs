use rayon::prelude::*;
use serde::Serialize;

use crate::domain::StateField;
use crate::error::{invalid, Result};
use crate::memory::{raw_memory_norm_sq, HistoryField, Level};
use crate::scalar::{c, Scalar};
use crate::solver::{check_step_budget, ProblemConfig, Stepper, SystemState};

use super::fit::log_slope;

/// Steps per unit `eps`; the early window `[0, eps/4]` then holds ten steps.
pub const PHI_STEPS_PER_EPS: f64 = 40.0;
/// Largest accepted ratio between the residual constants across the sweep.
pub const PHI_STABILITY_FACTOR: f64 = 2.0;
/// The early decay rate must reach this fraction of `delta / (4 eps)`.
pub const EARLY_RATE_FRACTION: f64 = 0.8;

#[derive(Clone, Debug, Serialize)]
pub struct PhiDecayRow {
    pub epsilon: f64,
    pub dt: f64,
    pub phi0_norm_sq: f64,
    /// `max_t (|Phi(t)|^2 - |Phi0|^2 exp(-delta t / 2 eps)) / eps`.
    pub c_emp: f64,
    /// Decay rate of `|Phi|^2_{M1}` fitted over `[0, eps/4]`.
    pub early_rate: f64,
    /// `delta / (4 eps)`.
    pub early_reference: f64,
    pub early_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhiDecayReport {
    pub rows: Vec<PhiDecayRow>,
    /// `max c_emp / min c_emp`.
    pub c_ratio: f64,
    pub stable: bool,
    pub early_ok: bool,
}

/// Evolves `(U0, A s U0)` for each `eps` and audits the history decay.
pub fn phi_decay_experiment<T: Scalar>(
    cfg: &ProblemConfig<T>,
    eps_list: &[T],
    u0: &StateField<T>,
    phi_amplitude: T,
) -> Result<PhiDecayReport> {
    if eps_list.is_empty() || eps_list.iter().any(|&e| !(e > T::zero())) {
        return invalid("phi decay needs a nonempty list of positive eps");
    }
    let rows = eps_list.par_iter().map(|&eps| phi_decay_row(cfg, eps, u0, phi_amplitude)).collect::<Result<Vec<_>>>()?;
    let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.c_emp), b.max(r.c_emp)));
    let c_ratio = if lo > 0.0 { hi / lo } else if hi == lo { 1.0 } else { f64::INFINITY };
    Ok(PhiDecayReport {
        stable: c_ratio <= PHI_STABILITY_FACTOR,
        early_ok: rows.iter().all(|r| r.early_ok),
        c_ratio,
        rows,
    })
}

fn phi_decay_row<T: Scalar>(cfg: &ProblemConfig<T>, eps: T, u0: &StateField<T>, amp: T) -> Result<PhiDecayRow> {
    let dt = eps / c(PHI_STEPS_PER_EPS);
    let cfg = cfg.with_epsilon(eps).with_dt(dt);
    let stepper = Stepper::new(&cfg)?;
    let grid = stepper.grid().expect("eps > 0").clone();
    let phi0 = HistoryField::from_fn(grid, |s| u0.scaled(amp * s));
    let mut state = SystemState::new(u0.clone(), Some(phi0));
    stepper.check_state(&state)?;
    check_step_budget(&state, &cfg)?;
    let (d, a, b) = (&*cfg.domain, cfg.alpha, cfg.beta);
    let norm = |s: &SystemState<T>| raw_memory_norm_sq(s.phi.as_ref().expect("history"), Level::L1, d, a, b).as_f64();
    let (eps_f, delta) = (eps.as_f64(), cfg.kernel.delta.as_f64());
    let n0 = norm(&state);
    let mut times = vec![0.0];
    let mut values = vec![n0];
    let mut c_emp = 0.0f64;
    let n_total = cfg.total_steps();
    while state.step < n_total {
        state = stepper.step(&state)?;
        let t = state.t.as_f64();
        let n = norm(&state);
        c_emp = c_emp.max((n - n0 * (-delta * t / (2.0 * eps_f)).exp()) / eps_f);
        times.push(t);
        values.push(n);
    }
    let window = times.iter().take_while(|&&t| t <= 0.25 * eps_f * (1.0 + 1e-9)).count();
    let early_rate = if n0 > 0.0 { -log_slope(&times[..window], &values[..window])? } else { f64::INFINITY };
    let early_reference = delta / (4.0 * eps_f);
    Ok(PhiDecayRow {
        epsilon: eps_f,
        dt: dt.as_f64(),
        phi0_norm_sq: n0,
        c_emp,
        early_rate,
        early_reference,
        early_ok: early_rate >= EARLY_RATE_FRACTION * early_reference,
    })
}
