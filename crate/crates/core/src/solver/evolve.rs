use crate::error::{Error, Result};
use crate::physics::lipschitz_on_ball;
use crate::scalar::{c, Scalar};

use super::config::ProblemConfig;
use super::state::{Sample, SystemState, TrajectoryRecord};
use super::stepper::Stepper;

/// Largest `dt * Lip(F)` accepted for the explicit nonlinearity.
pub const LIPSCHITZ_STEP_BUDGET: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub record: TrajectoryRecord<T>,
    pub final_state: SystemState<T>,
}

/// Rejects steps with `dt Lip(F) > 1/2` on the ball `max(sup |U0|, 1)`.
pub fn check_step_budget<T: Scalar>(state: &SystemState<T>, cfg: &ProblemConfig<T>) -> Result<()> {
    let radius = state.u.max_abs().max(T::one());
    let omega = if cfg.has_memory() { cfg.omega } else { T::zero() };
    let lip = lipschitz_on_ball(&cfg.nonlinearity, omega, cfg.beta, radius);
    if cfg.dt * lip > c(LIPSCHITZ_STEP_BUDGET) {
        return Err(Error::StepBudget(format!(
            "dt = {} with Lip(F) = {} on radius {} exceeds dt Lip <= {}",
            cfg.dt, lip, radius, LIPSCHITZ_STEP_BUDGET
        )));
    }
    Ok(())
}

/// Integrates from `initial` up to `cfg.t_final`, sampling every `record_stride`
/// steps and at the end. A state taken mid-run continues bitwise identically.
pub fn evolve<T: Scalar>(initial: &SystemState<T>, cfg: &ProblemConfig<T>) -> Result<Trajectory<T>> {
    let grid = initial.phi.as_ref().map(|p| p.grid.clone());
    let stepper = if cfg.has_memory() && grid.is_none() { Stepper::new(cfg)? } else { Stepper::with_grid(cfg, grid)? };
    evolve_with(&stepper, initial, |_| Ok(()))
}

/// As [`evolve`], calling `observe` on every recorded state.
pub fn evolve_with<T: Scalar>(
    stepper: &Stepper<T>,
    initial: &SystemState<T>,
    mut observe: impl FnMut(&SystemState<T>) -> Result<()>,
) -> Result<Trajectory<T>> {
    let cfg = stepper.config();
    stepper.check_state(initial)?;
    check_step_budget(initial, cfg)?;
    let n_total = cfg.total_steps();
    let stride = cfg.record_stride as u64;
    let mut record = TrajectoryRecord::default();
    let mut state = initial.clone();
    record.samples.push(Sample::of(&state, cfg));
    observe(&state)?;
    while state.step < n_total {
        state = stepper.step(&state)?;
        if state.step % stride == 0 || state.step == n_total {
            record.samples.push(Sample::of(&state, cfg));
            observe(&state)?;
        }
    }
    Ok(Trajectory { record, final_state: state })
}
