use std::sync::Arc;

use crate::domain::StateField;
use crate::error::{invalid, Error, Result};
use crate::linalg::BandCholesky;
use crate::memory::{HistoryField, HistoryGrid, TransportPlan};
use crate::physics::eval_f;
use crate::scalar::Scalar;

use super::config::ProblemConfig;
use super::state::SystemState;

struct MemoryPart<T> {
    plan: TransportPlan<T>,
    /// `sum_j w_j min(s_j, dt)`: kernel weight carried by the inflow.
    c_m: T,
}

/// Linearly implicit integrator for either problem.
///
/// With memory, the diffusion `omega A^{0,beta}` and the inflow part of the
/// memory term are implicit while the transported history and `F` are
/// explicit. The limit problem uses `A^{alpha(1-omega), beta(1-omega)}`.
pub struct Stepper<T> {
    cfg: ProblemConfig<T>,
    mass: Vec<T>,
    factor: BandCholesky<T>,
    memory: Option<MemoryPart<T>>,
}

impl<T: Scalar> Stepper<T> {
    pub fn new(cfg: &ProblemConfig<T>) -> Result<Self> {
        let grid = if cfg.has_memory() { Some(cfg.history_grid()?) } else { None };
        Self::with_grid(cfg, grid)
    }

    /// Uses `grid` for the history instead of building one from `cfg.history`.
    pub fn with_grid(cfg: &ProblemConfig<T>, grid: Option<Arc<HistoryGrid<T>>>) -> Result<Self> {
        cfg.validate()?;
        let d = &cfg.domain;
        let dt = cfg.dt;
        let (omega, alpha, beta) = (cfg.omega, cfg.alpha, cfg.beta);
        let (matrix, memory) = match (cfg.has_memory(), grid) {
            (true, Some(grid)) => {
                let plan = TransportPlan::new(grid.clone(), dt)?;
                let c_m = grid.weights.iter().zip(plan.ramp()).map(|(&w, r)| w * r).sum::<T>();
                let a_grad = dt * (omega + c_m);
                (d.assemble(T::one(), a_grad, dt * c_m * alpha, a_grad * beta), Some(MemoryPart { plan, c_m }))
            }
            (true, None) => return invalid("a history grid is required when eps > 0"),
            (false, _) => {
                let r = T::one() - omega;
                (d.assemble(T::one(), dt, dt * alpha * r, dt * beta * r), None)
            }
        };
        Ok(Self { cfg: cfg.clone(), mass: d.node_mass(), factor: matrix.cholesky()?, memory })
    }

    pub fn config(&self) -> &ProblemConfig<T> {
        &self.cfg
    }

    pub fn grid(&self) -> Option<&Arc<HistoryGrid<T>>> {
        self.memory.as_ref().map(|m| &m.plan.grid)
    }

    /// Kernel weight treated implicitly, zero without memory.
    pub fn inflow_weight(&self) -> T {
        self.memory.as_ref().map_or(T::zero(), |m| m.c_m)
    }

    /// `F` for this problem: `g` on the boundary in the limit, `g - omega beta s` otherwise.
    pub fn nonlinearity(&self, u: &StateField<T>) -> StateField<T> {
        let omega = if self.cfg.has_memory() { self.cfg.omega } else { T::zero() };
        eval_f(u, &self.cfg.nonlinearity, omega, self.cfg.beta)
    }

    pub fn check_state(&self, state: &SystemState<T>) -> Result<()> {
        let d = &self.cfg.domain;
        d.check_compatible(&state.u)?;
        match (&self.memory, &state.phi) {
            (Some(m), Some(phi)) => {
                if phi.grid.s_nodes != m.plan.grid.s_nodes || phi.grid.weights != m.plan.grid.weights {
                    return Err(Error::ShapeMismatch("history lives on a different grid".into()));
                }
                phi.check(d)
            }
            (None, None) => Ok(()),
            (Some(_), None) => Err(Error::ShapeMismatch("state has no history but eps > 0".into())),
            (None, Some(_)) => Err(Error::ShapeMismatch("state carries a history but eps = 0".into())),
        }
    }

    /// One step of the full system.
    pub fn step(&self, state: &SystemState<T>) -> Result<SystemState<T>> {
        let load = self.nonlinearity(&state.u).nodal_load(&self.cfg.domain);
        self.advance(state, &load)
    }

    /// One step of the linear part with explicit nodal forcing `load`.
    pub fn advance(&self, state: &SystemState<T>, load: &[T]) -> Result<SystemState<T>> {
        let d = &self.cfg.domain;
        let dt = self.cfg.dt;
        let mut rhs: Vec<T> = state.u.bulk.iter().zip(&self.mass).zip(load).map(|((&u, &m), &f)| m * u - dt * f).collect();
        let shifted = match (&self.memory, &state.phi) {
            (Some(m), Some(phi)) => {
                let shifted = m.plan.shift(phi);
                let mut h = vec![T::zero(); d.n_nodes()];
                for (v, &w) in shifted.iter().zip(&m.plan.grid.weights) {
                    for (hi, &x) in h.iter_mut().zip(&v.bulk) {
                        *hi += w * x;
                    }
                }
                let kh = d.stiffness_apply(&h, T::one(), self.cfg.alpha, self.cfg.beta);
                for (r, k) in rhs.iter_mut().zip(kh) {
                    *r -= dt * k;
                }
                Some(shifted)
            }
            (None, None) => None,
            _ => return Err(Error::ShapeMismatch("history presence does not match eps".into())),
        };
        let u = StateField::from_bulk(d, self.factor.solve(&rhs));
        let next = state.step + 1;
        if !u.all_finite() {
            return Err(Error::NonFinite { step: next, what: "U".into() });
        }
        let phi = match (shifted, &self.memory) {
            (Some(mut values), Some(m)) => {
                for (v, r) in values.iter_mut().zip(m.plan.ramp()) {
                    v.axpy(r, &u);
                }
                let phi = HistoryField { grid: m.plan.grid.clone(), values };
                if !phi.all_finite() {
                    return Err(Error::NonFinite { step: next, what: "Phi".into() });
                }
                Some(phi)
            }
            _ => None,
        };
        Ok(SystemState { u, phi, t: T::of_usize(next as usize) * dt, step: next })
    }
}

/// One step of the problem with memory; builds the stepper on each call.
pub fn step_peps<T: Scalar>(state: &SystemState<T>, cfg: &ProblemConfig<T>) -> Result<SystemState<T>> {
    if !cfg.has_memory() {
        return invalid("step_peps needs eps > 0");
    }
    let grid = state.phi.as_ref().map(|p| p.grid.clone());
    let s = Stepper::with_grid(cfg, grid)?;
    s.check_state(state)?;
    s.step(state)
}

/// One step of the limit problem.
pub fn step_p0<T: Scalar>(u: &StateField<T>, cfg: &ProblemConfig<T>) -> Result<StateField<T>> {
    let cfg = cfg.with_epsilon(T::zero());
    let s = Stepper::with_grid(&cfg, None)?;
    let state = SystemState::new(u.clone(), None);
    s.check_state(&state)?;
    Ok(s.step(&state)?.u)
}
