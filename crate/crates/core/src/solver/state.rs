use std::sync::Arc;

use serde::Serialize;

use crate::domain::{raw_inner_x2, raw_norm_v1_sq, DiscreteDomain, StateField};
use crate::error::{invalid, Result};
use crate::memory::{raw_k2_norm_sq, raw_memory_norm_sq, tail_sup, HistoryField, HistoryGrid, Level};
use crate::scalar::Scalar;

use super::config::ProblemConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct SystemState<T> {
    pub u: StateField<T>,
    /// Absent for the limit problem.
    pub phi: Option<HistoryField<T>>,
    pub t: T,
    pub step: u64,
}

impl<T: Scalar> SystemState<T> {
    pub fn new(u: StateField<T>, phi: Option<HistoryField<T>>) -> Self {
        Self { u, phi, t: T::zero(), step: 0 }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let phi = match (&self.phi, &other.phi) {
            (Some(a), Some(b)) => Some(a.sub(b)),
            _ => None,
        };
        Self { u: self.u.sub(&other.u), phi, t: self.t, step: self.step }
    }

    pub fn add(&self, other: &Self) -> Self {
        let phi = match (&self.phi, &other.phi) {
            (Some(a), Some(b)) => Some(a.add(b)),
            _ => None,
        };
        Self { u: self.u.add(&other.u), phi, t: self.t, step: self.step }
    }
}

/// Lift `U -> (U, 0)`; the zero history lives on `grid`.
pub fn lift<T: Scalar>(u: &StateField<T>, grid: Option<Arc<HistoryGrid<T>>>, d: &DiscreteDomain<T>) -> Result<SystemState<T>> {
    d.check_compatible(u)?;
    Ok(SystemState::new(u.clone(), grid.map(|g| HistoryField::zeros(g, d))))
}

/// Lift using the history grid the configuration prescribes.
pub fn lift_for<T: Scalar>(u: &StateField<T>, cfg: &ProblemConfig<T>) -> Result<SystemState<T>> {
    let grid = if cfg.has_memory() { Some(cfg.history_grid()?) } else { None };
    lift(u, grid, &cfg.domain)
}

pub fn project<T: Scalar>(state: &SystemState<T>) -> StateField<T> {
    state.u.clone()
}

/// `|U|^2 + |Phi|^2_{M1}`.
pub fn h0_norm_sq<T: Scalar>(state: &SystemState<T>, cfg: &ProblemConfig<T>) -> T {
    let d = &cfg.domain;
    raw_inner_x2(&state.u, &state.u, d)
        + state.phi.as_ref().map_or(T::zero(), |p| raw_memory_norm_sq(p, Level::L1, d, cfg.alpha, cfg.beta))
}

/// Rescales a field to `|U| = radius` in the product Lebesgue norm.
pub fn scale_to_norm<T: Scalar>(u: &StateField<T>, radius: T, d: &DiscreteDomain<T>) -> Result<StateField<T>> {
    let n = raw_inner_x2(u, u, d).sqrt();
    if !(n > T::zero()) {
        return invalid("cannot rescale the zero field");
    }
    Ok(u.scaled(radius / n))
}

/// One row of a trajectory record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sample<T> {
    pub step: u64,
    pub t: T,
    pub norm_x2_sq: T,
    pub norm_m1_sq: T,
    pub norm_v1_sq: T,
    pub norm_m2_sq: T,
    pub tail_sup: T,
    pub energy_h0: T,
    pub energy_v1: T,
}

pub const SAMPLE_COLUMNS: [&str; 8] =
    ["t", "norm_x2_sq", "norm_m1_sq", "norm_v1_sq", "norm_m2_sq", "tail_sup", "energy_h0", "energy_v1"];

impl<T: Scalar> Sample<T> {
    pub fn of(state: &SystemState<T>, cfg: &ProblemConfig<T>) -> Self {
        let (d, a, b) = (&*cfg.domain, cfg.alpha, cfg.beta);
        let x2 = raw_inner_x2(&state.u, &state.u, d);
        let v1 = raw_norm_v1_sq(&state.u, d, a, b);
        let (m1, m2, tail, k2) = match &state.phi {
            Some(p) => (
                raw_memory_norm_sq(p, Level::L1, d, a, b),
                raw_memory_norm_sq(p, Level::L2, d, a, b),
                tail_sup(p, d, a, b),
                raw_k2_norm_sq(p, d, a, b),
            ),
            None => (T::zero(), T::zero(), T::zero(), T::zero()),
        };
        Self {
            step: state.step,
            t: state.t,
            norm_x2_sq: x2,
            norm_m1_sq: m1,
            norm_v1_sq: v1,
            norm_m2_sq: m2,
            tail_sup: tail,
            energy_h0: x2 + m1,
            energy_v1: v1 + k2,
        }
    }

    pub fn values(&self) -> [T; 8] {
        [
            self.t,
            self.norm_x2_sq,
            self.norm_m1_sq,
            self.norm_v1_sq,
            self.norm_m2_sq,
            self.tail_sup,
            self.energy_h0,
            self.energy_v1,
        ]
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryRecord<T> {
    pub samples: Vec<Sample<T>>,
}

impl<T: Scalar> TrajectoryRecord<T> {
    pub fn times(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn column(&self, f: impl Fn(&Sample<T>) -> T) -> Vec<T> {
        self.samples.iter().map(f).collect()
    }
}
