use std::sync::Arc;

use crate::domain::DiscreteDomain;
use crate::error::{invalid, Result};
use crate::memory::{build_history_grid, KernelSpec, HistoryGrid};
use crate::physics::NonlinearitySpec;
use crate::scalar::{c, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryParams<T> {
    pub n_s: usize,
    pub s_max_factor: T,
}

#[derive(Clone, Debug)]
pub struct ProblemConfig<T> {
    pub omega: T,
    pub alpha: T,
    pub beta: T,
    /// `0` selects the limit problem without memory.
    pub epsilon: T,
    pub kernel: KernelSpec<T>,
    pub nonlinearity: NonlinearitySpec<T>,
    pub domain: Arc<DiscreteDomain<T>>,
    pub history: HistoryParams<T>,
    pub dt: T,
    pub t_final: T,
    pub record_stride: usize,
}

/// Largest step resolving the memory layer: `dt <= 0.1 eps`.
pub const MEMORY_STEP_FRACTION: f64 = 0.1;

impl<T: Scalar> ProblemConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > T::zero() && self.omega < T::one()) {
            return invalid(format!("omega = {} must lie in (0, 1)", self.omega));
        }
        if !(self.alpha >= T::zero() && self.beta >= T::zero()) {
            return invalid(format!("alpha = {}, beta = {} must be nonnegative", self.alpha, self.beta));
        }
        if !(self.epsilon >= T::zero() && self.epsilon <= T::one()) {
            return invalid(format!("epsilon = {} must lie in [0, 1]", self.epsilon));
        }
        if self.kernel.omega != self.omega {
            return invalid("kernel omega differs from model omega");
        }
        if !(self.dt > T::zero() && self.t_final > T::zero()) {
            return invalid(format!("dt = {} and t_final = {} must be positive", self.dt, self.t_final));
        }
        if self.record_stride == 0 {
            return invalid("record_stride must be at least 1");
        }
        if self.epsilon > T::zero() && self.dt > c::<T>(MEMORY_STEP_FRACTION) * self.epsilon * (T::one() + c(1e-12)) {
            return invalid(format!(
                "dt = {} exceeds the memory-layer budget {} x eps = {}",
                self.dt,
                MEMORY_STEP_FRACTION,
                c::<T>(MEMORY_STEP_FRACTION) * self.epsilon
            ));
        }
        Ok(())
    }

    pub fn has_memory(&self) -> bool {
        self.epsilon > T::zero()
    }

    /// Steps needed to reach `t_final`.
    pub fn total_steps(&self) -> u64 {
        (self.t_final / self.dt).round().to_u64().unwrap_or(0)
    }

    pub fn history_grid(&self) -> Result<Arc<HistoryGrid<T>>> {
        Ok(Arc::new(build_history_grid(&self.kernel, self.epsilon, self.history.n_s, self.history.s_max_factor)?))
    }

    pub fn with_epsilon(&self, epsilon: T) -> Self {
        Self { epsilon, ..self.clone() }
    }

    pub fn with_dt(&self, dt: T) -> Self {
        Self { dt, ..self.clone() }
    }

    pub fn with_t_final(&self, t_final: T) -> Self {
        Self { t_final, ..self.clone() }
    }
}
