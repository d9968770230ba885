//! Memory kernel, graded history grid, transport of the history variable and
//! the weighted history norms.

mod grid;
mod history;
mod kernel;
mod norms;

pub use grid::{build_history_grid, geometric_nodes, HistoryGrid, MASS_TRUNCATION_TOL};
pub use history::{advance_history, history_oracle, history_oracle_with, HistoryField, PathReading, TransportPlan};
pub use kernel::{rescale_kernel, validate_kernel, AssumptionCheck, KernelFamily, KernelReport, KernelSpec, RescaledKernel};
pub(crate) use norms::{raw_k2_norm_sq, raw_memory_norm_sq};
pub use norms::{
    convolve_wentzell, dissipation_check, ds_backward, generator_norm_sq, k2_norm_sq, memory_norm_sq, tail_function,
    tail_sup, weighted_sum, DissipationMargin, Level,
};
