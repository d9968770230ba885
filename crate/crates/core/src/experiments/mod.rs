//! Quantitative checks built on the solver.

mod energy;
pub mod fit;
mod gronwall;
mod phi;
mod sweep;
mod transitivity;

pub use energy::{energy_decay_experiment, smallness_for, EnergyDecayReport, ENERGY_TOL_FRACTION};
pub use fit::{fit_decay, linear_fit, log_slope, loglog_fit, DecayFit, LinearFit};
pub use gronwall::{gronwall_check, gronwall_suite, minimal_m, synthesize_lambda, GronwallSuite, GronwallVerdict};
pub use phi::{phi_decay_experiment, PhiDecayReport, PhiDecayRow, EARLY_RATE_FRACTION, PHI_STABILITY_FACTOR};
pub use sweep::{
    holder_sweep, robustness_sweep, shared_nodes, HolderReport, HolderRow, SweepResult, SweepRow,
    HOLDER_EXPONENT_RANGE, IDENTICAL_GAP_TOL, ROBUST_MIN_SLOPE,
};
pub use transitivity::{synthetic_transitivity, transitivity_combine, transitivity_suite, TransitivityCheck};
