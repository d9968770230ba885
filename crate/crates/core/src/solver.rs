//! Time integration of the problem with memory and its limit.

mod analysis;
mod config;
mod evolve;
mod state;
mod stepper;

pub use analysis::{
    evolve_compact_split, evolve_contraction_pair, CompactSplitReport, ContractionReport, MONOTONE_TOL,
    SPLIT_CONSISTENCY_TOL,
};
pub use config::{HistoryParams, ProblemConfig, MEMORY_STEP_FRACTION};
pub use evolve::{check_step_budget, evolve, evolve_with, Trajectory, LIPSCHITZ_STEP_BUDGET};
pub use state::{h0_norm_sq, lift, lift_for, project, scale_to_norm, Sample, SystemState, TrajectoryRecord, SAMPLE_COLUMNS};
pub use stepper::{step_p0, step_peps, Stepper};

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::domain::{build_domain, DomainKind, StateField};
    use crate::memory::KernelSpec;
    use crate::physics::make_nonlinearity;

    fn config(eps: f64, f: &[f64], alpha: f64, beta: f64) -> ProblemConfig<f64> {
        let d = Arc::new(build_domain(DomainKind::Interval, 33).unwrap());
        ProblemConfig {
            omega: 0.5,
            alpha,
            beta,
            epsilon: eps,
            kernel: KernelSpec::exponential(1.0, 0.5, 1.0).unwrap(),
            nonlinearity: make_nonlinearity(f, f).unwrap(),
            domain: d,
            history: HistoryParams { n_s: 64, s_max_factor: 40.0 },
            dt: 0.1 * eps.max(0.1),
            t_final: 1.0,
            record_stride: 2,
        }
    }

    fn bump(d: &crate::domain::DiscreteDomain<f64>) -> StateField<f64> {
        StateField::from_fn(d, |x, _| (3.0 * x).sin() + 0.5)
    }

    #[test]
    fn zero_data_stays_zero() {
        let cfg = config(0.2, &[0.0, -1.0, 0.0, 1.0], 1.0, 0.5);
        let s0 = lift_for(&StateField::zeros(&cfg.domain), &cfg).unwrap();
        let tr = evolve(&s0, &cfg).unwrap();
        assert!(tr.record.samples.iter().all(|s| s.values()[1..].iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn constants_are_kept_without_zeroth_order_terms() {
        for eps in [0.0, 0.2] {
            let cfg = config(eps, &[0.0], 0.0, 0.0);
            let s0 = lift_for(&StateField::constant(&cfg.domain, 1.5), &cfg).unwrap();
            let tr = evolve(&s0, &cfg).unwrap();
            assert!(tr.final_state.u.bulk.iter().all(|&v| (v - 1.5).abs() < 1e-12));
        }
    }

    #[test]
    fn cubic_equilibrium_is_fixed() {
        let cfg = config(0.0, &[0.0, -1.0, 0.0, 1.0], 0.0, 0.0);
        let u = StateField::constant(&cfg.domain, 1.0);
        let next = step_p0(&u, &cfg).unwrap();
        assert!(next.bulk.iter().all(|&v| (v - 1.0).abs() < 1e-13));
    }

    #[test]
    fn restart_is_bitwise() {
        let cfg = config(0.2, &[0.0, -1.0, 0.0, 1.0], 1.0, 0.5);
        let s0 = lift_for(&bump(&cfg.domain), &cfg).unwrap();
        let whole = evolve(&s0, &cfg.with_t_final(1.0)).unwrap();
        let half = evolve(&s0, &cfg.with_t_final(0.5)).unwrap();
        let rest = evolve(&half.final_state, &cfg.with_t_final(1.0)).unwrap();
        assert_eq!(whole.final_state, rest.final_state);
        // The restart point is off-stride, so only compare the shared steps.
        let tail: Vec<_> = whole.record.samples.iter().filter(|s| s.step > half.final_state.step).collect();
        let resumed: Vec<_> = rest.record.samples.iter().filter(|s| s.step > half.final_state.step).collect();
        assert_eq!(tail, resumed);
    }

    #[test]
    fn lift_then_project_is_identity() {
        let cfg = config(0.2, &[0.0], 1.0, 1.0);
        let u = bump(&cfg.domain);
        let s = lift_for(&u, &cfg).unwrap();
        assert_eq!(project(&s), u);
        let x2 = crate::domain::norm_x2_sq(&u, &cfg.domain).unwrap();
        assert_eq!(h0_norm_sq(&s, &cfg), x2);
    }

    #[test]
    fn rejects_coarse_steps() {
        let cfg = config(0.2, &[0.0], 1.0, 1.0).with_dt(0.05);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn identical_pair_has_zero_distance() {
        let cfg = config(0.5, &[0.0], 1.0, 1.0);
        let s = lift_for(&bump(&cfg.domain), &cfg).unwrap();
        let r = evolve_contraction_pair(&s, &s, &cfg).unwrap();
        assert!(r.distance.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn split_matches_direct_solution() {
        let cfg = config(0.5, &[0.0, -1.0, 0.0, 1.0], 1.0, 0.5);
        let s = lift_for(&bump(&cfg.domain), &cfg).unwrap();
        let r = evolve_compact_split(&s, &cfg).unwrap();
        assert!(r.max_consistency <= SPLIT_CONSISTENCY_TOL);
        assert!(r.z_norm.last().unwrap() < &r.z_norm[0]);
    }
}
