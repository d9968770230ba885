//! Whole-trajectory properties of the two time steppers.

use std::sync::Arc;

use cgmem::domain::{build_domain, norm_x2_sq, DomainKind, StateField};
use cgmem::experiments::{energy_decay_experiment, robustness_sweep};
use cgmem::memory::KernelSpec;
use cgmem::physics::make_nonlinearity;
use cgmem::solver::{evolve, evolve_contraction_pair, lift_for, HistoryParams, ProblemConfig};
use cgmem::{Config32, Config64};

fn base(eps: f64, f: &[f64], g: &[f64]) -> Config64 {
    ProblemConfig {
        omega: 0.5,
        alpha: 1.0,
        beta: 0.5,
        epsilon: eps,
        kernel: KernelSpec::exponential(1.0, 0.5, 1.0).unwrap(),
        nonlinearity: make_nonlinearity(f, g).unwrap(),
        domain: Arc::new(build_domain(DomainKind::Interval, 33).unwrap()),
        history: HistoryParams { n_s: 48, s_max_factor: 20.0 },
        dt: 0.01,
        t_final: 1.0,
        record_stride: 1,
    }
}

fn bump(cfg: &Config64) -> StateField<f64> {
    StateField::from_fn(&cfg.domain, |x, _| (3.0 * x).sin() + 0.5)
}

#[test]
fn linear_problem_dissipates_the_phase_space_energy() {
    let mut cfg = base(0.2, &[0.0], &[0.0]);
    cfg.t_final = 3.0;
    let traj = evolve(&lift_for(&bump(&cfg), &cfg).unwrap(), &cfg).unwrap();
    let e: Vec<f64> = traj.record.samples.iter().map(|s| s.energy_h0).collect();
    assert!(e.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)), "{e:?}");
    assert!(e.last().unwrap() < &(0.5 * e[0]));
}

#[test]
fn single_precision_tracks_double_precision() {
    let cfg = base(0.2, &[0.0, -1.0, 0.0, 1.0], &[0.0, -1.0, 0.0, 1.0]);
    let u64_end = evolve(&lift_for(&bump(&cfg), &cfg).unwrap(), &cfg).unwrap().final_state.u;
    let cfg32: Config32 = ProblemConfig {
        omega: 0.5,
        alpha: 1.0,
        beta: 0.5,
        epsilon: 0.2,
        kernel: KernelSpec::exponential(1.0, 0.5, 1.0).unwrap(),
        nonlinearity: make_nonlinearity(&[0.0, -1.0, 0.0, 1.0], &[0.0, -1.0, 0.0, 1.0]).unwrap(),
        domain: Arc::new(build_domain(DomainKind::Interval, 33).unwrap()),
        history: HistoryParams { n_s: 48, s_max_factor: 20.0 },
        dt: 0.01,
        t_final: 1.0,
        record_stride: 1,
    };
    let u0 = StateField::from_fn(&cfg32.domain, |x, _| (3.0 * x).sin() + 0.5);
    let u32_end = evolve(&lift_for(&u0, &cfg32).unwrap(), &cfg32).unwrap().final_state.u;
    for (a, b) in u64_end.bulk.iter().zip(&u32_end.bulk) {
        assert!((a - *b as f64).abs() < 1e-4, "{a} vs {b}");
    }
}

#[test]
fn gated_configuration_obeys_the_energy_bound() {
    let mut cfg = base(0.5, &[0.0, 0.0, 0.0, 1.0], &[0.0, 0.0, 0.0, 1.0]);
    cfg.alpha = 2.0;
    cfg.beta = 0.1;
    cfg.dt = 0.002;
    cfg.t_final = 4.0;
    cfg.record_stride = 20;
    let report = energy_decay_experiment(&cfg, &bump(&cfg), 3.0).unwrap();
    assert!(report.gate.passed);
    assert!(report.holds, "worst margin {}", report.worst_margin);
}

#[test]
fn ungated_configuration_is_refused() {
    let mut cfg = base(1.0, &[0.0, -1.0, 0.0, 1.0], &[0.0, -1.0, 0.0, 1.0]);
    cfg.alpha = 0.0;
    cfg.beta = 0.1;
    let err = energy_decay_experiment(&cfg, &bump(&cfg), 10.0).unwrap_err();
    assert!(matches!(err, cgmem::Error::GateFailed(_)), "{err}");
}

#[test]
fn linear_differences_contract() {
    let mut cfg = base(0.5, &[0.0], &[0.0]);
    cfg.dt = 0.02;
    cfg.t_final = 4.0;
    let a = lift_for(&bump(&cfg), &cfg).unwrap();
    let b = lift_for(&StateField::from_fn(&cfg.domain, |x, _| x * x - 0.3), &cfg).unwrap();
    let rep = evolve_contraction_pair(&a, &b, &cfg).unwrap();
    assert!(rep.monotone, "max step ratio {}", rep.max_step_ratio);
    assert!(rep.fitted_rate.unwrap() >= 0.8 * rep.predicted_rate.unwrap());
}

#[test]
fn memory_gap_shrinks_with_eps() {
    let mut cfg = base(0.2, &[0.0, -1.0, 0.0, 1.0], &[0.0, -1.0, 0.0, 1.0]);
    cfg.dt = 0.0025;
    let res = robustness_sweep(&cfg, &[0.2, 0.1, 0.05], &bump(&cfg)).unwrap();
    assert!(res.monotone);
    assert!(res.slope_ok, "slope {:?}", res.fit.map(|f| f.slope));
    let norm0 = norm_x2_sq(&bump(&cfg), &cfg.domain).unwrap().sqrt();
    assert!(res.rows.iter().all(|r| r.err < norm0));
}
