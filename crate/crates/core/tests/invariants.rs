//! Randomized invariants of the kernel, the nonlinearity constants and the history grid.

use proptest::prelude::*;

use cgmem::domain::{build_domain, DomainKind, StateField};
use cgmem::memory::{build_history_grid, rescale_kernel, validate_kernel, KernelSpec};
use cgmem::physics::{decomposition_shift, eval_f, eval_f0, lipschitz_on_ball, make_nonlinearity, Cubic};

fn cubic_coeffs() -> impl Strategy<Value = [f64; 4]> {
    (-3.0..3.0f64, -3.0..3.0f64, -2.0..2.0f64, 0.05..2.0f64).prop_map(|(a, b, c, d)| [a, b, c, d])
}

fn sample_points() -> Vec<f64> {
    (0..=400).map(|i| -6.0 + 12.0 * i as f64 / 400.0).collect()
}

fn eval(p: &Cubic<f64>, s: f64) -> f64 {
    p.eval(s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exponential_kernel_passes_iff_delta_within_rate(rate in 0.2..5.0f64, omega in 0.05..0.95f64, frac in 0.1..2.0f64) {
        let delta = rate * frac;
        let k = KernelSpec::exponential(rate, omega, delta).unwrap();
        let report = validate_kernel(&k);
        let decay = report.checks.iter().find(|c| c.name == "exponential-decay").unwrap();
        prop_assert_eq!(decay.passed, frac <= 1.0);
        prop_assert!(report.checks.iter().filter(|c| c.name != "exponential-decay").all(|c| c.passed));
    }

    #[test]
    fn rescaled_kernel_mass_scales_inversely_with_eps(rate in 0.5..4.0f64, omega in 0.1..0.9f64, eps in 0.01..1.0f64) {
        let k = KernelSpec::exponential(rate, omega, rate).unwrap();
        let m1 = rescale_kernel(&k, 1.0).unwrap().mass();
        let me = rescale_kernel(&k, eps).unwrap().mass();
        prop_assert!((me * eps - m1).abs() <= 1e-10 * m1);
        let s = 0.3 * eps;
        let direct = k.mu(s / eps) / (eps * eps);
        prop_assert!((rescale_kernel(&k, eps).unwrap().eval(s) - direct).abs() <= 1e-12 * direct.max(1.0));
    }

    #[test]
    fn history_weights_capture_the_kernel_mass(rate in 0.5..4.0f64, eps in 0.02..1.0f64, n_s in 32usize..160) {
        let k = KernelSpec::exponential(rate, 0.5, rate).unwrap();
        let grid = build_history_grid(&k, eps, n_s, 20.0).unwrap();
        let mass = rescale_kernel(&k, eps).unwrap().mass();
        prop_assert!((grid.total_weight() - mass).abs() <= 1e-6 * mass);
        prop_assert!(grid.s_nodes[0] <= eps / 10.0);
        prop_assert!(grid.s_nodes.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn reported_constants_bound_the_polynomials(f in cubic_coeffs(), g in cubic_coeffs()) {
        let spec = make_nonlinearity(&f, &g).unwrap();
        let [k1, k2, k3, k4] = spec.kappa;
        for s in sample_points() {
            let slack = 1e-9 * (1.0 + s.powi(4));
            prop_assert!(eval(&spec.f, s) * s >= -k1 * s * s - k2 - slack);
            prop_assert!(eval(&spec.g, s) * s >= -k3 * s * s - k4 - slack);
            prop_assert!(spec.f.deriv(s) >= -spec.m_f - slack);
            prop_assert!(spec.g.deriv(s) >= -spec.m_g - slack);
            prop_assert!(spec.f.deriv(s).abs() <= spec.ell1 * (1.0 + s.abs().powf(spec.r1)) + slack);
            prop_assert!(spec.g.deriv(s).abs() <= spec.ell2 * (1.0 + s.abs().powf(spec.r2)) + slack);
        }
    }

    #[test]
    fn shifted_nonlinearity_is_monotone(f in cubic_coeffs(), g in cubic_coeffs(), omega in 0.1..0.9f64, beta in 0.0..2.0f64, a in -4.0..4.0f64, b in -4.0..4.0f64) {
        let spec = make_nonlinearity(&f, &g).unwrap();
        let d = build_domain::<f64>(DomainKind::Interval, 8).unwrap();
        let m = decomposition_shift(&spec, omega, beta);
        let ua = StateField::constant(&d, a);
        let ub = StateField::constant(&d, b);
        let diff = eval_f0(&ua, &spec, omega, beta, m).sub(&eval_f0(&ub, &spec, omega, beta, m));
        prop_assert!(diff.bulk[3] * (a - b) >= -1e-12);
        prop_assert!(diff.boundary[0] * (a - b) >= -1e-12);
    }

    #[test]
    fn lipschitz_bound_holds_on_the_ball(f in cubic_coeffs(), g in cubic_coeffs(), r in 0.5..5.0f64, x in -1.0..1.0f64, y in -1.0..1.0f64) {
        let spec = make_nonlinearity(&f, &g).unwrap();
        let (a, b) = (x * r, y * r);
        let lip = lipschitz_on_ball(&spec, 0.5, 0.7, r);
        let d = build_domain::<f64>(DomainKind::Interval, 8).unwrap();
        let fa = eval_f(&StateField::constant(&d, a), &spec, 0.5, 0.7);
        let fb = eval_f(&StateField::constant(&d, b), &spec, 0.5, 0.7);
        let tol = 1e-10 * (1.0 + lip);
        prop_assert!((fa.bulk[0] - fb.bulk[0]).abs() <= lip * (a - b).abs() + tol);
        prop_assert!((fa.boundary[1] - fb.boundary[1]).abs() <= lip * (a - b).abs() + tol);
    }

    #[test]
    fn nonlinearity_acts_pointwise(f in cubic_coeffs(), g in cubic_coeffs(), node in 0usize..17, bump in -2.0..2.0f64) {
        let spec = make_nonlinearity(&f, &g).unwrap();
        let d = build_domain::<f64>(DomainKind::Interval, 17).unwrap();
        let u = StateField::from_fn(&d, |x, _| (5.0 * x).sin());
        let mut v = u.clone();
        v.bulk[node] += bump;
        let (fu, fv) = (eval_f(&u, &spec, 0.5, 0.5), eval_f(&v, &spec, 0.5, 0.5));
        for i in 0..d.n_nodes() {
            if i != node {
                prop_assert_eq!(fu.bulk[i], fv.bulk[i]);
            }
        }
        prop_assert_eq!(fu.boundary, fv.boundary);
    }
}

#[test]
fn even_and_negative_leading_polynomials_are_rejected() {
    assert!(make_nonlinearity(&[0.0, 0.0, 1.0], &[0.0]).is_err());
    assert!(make_nonlinearity(&[0.0, 0.0, 0.0, -1.0], &[0.0]).is_err());
    assert!(make_nonlinearity(&[0.0, 0.0, 0.0, 0.0, 1.0], &[0.0]).is_err());
}
