//! Wentzell operator checks against dense linear algebra and manufactured solutions.

use std::f64::consts::PI;
use std::sync::Arc;

use cgmem::domain::{
    apply_wentzell, build_domain, inner_x2, norm_v1_sq, norm_x2_sq, solve_wentzell_shifted, DiscreteDomain, DomainKind,
    StateField,
};
use cgmem::memory::KernelSpec;
use cgmem::physics::make_nonlinearity;
use cgmem::solver::{evolve, lift_for, HistoryParams, ProblemConfig};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(d: &DiscreteDomain<f64>, rng: &mut ChaCha8Rng) -> StateField<f64> {
    StateField::from_bulk(d, (0..d.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

fn x2_norm(u: &StateField<f64>, d: &DiscreteDomain<f64>) -> f64 {
    norm_x2_sq(u, d).unwrap().sqrt()
}

/// `M^{1/2} A M^{-1/2}` as a dense matrix, with `M` the lumped product-space mass.
fn dense_symmetrized(d: &DiscreteDomain<f64>, alpha: f64, beta: f64) -> DMatrix<f64> {
    let n = d.n_nodes();
    let m = d.node_mass();
    let mut a = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let ku = d.stiffness_apply(&e, 1.0, alpha, beta);
        for i in 0..n {
            a[(i, j)] = ku[i] / (m[i] * m[j]).sqrt();
        }
    }
    a
}

#[test]
fn symmetric_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (kind, n) in [(DomainKind::Interval, 129), (DomainKind::Square, 17)] {
        let d = build_domain::<f64>(kind, n).unwrap();
        for _ in 0..100 {
            let (alpha, beta) = (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0));
            let u = random_field(&d, &mut rng);
            let v = random_field(&d, &mut rng);
            let auv = inner_x2(&apply_wentzell(&u, &d, alpha, beta).unwrap(), &v, &d).unwrap();
            let uav = inner_x2(&u, &apply_wentzell(&v, &d, alpha, beta).unwrap(), &d).unwrap();
            let scale = x2_norm(&apply_wentzell(&u, &d, alpha, beta).unwrap(), &d) * x2_norm(&v, &d);
            assert!((auv - uav).abs() <= 1e-10 * scale, "{kind:?}: {auv} vs {uav}");
        }
    }
}

#[test]
fn quadratic_form_is_the_energy_and_nonnegative() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (kind, n) in [(DomainKind::Interval, 129), (DomainKind::Square, 17)] {
        let d = build_domain::<f64>(kind, n).unwrap();
        for i in 0..100 {
            let (alpha, beta) = if i % 4 == 0 { (0.0, 0.0) } else { (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0)) };
            let u = random_field(&d, &mut rng);
            let q = inner_x2(&apply_wentzell(&u, &d, alpha, beta).unwrap(), &u, &d).unwrap();
            let e = norm_v1_sq(&u, &d, alpha, beta).unwrap();
            assert!(q >= -1e-12, "negative form {q}");
            assert!((q - e).abs() <= 1e-8 * e.max(1e-300), "{q} vs {e}");
        }
    }
}

#[test]
fn dense_spectrum_is_nonnegative_with_constant_kernel() {
    let d = build_domain::<f64>(DomainKind::Interval, 65).unwrap();
    let eig = SymmetricEigen::new(dense_symmetrized(&d, 0.0, 0.0)).eigenvalues;
    let mut ev: Vec<f64> = eig.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    assert!(ev[0].abs() < 1e-9, "constants must span the kernel, got {}", ev[0]);
    assert!(ev[1] > 1.0);
    let eig = SymmetricEigen::new(dense_symmetrized(&d, 0.5, 0.5)).eigenvalues;
    assert!(eig.min() > 0.4);
}

fn manufactured_error(kind: DomainKind, n: usize, alpha: f64, beta: f64) -> f64 {
    let d = build_domain::<f64>(kind, n).unwrap();
    let (u, rhs) = match kind {
        DomainKind::Interval => {
            // u = cos 2x + x^2, outward normal -1 at x = 0 and +1 at x = 1
            let u = |x: f64| (2.0 * x).cos() + x * x;
            let du = |x: f64| -2.0 * (2.0 * x).sin() + 2.0 * x;
            let lap = |x: f64| -4.0 * (2.0 * x).cos() + 2.0;
            let ex = StateField::from_fn(&d, |x, _| u(x));
            let mut rhs = StateField::from_fn(&d, |x, _| u(x) - lap(x) + alpha * u(x));
            rhs.boundary = vec![u(0.0) - du(0.0) + beta * u(0.0), u(1.0) + du(1.0) + beta * u(1.0)];
            (ex, rhs)
        }
        DomainKind::Square => {
            // cos(pi x) cos(pi y): zero normal flux, tangential second derivative -pi^2 u on every edge
            let u = |x: f64, y: f64| (PI * x).cos() * (PI * y).cos();
            let ex = StateField::from_fn(&d, u);
            let mut rhs = StateField::from_fn(&d, |x, y| (1.0 + 2.0 * PI * PI + alpha) * u(x, y));
            rhs.boundary = d.boundary_nodes().iter().map(|p| (1.0 + PI * PI + beta) * u(p[0], p[1])).collect();
            (ex, rhs)
        }
    };
    let got = solve_wentzell_shifted(1.0, 1.0, &rhs, &d, alpha, beta).unwrap();
    let diff = got.sub(&u);
    diff.max_abs()
}

fn observed_orders(kind: DomainKind, sizes: &[usize]) -> Vec<f64> {
    let errs: Vec<f64> = sizes.iter().map(|&n| manufactured_error(kind, n, 1.0, 0.5)).collect();
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn manufactured_solution_converges_at_second_order_on_interval() {
    for p in observed_orders(DomainKind::Interval, &[33, 65, 129, 257]) {
        assert!((p - 2.0).abs() <= 0.2, "order {p}");
    }
}

#[test]
fn manufactured_solution_converges_at_second_order_on_square() {
    for p in observed_orders(DomainKind::Square, &[17, 33, 65]) {
        assert!((p - 2.0).abs() <= 0.2, "order {p}");
    }
}

#[test]
fn limit_heat_flow_decays_at_the_dense_spectral_gap() {
    let d = Arc::new(build_domain::<f64>(DomainKind::Interval, 65).unwrap());
    let mut ev: Vec<f64> = SymmetricEigen::new(dense_symmetrized(&d, 0.0, 0.0)).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let gap = ev[1];
    let dt = 1e-3;
    let cfg = ProblemConfig {
        omega: 0.5,
        alpha: 0.0,
        beta: 0.0,
        epsilon: 0.0,
        kernel: KernelSpec::exponential(1.0, 0.5, 1.0).unwrap(),
        nonlinearity: make_nonlinearity(&[0.0], &[0.0]).unwrap(),
        domain: d.clone(),
        history: HistoryParams { n_s: 16, s_max_factor: 40.0 },
        dt,
        t_final: 1.0,
        record_stride: 50,
    };
    // antisymmetric about x = 1/2, so orthogonal to the constants
    let u0 = StateField::from_fn(&d, |x, _| (PI * x).cos());
    let traj = evolve(&lift_for(&u0, &cfg).unwrap(), &cfg).unwrap();
    let s = &traj.record.samples;
    let (first, last) = (&s[2], s.last().unwrap());
    let rate = -(last.norm_x2_sq / first.norm_x2_sq).ln() / (2.0 * (last.t - first.t));
    let implicit_gap = (1.0 + gap * dt).ln() / dt;
    assert!((rate - implicit_gap).abs() <= 0.05 * implicit_gap, "rate {rate}, gap {gap}");
}
