use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{raw_inner_x2, StateField};
use crate::error::{invalid, Result};
use crate::memory::{geometric_nodes, raw_memory_norm_sq, HistoryField, HistoryGrid, Level};
use crate::scalar::{c, Scalar};
use crate::solver::{check_step_budget, lift, ProblemConfig, Stepper, SystemState};

use super::fit::{loglog_fit, LinearFit};

/// Required log-log slope of the robustness error.
pub const ROBUST_MIN_SLOPE: f64 = 0.45;
/// Accepted range of the fitted exponent in the separation `eps1 - eps2`.
pub const HOLDER_EXPONENT_RANGE: (f64, f64) = (0.4, 0.7);
/// Largest gap accepted for two identical values of eps.
pub const IDENTICAL_GAP_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    /// `sup_{t in [sqrt eps, T]}` of the `H0` gap at recorded samples.
    pub err: f64,
    /// `C sqrt(eps)` with `C` calibrated on the largest eps.
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    /// Strictly decreasing.
    pub rows: Vec<SweepRow>,
    pub fit: Option<LinearFit>,
    pub c_sqrt: f64,
    pub within_bound: bool,
    pub monotone: bool,
    pub slope_ok: bool,
}

fn h0_gap<T: Scalar>(u_a: &StateField<T>, u_b: &StateField<T>, phi: Option<&HistoryField<T>>, cfg: &ProblemConfig<T>) -> f64 {
    let d = &*cfg.domain;
    let du = u_a.sub(u_b);
    let m = phi.map_or(T::zero(), |p| raw_memory_norm_sq(p, Level::L1, d, cfg.alpha, cfg.beta));
    (raw_inner_x2(&du, &du, d) + m).as_f64().sqrt()
}

/// Compares `S_eps(t) L U0` with `L S_0(t) U0` for each eps, all on the step `cfg.dt`.
pub fn robustness_sweep<T: Scalar>(cfg: &ProblemConfig<T>, eps_list: &[T], u0: &StateField<T>) -> Result<SweepResult> {
    if eps_list.is_empty() || eps_list.iter().any(|&e| !(e > T::zero())) {
        return invalid("robustness sweep needs positive eps values");
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return invalid("eps values must be strictly decreasing");
    }
    let limit_cfg = cfg.with_epsilon(T::zero());
    let limit = Stepper::new(&limit_cfg)?;
    let mut s0 = SystemState::new(u0.clone(), None);
    limit.check_state(&s0)?;
    check_step_budget(&s0, &limit_cfg)?;
    let n_total = cfg.total_steps();
    let stride = cfg.record_stride as u64;
    let mut reference = vec![(0u64, u0.clone())];
    while s0.step < n_total {
        s0 = limit.step(&s0)?;
        if s0.step % stride == 0 || s0.step == n_total {
            reference.push((s0.step, s0.u.clone()));
        }
    }
    let rows = eps_list
        .par_iter()
        .map(|&eps| {
            let cfg = cfg.with_epsilon(eps);
            let stepper = Stepper::new(&cfg)?;
            let mut s = lift(u0, stepper.grid().cloned(), &cfg.domain)?;
            check_step_budget(&s, &cfg)?;
            let t_start = eps.as_f64().sqrt();
            let mut err = 0.0f64;
            for (step, u_ref) in &reference {
                while s.step < *step {
                    s = stepper.step(&s)?;
                }
                if s.t.as_f64() >= t_start * (1.0 - 1e-12) {
                    err = err.max(h0_gap(&s.u, u_ref, s.phi.as_ref(), &cfg));
                }
            }
            Ok((eps.as_f64(), err))
        })
        .collect::<Result<Vec<_>>>()?;
    let (e_max, err_max) = rows[0];
    let c_sqrt = err_max / e_max.sqrt();
    let rows: Vec<SweepRow> =
        rows.into_iter().map(|(epsilon, err)| SweepRow { epsilon, err, bound: c_sqrt * epsilon.sqrt() }).collect();
    let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.err).collect();
    let fit = if rows.len() >= 2 { loglog_fit(&eps, &errs).ok() } else { None };
    Ok(SweepResult {
        within_bound: rows.iter().all(|r| r.err <= r.bound * (1.0 + 1e-9) + f64::MIN_POSITIVE),
        monotone: errs.windows(2).all(|w| w[1] <= w[0]),
        slope_ok: fit.is_some_and(|f| f.slope >= ROBUST_MIN_SLOPE),
        c_sqrt,
        fit,
        rows,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderRow {
    pub eps1: f64,
    pub eps2: f64,
    /// `sup_{t in [t*, 2t*]} |S_eps1(t) Y0 - S_eps2(t) Y0|` in the `eps1` norm.
    pub gap: f64,
    /// `gap / ((eps1 - eps2) / eps2)^{1/2}`; absent for equal values.
    pub scaled_gap: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderReport {
    pub t_star: f64,
    pub rows: Vec<HolderRow>,
    /// Log-log fit of the gap against `eps1 - eps2` over the distinct pairs.
    pub fit: Option<LinearFit>,
    pub exponent_ok: bool,
    /// Largest gap among pairs with `eps1 = eps2`.
    pub identical_gap: Option<f64>,
    pub identical_ok: bool,
    /// The gap does not shrink as the separation grows for a fixed `eps2`.
    pub monotone: bool,
}

/// Geometric nodes resolving both layers: first node from `eps2`, last from `eps1`.
pub fn shared_nodes<T: Scalar>(cfg: &ProblemConfig<T>, eps1: T, eps2: T) -> Vec<T> {
    let s_max = cfg.history.s_max_factor * eps1 / cfg.kernel.delta;
    geometric_nodes(eps2 * c(1e-3), s_max, cfg.history.n_s)
}

/// Runs each pair from `(U0, 0)` on a shared history grid and records the gap.
pub fn holder_sweep<T: Scalar>(
    cfg: &ProblemConfig<T>,
    pairs: &[(T, T)],
    u0: &StateField<T>,
    t_star: T,
) -> Result<HolderReport> {
    for &(e1, e2) in pairs {
        if !(e2 > T::zero() && e2 <= e1 && e1 <= T::one()) {
            return invalid(format!("pair ({e1}, {e2}) must satisfy 0 < eps2 <= eps1 <= 1"));
        }
    }
    if !(t_star > T::zero()) {
        return invalid("t* must be positive");
    }
    let cfg = cfg.with_t_final(t_star + t_star);
    let rows = pairs.par_iter().map(|&(e1, e2)| holder_pair(&cfg, e1, e2, u0, t_star)).collect::<Result<Vec<_>>>()?;
    let (sep, gaps): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.eps1 > r.eps2).map(|r| (r.eps1 - r.eps2, r.gap)).unzip();
    let fit = if sep.len() >= 2 { loglog_fit(&sep, &gaps).ok() } else { None };
    let identical_gap = rows.iter().filter(|r| r.eps1 == r.eps2).map(|r| r.gap).reduce(f64::max);
    let mut monotone = true;
    for a in &rows {
        for b in &rows {
            if a.eps2 == b.eps2 && a.eps1 > b.eps1 && a.gap < b.gap {
                monotone = false;
            }
        }
    }
    Ok(HolderReport {
        t_star: t_star.as_f64(),
        exponent_ok: fit.is_some_and(|f| f.slope >= HOLDER_EXPONENT_RANGE.0 && f.slope <= HOLDER_EXPONENT_RANGE.1),
        identical_ok: identical_gap.is_none_or(|g| g <= IDENTICAL_GAP_TOL),
        identical_gap,
        monotone,
        fit,
        rows,
    })
}

fn holder_pair<T: Scalar>(cfg: &ProblemConfig<T>, e1: T, e2: T, u0: &StateField<T>, t_star: T) -> Result<HolderRow> {
    let nodes = shared_nodes(cfg, e1, e2);
    let g1 = Arc::new(HistoryGrid::from_nodes(&cfg.kernel, e1, nodes.clone())?);
    let g2 = Arc::new(HistoryGrid::from_nodes(&cfg.kernel, e2, nodes)?);
    let (c1, c2) = (cfg.with_epsilon(e1), cfg.with_epsilon(e2));
    let (st1, st2) = (Stepper::with_grid(&c1, Some(g1.clone()))?, Stepper::with_grid(&c2, Some(g2.clone()))?);
    let mut a = lift(u0, Some(g1.clone()), &cfg.domain)?;
    let mut b = lift(u0, Some(g2), &cfg.domain)?;
    check_step_budget(&a, &c1)?;
    let n_total = cfg.total_steps();
    let (t0, t1) = (t_star.as_f64() * (1.0 - 1e-12), 2.0 * t_star.as_f64() * (1.0 + 1e-12));
    let mut gap = 0.0f64;
    while a.step < n_total {
        a = st1.step(&a)?;
        b = st2.step(&b)?;
        let t = a.t.as_f64();
        if t >= t0 && t <= t1 {
            // `sub` keeps the grid of `a`, so the difference is weighted for eps1.
            let diff = a.phi.as_ref().expect("history").sub(b.phi.as_ref().expect("history"));
            gap = gap.max(h0_gap(&a.u, &b.u, Some(&diff), &c1));
        }
    }
    let (f1, f2) = (e1.as_f64(), e2.as_f64());
    Ok(HolderRow {
        eps1: f1,
        eps2: f2,
        gap,
        scaled_gap: (f1 > f2).then(|| gap / ((f1 - f2) / f2).sqrt()),
    })
}
