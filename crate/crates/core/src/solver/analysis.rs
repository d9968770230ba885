use serde::Serialize;

use crate::domain::{raw_inner_x2, raw_norm_v1_sq, StateField};
use crate::error::{invalid, Error, Result};
use crate::experiments::fit::log_slope;
use crate::memory::{raw_k2_norm_sq, raw_memory_norm_sq, Level};
use crate::physics::{decomposition_shift, estimate_embedding_constant, eval_f0};
use crate::scalar::Scalar;

use super::config::ProblemConfig;
use super::state::{h0_norm_sq, SystemState};
use super::stepper::Stepper;

/// Relative step-to-step growth tolerated before the distance counts as increasing.
pub const MONOTONE_TOL: f64 = 1e-10;
/// Largest relative mismatch between `Z + K` and the direct solution.
pub const SPLIT_CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct ContractionReport {
    pub times: Vec<f64>,
    /// `|Y1 - Y2|_{H0}` at every step.
    pub distance: Vec<f64>,
    /// Decay rate of the distance from a log-linear fit.
    pub fitted_rate: Option<f64>,
    /// `min(2 omega / C, delta) / 2`; absent when `alpha = beta = 0`.
    pub predicted_rate: Option<f64>,
    pub max_step_ratio: f64,
    pub monotone: bool,
}

/// Runs two trajectories of the linear problem (`F = 0`) and tracks their distance.
pub fn evolve_contraction_pair<T: Scalar>(
    a: &SystemState<T>,
    b: &SystemState<T>,
    cfg: &ProblemConfig<T>,
) -> Result<ContractionReport> {
    if !cfg.has_memory() {
        return invalid("the contraction pair runs the problem with memory");
    }
    let grid = a.phi.as_ref().map(|p| p.grid.clone());
    let stepper = match grid {
        Some(g) => Stepper::with_grid(cfg, Some(g))?,
        None => Stepper::new(cfg)?,
    };
    stepper.check_state(a)?;
    stepper.check_state(b)?;
    let zero = vec![T::zero(); cfg.domain.n_nodes()];
    let n_total = cfg.total_steps();
    let (mut x, mut y) = (a.clone(), b.clone());
    let mut times = vec![x.t.as_f64()];
    let mut distance = vec![h0_norm_sq(&x.sub(&y), cfg).as_f64().sqrt()];
    while x.step < n_total {
        x = stepper.advance(&x, &zero)?;
        y = stepper.advance(&y, &zero)?;
        times.push(x.t.as_f64());
        distance.push(h0_norm_sq(&x.sub(&y), cfg).as_f64().sqrt());
    }
    let max_step_ratio = distance
        .windows(2)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max);
    let fitted_rate = log_slope(&times, &distance).ok().map(|s| -s);
    let predicted_rate = if cfg.alpha > T::zero() || cfg.beta > T::zero() {
        let c_embed = estimate_embedding_constant(&cfg.domain, cfg.alpha, cfg.beta)?.as_f64();
        Some((2.0 * cfg.omega.as_f64() / c_embed).min(cfg.kernel.delta.as_f64()) / 2.0)
    } else {
        None
    };
    Ok(ContractionReport {
        times,
        distance,
        fitted_rate,
        predicted_rate,
        max_step_ratio,
        monotone: max_step_ratio <= 1.0 + MONOTONE_TOL,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CompactSplitReport {
    pub times: Vec<f64>,
    /// `|Z|_{H0}` for the decaying part.
    pub z_norm: Vec<f64>,
    /// `|K|^2_{V1} + |K|^2_{K2}` for the compact part.
    pub k_norm_sq: Vec<f64>,
    pub z_rate: Option<f64>,
    pub k_bound: f64,
    pub max_consistency: f64,
    pub shift: f64,
}

/// Evolves `Y = Z + K` with `Z(0) = Y(0)`, `K(0) = 0` next to the direct solution.
///
/// `Z` carries `F_0(U) - F_0(W)` and `K` carries `F_0(W) - M_F U`, where
/// `F_0 = F + M_F` is monotone; the linear parts coincide with the direct run.
pub fn evolve_compact_split<T: Scalar>(initial: &SystemState<T>, cfg: &ProblemConfig<T>) -> Result<CompactSplitReport> {
    if !cfg.has_memory() {
        return invalid("the split runs the problem with memory");
    }
    let stepper = match initial.phi.as_ref() {
        Some(p) => Stepper::with_grid(cfg, Some(p.grid.clone()))?,
        None => Stepper::new(cfg)?,
    };
    stepper.check_state(initial)?;
    super::evolve::check_step_budget(initial, cfg)?;
    let d = &*cfg.domain;
    let (alpha, beta) = (cfg.alpha, cfg.beta);
    let m = decomposition_shift(&cfg.nonlinearity, cfg.omega, beta);
    let f0 = |u: &StateField<T>| eval_f0(u, &cfg.nonlinearity, cfg.omega, beta, m);
    let n_total = cfg.total_steps();
    let stride = cfg.record_stride as u64;

    let mut full = initial.clone();
    let mut z = initial.clone();
    let mut k = SystemState {
        u: initial.u.scaled(T::zero()),
        phi: initial.phi.as_ref().map(|p| p.sub(p)),
        ..initial.clone()
    };
    let mut report = CompactSplitReport {
        times: vec![],
        z_norm: vec![],
        k_norm_sq: vec![],
        z_rate: None,
        k_bound: 0.0,
        max_consistency: 0.0,
        shift: m.as_f64(),
    };
    let sample = |full: &SystemState<T>, z: &SystemState<T>, k: &SystemState<T>, r: &mut CompactSplitReport| {
        let gap = h0_norm_sq(&z.add(k).sub(full), cfg).as_f64().sqrt();
        let scale = h0_norm_sq(full, cfg).as_f64().sqrt().max(f64::MIN_POSITIVE);
        r.max_consistency = r.max_consistency.max(gap / scale);
        r.times.push(full.t.as_f64());
        let zx = raw_inner_x2(&z.u, &z.u, d)
            + z.phi.as_ref().map_or(T::zero(), |p| raw_memory_norm_sq(p, Level::L1, d, alpha, beta));
        r.z_norm.push(zx.as_f64().sqrt());
        let kv = raw_norm_v1_sq(&k.u, d, alpha, beta)
            + k.phi.as_ref().map_or(T::zero(), |p| raw_k2_norm_sq(p, d, alpha, beta));
        r.k_norm_sq.push(kv.as_f64());
    };
    sample(&full, &z, &k, &mut report);
    while full.step < n_total {
        let fu = f0(&full.u);
        let fw = f0(&k.u);
        let z_force = fu.sub(&fw);
        let mut k_force = fw;
        k_force.axpy(-m, &full.u);
        let direct = stepper.nonlinearity(&full.u).nodal_load(d);
        let next_full = stepper.advance(&full, &direct)?;
        z = stepper.advance(&z, &z_force.nodal_load(d))?;
        k = stepper.advance(&k, &k_force.nodal_load(d))?;
        full = next_full;
        if full.step % stride == 0 || full.step == n_total {
            sample(&full, &z, &k, &mut report);
        }
    }
    report.z_rate = log_slope(&report.times, &report.z_norm).ok().map(|s| -s);
    report.k_bound = report.k_norm_sq.iter().copied().fold(0.0, f64::max);
    if !(report.max_consistency <= SPLIT_CONSISTENCY_TOL) {
        return Err(Error::Consistency(format!(
            "Z + K differs from the direct solution by {:.3e} (relative), limit {SPLIT_CONSISTENCY_TOL:.0e}",
            report.max_consistency
        )));
    }
    Ok(report)
}
