//! Experiment dispatch and output files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use cgmem::experiments::{
    energy_decay_experiment, fit_decay, gronwall_suite, holder_sweep, phi_decay_experiment, robustness_sweep,
    transitivity_combine, transitivity_suite, EnergyDecayReport, ENERGY_TOL_FRACTION, HOLDER_EXPONENT_RANGE,
    IDENTICAL_GAP_TOL, ROBUST_MIN_SLOPE,
};
use cgmem::solver::{
    evolve_compact_split, evolve_contraction_pair, evolve_with, lift, Sample, Stepper, SystemState, SAMPLE_COLUMNS,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::checkpoint::{checkpoint_load, checkpoint_save, embedded_config};
use crate::config::{Experiment, LoadedConfig};
use crate::error::{CliError, CliResult};

/// Fitted contraction rate must reach this fraction of the predicted one.
pub const CONTRACTION_RATE_FRACTION: f64 = 0.8;
/// The compact part may not grow by more than this factor from the first half of the run to the second.
pub const COMPACT_GROWTH_FACTOR: f64 = 1.05;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Assertion {
    Assertion { name: name.into(), passed, detail }
}

/// Deterministic part of the manifest, repeated inside `summary.json`.
#[derive(Clone, Debug, Serialize)]
pub struct ManifestCore {
    pub config_hash: String,
    pub tool_version: String,
    pub experiment: String,
    pub seed: u64,
    pub outputs: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    #[serde(flatten)]
    pub core: ManifestCore,
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
    /// Failed assertion names, for scripts.
    pub failures: Vec<String>,
    pub results: Value,
    pub manifest: ManifestCore,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub summary: Summary,
    pub out_dir: PathBuf,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.summary.passed {
            0
        } else {
            1
        }
    }
}

struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), files: vec![] })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))
    }

    fn trajectory(&mut self, samples: &[Sample<f64>]) -> CliResult<()> {
        self.csv("trajectory.csv", &SAMPLE_COLUMNS, samples.iter().map(|s| s.values().iter().map(|v| v.to_string()).collect()))
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}

fn num(x: f64) -> String {
    x.to_string()
}

/// Runs the configured experiment and writes its outputs into `out`.
pub fn run(loaded: &LoadedConfig, out: &Path) -> CliResult<Outcome> {
    run_with_start(loaded, out, None)
}

/// Continues a trajectory run from a checkpoint, using the configuration it embeds.
pub fn resume(checkpoint: &Path, out: &Path) -> CliResult<Outcome> {
    let config = embedded_config(checkpoint)?;
    if config.experiment != Experiment::Trajectory {
        return Err(CliError::Config(format!("only trajectory runs resume, checkpoint holds {}", config.experiment.name())));
    }
    let loaded = LoadedConfig::from_config(config)?;
    let state = checkpoint_load(checkpoint, &loaded.config, &loaded.problem)?;
    run_with_start(&loaded, out, Some(state))
}

fn run_with_start(loaded: &LoadedConfig, out: &Path, start: Option<SystemState<f64>>) -> CliResult<Outcome> {
    let clock = Instant::now();
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let mut output = Output::new(out)?;
    let (assertions, results) = match loaded.config.experiment {
        Experiment::Trajectory => trajectory(loaded, &mut output, start)?,
        Experiment::EnergyDecay => energy(loaded, &mut output)?,
        Experiment::PhiDecay => phi(loaded, &mut output)?,
        Experiment::Robustness => robustness(loaded, &mut output)?,
        Experiment::Holder => holder(loaded, &mut output)?,
        Experiment::Contraction => contraction(loaded, &mut output)?,
        Experiment::CompactSplit => split(loaded, &mut output)?,
        Experiment::Gronwall => gronwall(loaded)?,
        Experiment::Transitivity => transitivity(loaded)?,
    };
    let mut outputs = output.files.clone();
    outputs.extend(["summary.json".to_string(), "manifest.json".to_string()]);
    let core = ManifestCore {
        config_hash: loaded.hash.clone(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        experiment: loaded.config.experiment.name().into(),
        seed: loaded.config.seed,
        outputs,
    };
    let summary = Summary {
        experiment: core.experiment.clone(),
        passed: assertions.iter().all(|a| a.passed),
        failures: assertions.iter().filter(|a| !a.passed).map(|a| a.name.clone()).collect(),
        assertions,
        results,
        manifest: core.clone(),
    };
    output.json("summary.json", &summary)?;
    let manifest = RunManifest { core, started_unix_seconds: started, wall_clock_seconds: clock.elapsed().as_secs_f64() };
    output.json("manifest.json", &manifest)?;
    Ok(Outcome { summary, out_dir: out.to_path_buf() })
}

type Report = (Vec<Assertion>, Value);

fn initial_state(loaded: &LoadedConfig, stepper: &Stepper<f64>) -> CliResult<SystemState<f64>> {
    let cfg = &loaded.problem;
    let u0 = loaded.config.initial_field(cfg)?;
    let mut state = lift(&u0, stepper.grid().cloned(), &cfg.domain)?;
    if let Some(phi) = &state.phi {
        state.phi = Some(loaded.config.initial_history(&u0, phi));
    }
    Ok(state)
}

fn trajectory(loaded: &LoadedConfig, out: &mut Output, start: Option<SystemState<f64>>) -> CliResult<Report> {
    let cfg = &loaded.problem;
    let every = loaded.config.time.checkpoint_every;
    if every > 0 && every % cfg.record_stride as u64 != 0 {
        return Err(CliError::Config(format!(
            "time.checkpoint_every = {every} must be a multiple of time.record_stride = {}",
            cfg.record_stride
        )));
    }
    let stepper = Stepper::new(cfg)?;
    let resumed_from = start.as_ref().map(|s| s.step);
    let state = match start {
        Some(s) => s,
        None => initial_state(loaded, &stepper)?,
    };
    let ckpt_dir = out.dir.join("checkpoints");
    let mut written = vec![];
    let mut save_error = None;
    let traj = evolve_with(&stepper, &state, |s| {
        if every > 0 && s.step % every == 0 && Some(s.step) != resumed_from {
            let name = format!("step_{:010}.ckpt", s.step);
            if let Err(e) = checkpoint_save(s, &loaded.config, &ckpt_dir.join(&name)) {
                save_error = Some(e);
                return Err(cgmem::Error::Consistency("checkpoint write failed".into()));
            }
            written.push(format!("checkpoints/{name}"));
        }
        Ok(())
    });
    let traj = match traj {
        Ok(t) => t,
        Err(e) => return Err(save_error.unwrap_or(e.into())),
    };
    out.files.extend(written);
    out.trajectory(&traj.record.samples)?;
    let final_path = out.path("final.ckpt");
    checkpoint_save(&traj.final_state, &loaded.config, &final_path)?;
    let last = traj.record.samples.last().expect("nonempty record");
    let finite = traj.record.samples.iter().all(|s| s.values().iter().all(|v| v.is_finite()));
    let times = traj.record.times();
    let energy = traj.record.column(|s| s.energy_h0);
    let fit = fit_decay(&times, &energy).ok();
    Ok((
        vec![check("finite", finite, "all recorded norms finite".into())],
        json!({
            "resumed_from_step": resumed_from,
            "final_step": traj.final_state.step,
            "final": last,
            "energy_fit": fit,
            "gate": loaded.gate,
        }),
    ))
}

fn energy(loaded: &LoadedConfig, out: &mut Output) -> CliResult<Report> {
    let cfg = &loaded.problem;
    let shape = loaded.config.initial_field(cfg)?;
    let radius = loaded.config.initial.radius.unwrap_or(10.0);
    let report: EnergyDecayReport = match energy_decay_experiment(cfg, &shape, radius) {
        Ok(r) => r,
        Err(cgmem::Error::GateFailed(msg)) => {
            return Ok((vec![check("smallness_gate", false, msg)], json!({ "gate": loaded.gate, "refused": true })));
        }
        Err(e) => return Err(e.into()),
    };
    out.csv(
        "trajectory.csv",
        &["t", "energy_h0", "bound"],
        report.times.iter().zip(&report.energy).zip(&report.bound).map(|((t, e), b)| vec![num(*t), num(*e), num(*b)]),
    )?;
    let absorbed = match (report.absorbing_time, report.radius > 1.0) {
        (Some(t), true) => check("absorbing_time", t <= report.t0_formula, format!("{t} <= t0 = {}", report.t0_formula)),
        (Some(t), false) => check("absorbing_time", true, format!("{t}; no formula bound for R <= 1")),
        (None, _) => check("absorbing_time", false, "the run never entered the absorbing ball".into()),
    };
    Ok((
        vec![
            check("smallness_gate", true, format!("C_F = {} < {}", report.gate.c_f, report.gate.threshold)),
            check(
                "energy_bound",
                report.holds,
                format!("min over samples of E(0)e^(-m0 t) + P0 + {ENERGY_TOL_FRACTION} E(0) - E(t) = {:.6e}", report.worst_margin),
            ),
            absorbed,
        ],
        json!({
            "m0": report.gate.m0,
            "p0": report.gate.p0,
            "fitted_rate": report.fit.map(|f| f.rate),
            "fit": report.fit,
            "t0_formula": report.t0_formula,
            "absorbing_time": report.absorbing_time,
            "e0": report.e0,
            "gate": report.gate,
        }),
    ))
}

fn phi(loaded: &LoadedConfig, out: &mut Output) -> CliResult<Report> {
    let cfg = &loaded.problem;
    let u0 = loaded.config.initial_field(cfg)?;
    let r = phi_decay_experiment(cfg, &loaded.config.sweep.eps, &u0, loaded.config.initial.phi_amplitude)?;
    out.csv(
        "phi_decay.csv",
        &["epsilon", "c_emp", "early_rate", "early_reference", "phi0_norm_sq"],
        r.rows.iter().map(|x| vec![num(x.epsilon), num(x.c_emp), num(x.early_rate), num(x.early_reference), num(x.phi0_norm_sq)]),
    )?;
    Ok((
        vec![
            check("c_emp_stable", r.stable, format!("max/min = {}", r.c_ratio)),
            check("early_rate", r.early_ok, "early rate >= 0.8 delta / (4 eps) for every eps".into()),
        ],
        serde_json::to_value(&r)?,
    ))
}

fn robustness(loaded: &LoadedConfig, out: &mut Output) -> CliResult<Report> {
    let cfg = &loaded.problem;
    let u0 = loaded.config.initial_field(cfg)?;
    let r = robustness_sweep(cfg, &loaded.config.sweep.eps, &u0)?;
    out.csv("sweep.csv", &["epsilon", "err", "bound"], r.rows.iter().map(|x| vec![num(x.epsilon), num(x.err), num(x.bound)]))?;
    let slope = r.fit.map_or(f64::NAN, |f| f.slope);
    Ok((
        vec![
            check("sqrt_eps_bound", r.within_bound, format!("err <= C sqrt(eps) with C = {}", r.c_sqrt)),
            check("slope", r.slope_ok, format!("log-log slope {slope} >= {ROBUST_MIN_SLOPE}")),
            check("monotone", r.monotone, "err non-increasing as eps decreases".into()),
        ],
        json!({ "slope": slope, "intercept": r.fit.map(|f| f.intercept), "sweep": r }),
    ))
}

fn holder(loaded: &LoadedConfig, out: &mut Output) -> CliResult<Report> {
    let cfg = &loaded.problem;
    let u0 = loaded.config.initial_field(cfg)?;
    let pairs: Vec<(f64, f64)> = loaded.config.sweep.pairs.iter().map(|p| (p[0], p[1])).collect();
    let r = holder_sweep(cfg, &pairs, &u0, loaded.config.sweep.t_star)?;
    out.csv(
        "holder.csv",
        &["eps1", "eps2", "gap", "scaled_gap"],
        r.rows.iter().map(|x| vec![num(x.eps1), num(x.eps2), num(x.gap), x.scaled_gap.map(num).unwrap_or_default()]),
    )?;
    let exponent = r.fit.map_or(f64::NAN, |f| f.slope);
    let (lo, hi) = HOLDER_EXPONENT_RANGE;
    Ok((
        vec![
            check("exponent", r.exponent_ok, format!("fitted exponent {exponent} in [{lo}, {hi}]")),
            check("identical_gap", r.identical_ok, format!("{:?} <= {IDENTICAL_GAP_TOL}", r.identical_gap)),
            check("monotone", r.monotone, "gap grows with the separation".into()),
        ],
        json!({ "exponent": exponent, "holder": r }),
    ))
}

fn contraction(loaded: &LoadedConfig, out: &mut Output) -> CliResult<Report> {
    let cfg = &loaded.problem;
    let stepper = Stepper::new(cfg)?;
    let a = initial_state(loaded, &stepper)?;
    let b = lift(&loaded.config.partner_field(cfg), stepper.grid().cloned(), &cfg.domain)?;
    let r = evolve_contraction_pair(&a, &b, cfg)?;
    out.csv("contraction.csv", &["t", "distance"], r.times.iter().zip(&r.distance).map(|(t, d)| vec![num(*t), num(*d)]))?;
    let rate_ok = match (r.fitted_rate, r.predicted_rate) {
        (Some(f), Some(p)) => f >= CONTRACTION_RATE_FRACTION * p,
        _ => false,
    };
    Ok((
        vec![
            check("monotone", r.monotone, format!("largest step ratio {}", r.max_step_ratio)),
            check(
                "rate",
                rate_ok,
                format!("fitted {:?} >= {CONTRACTION_RATE_FRACTION} x predicted {:?}", r.fitted_rate, r.predicted_rate),
            ),
        ],
        json!({
            "fitted_rate": r.fitted_rate,
            "predicted_rate": r.predicted_rate,
            "max_step_ratio": r.max_step_ratio,
        }),
    ))
}

fn split(loaded: &LoadedConfig, out: &mut Output) -> CliResult<Report> {
    let cfg = &loaded.problem;
    let stepper = Stepper::new(cfg)?;
    let s = initial_state(loaded, &stepper)?;
    let r = match evolve_compact_split(&s, cfg) {
        Ok(r) => r,
        Err(cgmem::Error::Consistency(msg)) => return Ok((vec![check("consistency", false, msg)], Value::Null)),
        Err(e) => return Err(e.into()),
    };
    out.csv(
        "split.csv",
        &["t", "z_norm", "k_norm_sq"],
        r.times.iter().zip(&r.z_norm).zip(&r.k_norm_sq).map(|((t, z), k)| vec![num(*t), num(*z), num(*k)]),
    )?;
    let half = r.times.len() / 2;
    let first = r.k_norm_sq[..=half].iter().copied().fold(0.0, f64::max);
    let second = r.k_norm_sq[half..].iter().copied().fold(0.0, f64::max);
    let bounded = r.k_bound.is_finite() && second <= COMPACT_GROWTH_FACTOR * first;
    Ok((
        vec![
            check("consistency", true, format!("relative mismatch {:.3e}", r.max_consistency)),
            check("z_decay", r.z_rate.is_some_and(|z| z > 0.0), format!("fitted rate {:?}", r.z_rate)),
            check("k_bounded", bounded, format!("sup first half {first}, second half {second}")),
        ],
        json!({
            "z_rate": r.z_rate,
            "k_bound": r.k_bound,
            "max_consistency": r.max_consistency,
            "shift": r.shift,
        }),
    ))
}

fn gronwall(loaded: &LoadedConfig) -> CliResult<Report> {
    let s = gronwall_suite(loaded.config.suite.instances, loaded.config.seed)?;
    Ok((
        vec![
            check("no_violations", s.violations == 0, format!("{} of {} instances", s.violations, s.instances)),
            check("admissible", s.inconclusive == 0, format!("{} inconclusive", s.inconclusive)),
        ],
        serde_json::to_value(&s)?,
    ))
}

fn transitivity(loaded: &LoadedConfig) -> CliResult<Report> {
    let unit = transitivity_combine(1.0, 0.0, 1.0, 1.0, 1.0, 1.0)?;
    let checks = transitivity_suite(loaded.config.suite.instances, loaded.config.suite.n_t, loaded.config.seed)?;
    let violations: usize = checks.iter().map(|c| c.violations).sum();
    let void: usize = checks.iter().map(|c| c.hypothesis_failures).sum();
    let worst = checks.iter().map(|c| c.worst_ratio).fold(0.0, f64::max);
    Ok((
        vec![
            check("unit_constants", unit == (2.0, 0.5), format!("{unit:?}")),
            check("no_violations", violations == 0, format!("{violations} samples, worst ratio {worst}")),
            check("hypotheses", void == 0, format!("{void} samples failed a hypothesis")),
        ],
        json!({ "unit": unit, "worst_ratio": worst, "instances": checks.len() }),
    ))
}

pub const PLOT_TEMPLATE: &str = r#"#!/usr/bin/env python3
"""Plot a cgmem output directory: python3 plot.py <out_dir>"""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt


def read(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return {k: [float(r[k]) if r[k] else float("nan") for r in rows] for k in rows[0]}


out = Path(sys.argv[1] if len(sys.argv) > 1 else ".")
if (out / "trajectory.csv").exists():
    data = read(out / "trajectory.csv")
    for key in data:
        if key != "t":
            plt.semilogy(data["t"], data[key], label=key)
    plt.xlabel("t")
    plt.legend()
    plt.savefig(out / "trajectory.png", dpi=150)
    plt.clf()
if (out / "sweep.csv").exists():
    data = read(out / "sweep.csv")
    plt.loglog(data["epsilon"], data["err"], "o-", label="err")
    plt.loglog(data["epsilon"], data["bound"], "--", label="C sqrt(eps)")
    plt.xlabel("eps")
    plt.legend()
    plt.savefig(out / "sweep.png", dpi=150)
"#;

pub fn write_plot_template(path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, PLOT_TEMPLATE).map_err(|e| CliError::io(path, e))
}
