//! TOML run configuration.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use cgmem::domain::{build_domain, DomainKind, StateField};
use cgmem::experiments::smallness_for;
use cgmem::memory::{validate_kernel, HistoryField, KernelReport, KernelSpec};
use cgmem::physics::{make_nonlinearity, SmallnessReport};
use cgmem::solver::{HistoryParams, ProblemConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Trajectory,
    EnergyDecay,
    PhiDecay,
    Robustness,
    Holder,
    Contraction,
    CompactSplit,
    Gronwall,
    Transitivity,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Trajectory => "trajectory",
            Self::EnergyDecay => "energy_decay",
            Self::PhiDecay => "phi_decay",
            Self::Robustness => "robustness",
            Self::Holder => "holder",
            Self::Contraction => "contraction",
            Self::CompactSplit => "compact_split",
            Self::Gronwall => "gronwall",
            Self::Transitivity => "transitivity",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub model: ModelSection,
    pub kernel: KernelSection,
    pub nonlinearity: NonlinearitySection,
    pub domain: DomainSection,
    pub history: HistorySection,
    pub time: TimeSection,
    pub initial: InitialSection,
    pub sweep: SweepSection,
    pub suite: SuiteSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Trajectory,
            seed: 0,
            model: ModelSection::default(),
            kernel: KernelSection::default(),
            nonlinearity: NonlinearitySection::default(),
            domain: DomainSection::default(),
            history: HistorySection::default(),
            time: TimeSection::default(),
            initial: InitialSection::default(),
            sweep: SweepSection::default(),
            suite: SuiteSection::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { omega: 0.5, alpha: 1.0, beta: 0.5, epsilon: 0.1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamilyName {
    Exponential,
    Tabulated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    pub family: KernelFamilyName,
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self { family: KernelFamilyName::Exponential, delta: 1.0, rate: Some(1.0), s: None, mu: None }
    }
}

/// Cubic coefficients in ascending order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonlinearitySection {
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

impl Default for NonlinearitySection {
    fn default() -> Self {
        Self { f: vec![0.0, -1.0, 0.0, 1.0], g: vec![0.0, -1.0, 0.0, 1.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainSection {
    pub kind: DomainKind,
    pub n: usize,
}

impl Default for DomainSection {
    fn default() -> Self {
        Self { kind: DomainKind::Interval, n: 129 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HistorySection {
    pub n_s: usize,
    pub s_max_factor: f64,
}

impl Default for HistorySection {
    fn default() -> Self {
        Self { n_s: 128, s_max_factor: 20.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub dt: f64,
    pub t_final: f64,
    pub record_stride: usize,
    /// Steps between checkpoints of a trajectory run; 0 disables them.
    pub checkpoint_every: u64,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self { dt: 0.0025, t_final: 2.0, record_stride: 4, checkpoint_every: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Constant,
    Cosine,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub shape: Shape,
    pub offset: f64,
    pub amplitude: f64,
    pub mode: u32,
    /// Rescales the field to this product Lebesgue norm.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Initial history `A s U0`.
    pub phi_amplitude: f64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self { shape: Shape::Cosine, offset: 0.5, amplitude: 0.3, mode: 1, radius: None, phi_amplitude: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub eps: Vec<f64>,
    pub pairs: Vec<[f64; 2]>,
    pub t_star: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            eps: vec![0.2, 0.1, 0.05, 0.025],
            pairs: vec![[0.2, 0.1], [0.175, 0.1], [0.15, 0.1], [0.125, 0.1], [0.1, 0.1]],
            t_star: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteSection {
    pub instances: usize,
    pub n_t: usize,
}

impl Default for SuiteSection {
    fn default() -> Self {
        Self { instances: 200, n_t: 1000 }
    }
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Parse { path: origin.to_string(), message: e.to_string() })
    }

    /// Canonical text: the fully defaulted configuration re-serialized.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical text, lowercase hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn kernel_spec(&self) -> CliResult<KernelSpec<f64>> {
        let k = &self.kernel;
        let spec = match k.family {
            KernelFamilyName::Exponential => {
                if k.s.is_some() || k.mu.is_some() {
                    return Err(CliError::Config("kernel.s and kernel.mu apply to the tabulated family only".into()));
                }
                let rate = k.rate.ok_or_else(|| CliError::Config("exponential kernel needs kernel.rate".into()))?;
                KernelSpec::exponential(rate, self.model.omega, k.delta)?
            }
            KernelFamilyName::Tabulated => {
                if k.rate.is_some() {
                    return Err(CliError::Config("kernel.rate applies to the exponential family only".into()));
                }
                let (Some(s), Some(mu)) = (k.s.clone(), k.mu.clone()) else {
                    return Err(CliError::Config("tabulated kernel needs kernel.s and kernel.mu".into()));
                };
                KernelSpec::tabulated(s, mu, self.model.omega, k.delta)?
            }
        };
        Ok(spec)
    }

    /// Builds the model configuration; the kernel must satisfy every assumption.
    pub fn problem(&self) -> CliResult<ProblemConfig<f64>> {
        let kernel = self.kernel_spec()?;
        let report = validate_kernel(&kernel);
        if let Some(f) = report.first_failure() {
            return Err(cgmem::Error::Assumption {
                name: f.name.to_string(),
                detail: format!("worst margin {:.3e}", f.worst_margin),
            }
            .into());
        }
        let m = &self.model;
        let cfg = ProblemConfig {
            omega: m.omega,
            alpha: m.alpha,
            beta: m.beta,
            epsilon: m.epsilon,
            kernel,
            nonlinearity: make_nonlinearity(&self.nonlinearity.f, &self.nonlinearity.g)?,
            domain: Arc::new(build_domain(self.domain.kind, self.domain.n)?),
            history: HistoryParams { n_s: self.history.n_s, s_max_factor: self.history.s_max_factor },
            dt: self.time.dt,
            t_final: self.time.t_final,
            record_stride: self.time.record_stride,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Initial field from the `[initial]` section.
    pub fn initial_field(&self, cfg: &ProblemConfig<f64>) -> CliResult<StateField<f64>> {
        let init = &self.initial;
        let d = &cfg.domain;
        let square = d.kind() == DomainKind::Square;
        let profile = |k: f64, x: f64, y: f64| {
            let c = (k * PI * x).cos();
            if square {
                c * (k * PI * y).cos()
            } else {
                c
            }
        };
        let u = match init.shape {
            Shape::Constant => StateField::constant(d, init.offset),
            Shape::Cosine => {
                let k = f64::from(init.mode);
                StateField::from_fn(d, |x, y| init.offset + init.amplitude * profile(k, x, y))
            }
            Shape::Random => {
                let coeffs = random_modes(self.seed, 4);
                StateField::from_fn(d, |x, y| {
                    init.offset
                        + init.amplitude
                            * coeffs.iter().enumerate().map(|(j, a)| a * profile((j + 1) as f64, x, y)).sum::<f64>()
                })
            }
        };
        match init.radius {
            Some(r) if r < 0.0 => Err(CliError::Config(format!("initial.radius = {r} must be nonnegative"))),
            Some(r) if r == 0.0 => Ok(u.scaled(0.0)),
            Some(r) => Ok(cgmem::solver::scale_to_norm(&u, r, d)?),
            None => Ok(u),
        }
    }

    /// Second datum for the contraction pair: random modes around zero, seeded.
    pub fn partner_field(&self, cfg: &ProblemConfig<f64>) -> StateField<f64> {
        let coeffs = random_modes(self.seed.wrapping_add(1), 4);
        StateField::from_fn(&cfg.domain, |x, _| {
            self.initial.amplitude
                * coeffs.iter().enumerate().map(|(j, a)| a * ((j + 1) as f64 * PI * x).cos()).sum::<f64>()
        })
    }

    /// `A s U0` on the grid of `phi`.
    pub fn initial_history(&self, u0: &StateField<f64>, like: &HistoryField<f64>) -> HistoryField<f64> {
        let a = self.initial.phi_amplitude;
        HistoryField::from_fn(like.grid.clone(), |s| u0.scaled(a * s))
    }
}

fn random_modes(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|j| rng.gen_range(-1.0..1.0) / (j + 1) as f64).collect()
}

/// A parsed, validated configuration with its reports.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub problem: ProblemConfig<f64>,
    pub kernel_report: KernelReport,
    /// Absent when `alpha = beta = 0`.
    pub gate: Option<SmallnessReport>,
    pub hash: String,
}

impl LoadedConfig {
    pub fn from_config(config: RunConfig) -> CliResult<Self> {
        let problem = config.problem()?;
        let kernel_report = validate_kernel(&problem.kernel);
        let gate = if problem.alpha > 0.0 || problem.beta > 0.0 { Some(smallness_for(&problem)?) } else { None };
        let hash = config.hash();
        Ok(Self { config, problem, kernel_report, gate, hash })
    }
}

pub fn load_config(path: &Path) -> CliResult<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    LoadedConfig::from_config(RunConfig::parse(&text, &path.display().to_string())?)
}
