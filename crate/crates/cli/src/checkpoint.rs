//! Checkpoints: one JSON header line, then little-endian binary64 arrays.

use std::fs;
use std::path::Path;

use cgmem::domain::StateField;
use cgmem::memory::HistoryField;
use cgmem::solver::{ProblemConfig, SystemState};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const FORMAT: &str = "cgmem-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayDecl {
    pub name: String,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub epsilon: f64,
    pub step: u64,
    pub n_nodes: usize,
    pub n_boundary: usize,
    pub n_s: usize,
    pub arrays: Vec<ArrayDecl>,
    /// Canonical configuration text, so a checkpoint can be resumed on its own.
    pub config: String,
}

fn fail<T>(path: &Path, message: impl Into<String>) -> CliResult<T> {
    Err(CliError::Checkpoint { path: path.display().to_string(), message: message.into() })
}

pub fn checkpoint_save(state: &SystemState<f64>, config: &RunConfig, path: &Path) -> CliResult<()> {
    let mut arrays: Vec<(&str, Vec<f64>)> =
        vec![("u_bulk", state.u.bulk.clone()), ("u_boundary", state.u.boundary.clone()), ("t", vec![state.t])];
    let n_s = state.phi.as_ref().map_or(0, |p| p.values.len());
    if let Some(phi) = &state.phi {
        arrays.push(("s_nodes", phi.grid.s_nodes.clone()));
        arrays.push(("weights", phi.grid.weights.clone()));
        let flat: Vec<f64> = phi.values.iter().flat_map(|v| v.bulk.iter().chain(&v.boundary).copied()).collect();
        arrays.push(("phi", flat));
    }
    let header = Header {
        format: FORMAT.into(),
        version: VERSION,
        config_hash: config.hash(),
        epsilon: config.model.epsilon,
        step: state.step,
        n_nodes: state.u.bulk.len(),
        n_boundary: state.u.boundary.len(),
        n_s,
        arrays: arrays.iter().map(|(n, a)| ArrayDecl { name: (*n).into(), len: a.len() }).collect(),
        config: config.canonical(),
    };
    let mut bytes = serde_json::to_vec(&header)?;
    bytes.push(b'\n');
    for (_, a) in &arrays {
        for x in a {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
    }
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Reads the header and the raw arrays in declared order.
pub fn read_checkpoint(path: &Path) -> CliResult<(Header, Vec<(String, Vec<f64>)>)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let Some(nl) = bytes.iter().position(|&b| b == b'\n') else { return fail(path, "missing header line") };
    let header: Header = match serde_json::from_slice(&bytes[..nl]) {
        Ok(h) => h,
        Err(e) => return fail(path, format!("bad header: {e}")),
    };
    if header.format != FORMAT || header.version != VERSION {
        return fail(path, format!("unsupported format {} v{}", header.format, header.version));
    }
    let mut body = &bytes[nl + 1..];
    let mut arrays = Vec::with_capacity(header.arrays.len());
    for decl in &header.arrays {
        let n = decl.len * 8;
        if body.len() < n {
            return fail(path, format!("array {} truncated", decl.name));
        }
        let values = body[..n].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        arrays.push((decl.name.clone(), values));
        body = &body[n..];
    }
    if !body.is_empty() {
        return fail(path, format!("{} trailing bytes", body.len()));
    }
    Ok((header, arrays))
}

/// Loads a state for `config`; refuses checkpoints written under another configuration.
pub fn checkpoint_load(path: &Path, config: &RunConfig, problem: &ProblemConfig<f64>) -> CliResult<SystemState<f64>> {
    let (header, arrays) = read_checkpoint(path)?;
    let hash = config.hash();
    if header.config_hash != hash {
        return fail(path, format!("written under config {} but the current config hashes to {hash}", header.config_hash));
    }
    let get = |name: &str| arrays.iter().find(|(n, _)| n == name).map(|(_, a)| a.as_slice());
    let d = &problem.domain;
    let (Some(bulk), Some(boundary), Some(t)) = (get("u_bulk"), get("u_boundary"), get("t")) else {
        return fail(path, "missing state arrays");
    };
    if bulk.len() != d.n_nodes() || boundary.len() != d.n_boundary() || t.len() != 1 {
        return fail(path, "state arrays do not match the mesh");
    }
    let u = StateField { bulk: bulk.to_vec(), boundary: boundary.to_vec() };
    let phi = if problem.has_memory() {
        let grid = problem.history_grid()?;
        let (Some(s), Some(w), Some(flat)) = (get("s_nodes"), get("weights"), get("phi")) else {
            return fail(path, "missing history arrays");
        };
        if s != grid.s_nodes.as_slice() || w != grid.weights.as_slice() {
            return fail(path, "history grid differs from the one the config builds");
        }
        let width = d.n_nodes() + d.n_boundary();
        if flat.len() != width * grid.len() {
            return fail(path, "history array has the wrong length");
        }
        let values = flat
            .chunks_exact(width)
            .map(|c| StateField { bulk: c[..d.n_nodes()].to_vec(), boundary: c[d.n_nodes()..].to_vec() })
            .collect();
        Some(HistoryField { grid, values })
    } else {
        None
    };
    Ok(SystemState { u, phi, t: t[0], step: header.step })
}

/// Configuration embedded in a checkpoint, checked against the recorded hash.
pub fn embedded_config(path: &Path) -> CliResult<RunConfig> {
    let (header, _) = read_checkpoint(path)?;
    let config = RunConfig::parse(&header.config, &format!("{} (embedded config)", path.display()))?;
    if config.hash() != header.config_hash {
        return fail(path, "embedded config does not match its recorded hash");
    }
    Ok(config)
}
