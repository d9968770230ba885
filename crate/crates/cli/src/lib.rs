//! Configuration, orchestration and checkpointing for the `cgmem` binary.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod run;

pub use checkpoint::{checkpoint_load, checkpoint_save, embedded_config, read_checkpoint};
pub use config::{load_config, Experiment, LoadedConfig, RunConfig};
pub use error::{CliError, CliResult};
pub use run::{resume, run, write_plot_template, Assertion, Outcome, RunManifest, Summary};
