pub mod domain;
pub mod error;
pub mod linalg;
pub mod memory;
pub mod physics;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub mod experiments;
pub mod solver;

pub type Domain64 = domain::DiscreteDomain<f64>;
pub type Domain32 = domain::DiscreteDomain<f32>;
pub type Field64 = domain::StateField<f64>;
pub type Field32 = domain::StateField<f32>;
pub type History64 = memory::HistoryField<f64>;
pub type History32 = memory::HistoryField<f32>;
pub type Config64 = solver::ProblemConfig<f64>;
pub type Config32 = solver::ProblemConfig<f32>;
pub type State64 = solver::SystemState<f64>;
pub type State32 = solver::SystemState<f32>;
