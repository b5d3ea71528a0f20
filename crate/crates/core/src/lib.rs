pub mod analytics;
pub mod cli;
pub mod demo;
pub mod error;
pub mod evaluation;
pub mod formulation;
pub mod model;
pub mod scenario;
pub mod solve;
pub mod solver;

pub use error::{Error, Result};
pub use solve::{solve_instance, SolveOutcome, SolveReport, SolveStatus};
