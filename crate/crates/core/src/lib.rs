//! Batch functional-safety analysis over a declarative safety model.
//!
//! Load a model with [`model::load_model`], run analyses from the
//! [`analysis::Registry`] and render an [`report::AnalysisReport`].

pub mod analysis;
pub mod case;
pub mod cli;
pub mod error;
pub mod finding;
pub mod hara;
pub mod hw;
pub mod item;
pub mod model;
pub mod primitives;
pub mod report;
pub mod sotif;
pub mod trace;

pub use analysis::{Analysis, Registry, RunContext, RunOptions, Section};
pub use error::{AnalysisError, LoadError, ValueError};
pub use finding::{Finding, Severity};
pub use model::{load_model, load_model_with, LoadOptions, SafetyModel};
pub use primitives::{Asil, FailureRate, UnitInterval};
pub use report::{AnalysisReport, OverallVerdict};

/// Bundled example model, also used by the golden report tests.
pub const BUNDLED_EXAMPLE: &str = include_str!("../data/bundled_example.model.json");
