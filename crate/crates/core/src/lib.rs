//! Progressive evaluation of selection queries whose predicates depend on
//! tags produced by costly enrichment functions.

pub mod answer;
pub mod engine;
pub mod error;
pub mod harness;
pub mod model;
pub mod planner;
pub mod probability;
pub mod scalar;
pub mod sim;
pub mod storage;
pub mod table;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Alpha = answer::Alpha<f64>;
pub type AnswerSelection = answer::AnswerSelection<f64, usize>;
pub type Engine = engine::Engine<f64>;
pub type EpochReport = engine::EpochReport<f64>;
pub type ObjectTable = table::ObjectTable<f64>;
pub type PlanQueue = planner::PlanQueue<f64>;
pub type Planner = planner::Planner<f64>;
pub type Session = engine::Session<f64>;
pub type Triple = planner::Triple<f64>;

/// Single-precision aliases.
pub mod f32 {
    pub type Engine = crate::engine::Engine<f32>;
    pub type Session = crate::engine::Session<f32>;
    pub type Planner = crate::planner::Planner<f32>;
}
