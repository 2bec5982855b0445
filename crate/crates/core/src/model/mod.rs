//! Datasets, tag types, predicates and expressions.

pub mod dataset;
pub mod expr;
pub mod schema;
pub mod state;

pub use dataset::{filter_precise, Condition, Object};
pub use expr::{parse_expression, Expression, Node, Op, Predicate};
pub use schema::{EnrichmentFunctionSpec, QueryConfig, Schema, ScoreModelKind, TagType};
pub use state::StateVector;
