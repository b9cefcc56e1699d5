//! Query-driven robot perception: ontologies, an analysis structure,
//! a perception query language, an annotator registry, a pipeline planner
//! and an execution engine with a persistent belief state.

pub mod cas;
pub mod engine;
pub mod evidence;
pub mod geometry;
pub mod ontology;
pub mod palette;
pub mod planner;
pub mod query;
pub mod registry;
pub mod scenarios;
pub mod sexpr;
pub mod shipped;
