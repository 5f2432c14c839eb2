//! Scenario augmentation toolkit: LLM-driven edits of driving scenarios,
//! BEV rendering, evaluation metrics, a pairwise-preference arena and a
//! closed-loop planner benchmark.

pub mod arena;
pub mod cli;
pub mod corpus;
pub mod eval;
pub mod geometry;
pub mod llm;
pub mod orchestrator;
pub mod prompt;
pub mod render;
pub mod scenario;
pub mod sim;
