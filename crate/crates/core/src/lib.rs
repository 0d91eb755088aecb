//! Knowledge-graph enrichment with LLM prompts and a structure-based
//! completion evaluator.

pub mod bundle;
pub mod enrich;
pub mod eval;
pub mod kg;
pub mod llm;
pub mod prompt;
pub mod synthetic;
