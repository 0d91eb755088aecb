//! LLM-driven enrichment of entity descriptions, relation names and graph
//! structure.

pub mod entity;
pub mod relation;
pub mod structure;

use serde::{Deserialize, Serialize};

use crate::kg::KgError;
use crate::llm::{cache_key, GenerationParams};
use crate::prompt::PromptError;

#[derive(Debug, thiserror::Error)]
pub enum EnrichError {
    #[error("token budget must be at least 1")]
    ZeroBudget,
    #[error("no relation modes requested")]
    NoModes,
    #[error("relation {0:?} already exists in the graph")]
    RelationCollision(String),
    #[error("no keywords recoverable from {0:?}")]
    NoKeywords(String),
    #[error("empty keyword set for {0:?}")]
    EmptyKeywordSet(String),
    #[error(transparent)]
    Graph(#[from] KgError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

/// A per-item failure that does not abort the run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemError {
    pub subject: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_hash: Option<String>,
    pub message: String,
}

/// Raw LLM output for one prompt, kept for audit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditItem {
    pub subject: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub prompt_hash: String,
    pub raw_response: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

pub const FLAG_EMPTY_GENERATION: &str = "empty generation";

/// Collapses line breaks and tabs to spaces and trims, so generated text
/// fits on one line of a tab-separated file.
pub fn single_line(text: &str) -> String {
    text.replace(['\r', '\n', '\t'], " ").trim().to_string()
}

pub(crate) fn prompt_hash(text: &str, params: &GenerationParams) -> String {
    cache_key(text, params)
}
