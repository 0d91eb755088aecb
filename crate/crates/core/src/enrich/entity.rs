//! Entity description expansion.

use serde::{Deserialize, Serialize};

use super::{prompt_hash, single_line, AuditItem, EnrichError, ItemError, FLAG_EMPTY_GENERATION};
use crate::kg::{EntityId, KnowledgeGraph};
use crate::llm::{Gateway, GenerationParams};
use crate::prompt::TemplateSet;

/// Whitespace-token budget for Freebase-style datasets.
pub const FREEBASE_BUDGET: usize = 70;
/// Whitespace-token budget for WordNet-style datasets.
pub const WORDNET_BUDGET: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityAugmentation {
    pub entity: EntityId,
    /// Raw LLM output, verbatim.
    pub generated: String,
    pub merged: String,
    pub budget_tokens: usize,
    pub prompt_hash: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityBundle {
    pub base_fingerprint: String,
    pub budget_tokens: usize,
    pub params: GenerationParams,
    pub augmentations: Vec<EntityAugmentation>,
    pub errors: Vec<ItemError>,
}

impl EntityBundle {
    pub fn audit(&self) -> Vec<AuditItem> {
        self.augmentations
            .iter()
            .map(|a| AuditItem {
                subject: a.entity.to_string(),
                detail: None,
                prompt_hash: a.prompt_hash.clone(),
                raw_response: a.generated.clone(),
                flags: a.flags.clone(),
            })
            .collect()
    }
}

pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Byte offset just past the `n`-th whitespace token, or `None` when `text`
/// has fewer than `n` tokens.
fn end_of_token(text: &str, n: usize) -> Option<usize> {
    if n == 0 {
        return Some(0);
    }
    let mut seen = 0;
    let mut in_token = false;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if in_token {
                seen += 1;
                if seen == n {
                    return Some(i);
                }
            }
            in_token = false;
        } else {
            in_token = true;
        }
    }
    if in_token && seen + 1 == n {
        Some(text.len())
    } else {
        None
    }
}

/// Original first, then one space, then the generated text, cut after the
/// first `budget_tokens` whitespace tokens.
pub fn merge_entity_text(original: &str, generated: &str, budget_tokens: usize) -> String {
    let combined = match (original.is_empty(), generated.is_empty()) {
        (_, true) => original.to_string(),
        (true, false) => generated.to_string(),
        (false, false) => format!("{original} {generated}"),
    };
    let Some(mut cut) = end_of_token(&combined, budget_tokens) else {
        return combined;
    };
    if token_count(original) <= budget_tokens {
        // keep the original intact, trailing whitespace included
        cut = cut.max(original.len());
    }
    combined[..cut].to_string()
}

/// Queries one expansion per entity and merges it into the entity's
/// description. Gateway failures are recorded per entity.
pub fn expand_descriptions(
    kg: &KnowledgeGraph,
    gateway: &Gateway,
    templates: &TemplateSet,
    params: &GenerationParams,
    budget_tokens: usize,
) -> Result<EntityBundle, EnrichError> {
    if budget_tokens == 0 {
        return Err(EnrichError::ZeroBudget);
    }
    let mut errors = Vec::new();
    let mut pending = Vec::new();
    for id in kg.entities() {
        let name = kg.texts().entity_name(id);
        match templates.entity_prompt(name) {
            Ok(p) => pending.push((id, p.for_subject(id.as_str()))),
            Err(e) => errors.push(ItemError {
                subject: id.to_string(),
                detail: None,
                prompt_hash: None,
                message: e.to_string(),
            }),
        }
    }

    let prompts: Vec<_> = pending.iter().map(|(_, p)| p.clone()).collect();
    let results = gateway.batch_query(&prompts, params);

    let mut augmentations = Vec::with_capacity(pending.len());
    for ((id, prompt), result) in pending.into_iter().zip(results) {
        let hash = prompt_hash(&prompt.text, params);
        match result {
            Ok(ex) => {
                let generated = single_line(&ex.response);
                let mut flags = Vec::new();
                if generated.is_empty() {
                    flags.push(FLAG_EMPTY_GENERATION.to_string());
                }
                let original = kg.texts().entity_description(id);
                augmentations.push(EntityAugmentation {
                    entity: id.clone(),
                    merged: merge_entity_text(original, &generated, budget_tokens),
                    generated: ex.response,
                    budget_tokens,
                    prompt_hash: hash,
                    flags,
                });
            }
            Err(e) => errors.push(ItemError {
                subject: id.to_string(),
                detail: None,
                prompt_hash: Some(hash),
                message: e.to_string(),
            }),
        }
    }

    Ok(EntityBundle {
        base_fingerprint: kg.fingerprint()?,
        budget_tokens,
        params: params.clone(),
        augmentations,
        errors,
    })
}
