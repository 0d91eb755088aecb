//! Relation explanations from the global, local and reverse perspectives.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{prompt_hash, single_line, AuditItem, EnrichError, ItemError, FLAG_EMPTY_GENERATION};
use crate::kg::{KnowledgeGraph, RelationId};
use crate::llm::{Gateway, GenerationParams};
use crate::prompt::{RelationMode, TemplateSet};

pub const SEP: &str = "[SEP]";
const SEP_JOIN: &str = " [SEP] ";
const SEP_ESCAPED: &str = "[SEP ]";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationAugmentation {
    pub relation: RelationId,
    /// Raw LLM output per mode.
    pub texts: BTreeMap<RelationMode, String>,
    pub composed: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub prompt_hashes: BTreeMap<RelationMode, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationBundle {
    pub base_fingerprint: String,
    pub modes: BTreeSet<RelationMode>,
    pub params: GenerationParams,
    pub augmentations: Vec<RelationAugmentation>,
    pub errors: Vec<ItemError>,
}

impl RelationBundle {
    pub fn audit(&self) -> Vec<AuditItem> {
        let mut out = Vec::new();
        for a in &self.augmentations {
            for (mode, raw) in &a.texts {
                out.push(AuditItem {
                    subject: a.relation.to_string(),
                    detail: Some(mode.to_string()),
                    prompt_hash: a.prompt_hashes.get(mode).cloned().unwrap_or_default(),
                    raw_response: raw.clone(),
                    flags: Vec::new(),
                });
            }
        }
        out
    }
}

/// Rewrites every literal `[SEP]` so the separator stays unambiguous.
pub fn escape_sep(text: &str) -> String {
    let mut s = text.to_string();
    while s.contains(SEP) {
        s = s.replace(SEP, SEP_ESCAPED);
    }
    s
}

/// Name, a space, then the non-empty texts in Global, Local, Reverse order
/// joined by ` [SEP] `.
pub fn compose_relation_text(name: &str, texts: &[(RelationMode, String)]) -> String {
    let mut sorted: Vec<&(RelationMode, String)> = texts.iter().collect();
    sorted.sort_by_key(|(mode, _)| *mode);
    let parts: Vec<String> = sorted
        .into_iter()
        .map(|(_, t)| escape_sep(&single_line(t)))
        .filter(|t| !t.is_empty())
        .collect();
    if parts.is_empty() {
        name.to_string()
    } else {
        format!("{name} {}", parts.join(SEP_JOIN))
    }
}

/// Inverse of [`compose_relation_text`] for a known name.
pub fn split_relation_text<'a>(composed: &'a str, name: &str) -> Vec<&'a str> {
    match composed.strip_prefix(name).and_then(|r| r.strip_prefix(' ')) {
        Some(rest) if !rest.is_empty() => rest.split(SEP_JOIN).collect(),
        _ => Vec::new(),
    }
}

/// Queries one explanation per relation and mode.
pub fn describe_relations(
    kg: &KnowledgeGraph,
    gateway: &Gateway,
    templates: &TemplateSet,
    params: &GenerationParams,
    modes: &BTreeSet<RelationMode>,
) -> Result<RelationBundle, EnrichError> {
    if modes.is_empty() {
        return Err(EnrichError::NoModes);
    }
    let mut errors = Vec::new();
    let mut pending = Vec::new();
    for id in kg.relations() {
        let name = kg.texts().relation_name(id);
        for &mode in modes {
            match templates.relation_prompt(name, mode) {
                Ok(p) => pending.push((id, mode, p.for_subject(id.as_str()))),
                Err(e) => errors.push(ItemError {
                    subject: id.to_string(),
                    detail: Some(mode.to_string()),
                    prompt_hash: None,
                    message: e.to_string(),
                }),
            }
        }
    }

    let prompts: Vec<_> = pending.iter().map(|(_, _, p)| p.clone()).collect();
    let results = gateway.batch_query(&prompts, params);

    let mut by_relation: BTreeMap<usize, RelationAugmentation> = BTreeMap::new();
    for ((id, mode, prompt), result) in pending.into_iter().zip(results) {
        let hash = prompt_hash(&prompt.text, params);
        match result {
            Ok(ex) => {
                let index = kg.relations().get_index_of(id).expect("relation of graph");
                let entry = by_relation.entry(index).or_insert_with(|| RelationAugmentation {
                    relation: id.clone(),
                    texts: BTreeMap::new(),
                    composed: String::new(),
                    prompt_hashes: BTreeMap::new(),
                    flags: Vec::new(),
                });
                if single_line(&ex.response).is_empty() {
                    entry.flags.push(format!("{FLAG_EMPTY_GENERATION} ({mode})"));
                }
                entry.texts.insert(mode, ex.response);
                entry.prompt_hashes.insert(mode, hash);
            }
            Err(e) => errors.push(ItemError {
                subject: id.to_string(),
                detail: Some(mode.to_string()),
                prompt_hash: Some(hash),
                message: e.to_string(),
            }),
        }
    }

    let augmentations = by_relation
        .into_values()
        .map(|mut a| {
            let texts: Vec<(RelationMode, String)> =
                a.texts.iter().map(|(m, t)| (*m, t.clone())).collect();
            a.composed = compose_relation_text(kg.texts().relation_name(&a.relation), &texts);
            a
        })
        .collect();

    Ok(RelationBundle {
        base_fingerprint: kg.fingerprint()?,
        modes: modes.clone(),
        params: params.clone(),
        augmentations,
        errors,
    })
}
