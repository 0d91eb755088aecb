//! Keyword-based structure extraction.
//!
//! Each entity gets a keyword set from the LLM. Pairs of entities are scored
//! by `|kh ∩ kt| / min(|kh|, |kt|)`; every entity links to its `k` best
//! partners with a synthesized `SameAs` triple, optionally plus a self-loop.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::sync::LazyLock;

use indexmap::IndexMap;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{prompt_hash, AuditItem, EnrichError, ItemError};
use crate::kg::{EntityId, KnowledgeGraph, RelationId, Triple};
use crate::llm::{Gateway, GenerationParams};
use crate::prompt::TemplateSet;

pub const DEFAULT_SAME_AS: &str = "SameAs";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordSet {
    pub entity: EntityId,
    pub keywords: Vec<String>,
}

fn normalize_keyword(raw: &str) -> String {
    raw.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

impl KeywordSet {
    /// Lowercases, collapses inner whitespace and drops empty and duplicate
    /// keywords, keeping first occurrences.
    pub fn new<I, S>(entity: EntityId, keywords: I) -> Result<Self, EnrichError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = HashSet::new();
        let keywords: Vec<String> = keywords
            .into_iter()
            .map(|k| normalize_keyword(k.as_ref()))
            .filter(|k| !k.is_empty() && seen.insert(k.clone()))
            .collect();
        if keywords.is_empty() {
            return Err(EnrichError::EmptyKeywordSet(entity.to_string()));
        }
        Ok(Self { entity, keywords })
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }
}

static ENUM_MARKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:\(?\d+[.):]|[-*•])\s*").expect("valid regex"));
static KEYWORD_LABEL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*keywords?\s*:\s*").expect("valid regex"));

/// Parses an LLM keyword answer: items split on commas, semicolons and
/// newlines; enumeration markers and surrounding punctuation stripped.
pub fn parse_keywords(entity: EntityId, raw: &str) -> Result<KeywordSet, EnrichError> {
    let items = raw
        .split([',', ';', '\n', '\r'])
        .map(|item| {
            let item = KEYWORD_LABEL.replace(item, "");
            let item = ENUM_MARKER.replace(&item, "");
            item.trim_matches(|c: char| !c.is_alphanumeric()).to_string()
        })
        .collect::<Vec<_>>();
    KeywordSet::new(entity, items).map_err(|_| EnrichError::NoKeywords(raw.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchScore {
    pub head: EntityId,
    pub tail: EntityId,
    pub score: f64,
    pub n_matched: usize,
    /// `min(|kh|, |kt|)`, the score's denominator.
    pub min_size: usize,
}

impl MatchScore {
    /// Exact comparison of the underlying ratios.
    fn cmp_score(&self, other: &Self) -> Ordering {
        cmp_ratio(self.n_matched, self.min_size, other.n_matched, other.min_size)
    }
}

fn cmp_ratio(a_num: usize, a_den: usize, b_num: usize, b_den: usize) -> Ordering {
    (a_num as u128 * b_den as u128).cmp(&(b_num as u128 * a_den as u128))
}

pub fn match_score(kh: &KeywordSet, kt: &KeywordSet) -> Result<MatchScore, EnrichError> {
    for k in [kh, kt] {
        if k.is_empty() {
            return Err(EnrichError::EmptyKeywordSet(k.entity.to_string()));
        }
    }
    let tail: HashSet<&str> = kt.keywords.iter().map(String::as_str).collect();
    let n_matched = kh.keywords.iter().filter(|k| tail.contains(k.as_str())).count();
    let min_size = kh.len().min(kt.len());
    Ok(MatchScore {
        head: kh.entity.clone(),
        tail: kt.entity.clone(),
        score: n_matched as f64 / min_size as f64,
        n_matched,
        min_size,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureConfig {
    pub k: usize,
    pub self_loop: bool,
    pub same_as_relation: RelationId,
}

impl Default for StructureConfig {
    fn default() -> Self {
        Self {
            k: 1,
            self_loop: true,
            same_as_relation: RelationId::new(DEFAULT_SAME_AS).expect("valid id"),
        }
    }
}

/// For every entity, its `k` best-scoring partners (score descending, then
/// partner id ascending). Zero-score pairs are never selected. Output is
/// grouped by head in map order.
pub fn top_k_pairs(sets: &IndexMap<EntityId, KeywordSet>, k: usize) -> Vec<MatchScore> {
    if k == 0 || sets.len() < 2 {
        return Vec::new();
    }
    let mut vocab: HashMap<&str, usize> = HashMap::new();
    let interned: Vec<Vec<usize>> = sets
        .values()
        .map(|s| {
            s.keywords
                .iter()
                .map(|kw| {
                    let next = vocab.len();
                    *vocab.entry(kw.as_str()).or_insert(next)
                })
                .collect()
        })
        .collect();
    let mut postings: Vec<Vec<usize>> = vec![Vec::new(); vocab.len()];
    for (e, kws) in interned.iter().enumerate() {
        for &kw in kws {
            postings[kw].push(e);
        }
    }
    let entries: Vec<(&EntityId, &KeywordSet)> = sets.iter().collect();

    let per_head: Vec<Vec<MatchScore>> = (0..entries.len())
        .into_par_iter()
        .map_init(
            || vec![0usize; entries.len()],
            |counts, h| {
                let mut touched = Vec::new();
                for &kw in &interned[h] {
                    for &e in &postings[kw] {
                        if e != h {
                            if counts[e] == 0 {
                                touched.push(e);
                            }
                            counts[e] += 1;
                        }
                    }
                }
                let (head_id, head_set) = entries[h];
                let mut candidates: Vec<MatchScore> = touched
                    .iter()
                    .map(|&e| {
                        let (tail_id, tail_set) = entries[e];
                        let n_matched = counts[e];
                        let min_size = head_set.len().min(tail_set.len());
                        MatchScore {
                            head: head_id.clone(),
                            tail: tail_id.clone(),
                            score: n_matched as f64 / min_size as f64,
                            n_matched,
                            min_size,
                        }
                    })
                    .collect();
                for &e in &touched {
                    counts[e] = 0;
                }
                candidates.sort_by(|a, b| b.cmp_score(a).then_with(|| a.tail.cmp(&b.tail)));
                candidates.truncate(k);
                candidates
            },
        )
        .collect();
    per_head.into_iter().flatten().collect()
}

/// One `(head, SameAs, tail)` per pair, then (when enabled) one self-loop per
/// entity that has a keyword set, in graph order. Exact duplicates are
/// dropped.
pub fn synthesize_triples(
    pairs: &[MatchScore],
    keyword_sets: &IndexMap<EntityId, KeywordSet>,
    kg: &KnowledgeGraph,
    cfg: &StructureConfig,
) -> Result<Vec<Triple>, EnrichError> {
    if kg.relations().contains(&cfg.same_as_relation) {
        return Err(EnrichError::RelationCollision(cfg.same_as_relation.to_string()));
    }
    let rel = &cfg.same_as_relation;
    let pair_triples = pairs
        .iter()
        .map(|p| Triple::new(p.head.clone(), rel.clone(), p.tail.clone()));
    let loops = kg
        .entities()
        .iter()
        .filter(|e| cfg.self_loop && keyword_sets.contains_key(*e))
        .map(|e| Triple::new(e.clone(), rel.clone(), e.clone()));

    let mut seen = HashSet::new();
    Ok(pair_triples
        .chain(loops)
        .filter(|t| seen.insert(t.clone()))
        .collect())
}

/// Appends `triples` to the training split, registering any relation they
/// introduce (named by its id).
pub fn augment_training_set(
    kg: &KnowledgeGraph,
    triples: &[Triple],
) -> Result<KnowledgeGraph, EnrichError> {
    if triples.is_empty() {
        return Ok(kg.clone());
    }
    let mut new_relations: Vec<(RelationId, String)> = Vec::new();
    for t in triples {
        if !kg.relations().contains(&t.relation)
            && !new_relations.iter().any(|(r, _)| r == &t.relation)
        {
            new_relations.push((t.relation.clone(), t.relation.to_string()));
        }
    }
    Ok(kg.with_train_triples(triples, &new_relations)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeywordSource {
    Description,
    Name,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordRecord {
    #[serde(flatten)]
    pub set: KeywordSet,
    pub source: KeywordSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureBundle {
    pub base_fingerprint: String,
    pub config: StructureConfig,
    pub params: GenerationParams,
    pub keywords: Vec<KeywordRecord>,
    pub pairs: Vec<MatchScore>,
    pub triples: Vec<Triple>,
    /// Entities left out of matching because no keywords were obtained.
    pub n_without_keywords: usize,
    pub audit: Vec<AuditItem>,
    pub errors: Vec<ItemError>,
}

impl StructureBundle {
    pub fn n_self_loops(&self) -> usize {
        self.triples.iter().filter(|t| t.head == t.tail).count()
    }
}

/// Keyword extraction for every entity followed by matching and triple
/// synthesis. Entities without a description are prompted with their name.
pub fn extract_structure(
    kg: &KnowledgeGraph,
    gateway: &Gateway,
    templates: &TemplateSet,
    params: &GenerationParams,
    cfg: &StructureConfig,
) -> Result<StructureBundle, EnrichError> {
    if kg.relations().contains(&cfg.same_as_relation) {
        return Err(EnrichError::RelationCollision(cfg.same_as_relation.to_string()));
    }
    let mut errors = Vec::new();
    let mut pending = Vec::new();
    for id in kg.entities() {
        let desc = kg.texts().entity_description(id);
        let (text, source) = if desc.trim().is_empty() {
            (kg.texts().entity_name(id), KeywordSource::Name)
        } else {
            (desc, KeywordSource::Description)
        };
        match templates.keyword_prompt(text) {
            Ok(p) => pending.push((id, source, p.for_subject(id.as_str()))),
            Err(e) => errors.push(ItemError {
                subject: id.to_string(),
                detail: None,
                prompt_hash: None,
                message: e.to_string(),
            }),
        }
    }

    let prompts: Vec<_> = pending.iter().map(|(_, _, p)| p.clone()).collect();
    let results = gateway.batch_query(&prompts, params);

    let mut sets: IndexMap<EntityId, KeywordSet> = IndexMap::new();
    let mut keywords = Vec::new();
    let mut audit = Vec::new();
    for ((id, source, prompt), result) in pending.into_iter().zip(results) {
        let hash = prompt_hash(&prompt.text, params);
        let error = |message: String| ItemError {
            subject: id.to_string(),
            detail: None,
            prompt_hash: Some(hash.clone()),
            message,
        };
        match result {
            Ok(ex) => {
                let parsed = parse_keywords(id.clone(), &ex.response);
                audit.push(AuditItem {
                    subject: id.to_string(),
                    detail: None,
                    prompt_hash: hash.clone(),
                    raw_response: ex.response,
                    flags: Vec::new(),
                });
                match parsed {
                    Ok(set) => {
                        sets.insert(id.clone(), set.clone());
                        keywords.push(KeywordRecord { set, source });
                    }
                    Err(e) => errors.push(error(e.to_string())),
                }
            }
            Err(e) => errors.push(error(e.to_string())),
        }
    }

    let n_without_keywords = kg.entities().len() - sets.len();
    if n_without_keywords > 0 {
        log::warn!("{n_without_keywords} entities have no keywords and are excluded from matching");
    }
    let pairs = top_k_pairs(&sets, cfg.k);
    let triples = synthesize_triples(&pairs, &sets, kg, cfg)?;
    Ok(StructureBundle {
        base_fingerprint: kg.fingerprint()?,
        config: cfg.clone(),
        params: params.clone(),
        keywords,
        pairs,
        triples,
        n_without_keywords,
        audit,
        errors,
    })
}
