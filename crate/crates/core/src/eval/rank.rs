use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{score_vectors, EmbeddingModel};
use super::{EvalError, TrainConfig};
use crate::kg::{EntityId, KnowledgeGraph, RelationId, SplitKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterSetting {
    Raw,
    #[default]
    Filtered,
}

/// A link-prediction query with the missing slot left out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "predict", rename_all = "lowercase")]
pub enum Query {
    /// `(h, r, ?)`
    Tail { head: EntityId, relation: RelationId },
    /// `(?, r, t)`
    Head { relation: RelationId, tail: EntityId },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankRecord {
    pub query: Query,
    pub gold: EntityId,
    pub raw_rank: usize,
    pub filtered_rank: usize,
}

impl RankRecord {
    pub fn rank(&self, setting: FilterSetting) -> usize {
        match setting {
            FilterSetting::Raw => self.raw_rank,
            FilterSetting::Filtered => self.filtered_rank,
        }
    }
}

/// Positive triples of every split, by model index.
#[derive(Debug, Clone, Default)]
pub struct KnownTriples {
    set: HashSet<(usize, usize, usize)>,
}

impl KnownTriples {
    pub fn from_graph(model: &EmbeddingModel, kg: &KnowledgeGraph) -> Result<Self, EvalError> {
        let mut set = HashSet::new();
        for kind in SplitKind::ALL {
            for t in kg.split(kind).positives() {
                set.insert((
                    model.entity_idx(t.head.as_str())?,
                    model.relation_idx(t.relation.as_str())?,
                    model.entity_idx(t.tail.as_str())?,
                ));
            }
        }
        Ok(Self { set })
    }

    pub fn contains(&self, h: usize, r: usize, t: usize) -> bool {
        self.set.contains(&(h, r, t))
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }
}

/// Raw and filtered rank of `scores[gold]`. Ties count against gold.
/// `is_known(c)` marks candidates removed in the filtered setting.
pub fn rank_from_scores(scores: &[f64], gold: usize, is_known: impl Fn(usize) -> bool) -> (usize, usize) {
    let g = scores[gold];
    let mut raw = 1;
    let mut filtered = 1;
    for (c, &s) in scores.iter().enumerate() {
        if c == gold || !(s >= g) {
            continue;
        }
        raw += 1;
        if !is_known(c) {
            filtered += 1;
        }
    }
    (raw, filtered)
}

fn rank_query(model: &EmbeddingModel, known: &KnownTriples, h: usize, r: usize, t: usize, tail: bool) -> (usize, usize) {
    let rv = model.rel(r);
    let scores: Vec<f64> = (0..model.n_entities())
        .map(|c| {
            if tail {
                score_vectors(model.kind, model.norm, model.ent(h), rv, model.ent(c))
            } else {
                score_vectors(model.kind, model.norm, model.ent(c), rv, model.ent(t))
            }
        })
        .collect();
    let gold = if tail { t } else { h };
    rank_from_scores(&scores, gold, |c| {
        if tail {
            known.contains(h, r, c)
        } else {
            known.contains(c, r, t)
        }
    })
}

/// Ranks the gold entity of one query against every entity.
pub fn rank_entities(
    model: &EmbeddingModel,
    kg: &KnowledgeGraph,
    query: &Query,
    gold: &EntityId,
) -> Result<RankRecord, EvalError> {
    let known = KnownTriples::from_graph(model, kg)?;
    rank_with(model, &known, query, gold)
}

fn rank_with(model: &EmbeddingModel, known: &KnownTriples, query: &Query, gold: &EntityId) -> Result<RankRecord, EvalError> {
    let g = model.entity_idx(gold.as_str())?;
    let (raw_rank, filtered_rank) = match query {
        Query::Tail { head, relation } => rank_query(
            model,
            known,
            model.entity_idx(head.as_str())?,
            model.relation_idx(relation.as_str())?,
            g,
            true,
        ),
        Query::Head { relation, tail } => rank_query(
            model,
            known,
            g,
            model.relation_idx(relation.as_str())?,
            model.entity_idx(tail.as_str())?,
            false,
        ),
    };
    Ok(RankRecord {
        query: query.clone(),
        gold: gold.clone(),
        raw_rank,
        filtered_rank,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankMetrics {
    pub mr: f64,
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
}

impl RankMetrics {
    /// Panics on an empty slice or a zero rank.
    pub fn from_ranks(ranks: &[usize]) -> Self {
        assert!(!ranks.is_empty(), "no ranks");
        assert!(ranks.iter().all(|&r| r >= 1), "ranks start at 1");
        let n = ranks.len() as f64;
        let hits = |k: usize| ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
        Self {
            mr: ranks.iter().map(|&r| r as f64).sum::<f64>() / n,
            mrr: ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n,
            hits1: hits(1),
            hits3: hits(3),
            hits10: hits(10),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub metrics: RankMetrics,
    pub n_queries: usize,
    pub setting: FilterSetting,
    pub split: SplitKind,
    pub dataset_fingerprint: String,
    pub config: Option<TrainConfig>,
    pub seed: Option<u64>,
}

/// Head and tail queries for every positive triple of `split`, pooled.
pub fn link_prediction(
    model: &EmbeddingModel,
    kg: &KnowledgeGraph,
    split: SplitKind,
    setting: FilterSetting,
) -> Result<EvalReport, EvalError> {
    let (report, _) = link_prediction_records(model, kg, split, setting)?;
    Ok(report)
}

pub(crate) fn link_prediction_records(
    model: &EmbeddingModel,
    kg: &KnowledgeGraph,
    split: SplitKind,
    setting: FilterSetting,
) -> Result<(EvalReport, Vec<RankRecord>), EvalError> {
    let triples: Vec<_> = kg.split(split).positives().collect();
    if triples.is_empty() {
        return Err(EvalError::EmptySplit(split));
    }
    let known = KnownTriples::from_graph(model, kg)?;
    let queries: Vec<(Query, &EntityId)> = triples
        .iter()
        .flat_map(|t| {
            [
                (
                    Query::Tail {
                        head: t.head.clone(),
                        relation: t.relation.clone(),
                    },
                    &t.tail,
                ),
                (
                    Query::Head {
                        relation: t.relation.clone(),
                        tail: t.tail.clone(),
                    },
                    &t.head,
                ),
            ]
        })
        .collect();
    let records = queries
        .par_iter()
        .map(|(q, gold)| rank_with(model, &known, q, gold))
        .collect::<Result<Vec<_>, _>>()?;
    let ranks: Vec<usize> = records.iter().map(|r| r.rank(setting)).collect();
    let report = EvalReport {
        metrics: RankMetrics::from_ranks(&ranks),
        n_queries: ranks.len(),
        setting,
        split,
        dataset_fingerprint: kg.fingerprint()?,
        seed: model.config.as_ref().map(|c| c.seed),
        config: model.config.clone(),
    };
    Ok((report, records))
}
