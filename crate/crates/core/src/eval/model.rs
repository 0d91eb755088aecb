use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{EvalError, TrainConfig};
use crate::kg::{EntityId, RelationId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    TransE,
    DistMult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
}

/// Entity and relation vectors stored row-major in flat buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub kind: ModelKind,
    pub norm: Norm,
    pub dim: usize,
    entities: Vec<EntityId>,
    relations: Vec<RelationId>,
    entity_index: HashMap<EntityId, usize>,
    relation_index: HashMap<RelationId, usize>,
    pub(crate) entity_vecs: Vec<f64>,
    pub(crate) relation_vecs: Vec<f64>,
    /// Config the model was trained with, if any.
    pub config: Option<TrainConfig>,
}

impl EmbeddingModel {
    /// Panics if a buffer length is not `dim` times its id count.
    pub fn new(
        kind: ModelKind,
        norm: Norm,
        dim: usize,
        entities: Vec<EntityId>,
        relations: Vec<RelationId>,
        entity_vecs: Vec<f64>,
        relation_vecs: Vec<f64>,
    ) -> Self {
        assert!(dim >= 1);
        assert_eq!(entity_vecs.len(), entities.len() * dim);
        assert_eq!(relation_vecs.len(), relations.len() * dim);
        let entity_index = entities.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        let relation_index = relations.iter().cloned().enumerate().map(|(i, r)| (r, i)).collect();
        Self {
            kind,
            norm,
            dim,
            entities,
            relations,
            entity_index,
            relation_index,
            entity_vecs,
            relation_vecs,
            config: None,
        }
    }

    pub fn n_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn n_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn entity_ids(&self) -> &[EntityId] {
        &self.entities
    }

    pub fn entity_idx(&self, id: &str) -> Result<usize, EvalError> {
        self.entity_index
            .get(id)
            .copied()
            .ok_or_else(|| EvalError::UnknownEntity(id.to_string()))
    }

    pub fn relation_idx(&self, id: &str) -> Result<usize, EvalError> {
        self.relation_index
            .get(id)
            .copied()
            .ok_or_else(|| EvalError::UnknownRelation(id.to_string()))
    }

    pub fn entity_vector(&self, id: &str) -> Option<&[f64]> {
        self.entity_idx(id).ok().map(|i| self.ent(i))
    }

    pub fn relation_vector(&self, id: &str) -> Option<&[f64]> {
        self.relation_idx(id).ok().map(|i| self.rel(i))
    }

    pub(crate) fn ent(&self, i: usize) -> &[f64] {
        &self.entity_vecs[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn rel(&self, i: usize) -> &[f64] {
        &self.relation_vecs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.entity_vecs.iter().chain(&self.relation_vecs).all(|x| x.is_finite())
    }

    /// Plausibility of `(h, r, t)` by index; higher is better.
    pub(crate) fn score_idx(&self, h: usize, r: usize, t: usize) -> f64 {
        score_vectors(self.kind, self.norm, self.ent(h), self.rel(r), self.ent(t))
    }
}

/// TransE: `-‖h + r - t‖`. DistMult: `Σ h·r·t`.
pub(crate) fn score_vectors(kind: ModelKind, norm: Norm, h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    match kind {
        ModelKind::TransE => {
            let diffs = h.iter().zip(r).zip(t).map(|((h, r), t)| h + r - t);
            match norm {
                Norm::L1 => -diffs.map(f64::abs).sum::<f64>(),
                Norm::L2 => -diffs.map(|d| d * d).sum::<f64>().sqrt(),
            }
        }
        ModelKind::DistMult => h.iter().zip(r).zip(t).map(|((h, r), t)| h * r * t).sum(),
    }
}

pub fn score_triple(model: &EmbeddingModel, h: &str, r: &str, t: &str) -> Result<f64, EvalError> {
    Ok(model.score_idx(model.entity_idx(h)?, model.relation_idx(r)?, model.entity_idx(t)?))
}
