//! Structure-based link prediction and triplet classification used to
//! measure the effect of an augmentation.

mod classify;
mod compare;
mod model;
mod rank;
mod train;

pub use classify::{fit_threshold, triplet_classification, ClassificationReport, Threshold};
pub use compare::{ab_compare, median, ComparisonReport, RunMetrics, SeedRow};
pub use model::{score_triple, EmbeddingModel, ModelKind, Norm};
pub use rank::{
    link_prediction, rank_entities, rank_from_scores, EvalReport, FilterSetting, KnownTriples,
    Query, RankMetrics, RankRecord,
};
pub use train::{train, TrainConfig, TrainOutcome};

use crate::kg::{KgError, SplitKind};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("training split is empty")]
    EmptyTrainingSet,
    #[error("{0} split has no positive triples")]
    EmptySplit(SplitKind),
    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },
    #[error("unknown entity {0:?}")]
    UnknownEntity(String),
    #[error("unknown relation {0:?}")]
    UnknownRelation(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("graphs do not share the same {0} split")]
    SplitMismatch(SplitKind),
    #[error(transparent)]
    Graph(#[from] KgError),
}
