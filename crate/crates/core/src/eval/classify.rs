use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::EmbeddingModel;
use super::rank::KnownTriples;
use super::EvalError;
use crate::kg::{KnowledgeGraph, RelationId, SplitKind};

const MAX_RESAMPLES: usize = 100;

/// A triple is predicted true iff its score is strictly above `value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub value: f64,
    /// Accuracy on the data the threshold was fitted to.
    pub accuracy: f64,
}

impl Threshold {
    pub fn predict(&self, score: f64) -> bool {
        score > self.value
    }
}

/// Sweeps one threshold per gap between distinct scores (the midpoint),
/// plus one below the minimum and one at the maximum. Equal accuracies
/// resolve to the highest threshold. `None` for empty input.
pub fn fit_threshold(samples: &[(f64, bool)]) -> Option<Threshold> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = sorted.len();
    let total_pos = sorted.iter().filter(|s| s.1).count();

    // everything predicted positive
    let mut best_correct = total_pos;
    let mut best_value = sorted[0].0 - 1.0;

    let mut neg_below = 0;
    let mut pos_below = 0;
    let mut i = 0;
    while i < n {
        let s = sorted[i].0;
        while i < n && sorted[i].0 == s {
            if sorted[i].1 {
                pos_below += 1;
            } else {
                neg_below += 1;
            }
            i += 1;
        }
        let value = if i < n { s + (sorted[i].0 - s) / 2.0 } else { s };
        let correct = neg_below + (total_pos - pos_below);
        if correct >= best_correct {
            best_correct = correct;
            best_value = value;
        }
    }
    Some(Threshold {
        value: best_value,
        accuracy: best_correct as f64 / n as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    /// Test accuracy.
    pub accuracy: f64,
    pub valid_accuracy: f64,
    pub n_valid: usize,
    pub n_test: usize,
    pub global_threshold: Threshold,
    pub thresholds: BTreeMap<RelationId, Threshold>,
    /// Test triples whose relation had no validation data.
    pub n_fallback: usize,
}

type Sample = (usize, usize, usize, bool);

fn labeled_samples(
    model: &EmbeddingModel,
    kg: &KnowledgeGraph,
    split: SplitKind,
    known: &KnownTriples,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Sample>, EvalError> {
    let s = kg.split(split);
    let mut out = Vec::with_capacity(2 * s.len());
    for (t, label) in s.iter_labeled() {
        let h = model.entity_idx(t.head.as_str())?;
        let r = model.relation_idx(t.relation.as_str())?;
        let tl = model.entity_idx(t.tail.as_str())?;
        out.push((h, r, tl, label));
        if s.has_labels() || model.n_entities() < 2 {
            continue;
        }
        let mut corrupted = None;
        for _ in 0..MAX_RESAMPLES {
            let c = rng.random_range(0..model.n_entities());
            if c != tl && !known.contains(h, r, c) {
                corrupted = Some(c);
                break;
            }
        }
        match corrupted {
            Some(c) => out.push((h, r, c, false)),
            None => log::warn!("no negative found for {} {} {}", t.head, t.relation, t.tail),
        }
    }
    if out.is_empty() {
        return Err(EvalError::EmptySplit(split));
    }
    Ok(out)
}

/// Per-relation thresholds fitted on validation, accuracy on test. Splits
/// without labels get one tail-corrupted negative per positive.
pub fn triplet_classification(
    model: &EmbeddingModel,
    kg: &KnowledgeGraph,
    negatives_seed: u64,
) -> Result<ClassificationReport, EvalError> {
    let known = KnownTriples::from_graph(model, kg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(negatives_seed);
    let valid = labeled_samples(model, kg, SplitKind::Valid, &known, &mut rng)?;
    let test = labeled_samples(model, kg, SplitKind::Test, &known, &mut rng)?;

    let scored = |s: &[Sample]| -> Vec<(usize, f64, bool)> {
        s.iter().map(|&(h, r, t, l)| (r, model.score_idx(h, r, t), l)).collect()
    };
    let valid = scored(&valid);
    let test = scored(&test);

    let all: Vec<(f64, bool)> = valid.iter().map(|&(_, s, l)| (s, l)).collect();
    let global = fit_threshold(&all).expect("validation samples");
    let mut by_rel: BTreeMap<usize, Vec<(f64, bool)>> = BTreeMap::new();
    for &(r, s, l) in &valid {
        by_rel.entry(r).or_default().push((s, l));
    }
    let fitted: BTreeMap<usize, Threshold> = by_rel
        .iter()
        .map(|(&r, samples)| (r, fit_threshold(samples).expect("non-empty")))
        .collect();

    let accuracy_on = |samples: &[(usize, f64, bool)]| {
        let mut fallback = 0;
        let correct = samples
            .iter()
            .filter(|&&(r, s, l)| {
                let th = fitted.get(&r).unwrap_or_else(|| {
                    fallback += 1;
                    &global
                });
                th.predict(s) == l
            })
            .count();
        (correct as f64 / samples.len() as f64, fallback)
    };
    let (valid_accuracy, _) = accuracy_on(&valid);
    let (accuracy, n_fallback) = accuracy_on(&test);

    let relations: Vec<&RelationId> = kg.relations().iter().collect();
    let thresholds = fitted
        .into_iter()
        .map(|(r, th)| (relations[r].clone(), th))
        .collect();
    Ok(ClassificationReport {
        accuracy,
        valid_accuracy,
        n_valid: valid.len(),
        n_test: test.len(),
        global_threshold: global,
        thresholds,
        n_fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{ModelKind, Norm};
    use crate::kg::LoadMode;
    use proptest::prelude::*;

    #[test]
    fn separable_relation_uses_midpoint() {
        let th = fit_threshold(&[(0.9, true), (0.8, true), (0.2, false), (0.1, false)]).unwrap();
        assert_eq!(th.value, 0.5);
        assert_eq!(th.accuracy, 1.0);
    }

    #[test]
    fn identical_scores_default_to_negative() {
        let th = fit_threshold(&[(0.3, true), (0.3, false), (0.3, true), (0.3, false)]).unwrap();
        assert_eq!(th.accuracy, 0.5);
        assert!(!th.predict(0.3));
        assert!(fit_threshold(&[]).is_none());
    }

    fn sweep_oracle(samples: &[(f64, bool)], value: f64) -> f64 {
        samples.iter().filter(|(s, l)| (*s > value) == *l).count() as f64 / samples.len() as f64
    }

    proptest! {
        #[test]
        fn fitted_threshold_is_optimal(samples in prop::collection::vec((-20i32..20, any::<bool>()), 1..40)) {
            let samples: Vec<(f64, bool)> = samples.into_iter().map(|(s, l)| (f64::from(s) / 4.0, l)).collect();
            let th = fit_threshold(&samples).unwrap();
            prop_assert_eq!(th.accuracy, sweep_oracle(&samples, th.value));
            // no cut anywhere does better
            for x in -90..90 {
                let v = f64::from(x) / 8.0 + 1.0 / 16.0;
                prop_assert!(sweep_oracle(&samples, v) <= th.accuracy);
            }
        }
    }

    fn graph_and_model() -> (KnowledgeGraph, EmbeddingModel) {
        // DistMult in 1-D: score = h * r * t
        let kg = KnowledgeGraph::builder()
            .entity("a", "A", "")
            .entity("b", "B", "")
            .entity("c", "C", "")
            .entity("d", "D", "")
            .relation("r", "r")
            .relation("s", "s")
            .triple(SplitKind::Train, "a", "r", "b")
            .labeled(SplitKind::Valid, "b", "r", "d", true)
            .labeled(SplitKind::Valid, "a", "r", "c", false)
            .labeled(SplitKind::Test, "a", "r", "d", true)
            .labeled(SplitKind::Test, "c", "r", "c", false)
            .labeled(SplitKind::Test, "a", "s", "b", true)
            .labeled(SplitKind::Test, "b", "s", "a", false)
            .build(LoadMode::Strict)
            .unwrap()
            .graph;
        let ents = kg.entities().iter().cloned().collect();
        let rels = kg.relations().iter().cloned().collect();
        let m = EmbeddingModel::new(ModelKind::DistMult, Norm::L2, 1, ents, rels, vec![1.0, 2.0, -1.0, 3.0], vec![1.0, 0.5]);
        (kg, m)
    }

    #[test]
    fn per_relation_with_global_fallback() {
        let (kg, m) = graph_and_model();
        let rep = triplet_classification(&m, &kg, 0).unwrap();
        assert_eq!(rep.n_valid, 2);
        assert_eq!(rep.n_test, 4);
        // valid scores for r: 6 (pos), -1 (neg) → midpoint 2.5
        assert_eq!(rep.thresholds[&RelationId::new("r").unwrap()].value, 2.5);
        assert_eq!(rep.n_fallback, 2);
        // r: a-r-d = 3 right, c-r-c = 1 right; s via global 2.5: a-s-b = 1 wrong, b-s-a = 1 right
        assert_eq!(rep.accuracy, 0.75);
        assert_eq!(rep.valid_accuracy, 1.0);
    }

    #[test]
    fn generated_negatives_are_seeded() {
        let kg = KnowledgeGraph::builder()
            .entity("a", "A", "")
            .entity("b", "B", "")
            .entity("c", "C", "")
            .entity("d", "D", "")
            .relation("r", "r")
            .triple(SplitKind::Train, "a", "r", "b")
            .triple(SplitKind::Valid, "b", "r", "c")
            .triple(SplitKind::Test, "c", "r", "d")
            .build(LoadMode::Strict)
            .unwrap()
            .graph;
        let ents = kg.entities().iter().cloned().collect();
        let rels = kg.relations().iter().cloned().collect();
        let m = EmbeddingModel::new(ModelKind::TransE, Norm::L1, 1, ents, rels, vec![0.0, 1.0, 2.0, 3.0], vec![1.0]);
        let a = triplet_classification(&m, &kg, 3).unwrap();
        assert_eq!((a.n_valid, a.n_test), (2, 2));
        assert_eq!(a, triplet_classification(&m, &kg, 3).unwrap());
        // a perfect translation model separates every tail corruption
        assert_eq!(a.accuracy, 1.0);
    }
}
