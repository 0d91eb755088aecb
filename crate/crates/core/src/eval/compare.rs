use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classify::triplet_classification;
use super::rank::{link_prediction, FilterSetting};
use super::train::{train, TrainConfig};
use super::EvalError;
use crate::kg::{KnowledgeGraph, SplitKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub mr: f64,
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
    /// Triplet classification accuracy on test.
    pub accuracy: Option<f64>,
}

impl RunMetrics {
    fn minus(&self, other: &RunMetrics) -> RunMetrics {
        RunMetrics {
            mr: self.mr - other.mr,
            mrr: self.mrr - other.mrr,
            hits1: self.hits1 - other.hits1,
            hits3: self.hits3 - other.hits3,
            hits10: self.hits10 - other.hits10,
            accuracy: self.accuracy.zip(other.accuracy).map(|(a, b)| a - b),
        }
    }

    fn median_of(rows: &[RunMetrics]) -> RunMetrics {
        let col = |f: fn(&RunMetrics) -> f64| median(&rows.iter().map(f).collect::<Vec<_>>());
        let acc: Option<Vec<f64>> = rows.iter().map(|r| r.accuracy).collect();
        RunMetrics {
            mr: col(|r| r.mr),
            mrr: col(|r| r.mrr),
            hits1: col(|r| r.hits1),
            hits3: col(|r| r.hits3),
            hits10: col(|r| r.hits10),
            accuracy: acc.map(|a| median(&a)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRow {
    pub seed: u64,
    pub base: RunMetrics,
    pub augmented: RunMetrics,
    /// augmented − base
    pub delta: RunMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub base_fingerprint: String,
    pub augmented_fingerprint: String,
    pub config: TrainConfig,
    pub setting: FilterSetting,
    pub rows: Vec<SeedRow>,
    pub median_base: RunMetrics,
    pub median_augmented: RunMetrics,
    pub median_delta: RunMetrics,
}

/// Middle value; mean of the two middle values for even lengths.
/// Panics on an empty slice.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn run_once(kg: &KnowledgeGraph, cfg: &TrainConfig) -> Result<RunMetrics, EvalError> {
    let model = train(kg, cfg)?.model;
    let lp = link_prediction(&model, kg, SplitKind::Test, FilterSetting::Filtered)?;
    let accuracy = match triplet_classification(&model, kg, cfg.seed) {
        Ok(c) => Some(c.accuracy),
        Err(EvalError::EmptySplit(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(RunMetrics {
        mr: lp.metrics.mr,
        mrr: lp.metrics.mrr,
        hits1: lp.metrics.hits1,
        hits3: lp.metrics.hits3,
        hits10: lp.metrics.hits10,
        accuracy,
    })
}

/// Trains on both graphs with seeds `cfg.seed .. cfg.seed + n_seeds` and
/// evaluates each on the shared test split.
pub fn ab_compare(
    base: &KnowledgeGraph,
    augmented: &KnowledgeGraph,
    cfg: &TrainConfig,
    n_seeds: usize,
) -> Result<ComparisonReport, EvalError> {
    cfg.validate()?;
    if n_seeds == 0 {
        return Err(EvalError::InvalidConfig("n_seeds must be >= 1".into()));
    }
    for kind in [SplitKind::Valid, SplitKind::Test] {
        if base.split(kind) != augmented.split(kind) {
            return Err(EvalError::SplitMismatch(kind));
        }
    }
    let rows = (0..n_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i);
            let run_cfg = TrainConfig { seed, ..cfg.clone() };
            let b = run_once(base, &run_cfg)?;
            let a = run_once(augmented, &run_cfg)?;
            Ok(SeedRow {
                seed,
                base: b,
                augmented: a,
                delta: a.minus(&b),
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;

    let pick = |f: fn(&SeedRow) -> RunMetrics| RunMetrics::median_of(&rows.iter().map(f).collect::<Vec<_>>());
    Ok(ComparisonReport {
        base_fingerprint: base.fingerprint()?,
        augmented_fingerprint: augmented.fingerprint()?,
        config: cfg.clone(),
        setting: FilterSetting::Filtered,
        median_base: pick(|r| r.base),
        median_augmented: pick(|r| r.augmented),
        median_delta: pick(|r| r.delta),
        rows,
    })
}

impl ComparisonReport {
    /// Fixed-width plain-text table, one line per seed and three median lines.
    pub fn to_table(&self) -> String {
        let header = ["run", "MR", "MRR", "Hits@1", "Hits@3", "Hits@10", "Acc"];
        let mut lines: Vec<[String; 7]> = Vec::new();
        let fmt_row = |label: String, m: &RunMetrics| -> [String; 7] {
            [
                label,
                format!("{:.3}", m.mr),
                format!("{:.4}", m.mrr),
                format!("{:.4}", m.hits1),
                format!("{:.4}", m.hits3),
                format!("{:.4}", m.hits10),
                m.accuracy.map_or_else(|| "-".to_string(), |a| format!("{a:.4}")),
            ]
        };
        for row in &self.rows {
            lines.push(fmt_row(format!("seed {} base", row.seed), &row.base));
            lines.push(fmt_row(format!("seed {} augmented", row.seed), &row.augmented));
            lines.push(fmt_row(format!("seed {} delta", row.seed), &row.delta));
        }
        lines.push(fmt_row("median base".into(), &self.median_base));
        lines.push(fmt_row("median augmented".into(), &self.median_augmented));
        lines.push(fmt_row("median delta".into(), &self.median_delta));

        let mut widths = header.map(str::len);
        for l in &lines {
            for (w, c) in widths.iter_mut().zip(l) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let mut emit = |cells: &[&str]| {
            for (i, (c, w)) in cells.iter().zip(widths).enumerate() {
                if i == 0 {
                    let _ = write!(out, "{c:<w$}");
                } else {
                    let _ = write!(out, "  {c:>w$}");
                }
            }
            out.push('\n');
        };
        emit(&header);
        for l in &lines {
            emit(&l.iter().map(String::as_str).collect::<Vec<_>>());
        }
        out
    }
}
