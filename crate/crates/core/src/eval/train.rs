//! Minibatch SGD for TransE (margin ranking loss) and DistMult (logistic
//! loss), with uniform head-or-tail corruption. Single-threaded so a seed
//! fixes the result bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{EmbeddingModel, ModelKind, Norm};
use super::EvalError;
use crate::kg::KnowledgeGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub kind: ModelKind,
    pub norm: Norm,
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// TransE only.
    pub margin: f64,
    pub negatives_per_positive: usize,
    pub batch_size: usize,
    /// DistMult only: L2 penalty on the embeddings of each scored triple.
    pub l2_reg: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::TransE,
            norm: Norm::L2,
            dim: 32,
            epochs: 200,
            learning_rate: 0.01,
            margin: 1.0,
            negatives_per_positive: 1,
            batch_size: 32,
            l2_reg: 1e-4,
            seed: 7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |what: &str| Err(EvalError::InvalidConfig(what.to_string()));
        if self.dim == 0 {
            return bad("dim must be >= 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be > 0");
        }
        if !(self.margin.is_finite() && self.margin > 0.0) {
            return bad("margin must be > 0");
        }
        if self.negatives_per_positive == 0 {
            return bad("negatives_per_positive must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.l2_reg.is_finite() && self.l2_reg >= 0.0) {
            return bad("l2_reg must be >= 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: EmbeddingModel,
    /// Mean loss per (positive, negative) pair, one value per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Dense gradient buffer that remembers which rows were written.
struct SparseGrad {
    dim: usize,
    values: Vec<f64>,
    touched: Vec<usize>,
    mark: Vec<bool>,
}

impl SparseGrad {
    fn new(rows: usize, dim: usize) -> Self {
        Self {
            dim,
            values: vec![0.0; rows * dim],
            touched: Vec::new(),
            mark: vec![false; rows],
        }
    }

    fn add(&mut self, row: usize, scale: f64, g: &[f64]) {
        if !self.mark[row] {
            self.mark[row] = true;
            self.touched.push(row);
        }
        let dst = &mut self.values[row * self.dim..(row + 1) * self.dim];
        for (d, x) in dst.iter_mut().zip(g) {
            *d += scale * x;
        }
    }

    /// `params -= lr * grad` on touched rows, then clears the buffer.
    /// Returns the touched rows.
    fn apply(&mut self, params: &mut [f64], lr: f64) -> Vec<usize> {
        let dim = self.dim;
        for &row in &self.touched {
            let g = &mut self.values[row * dim..(row + 1) * dim];
            let p = &mut params[row * dim..(row + 1) * dim];
            for (p, g) in p.iter_mut().zip(g.iter_mut()) {
                *p -= lr * *g;
                *g = 0.0;
            }
            self.mark[row] = false;
        }
        std::mem::take(&mut self.touched)
    }
}

fn normalize_rows(buf: &mut [f64], dim: usize, rows: impl IntoIterator<Item = usize>) {
    for row in rows {
        let v = &mut buf[row * dim..(row + 1) * dim];
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Gradient of the TransE distance with respect to `h + r - t`.
fn distance_grad(norm: Norm, diff: &[f64], out: &mut [f64]) {
    match norm {
        Norm::L1 => {
            for (o, d) in out.iter_mut().zip(diff) {
                *o = if *d > 0.0 {
                    1.0
                } else if *d < 0.0 {
                    -1.0
                } else {
                    0.0
                };
            }
        }
        Norm::L2 => {
            let n = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
            for (o, d) in out.iter_mut().zip(diff) {
                *o = if n > 0.0 { d / n } else { 0.0 };
            }
        }
    }
}

pub fn train(kg: &KnowledgeGraph, cfg: &TrainConfig) -> Result<TrainOutcome, EvalError> {
    cfg.validate()?;
    let entities: Vec<_> = kg.entities().iter().cloned().collect();
    let relations: Vec<_> = kg.relations().iter().cloned().collect();
    let triples: Vec<(usize, usize, usize)> = kg
        .train()
        .positives()
        .map(|t| {
            Ok((
                kg.entities().get_index_of(&t.head).ok_or_else(|| EvalError::UnknownEntity(t.head.to_string()))?,
                kg.relations()
                    .get_index_of(&t.relation)
                    .ok_or_else(|| EvalError::UnknownRelation(t.relation.to_string()))?,
                kg.entities().get_index_of(&t.tail).ok_or_else(|| EvalError::UnknownEntity(t.tail.to_string()))?,
            ))
        })
        .collect::<Result<_, EvalError>>()?;
    if triples.is_empty() {
        return Err(EvalError::EmptyTrainingSet);
    }

    let dim = cfg.dim;
    let n_e = entities.len();
    let n_r = relations.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let bound = match cfg.kind {
        ModelKind::TransE => 6.0 / (dim as f64).sqrt(),
        ModelKind::DistMult => (6.0 / (2.0 * dim as f64)).sqrt(),
    };
    let mut ent: Vec<f64> = (0..n_e * dim).map(|_| rng.random_range(-bound..bound)).collect();
    let mut rel: Vec<f64> = (0..n_r * dim).map(|_| rng.random_range(-bound..bound)).collect();
    if cfg.kind == ModelKind::TransE {
        normalize_rows(&mut rel, dim, 0..n_r);
        normalize_rows(&mut ent, dim, 0..n_e);
    }

    let mut ent_grad = SparseGrad::new(n_e, dim);
    let mut rel_grad = SparseGrad::new(n_r, dim);
    let mut order: Vec<usize> = (0..triples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut diff = vec![0.0; dim];
    let mut g_pos = vec![0.0; dim];
    let mut g_neg = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];

    for epoch in 0..cfg.epochs {
        // Fisher-Yates with the run's own RNG stream
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let mut epoch_loss = 0.0;
        let mut pairs = 0usize;

        for (batch_no, batch) in order.chunks(cfg.batch_size).enumerate() {
            let mut batch_loss = 0.0;
            for &ti in batch {
                let (h, r, t) = triples[ti];
                for _ in 0..cfg.negatives_per_positive {
                    let corrupt_head = rng.random_bool(0.5);
                    let original = if corrupt_head { h } else { t };
                    let mut c = rng.random_range(0..n_e);
                    if n_e > 1 {
                        while c == original {
                            c = rng.random_range(0..n_e);
                        }
                    }
                    let (nh, nt) = if corrupt_head { (c, t) } else { (h, c) };
                    pairs += 1;

                    let row = |buf: &[f64], i: usize| buf[i * dim..(i + 1) * dim].to_vec();
                    match cfg.kind {
                        ModelKind::TransE => {
                            let (hv, rv, tv) = (row(&ent, h), row(&rel, r), row(&ent, t));
                            let (nhv, ntv) = (row(&ent, nh), row(&ent, nt));
                            let d_pos = -super::model::score_vectors(cfg.kind, cfg.norm, &hv, &rv, &tv);
                            let d_neg = -super::model::score_vectors(cfg.kind, cfg.norm, &nhv, &rv, &ntv);
                            let loss = cfg.margin + d_pos - d_neg;
                            if loss > 0.0 {
                                batch_loss += loss;
                                for k in 0..dim {
                                    diff[k] = hv[k] + rv[k] - tv[k];
                                }
                                distance_grad(cfg.norm, &diff, &mut g_pos);
                                for k in 0..dim {
                                    diff[k] = nhv[k] + rv[k] - ntv[k];
                                }
                                distance_grad(cfg.norm, &diff, &mut g_neg);
                                ent_grad.add(h, 1.0, &g_pos);
                                ent_grad.add(t, -1.0, &g_pos);
                                rel_grad.add(r, 1.0, &g_pos);
                                ent_grad.add(nh, -1.0, &g_neg);
                                ent_grad.add(nt, 1.0, &g_neg);
                                rel_grad.add(r, -1.0, &g_neg);
                            }
                        }
                        ModelKind::DistMult => {
                            for (a, b, c, label) in [(h, r, t, 1.0), (nh, r, nt, 0.0)] {
                                let (av, bv, cv) = (row(&ent, a), row(&rel, b), row(&ent, c));
                                let s = super::model::score_vectors(cfg.kind, cfg.norm, &av, &bv, &cv);
                                let sq: f64 = av.iter().chain(&bv).chain(&cv).map(|x| x * x).sum();
                                batch_loss += if label > 0.0 { softplus(-s) } else { softplus(s) }
                                    + cfg.l2_reg * sq;
                                let coef = sigmoid(s) - label;
                                let reg = 2.0 * cfg.l2_reg;
                                for k in 0..dim {
                                    tmp[k] = bv[k] * cv[k];
                                }
                                ent_grad.add(a, coef, &tmp);
                                ent_grad.add(a, reg, &av);
                                for k in 0..dim {
                                    tmp[k] = av[k] * cv[k];
                                }
                                rel_grad.add(b, coef, &tmp);
                                rel_grad.add(b, reg, &bv);
                                for k in 0..dim {
                                    tmp[k] = av[k] * bv[k];
                                }
                                ent_grad.add(c, coef, &tmp);
                                ent_grad.add(c, reg, &cv);
                            }
                        }
                    }
                }
            }
            if !batch_loss.is_finite() {
                return Err(EvalError::NonFiniteLoss {
                    epoch,
                    batch: batch_no,
                    loss: batch_loss,
                });
            }
            epoch_loss += batch_loss;
            let touched = ent_grad.apply(&mut ent, cfg.learning_rate);
            rel_grad.apply(&mut rel, cfg.learning_rate);
            if cfg.kind == ModelKind::TransE {
                normalize_rows(&mut ent, dim, touched);
            }
        }
        epoch_losses.push(epoch_loss / pairs.max(1) as f64);
    }

    let mut model = EmbeddingModel::new(cfg.kind, cfg.norm, dim, entities, relations, ent, rel);
    if !model.is_finite() {
        return Err(EvalError::NonFiniteLoss {
            epoch: cfg.epochs,
            batch: 0,
            loss: f64::NAN,
        });
    }
    model.config = Some(cfg.clone());
    Ok(TrainOutcome {
        model,
        epoch_losses,
    })
}
