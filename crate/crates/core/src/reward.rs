//! Linear Bradley-Terry reward head.
//!
//! `r(x, y) = w·φ(x, y) + b`, `P(y_w ≻ y_l) = σ(r_w − r_l)`, trained by
//! minimizing the mean negative log-likelihood of the observed preferences.
//! The bias cancels in every pairwise difference; it is kept only so the
//! model file can carry absolute scores.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::{EmbeddingTable, FeatureMode, FeatureSource};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub source: FeatureSource,
    pub mode: FeatureMode,
}

impl FeatureSpec {
    pub fn of_table(e: &EmbeddingTable) -> Self {
        Self {
            source: e.source().clone(),
            mode: e.feature_mode(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub cfg: TrainConfig,
    pub final_loss: Option<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardModel {
    pub dim: usize,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub feature_spec: FeatureSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_meta: Option<TrainMeta>,
}

impl RewardModel {
    pub fn zeros(dim: usize, feature_spec: FeatureSpec) -> Self {
        Self {
            dim,
            weights: vec![0.0; dim],
            bias: 0.0,
            feature_spec,
            train_meta: None,
        }
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len(), || "score input".into())?;
        Ok(dot(&self.weights, x) + self.bias)
    }

    fn check_dim(&self, found: usize, context: impl FnOnce() -> String) -> Result<()> {
        if found != self.dim {
            return Err(Error::DimensionMismatch {
                context: context(),
                expected: self.dim,
                found,
            });
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let m: Self = serde_json::from_reader(BufReader::new(file))?;
        m.check_dim(m.weights.len(), || "model weights".into())?;
        if !m.weights.iter().all(|w| w.is_finite()) || !m.bias.is_finite() {
            return Err(Error::InvalidArgument(
                "model has non-finite parameters".into(),
            ));
        }
        Ok(m)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Logistic function, split by sign so neither branch overflows.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `−log σ(t) = log(1 + e^{−t})`.
fn neg_log_sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

/// `P(y_w ≻ y_l) = exp(r_w) / (exp(r_w) + exp(r_l)) = σ(r_w − r_l)`.
pub fn win_probability(r_w: f64, r_l: f64) -> f64 {
    sigmoid(r_w - r_l)
}

/// Mean that is exact when every value is identical: the first value is
/// used as the shift and only deviations are accumulated.
fn shifted_mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut iter = values.into_iter();
    let Some(first) = iter.next() else {
        return f64::NAN;
    };
    let (mut dev, mut n) = (0.0, 1usize);
    for v in iter {
        dev += v - first;
        n += 1;
    }
    first + dev / n as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub grad_w: Vec<f64>,
    pub grad_b: f64,
}

/// Pairwise logistic loss with L2 penalty and its gradient in the weights.
///
/// `loss = mean(−log σ(Δ)) + (l2/2)‖w‖²`, `Δ = w·(x_w − x_l)`; the bias
/// gradient is identically zero.
pub fn loss_and_gradient(m: &RewardModel, batch: &[(&[f64], &[f64])], l2: f64) -> Result<LossGrad> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let mut diffs = Vec::with_capacity(batch.len());
    for (i, (w, l)) in batch.iter().enumerate() {
        m.check_dim(w.len(), || format!("batch[{i}].chosen"))?;
        m.check_dim(l.len(), || format!("batch[{i}].rejected"))?;
        if !w.iter().chain(l.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "batch[{i}] has non-finite features"
            )));
        }
        diffs.push(
            w.iter()
                .zip(l.iter())
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
        );
    }
    let refs: Vec<&[f64]> = diffs.iter().map(Vec::as_slice).collect();
    Ok(loss_grad_on_diffs(&m.weights, &refs, l2))
}

fn loss_grad_on_diffs(weights: &[f64], diffs: &[&[f64]], l2: f64) -> LossGrad {
    let n = diffs.len() as f64;
    let mut grad_w = vec![0.0; weights.len()];
    let mut losses = Vec::with_capacity(diffs.len());
    for d in diffs {
        let delta = dot(weights, d);
        losses.push(neg_log_sigmoid(delta));
        // d/dΔ of −log σ(Δ) is −(1 − σ(Δ)) = −σ(−Δ)
        let coef = -sigmoid(-delta) / n;
        for (g, x) in grad_w.iter_mut().zip(d.iter()) {
            *g += coef * x;
        }
    }
    let sq_norm: f64 = weights.iter().map(|w| w * w).sum();
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g += l2 * w;
    }
    LossGrad {
        loss: shifted_mean(losses) + 0.5 * l2 * sq_norm,
        grad_w,
        grad_b: 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatchSize {
    Full,
    #[serde(untagged)]
    Size(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub batch_size: BatchSize,
    pub seed: u64,
    pub early_stop_patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 100,
            l2: 1e-4,
            batch_size: BatchSize::Full,
            seed: 0,
            early_stop_patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad(format!("l2 must be nonnegative, got {}", self.l2));
        }
        if self.batch_size == BatchSize::Size(0) {
            return bad("batch_size must be positive".into());
        }
        if self.early_stop_patience == Some(0) {
            return bad("early_stop_patience must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Full training objective after this epoch's updates.
    pub loss: f64,
    pub train_accuracy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: RewardModel,
    pub history: Vec<EpochStats>,
}

/// Chosen-minus-rejected feature differences, sorted by id so training only
/// depends on the set of examples, never on their order.
fn sorted_diffs(d: &Dataset, e: &EmbeddingTable, mode: FeatureMode) -> Result<Vec<Vec<f64>>> {
    let pairs = e.pair_features(d, mode)?;
    let mut keyed: Vec<(&str, Vec<f64>)> = d
        .ids()
        .zip(pairs)
        .map(|(id, (w, l))| (id, w.iter().zip(l).map(|(a, b)| a - b).collect()))
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(b.0));
    Ok(keyed.into_iter().map(|(_, v)| v).collect())
}

fn credit(p_win: f64) -> f64 {
    if p_win > 0.5 {
        1.0
    } else if p_win == 0.5 {
        0.5
    } else {
        0.0
    }
}

/// Deterministic gradient descent from the zero model.
pub fn train(
    train_set: &Dataset,
    e: &EmbeddingTable,
    cfg: &TrainConfig,
    eval: Option<&Dataset>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let spec = FeatureSpec::of_table(e);
    let mut model = RewardModel::zeros(e.dim(), spec.clone());
    model.train_meta = Some(TrainMeta {
        cfg: cfg.clone(),
        final_loss: None,
        seed: cfg.seed,
    });
    if cfg.epochs == 0 {
        return Ok(TrainOutcome {
            model,
            history: Vec::new(),
        });
    }
    if train_set.is_empty() {
        return Err(Error::InsufficientData {
            what: "training".into(),
            needed: 1,
            available: 0,
        });
    }
    let diffs = sorted_diffs(train_set, e, spec.mode)?;
    let eval_pairs = eval.map(|d| e.pair_features(d, spec.mode)).transpose()?;
    let n = diffs.len();
    let batch = match cfg.batch_size {
        BatchSize::Full => n,
        BatchSize::Size(b) if b <= n => b,
        BatchSize::Size(b) => {
            return Err(Error::InvalidArgument(format!(
                "batch_size {b} exceeds training set size {n}"
            )))
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut weights = vec![0.0; e.dim()];
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let mut since_best = 0usize;

    for epoch in 1..=cfg.epochs {
        if batch < n {
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(batch) {
            let rows: Vec<&[f64]> = chunk.iter().map(|&i| diffs[i].as_slice()).collect();
            let lg = loss_grad_on_diffs(&weights, &rows, cfg.l2);
            for (w, g) in weights.iter_mut().zip(&lg.grad_w) {
                *w -= cfg.learning_rate * g;
            }
        }

        let all: Vec<&[f64]> = diffs.iter().map(Vec::as_slice).collect();
        let loss = loss_grad_on_diffs(&weights, &all, cfg.l2).loss;
        if !loss.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Diverged { epoch, loss });
        }
        // same arithmetic as `evaluate`, so a saved model reproduces it exactly
        let eval_accuracy = eval_pairs.as_ref().map(|pairs| {
            let credits: f64 = pairs
                .iter()
                .map(|(w, l)| credit(win_probability(dot(&weights, w), dot(&weights, l))))
                .sum();
            credits / pairs.len() as f64
        });
        history.push(EpochStats {
            epoch,
            loss,
            train_accuracy: diff_accuracy(&weights, &diffs),
            eval_accuracy,
        });

        if let (Some(patience), Some(acc)) = (cfg.early_stop_patience, eval_accuracy) {
            match &best {
                Some((best_acc, _, _)) if acc <= *best_acc => {
                    since_best += 1;
                    if since_best >= patience {
                        break;
                    }
                }
                _ => {
                    best = Some((acc, weights.clone(), loss));
                    since_best = 0;
                }
            }
        }
    }

    let final_loss = match best {
        Some((_, w, loss)) => {
            weights = w;
            loss
        }
        None => history.last().map_or(f64::NAN, |h| h.loss),
    };
    model.weights = weights;
    if let Some(meta) = &mut model.train_meta {
        meta.final_loss = Some(final_loss);
    }
    Ok(TrainOutcome { model, history })
}

fn diff_accuracy(weights: &[f64], diffs: &[Vec<f64>]) -> f64 {
    let total: f64 = diffs.iter().map(|d| credit(sigmoid(dot(weights, d)))).sum();
    total / diffs.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairPrediction {
    pub id: String,
    /// Model's `P(chosen ≻ rejected)`.
    pub p_win: f64,
    pub correct: bool,
}

impl PairPrediction {
    pub fn new(id: impl Into<String>, p_win: f64) -> Self {
        Self {
            id: id.into(),
            p_win,
            correct: p_win > 0.5,
        }
    }

    /// 1 for a win, 0.5 for an exact tie, 0 otherwise.
    pub fn credit(&self) -> f64 {
        credit(self.p_win)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub predictions: Vec<PairPrediction>,
}

pub fn evaluate(m: &RewardModel, d: &Dataset, e: &EmbeddingTable) -> Result<Evaluation> {
    if d.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot evaluate on an empty dataset".into(),
        ));
    }
    if e.dim() != m.dim {
        return Err(Error::DimensionMismatch {
            context: "embedding table vs model".into(),
            expected: m.dim,
            found: e.dim(),
        });
    }
    let pairs = e.pair_features(d, m.feature_spec.mode)?;
    let predictions: Vec<PairPrediction> = d
        .ids()
        .zip(pairs)
        .map(|(id, (w, l))| {
            Ok(PairPrediction::new(
                id,
                win_probability(m.score(w)?, m.score(l)?),
            ))
        })
        .collect::<Result<_>>()?;
    let accuracy = predictions.iter().map(PairPrediction::credit).sum::<f64>() / d.len() as f64;
    Ok(Evaluation {
        accuracy,
        predictions,
    })
}

/// Empirical CDF of `p_win` sampled at `grid` evenly spaced points of `[0, 1]`.
pub fn probability_ecdf(predictions: &[PairPrediction], grid: usize) -> Result<Vec<(f64, f64)>> {
    if predictions.is_empty() {
        return Err(Error::InvalidArgument("ECDF of no predictions".into()));
    }
    if grid == 0 {
        return Err(Error::InvalidArgument("ECDF grid must be positive".into()));
    }
    let mut ps: Vec<f64> = predictions.iter().map(|p| p.p_win).collect();
    ps.sort_by(f64::total_cmp);
    let n = ps.len() as f64;
    let points = (0..grid).map(|k| {
        let v = if grid == 1 {
            1.0
        } else {
            k as f64 / (grid - 1) as f64
        };
        let below = ps.partition_point(|&p| p <= v);
        (v, below as f64 / n)
    });
    Ok(points.collect())
}

/// Mean `|p_win − 0.5|`: 0 for a maximally uncertain model, 0.5 for a
/// fully confident one.
pub fn concentration(predictions: &[PairPrediction]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::InvalidArgument(
            "concentration of no predictions".into(),
        ));
    }
    Ok(predictions
        .iter()
        .map(|p| (p.p_win - 0.5).abs())
        .sum::<f64>()
        / predictions.len() as f64)
}
