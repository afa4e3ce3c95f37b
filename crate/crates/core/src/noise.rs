//! Symmetric label-flip noise and the noise-invariance sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FLIPPED_META_KEY};
use crate::error::{Error, Result};
use crate::features::EmbeddingTable;
use crate::hashing::{unit_draw, Domain};
use crate::reward::{self, concentration, PairPrediction, TrainConfig};

pub const DEFAULT_NOISE_RATES: [f64; 5] = [0.0, 0.1, 0.2, 0.3, 0.4];
/// Sweeps stop at 0.5: beyond it the task is the mirror image of a cleaner one.
pub const MAX_SWEEP_RATE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub rate: f64,
    pub seed: u64,
}

impl NoiseSpec {
    /// Per-id Bernoulli(rate) decision, independent of dataset order and
    /// membership. Flip sets are nested across rates for a fixed seed.
    pub fn flips(&self, id: &str) -> bool {
        unit_draw(Domain::Flip, self.seed, id) < self.rate
    }
}

/// Swaps chosen and rejected on the rows selected by `spec`. Swapped rows
/// toggle the `flipped` meta flag, so applying the same spec twice restores
/// the input exactly.
pub fn flip_labels(d: &Dataset, spec: &NoiseSpec) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&spec.rate) {
        return Err(Error::InvalidArgument(format!(
            "noise rate must lie in [0, 1], got {}",
            spec.rate
        )));
    }
    let examples = d
        .iter()
        .map(|ex| {
            let mut ex = ex.clone();
            if spec.flips(&ex.id) {
                std::mem::swap(&mut ex.chosen, &mut ex.rejected);
                if ex.is_flipped() {
                    ex.meta.remove(FLIPPED_META_KEY);
                } else {
                    ex.meta.insert(FLIPPED_META_KEY.into(), "true".into());
                }
            }
            ex
        })
        .collect();
    Ok(d.derive(examples))
}

pub fn count_flips(d: &Dataset, spec: &NoiseSpec) -> usize {
    d.ids().filter(|id| spec.flips(id)).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweepResult {
    pub rates: Vec<f64>,
    pub accuracy: Vec<f64>,
    pub concentration: Vec<f64>,
    /// Accuracy divided by the peak accuracy across the sweep.
    pub invariance_score: Vec<f64>,
    pub flip_counts: Vec<usize>,
}

/// One trained-and-evaluated noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub rate: f64,
    pub accuracy: f64,
    pub concentration: f64,
    pub flips: usize,
    pub predictions: Vec<PairPrediction>,
}

pub(crate) fn validate_rates(rates: &[f64]) -> Result<()> {
    if rates.is_empty() {
        return Err(Error::InvalidArgument("no noise rates given".into()));
    }
    if let Some(r) = rates.iter().find(|r| !(0.0..=MAX_SWEEP_RATE).contains(*r)) {
        return Err(Error::InvalidArgument(format!(
            "sweep noise rates must lie in [0, {MAX_SWEEP_RATE}], got {r}"
        )));
    }
    if rates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "noise rates must be strictly ascending".into(),
        ));
    }
    Ok(())
}

/// Trains one model per rate on the flipped training set and evaluates it
/// on the untouched eval set. Points run in parallel and come back in rate
/// order.
pub fn sweep_points(
    train: &Dataset,
    eval: &Dataset,
    e: &EmbeddingTable,
    rates: &[f64],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    validate_rates(rates)?;
    rates
        .par_iter()
        .map(|&rate| {
            let spec = NoiseSpec { rate, seed };
            let noisy = flip_labels(train, &spec)?;
            let outcome = reward::train(&noisy, e, cfg, None)?;
            let ev = reward::evaluate(&outcome.model, eval, e)?;
            Ok(SweepPoint {
                rate,
                accuracy: ev.accuracy,
                concentration: concentration(&ev.predictions)?,
                flips: count_flips(train, &spec),
                predictions: ev.predictions,
            })
        })
        .collect()
}

impl NoiseSweepResult {
    pub fn from_points(points: &[SweepPoint]) -> Self {
        let peak = points
            .iter()
            .map(|p| p.accuracy)
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            rates: points.iter().map(|p| p.rate).collect(),
            accuracy: points.iter().map(|p| p.accuracy).collect(),
            concentration: points.iter().map(|p| p.concentration).collect(),
            invariance_score: points
                .iter()
                .map(|p| if peak > 0.0 { p.accuracy / peak } else { 0.0 })
                .collect(),
            flip_counts: points.iter().map(|p| p.flips).collect(),
        }
    }

    pub fn score_at(&self, rate: f64) -> Option<f64> {
        self.rates
            .iter()
            .position(|&r| (r - rate).abs() < 1e-12)
            .map(|i| self.invariance_score[i])
    }
}

pub fn noise_sweep(
    train: &Dataset,
    eval: &Dataset,
    e: &EmbeddingTable,
    rates: &[f64],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<NoiseSweepResult> {
    Ok(NoiseSweepResult::from_points(&sweep_points(
        train, eval, e, rates, cfg, seed,
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::PreferenceExample;
    use std::collections::HashSet;

    fn numbered(n: usize) -> Dataset {
        let examples = (0..n)
            .map(|i| PreferenceExample {
                id: format!("ex-{i}"),
                prompt: "p".into(),
                chosen: format!("good {i}"),
                rejected: format!("bad {i}"),
                meta: Default::default(),
            })
            .collect();
        Dataset::from_examples("mem", examples).unwrap()
    }

    #[test]
    fn identity_and_involution() {
        let d = numbered(100);
        assert_eq!(
            flip_labels(&d, &NoiseSpec { rate: 0.0, seed: 1 }).unwrap(),
            d
        );
        let all = NoiseSpec { rate: 1.0, seed: 1 };
        let once = flip_labels(&d, &all).unwrap();
        assert!(once
            .iter()
            .zip(&d)
            .all(|(a, b)| a.chosen == b.rejected && a.is_flipped()));
        assert_eq!(flip_labels(&once, &all).unwrap(), d);
    }

    #[test]
    fn flip_sets_are_nested() {
        let d = numbered(500);
        let set = |rate| -> HashSet<String> {
            flip_labels(&d, &NoiseSpec { rate, seed: 4 })
                .unwrap()
                .iter()
                .filter(|e| e.is_flipped())
                .map(|e| e.id.clone())
                .collect()
        };
        let (a, b) = (set(0.1), set(0.35));
        assert!(a.is_subset(&b) && a.len() < b.len());
    }

    #[test]
    fn decision_ignores_membership() {
        let d = numbered(300);
        let spec = NoiseSpec { rate: 0.3, seed: 8 };
        let sub = d.subsample(0.2, 5).unwrap();
        let full = flip_labels(&d, &spec).unwrap();
        let part = flip_labels(&sub, &spec).unwrap();
        for ex in &part {
            let twin = full.iter().find(|f| f.id == ex.id).unwrap();
            assert_eq!(twin, ex);
        }
    }

    #[test]
    fn rate_validation() {
        assert!(flip_labels(&numbered(2), &NoiseSpec { rate: 1.2, seed: 0 }).is_err());
        assert!(validate_rates(&[0.0, 0.6]).is_err());
        assert!(validate_rates(&[0.2, 0.1]).is_err());
        assert!(validate_rates(&[]).is_err());
        assert!(validate_rates(&DEFAULT_NOISE_RATES).is_ok());
    }

    #[test]
    fn invariance_normalized_by_peak() {
        let pt = |rate, accuracy| SweepPoint {
            rate,
            accuracy,
            concentration: 0.1,
            flips: 0,
            predictions: vec![],
        };
        let r = NoiseSweepResult::from_points(&[pt(0.0, 0.8), pt(0.1, 0.84), pt(0.2, 0.42)]);
        assert_eq!(r.invariance_score[1], 1.0);
        assert!((r.invariance_score[2] - 0.5).abs() < 1e-15);
        assert!(r.invariance_score.iter().all(|&s| s <= 1.0));
        assert_eq!(r.score_at(0.2), Some(r.invariance_score[2]));
    }
}
