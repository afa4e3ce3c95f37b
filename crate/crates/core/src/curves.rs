//! Scale-axis analyses: scaling sweeps over nested subsamples, gain per
//! doubling, saturation curves, and the high-information vs. random
//! training comparison.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{subsample_size, Dataset};
use crate::error::{Error, Result};
use crate::features::{high_info_subset, EmbeddingTable};
use crate::reward::{evaluate, train, TrainConfig};

/// Doubling ladder from 1/64 of the data up to all of it.
pub const DEFAULT_FRACTIONS: [f64; 7] = [0.0156, 0.03125, 0.0625, 0.125, 0.25, 0.5, 1.0];
pub const DEFAULT_SATURATION_TARGET: f64 = 0.95;
const DOUBLING_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingCurve {
    pub fractions: Vec<f64>,
    pub sizes: Vec<usize>,
    pub accuracy: Vec<f64>,
    pub seed: u64,
}

fn validate_fractions(fractions: &[f64]) -> Result<()> {
    if fractions.is_empty() {
        return Err(Error::InvalidArgument("no fractions given".into()));
    }
    if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
        return Err(Error::InvalidArgument(format!(
            "fractions must lie in (0, 1], got {f}"
        )));
    }
    if fractions.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "fractions must be strictly ascending".into(),
        ));
    }
    Ok(())
}

/// Trains from scratch on each nested subsample and evaluates on `eval`.
pub fn scaling_sweep(
    train_set: &Dataset,
    eval: &Dataset,
    e: &EmbeddingTable,
    fractions: &[f64],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<ScalingCurve> {
    validate_fractions(fractions)?;
    let accuracy = fractions
        .par_iter()
        .map(|&f| {
            let sub = train_set.subsample(f, seed)?;
            let model = train(&sub, e, cfg, None)?.model;
            Ok(evaluate(&model, eval, e)?.accuracy)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScalingCurve {
        fractions: fractions.to_vec(),
        sizes: fractions
            .iter()
            .map(|&f| subsample_size(f, train_set.len()))
            .collect(),
        accuracy,
        seed,
    })
}

/// Mean accuracy-point difference between consecutive ladder rungs.
pub fn doubling_gain(c: &ScalingCurve) -> Result<f64> {
    if c.fractions.len() < 2 {
        return Err(Error::InvalidArgument(
            "doubling gain needs at least two points".into(),
        ));
    }
    if let Some(w) = c
        .fractions
        .windows(2)
        .find(|w| ((w[1] / w[0]) / 2.0 - 1.0).abs() > DOUBLING_TOLERANCE)
    {
        return Err(Error::InvalidArgument(format!(
            "fractions {} -> {} are not a doubling",
            w[0], w[1]
        )));
    }
    let steps = c.accuracy.windows(2).map(|w| w[1] - w[0]);
    Ok(steps.sum::<f64>() / (c.accuracy.len() - 1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationCurve {
    pub data_fraction: Vec<f64>,
    /// Accuracy relative to the full-data accuracy.
    pub performance_fraction: Vec<f64>,
    /// Smallest fraction reaching `target`; `None` only when `target > 1`.
    pub saturation_point: Option<f64>,
    pub target: f64,
}

pub fn saturation(c: &ScalingCurve, target: f64) -> Result<SaturationCurve> {
    let full = c
        .fractions
        .iter()
        .position(|&f| f == 1.0)
        .ok_or_else(|| Error::InvalidArgument("scaling curve has no full-data point".into()))?;
    let full_acc = c.accuracy[full];
    if full_acc.is_nan() || full_acc <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "full-data accuracy must be positive, got {full_acc}"
        )));
    }
    let performance_fraction: Vec<f64> = c
        .accuracy
        .iter()
        .enumerate()
        .map(|(i, &a)| if i == full { 1.0 } else { a / full_acc })
        .collect();
    let saturation_point = c
        .fractions
        .iter()
        .zip(&performance_fraction)
        .find(|(_, &p)| p >= target)
        .map(|(&f, _)| f);
    Ok(SaturationCurve {
        data_fraction: c.fractions.clone(),
        performance_fraction,
        saturation_point,
        target,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetKind {
    HighInfo,
    Random,
}

impl SubsetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SubsetKind::HighInfo => "high_info",
            SubsetKind::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoCompareRow {
    pub kind: SubsetKind,
    pub seed: u64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoCompare {
    pub threshold: f64,
    pub size: usize,
    pub rows: Vec<InfoCompareRow>,
    /// Mean over seeds of `accuracy(high_info) − accuracy(random)`.
    pub mean_difference: f64,
}

/// For each seed, trains on a high-information subset and on a random
/// subset of the same size, and evaluates both on `eval`.
pub fn info_compare(
    train_set: &Dataset,
    eval: &Dataset,
    e: &EmbeddingTable,
    threshold: f64,
    size: usize,
    cfg: &TrainConfig,
    seeds: &[u64],
) -> Result<InfoCompare> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument(
            "info comparison needs at least one seed".into(),
        ));
    }
    if size == 0 || size > train_set.len() {
        return Err(Error::InvalidArgument(format!(
            "subset size must lie in 1..={}, got {size}",
            train_set.len()
        )));
    }
    let pairs = seeds
        .par_iter()
        .map(|&seed| {
            let high = high_info_subset(train_set, e, threshold, size, seed)?;
            let random = train_set.sample(size, seed)?;
            let run = |d: &Dataset| -> Result<f64> {
                let cfg = TrainConfig {
                    seed,
                    ..cfg.clone()
                };
                Ok(evaluate(&train(d, e, &cfg, None)?.model, eval, e)?.accuracy)
            };
            Ok((run(&high)?, run(&random)?))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;

    let mut rows = Vec::with_capacity(2 * seeds.len());
    for (&seed, &(high, random)) in seeds.iter().zip(&pairs) {
        rows.push(InfoCompareRow {
            kind: SubsetKind::HighInfo,
            seed,
            accuracy: high,
        });
        rows.push(InfoCompareRow {
            kind: SubsetKind::Random,
            seed,
            accuracy: random,
        });
    }
    let mean_difference = pairs.iter().map(|(h, r)| h - r).sum::<f64>() / pairs.len() as f64;
    Ok(InfoCompare {
        threshold,
        size,
        rows,
        mean_difference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(fractions: &[f64], accuracy: &[f64]) -> ScalingCurve {
        ScalingCurve {
            fractions: fractions.to_vec(),
            sizes: vec![0; fractions.len()],
            accuracy: accuracy.to_vec(),
            seed: 0,
        }
    }

    #[test]
    fn doubling_gain_cases() {
        let f = [0.25, 0.5, 1.0];
        assert_eq!(doubling_gain(&curve(&f, &[0.7, 0.7, 0.7])).unwrap(), 0.0);
        let g = doubling_gain(&curve(&f, &[0.6, 0.7, 0.8])).unwrap();
        assert!((g - 0.1).abs() < 1e-12);
        let acc: Vec<f64> = (0..7).map(|i| 0.55 + 0.024 * i as f64).collect();
        let g = doubling_gain(&curve(&DEFAULT_FRACTIONS, &acc)).unwrap();
        assert!((g - 0.024).abs() < 1e-12);
        assert!(doubling_gain(&curve(&[0.2, 0.5, 1.0], &[0.5, 0.6, 0.7])).is_err());
        assert!(doubling_gain(&curve(&[1.0], &[0.5])).is_err());
    }

    #[test]
    fn saturation_cases() {
        let f = [0.125, 0.25, 0.5, 1.0];
        let s = saturation(&curve(&f, &[0.60, 0.70, 0.77, 0.80]), 0.95).unwrap();
        // 0.77 / 0.80 = 0.9625 is the first to clear 0.95
        assert_eq!(s.saturation_point, Some(0.5));
        assert_eq!(s.performance_fraction[3], 1.0);

        let flat = saturation(&curve(&f, &[0.8; 4]), 0.95).unwrap();
        assert_eq!(flat.saturation_point, Some(0.125));

        assert!(saturation(&curve(&[0.5], &[0.8]), 0.9).is_err());
        assert!(saturation(&curve(&[1.0], &[0.0]), 0.9).is_err());
    }

    #[test]
    fn fraction_validation() {
        assert!(validate_fractions(&[0.5, 0.25]).is_err());
        assert!(validate_fractions(&[0.0, 1.0]).is_err());
        assert!(validate_fractions(&DEFAULT_FRACTIONS).is_ok());
    }
}
