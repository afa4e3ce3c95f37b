//! Calibration of pairwise win probabilities.
//!
//! Using `P(y_w ≻ y_l)` directly as a confidence only ever scores the
//! chosen-first ordering. Each evaluated pair is instead expanded into two
//! ordered records, `(q, z = 1)` for chosen-first and `(1 − q, z = 0)` for
//! rejected-first, so confidences span the whole of `[0, 1]`. Records are
//! then binned on equal-width, right-closed intervals
//! `[0, 1/M], (1/M, 2/M], …, ((M−1)/M, 1]` and
//! `ECE = Σ_m |B_m|/n · |acc(B_m) − conf(B_m)|`.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::EmbeddingTable;
use crate::noise::{sweep_points, SweepPoint};
use crate::reward::{PairPrediction, TrainConfig};

pub const DEFAULT_CALIBRATION_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZRecord {
    pub id: String,
    /// Model's probability that the first-listed response wins.
    pub p_first_wins: f64,
    /// 1 iff the first-listed response is the labelled winner.
    pub z: u8,
}

pub fn z_split(predictions: &[PairPrediction]) -> Vec<ZRecord> {
    predictions
        .iter()
        .flat_map(|p| {
            [
                ZRecord {
                    id: p.id.clone(),
                    p_first_wins: p.p_win,
                    z: 1,
                },
                ZRecord {
                    id: p.id.clone(),
                    p_first_wins: 1.0 - p.p_win,
                    z: 0,
                },
            ]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Mean confidence; `None` for an empty bin.
    pub conf: Option<f64>,
    /// Fraction of records with `z = 1`; `None` for an empty bin.
    pub acc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub bins: Vec<CalibrationBin>,
    pub ece: f64,
    pub n_records: usize,
}

impl CalibrationReport {
    /// ECE recomputed from the bin table alone.
    pub fn ece_from_bins(&self) -> f64 {
        let n = self.n_records as f64;
        self.bins
            .iter()
            .filter_map(|b| Some(b.count as f64 / n * (b.acc? - b.conf?).abs()))
            .sum()
    }
}

fn bin_edge(k: usize, m: usize) -> f64 {
    k as f64 / m as f64
}

/// Index of the right-closed bin containing `p`; probabilities at or below
/// 0 land in the first bin.
pub fn bin_index(p: f64, m: usize) -> usize {
    let mut i = ((p * m as f64).ceil() as isize - 1).clamp(0, m as isize - 1) as usize;
    // nudge past floating-point error in p·m so membership agrees with the
    // edges as computed by `bin_edge`
    while i > 0 && p <= bin_edge(i, m) {
        i -= 1;
    }
    while i + 1 < m && p > bin_edge(i + 1, m) {
        i += 1;
    }
    i
}

pub fn ece(records: &[ZRecord], m_bins: usize) -> Result<CalibrationReport> {
    if m_bins == 0 {
        return Err(Error::InvalidArgument("ECE needs at least one bin".into()));
    }
    if let Some(r) = records
        .iter()
        .find(|r| !(0.0..=1.0).contains(&r.p_first_wins) || r.z > 1)
    {
        return Err(Error::InvalidArgument(format!(
            "record `{}` has p={} z={}",
            r.id, r.p_first_wins, r.z
        )));
    }
    let mut conf_sum = vec![0.0; m_bins];
    let mut hits = vec![0usize; m_bins];
    let mut counts = vec![0usize; m_bins];
    for r in records {
        let i = bin_index(r.p_first_wins, m_bins);
        conf_sum[i] += r.p_first_wins;
        hits[i] += usize::from(r.z);
        counts[i] += 1;
    }
    let n = records.len();
    let bins: Vec<CalibrationBin> = (0..m_bins)
        .map(|i| {
            let c = counts[i];
            let (conf, acc) = if c == 0 {
                (None, None)
            } else {
                (
                    Some(conf_sum[i] / c as f64),
                    Some(hits[i] as f64 / c as f64),
                )
            };
            CalibrationBin {
                lo: bin_edge(i, m_bins),
                hi: bin_edge(i + 1, m_bins),
                count: c,
                conf,
                acc,
            }
        })
        .collect();
    let mut report = CalibrationReport {
        bins,
        ece: 0.0,
        n_records: n,
    };
    if n > 0 {
        report.ece = report.ece_from_bins();
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityRow {
    pub bin_mid: f64,
    pub conf: f64,
    pub acc: f64,
    pub count: usize,
}

/// Occupied bins as plottable rows, ascending by bin midpoint.
pub fn reliability_data(report: &CalibrationReport) -> Vec<ReliabilityRow> {
    report
        .bins
        .iter()
        .filter_map(|b| {
            Some(ReliabilityRow {
                bin_mid: 0.5 * (b.lo + b.hi),
                conf: b.conf?,
                acc: b.acc?,
                count: b.count,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCalibration {
    pub rate: f64,
    pub ece: f64,
    pub report: CalibrationReport,
}

pub fn calibration_of_points(
    points: &[SweepPoint],
    m_bins: usize,
) -> Result<Vec<NoiseCalibration>> {
    points
        .iter()
        .map(|p| {
            let report = ece(&z_split(&p.predictions), m_bins)?;
            Ok(NoiseCalibration {
                rate: p.rate,
                ece: report.ece,
                report,
            })
        })
        .collect()
}

/// Per noise rate: train on the flipped training set, z-split the clean
/// eval predictions, and measure ECE.
pub fn calibration_vs_noise(
    train: &Dataset,
    eval: &Dataset,
    e: &EmbeddingTable,
    rates: &[f64],
    cfg: &TrainConfig,
    m_bins: usize,
    seed: u64,
) -> Result<Vec<NoiseCalibration>> {
    calibration_of_points(&sweep_points(train, eval, e, rates, cfg, seed)?, m_bins)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(p: f64, z: u8) -> ZRecord {
        ZRecord {
            id: String::new(),
            p_first_wins: p,
            z,
        }
    }

    #[test]
    fn z_split_single_pair() {
        let recs = z_split(&[PairPrediction::new("a", 0.7)]);
        assert_eq!(recs.len(), 2);
        assert_eq!((recs[0].p_first_wins, recs[0].z), (0.7, 1));
        assert!((recs[1].p_first_wins - 0.3).abs() < 1e-15);
        assert_eq!(recs[1].z, 0);
    }

    #[test]
    fn hand_binned_example() {
        let recs = [rec(0.9, 1), rec(0.1, 0), rec(0.6, 0), rec(0.4, 1)];
        let r = ece(&recs, 2).unwrap();
        assert_eq!(r.bins[0].count, 2);
        assert!((r.bins[0].conf.unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(r.bins[0].acc, Some(0.5));
        assert!((r.bins[1].conf.unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(r.bins[1].acc, Some(0.5));
        assert!((r.ece - 0.25).abs() < 1e-15);
    }

    #[test]
    fn constant_half_predictor_is_calibrated() {
        let preds: Vec<_> = (0..7)
            .map(|i| PairPrediction::new(i.to_string(), 0.5))
            .collect();
        let r = ece(&z_split(&preds), 10).unwrap();
        assert_eq!(r.ece, 0.0);
        let occupied: Vec<_> = r.bins.iter().filter(|b| b.count > 0).collect();
        assert_eq!(occupied.len(), 1);
        assert_eq!(occupied[0].hi, 0.5);
        assert_eq!((occupied[0].conf, occupied[0].acc), (Some(0.5), Some(0.5)));
    }

    #[test]
    fn perfect_confident_predictor() {
        let preds = vec![PairPrediction::new("a", 1.0), PairPrediction::new("b", 1.0)];
        assert_eq!(ece(&z_split(&preds), 15).unwrap().ece, 0.0);
    }

    #[test]
    fn boundaries_are_right_closed() {
        assert_eq!(bin_index(0.0, 10), 0);
        assert_eq!(bin_index(0.1, 10), 0);
        assert_eq!(bin_index(0.3, 10), 2);
        assert_eq!(bin_index(0.30000000000000004, 10), 3);
        assert_eq!(bin_index(0.5, 2), 0);
        assert_eq!(bin_index(1.0, 10), 9);
        assert_eq!(bin_index(0.7, 1), 0);
    }

    #[test]
    fn reliability_rows() {
        let recs = [rec(0.92, 1), rec(0.95, 1)];
        let r = ece(&recs, 10).unwrap();
        let rows = reliability_data(&r);
        assert_eq!(rows.len(), 1);
        assert!((rows[0].bin_mid - 0.95).abs() < 1e-12);

        let recs = [rec(0.9, 1), rec(0.1, 0), rec(0.45, 1)];
        let rows = reliability_data(&ece(&recs, 10).unwrap());
        assert!(rows.len() <= 10);
        assert!(rows.windows(2).all(|w| w[0].bin_mid < w[1].bin_mid));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ece(&[rec(0.5, 1)], 0).is_err());
        assert!(ece(&[rec(1.5, 1)], 3).is_err());
    }
}
