//! Full-dataset audit: every analysis run under one echoed configuration and
//! collected into a versioned, byte-stable report.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calibration::{calibration_of_points, NoiseCalibration, DEFAULT_CALIBRATION_BINS};
use crate::curves::{
    doubling_gain, info_compare, saturation, scaling_sweep, InfoCompare, SaturationCurve,
    ScalingCurve, DEFAULT_FRACTIONS, DEFAULT_SATURATION_TARGET,
};
use crate::dataset::{Dataset, FilterLog, SplitSpec, TiePolicy};
use crate::error::{Error, Result};
use crate::features::{
    hash_featurize, similarity_report, EmbeddingTable, FeatureMode, SimilarityReport,
    DEFAULT_HASH_DIM, DEFAULT_HISTOGRAM_BINS, DEFAULT_SIMILARITY_THRESHOLD,
};
use crate::noise::{sweep_points, NoiseSweepResult, DEFAULT_NOISE_RATES};
use crate::reward::{probability_ecdf, TrainConfig};

pub const SCHEMA_VERSION: &str = "1.0";
pub const DEFAULT_MAX_TOKENS: usize = 512;
pub const DEFAULT_ECDF_GRID: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    /// Drives the split, subsampling, flips and the hashed featurizer.
    pub seed: u64,
    pub eval_fraction: f64,
    pub max_tokens: usize,
    pub tie_policy: TiePolicy,
    pub hash_dim: usize,
    pub noise_rates: Vec<f64>,
    pub fractions: Vec<f64>,
    pub calibration_bins: usize,
    pub similarity_bins: usize,
    pub threshold: f64,
    pub saturation_target: f64,
    pub ecdf_grid: usize,
    /// High-information comparison subset size; defaults to
    /// `min(qualifying pairs, ⌊train/2⌋)`.
    pub info_size: Option<usize>,
    pub info_seeds: Vec<u64>,
    pub train: TrainConfig,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            eval_fraction: SplitSpec::default().eval_fraction,
            max_tokens: DEFAULT_MAX_TOKENS,
            tie_policy: TiePolicy::Drop,
            hash_dim: DEFAULT_HASH_DIM,
            noise_rates: DEFAULT_NOISE_RATES.to_vec(),
            fractions: DEFAULT_FRACTIONS.to_vec(),
            calibration_bins: DEFAULT_CALIBRATION_BINS,
            similarity_bins: DEFAULT_HISTOGRAM_BINS,
            threshold: DEFAULT_SIMILARITY_THRESHOLD,
            saturation_target: DEFAULT_SATURATION_TARGET,
            ecdf_grid: DEFAULT_ECDF_GRID,
            info_size: None,
            info_seeds: vec![0],
            train: TrainConfig::default(),
        }
    }
}

impl AuditConfig {
    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            eval_fraction: self.eval_fraction,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportProvenance {
    pub dataset: String,
    pub filter_log: FilterLog,
    pub featurizer: String,
    pub feature_mode: FeatureMode,
    pub n_train: usize,
    pub n_eval: usize,
    pub warnings: Vec<String>,
    pub config: AuditConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSection {
    pub curve: ScalingCurve,
    pub saturation: Option<SaturationCurve>,
    pub doubling_gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdfCurve {
    pub rate: f64,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema_version: String,
    pub tool_version: String,
    pub provenance: ReportProvenance,
    pub similarity: SimilarityReport,
    pub scaling: ScalingSection,
    pub noise: NoiseSweepResult,
    pub noise_ecdf: Vec<EcdfCurve>,
    pub calibration: Vec<NoiseCalibration>,
    pub info_compare: Option<InfoCompare>,
}

impl AuditReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Parses a report, rejecting any other major schema version.
    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Probe {
            schema_version: String,
        }
        let probe: Probe = serde_json::from_str(s)?;
        let major = |v: &str| v.split('.').next().unwrap_or_default().to_owned();
        if major(&probe.schema_version) != major(SCHEMA_VERSION) {
            return Err(Error::SchemaVersion {
                expected: SCHEMA_VERSION.into(),
                found: probe.schema_version,
            });
        }
        Ok(serde_json::from_str(s)?)
    }
}

/// Report plus bulky per-example data that goes to CSV instead.
#[derive(Debug, Clone)]
pub struct AuditOutput {
    pub report: AuditReport,
    pub similarity_per_example: Vec<(String, f64)>,
}

/// Ingests `path` and applies the token-length filter.
pub fn load_dataset(path: impl AsRef<Path>, cfg: &AuditConfig) -> Result<Dataset> {
    Dataset::ingest(path, cfg.tie_policy)?.length_filter(cfg.max_tokens)
}

pub fn run_audit(
    data: &Dataset,
    embeddings: Option<EmbeddingTable>,
    cfg: &AuditConfig,
) -> Result<AuditOutput> {
    let mut warnings = Vec::new();
    let table = match embeddings {
        Some(t) => t,
        None => {
            let t = hash_featurize(data, cfg.hash_dim, cfg.seed)?;
            warnings.push(format!("no embedding file given; using {}", t.source()));
            t
        }
    };
    if table.feature_mode() == FeatureMode::ResponseOnly {
        warnings
            .push("embeddings lack prompt-response keys; reward features are response-only".into());
    }
    let (train, eval) = data.split(&cfg.split_spec())?;

    let mut similarity = similarity_report(data, &table, cfg.threshold, cfg.similarity_bins)?;
    let per_example = similarity.per_example.take().unwrap_or_default();

    let curve = scaling_sweep(&train, &eval, &table, &cfg.fractions, &cfg.train, cfg.seed)?;
    let sat = match saturation(&curve, cfg.saturation_target) {
        Ok(s) => Some(s),
        Err(e) => {
            warnings.push(format!("saturation curve skipped: {e}"));
            None
        }
    };
    let gain = match doubling_gain(&curve) {
        Ok(g) => Some(g),
        Err(e) => {
            warnings.push(format!("doubling gain skipped: {e}"));
            None
        }
    };

    let points = sweep_points(
        &train,
        &eval,
        &table,
        &cfg.noise_rates,
        &cfg.train,
        cfg.seed,
    )?;
    let noise = NoiseSweepResult::from_points(&points);
    let noise_ecdf = points
        .iter()
        .map(|p| {
            Ok(EcdfCurve {
                rate: p.rate,
                points: probability_ecdf(&p.predictions, cfg.ecdf_grid)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let calibration = calibration_of_points(&points, cfg.calibration_bins)?;

    let info = run_info_compare(&train, &eval, &table, cfg, &mut warnings)?;

    let report = AuditReport {
        schema_version: SCHEMA_VERSION.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        provenance: ReportProvenance {
            dataset: data.provenance().source.clone(),
            filter_log: data.provenance().filter_log,
            featurizer: table.source().to_string(),
            feature_mode: table.feature_mode(),
            n_train: train.len(),
            n_eval: eval.len(),
            warnings,
            config: cfg.clone(),
        },
        similarity,
        scaling: ScalingSection {
            curve,
            saturation: sat,
            doubling_gain: gain,
        },
        noise,
        noise_ecdf,
        calibration,
        info_compare: info,
    };
    Ok(AuditOutput {
        report,
        similarity_per_example: per_example,
    })
}

fn run_info_compare(
    train: &Dataset,
    eval: &Dataset,
    table: &EmbeddingTable,
    cfg: &AuditConfig,
    warnings: &mut Vec<String>,
) -> Result<Option<InfoCompare>> {
    let size = match cfg.info_size {
        Some(s) => s,
        None => {
            let sims = similarity_report(train, table, cfg.threshold, 1)?;
            let qualifying = sims
                .per_example
                .unwrap_or_default()
                .iter()
                .filter(|(_, s)| *s < cfg.threshold)
                .count();
            qualifying.min(train.len() / 2)
        }
    };
    if size == 0 {
        warnings.push(format!(
            "high-information comparison skipped: no training pairs below similarity {}",
            cfg.threshold
        ));
        return Ok(None);
    }
    info_compare(
        train,
        eval,
        table,
        cfg.threshold,
        size,
        &cfg.train,
        &cfg.info_seeds,
    )
    .map(Some)
}
