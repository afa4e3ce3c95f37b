//! Auditing toolkit for pairwise preference datasets used to train reward
//! models.
//!
//! Three axes are measured on top of a linear Bradley-Terry reward head:
//! scale (scaling and saturation curves), label-noise invariance (flip
//! sweeps, probability concentration, calibration error) and information
//! content (response-pair similarity).

pub mod audit;
pub mod calibration;
pub mod curves;
pub mod dataset;
pub mod error;
pub mod features;
mod hashing;
pub mod noise;
pub mod reward;
pub mod synthetic;

pub use audit::{run_audit, AuditConfig, AuditOutput, AuditReport};
pub use calibration::{
    calibration_vs_noise, ece, reliability_data, z_split, CalibrationReport, ZRecord,
};
pub use curves::{
    doubling_gain, info_compare, saturation, scaling_sweep, InfoCompare, SaturationCurve,
    ScalingCurve,
};
pub use dataset::{Dataset, FilterLog, PreferenceExample, SplitSpec, TiePolicy};
pub use error::{Error, Result};
pub use features::{
    cosine_similarity, hash_featurize, high_info_subset, similarity_report, EmbeddingTable,
    FeatureMode, LoadOptions, Role, SimilarityReport,
};
pub use noise::{flip_labels, noise_sweep, NoiseSpec, NoiseSweepResult};
pub use reward::{
    concentration, evaluate, loss_and_gradient, probability_ecdf, train, win_probability,
    BatchSize, PairPrediction, RewardModel, TrainConfig,
};
