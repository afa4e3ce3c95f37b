//! Shared fixtures for the criterion benches.

use prefaudit_core::calibration::ZRecord;
use prefaudit_core::synthetic::{bt_text, bt_vectors, SyntheticData, TextConfig, VectorConfig};
use prefaudit_core::Dataset;

pub fn vectors(n: usize, dim: usize) -> SyntheticData {
    bt_vectors(&VectorConfig {
        n,
        dim,
        weight_norm: 2.0,
        ..Default::default()
    })
    .expect("valid synthetic config")
}

pub fn texts(n: usize) -> Dataset {
    bt_text(&TextConfig {
        n,
        ..Default::default()
    })
    .expect("valid synthetic config")
}

/// Evenly spread z-split records with alternating labels.
pub fn records(n: usize) -> Vec<ZRecord> {
    (0..n)
        .map(|i| ZRecord {
            id: i.to_string(),
            p_first_wins: (i as f64 * 0.618_033_988_75).fract(),
            z: (i % 2) as u8,
        })
        .collect()
}
