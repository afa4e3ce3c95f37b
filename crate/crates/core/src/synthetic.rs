//! Synthetic Bradley-Terry preference data with a known ground-truth reward.
//!
//! Used by the test suites and benches, and by `prefaudit synth` for
//! trying the toolkit without a real dataset.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, PreferenceExample};
use crate::error::{Error, Result};
use crate::features::{EmbeddingTable, FeatureSource, Role};
use crate::reward::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Labels {
    /// Winner drawn from the BT probability `σ(r_a − r_b)`.
    Sampled,
    /// Winner is always the higher-reward response.
    Argmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairShape {
    /// Both responses drawn independently from `N(0, I)`.
    Independent,
    /// Second response is `a + s·u`, `u ~ N(0, I)`, with `s` log-uniform
    /// on `[min, max]`: small `s` gives similar responses with small reward
    /// gaps, i.e. near coin-flip labels.
    Perturbed { min: f64, max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorConfig {
    pub n: usize,
    pub dim: usize,
    /// Euclidean norm of the ground-truth weight vector.
    pub weight_norm: f64,
    pub shape: PairShape,
    pub labels: Labels,
    /// Pairs with `|w*·(a − b)|` below this are redrawn.
    pub min_margin: f64,
    pub seed: u64,
}

impl Default for VectorConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            dim: 16,
            weight_norm: 1.0,
            shape: PairShape::Independent,
            labels: Labels::Sampled,
            min_margin: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: Dataset,
    pub embeddings: EmbeddingTable,
    pub true_weights: Vec<f64>,
}

fn normal_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Response-feature BT data: each response is a vector, reward is `w*·x`.
pub fn bt_vectors(cfg: &VectorConfig) -> Result<SyntheticData> {
    if cfg.dim == 0 || cfg.n == 0 {
        return Err(Error::InvalidArgument(
            "synthetic data needs n, dim > 0".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w = normal_vec(&mut rng, cfg.dim);
    let wn = dot(&w, &w).sqrt();
    w.iter_mut().for_each(|x| *x *= cfg.weight_norm / wn);

    let mut table = EmbeddingTable::new(cfg.dim, FeatureSource::InMemory)?;
    let mut examples = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n {
        let (a, b, margin) = loop {
            let a = normal_vec(&mut rng, cfg.dim);
            let b = match cfg.shape {
                PairShape::Independent => normal_vec(&mut rng, cfg.dim),
                PairShape::Perturbed { min, max } => {
                    let s = min * (max / min).powf(rng.random::<f64>());
                    let u = normal_vec(&mut rng, cfg.dim);
                    a.iter().zip(&u).map(|(x, y)| x + s * y).collect()
                }
            };
            let margin = dot(&w, &a) - dot(&w, &b);
            if margin.abs() >= cfg.min_margin && margin != 0.0 {
                break (a, b, margin);
            }
        };
        let a_wins = match cfg.labels {
            Labels::Sampled => rng.random::<f64>() < sigmoid(margin),
            Labels::Argmax => margin > 0.0,
        };
        let id = format!("syn-{i:06}");
        let (chosen, rejected) = if a_wins { (a, b) } else { (b, a) };
        table.insert(&id, Role::Chosen, chosen)?;
        table.insert(&id, Role::Rejected, rejected)?;
        let (ct, rt) = if a_wins { ("a", "b") } else { ("b", "a") };
        examples.push(PreferenceExample {
            prompt: format!("synthetic prompt {i}"),
            chosen: format!("response {i}{ct}"),
            rejected: format!("response {i}{rt}"),
            id,
            meta: Default::default(),
        });
    }
    Ok(SyntheticData {
        dataset: Dataset::from_examples(format!("synthetic-vectors seed={}", cfg.seed), examples)?,
        embeddings: table,
        true_weights: w,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextConfig {
    pub n: usize,
    pub vocab: usize,
    /// Scale applied to the mean word weight to get a response's reward.
    pub reward_scale: f64,
    pub seed: u64,
}

impl Default for TextConfig {
    fn default() -> Self {
        Self {
            n: 5000,
            vocab: 300,
            reward_scale: 4.0,
            seed: 0,
        }
    }
}

const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";

/// Text BT data: responses are bags of pseudo-words, each word carrying a
/// hidden weight; a response's reward is the scaled mean weight of its
/// words. Hashed character n-gram features can recover the signal.
pub fn bt_text(cfg: &TextConfig) -> Result<Dataset> {
    if cfg.n == 0 || cfg.vocab < 2 {
        return Err(Error::InvalidArgument(
            "text synthesis needs n > 0 and vocab >= 2".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut words: Vec<(String, f64)> = Vec::with_capacity(cfg.vocab);
    let mut seen = std::collections::HashSet::new();
    while words.len() < cfg.vocab {
        let len = rng.random_range(4..=8);
        let w: String = (0..len)
            .map(|_| LETTERS[rng.random_range(0..LETTERS.len())] as char)
            .collect();
        if seen.insert(w.clone()) {
            words.push((w, rng.sample(StandardNormal)));
        }
    }

    let response = |rng: &mut ChaCha8Rng| -> (String, f64) {
        let len = rng.random_range(6..=16);
        let mut text = Vec::with_capacity(len);
        let mut total = 0.0;
        for _ in 0..len {
            let (w, weight) = &words[rng.random_range(0..words.len())];
            text.push(w.as_str());
            total += weight;
        }
        (text.join(" "), cfg.reward_scale * total / len as f64)
    };

    let mut examples = Vec::with_capacity(cfg.n);
    let mut i = 0;
    while examples.len() < cfg.n {
        let prompt = format!("question {i}: {}", response(&mut rng).0);
        let (a, ra) = response(&mut rng);
        let (b, rb) = response(&mut rng);
        i += 1;
        if a == b {
            continue;
        }
        let a_wins = rng.random::<f64>() < sigmoid(ra - rb);
        let (chosen, rejected) = if a_wins { (a, b) } else { (b, a) };
        examples.push(PreferenceExample {
            id: format!("txt-{:06}", examples.len()),
            prompt,
            chosen,
            rejected,
            meta: Default::default(),
        });
    }
    Dataset::from_examples(format!("synthetic-text seed={}", cfg.seed), examples)
}
