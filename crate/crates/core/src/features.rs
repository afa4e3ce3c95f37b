//! Vector representations of prompts and responses, and the response-pair
//! similarity analysis.
//!
//! Vectors are keyed by `(example id, role)`. Roles always refer to the
//! example as it was ingested: after label-noise injection a flipped row's
//! current `chosen` text is looked up under [`Role::Rejected`], so a table
//! built once serves every noisy view of the dataset.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, PreferenceExample};
use crate::error::{Error, Result};
use crate::hashing::{hash64, Domain};

/// Pairs below this response similarity count as high-information.
pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.8;
pub const DEFAULT_HISTOGRAM_BINS: usize = 50;
pub const DEFAULT_HASH_DIM: usize = 512;
/// Output width of the usual external sentence encoder.
pub const ENCODER_DIM: usize = 384;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Prompt,
    Chosen,
    Rejected,
    /// Embedding of `prompt + "\n" + chosen`.
    PromptChosen,
    /// Embedding of `prompt + "\n" + rejected`.
    PromptRejected,
}

impl Role {
    pub const ALL: [Role; 5] = [
        Role::Prompt,
        Role::Chosen,
        Role::Rejected,
        Role::PromptChosen,
        Role::PromptRejected,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Prompt => "prompt",
            Role::Chosen => "chosen",
            Role::Rejected => "rejected",
            Role::PromptChosen => "prompt_chosen",
            Role::PromptRejected => "prompt_rejected",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown role `{s}`"))
    }
}

/// Which vectors feed the reward model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// φ(x, y) = embedding of the prompt joined with the response.
    PromptResponse,
    /// φ(x, y) = embedding of the response alone; the table had no
    /// prompt-response keys.
    ResponseOnly,
}

impl FeatureMode {
    fn roles(self) -> (Role, Role) {
        match self {
            FeatureMode::PromptResponse => (Role::PromptChosen, Role::PromptRejected),
            FeatureMode::ResponseOnly => (Role::Chosen, Role::Rejected),
        }
    }
}

/// Where a table's vectors came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureSource {
    HashedNgrams { dim: usize, seed: u64 },
    External { path: String },
    InMemory,
}

impl fmt::Display for FeatureSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureSource::HashedNgrams { dim, .. } => write!(f, "hashed-ngrams dim={dim}"),
            FeatureSource::External { path } => write!(f, "external {path}"),
            FeatureSource::InMemory => f.write_str("in-memory"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: BTreeMap<String, BTreeMap<Role, Vec<f64>>>,
    normalized: bool,
    source: FeatureSource,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub expect_dim: Option<usize>,
    /// Rescale every vector to unit norm on load (zero vectors are errors).
    pub renormalize: bool,
}

#[derive(Serialize, Deserialize)]
struct EmbeddingLine {
    key: String,
    vec: Vec<f64>,
}

fn parse_key(key: &str) -> std::result::Result<(&str, Role), String> {
    let (id, role) = key
        .rsplit_once(':')
        .ok_or_else(|| format!("key `{key}` is not of the form <id>:<role>"))?;
    if id.is_empty() {
        return Err(format!("key `{key}` has an empty id"));
    }
    Ok((id, role.parse()?))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const UNIT_NORM_TOL: f64 = 1e-6;

impl EmbeddingTable {
    pub fn new(dim: usize, source: FeatureSource) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "embedding dim must be positive".into(),
            ));
        }
        Ok(Self {
            dim,
            vectors: BTreeMap::new(),
            normalized: true,
            source,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True when every stored vector has unit norm (±1e-6).
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn source(&self) -> &FeatureSource {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.vectors.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str, role: Role) -> Option<&[f64]> {
        self.vectors.get(id)?.get(&role).map(Vec::as_slice)
    }

    /// Inserts a vector; duplicate keys and wrong lengths are errors.
    pub fn insert(&mut self, id: &str, role: Role, vec: Vec<f64>) -> Result<()> {
        let key = format!("{id}:{role}");
        if vec.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: format!("key `{key}`"),
                expected: self.dim,
                found: vec.len(),
            });
        }
        if vec.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "key `{key}` has a non-finite component"
            )));
        }
        let slot = self.vectors.entry(id.to_owned()).or_default();
        if slot.contains_key(&role) {
            return Err(Error::InvalidArgument(format!("duplicate key `{key}`")));
        }
        if (norm(&vec) - 1.0).abs() > UNIT_NORM_TOL {
            self.normalized = false;
        }
        slot.insert(role, vec);
        Ok(())
    }

    /// Reads the embedding JSONL format: `{"key": "<id>:<role>", "vec": [...]}`.
    pub fn load(path: impl AsRef<Path>, opts: LoadOptions) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::load_reader(BufReader::new(file), path.display().to_string(), opts)
    }

    pub fn load_reader<R: BufRead>(reader: R, source: String, opts: LoadOptions) -> Result<Self> {
        let mut table: Option<Self> = None;
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| Error::io(&source, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let rec: EmbeddingLine =
                serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
            let (id, role) = parse_key(&rec.key).map_err(parse_err)?;
            let mut vec = rec.vec;
            if opts.renormalize {
                let n = norm(&vec);
                if n == 0.0 || !n.is_finite() {
                    return Err(parse_err(format!(
                        "key `{}` cannot be normalized (norm {n})",
                        rec.key
                    )));
                }
                vec.iter_mut().for_each(|x| *x /= n);
            }
            let table = match &mut table {
                Some(t) => t,
                None => {
                    let dim = opts.expect_dim.unwrap_or(vec.len());
                    table.insert(Self::new(
                        dim,
                        FeatureSource::External {
                            path: source.clone(),
                        },
                    )?)
                }
            };
            table
                .insert(id, role, vec)
                .map_err(|e| parse_err(e.to_string()))?;
        }
        table.ok_or_else(|| Error::InvalidArgument(format!("{source}: no embeddings found")))
    }

    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (id, roles) in &self.vectors {
            for (role, vec) in roles {
                let line = EmbeddingLine {
                    key: format!("{id}:{role}"),
                    vec: vec.clone(),
                };
                serde_json::to_writer(&mut w, &line)?;
                w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Prompt-response features when the table carries them, otherwise
    /// response-only.
    pub fn feature_mode(&self) -> FeatureMode {
        let has_pr = self.vectors.values().any(|roles| {
            roles.contains_key(&Role::PromptChosen) && roles.contains_key(&Role::PromptRejected)
        });
        if has_pr {
            FeatureMode::PromptResponse
        } else {
            FeatureMode::ResponseOnly
        }
    }

    fn lookup(&self, id: &str, role: Role, missing: &mut Vec<String>) -> Option<&[f64]> {
        let v = self.get(id, role);
        if v.is_none() {
            missing.push(format!("{id}:{role}"));
        }
        v
    }

    /// Feature vectors for each example's current (chosen, rejected),
    /// honoring flipped rows. All missing keys are reported together.
    pub fn pair_features<'a>(
        &'a self,
        d: &Dataset,
        mode: FeatureMode,
    ) -> Result<Vec<(&'a [f64], &'a [f64])>> {
        self.pairs_for(d, mode.roles())
    }

    /// Response embeddings for each example (similarity analysis).
    pub fn response_pairs<'a>(&'a self, d: &Dataset) -> Result<Vec<(&'a [f64], &'a [f64])>> {
        self.pairs_for(d, (Role::Chosen, Role::Rejected))
    }

    fn pairs_for<'a>(
        &'a self,
        d: &Dataset,
        (chosen_role, rejected_role): (Role, Role),
    ) -> Result<Vec<(&'a [f64], &'a [f64])>> {
        let mut missing = Vec::new();
        let mut out = Vec::with_capacity(d.len());
        for ex in d {
            let (c, r) = if ex.is_flipped() {
                (rejected_role, chosen_role)
            } else {
                (chosen_role, rejected_role)
            };
            let c = self.lookup(&ex.id, c, &mut missing);
            let r = self.lookup(&ex.id, r, &mut missing);
            if let (Some(c), Some(r)) = (c, r) {
                out.push((c, r));
            }
        }
        if missing.is_empty() {
            Ok(out)
        } else {
            Err(Error::MissingEmbeddings { keys: missing })
        }
    }
}

/// Texts of an example as originally ingested: `(prompt, chosen, rejected)`.
fn original_texts(ex: &PreferenceExample) -> (&str, &str, &str) {
    if ex.is_flipped() {
        (&ex.prompt, &ex.rejected, &ex.chosen)
    } else {
        (&ex.prompt, &ex.chosen, &ex.rejected)
    }
}

const NGRAM_SIZES: std::ops::RangeInclusive<usize> = 3..=5;
const TEXT_START: char = '\u{2}';
const TEXT_END: char = '\u{3}';

/// Hashed bag of character 3/4/5-grams, L2-normalized. Text is framed with
/// start/end markers so even one-character strings produce a 3-gram.
pub fn hash_text(text: &str, dim: usize, seed: u64) -> Vec<f64> {
    let framed = format!("{TEXT_START}{text}{TEXT_END}");
    let bounds: Vec<usize> = framed
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(framed.len()))
        .collect();
    let n_chars = bounds.len() - 1;
    let mut v = vec![0.0; dim];
    for n in NGRAM_SIZES {
        if n > n_chars {
            break;
        }
        for start in 0..=n_chars - n {
            let gram = &framed.as_bytes()[bounds[start]..bounds[start + n]];
            v[(hash64(Domain::Feature, seed, gram) % dim as u64) as usize] += 1.0;
        }
    }
    if n_chars < *NGRAM_SIZES.start() {
        // only reachable for the empty string: "<start><end>"
        v[(hash64(Domain::Feature, seed, framed.as_bytes()) % dim as u64) as usize] = 1.0;
    }
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// Deterministic fallback featurizer covering every role of every example.
pub fn hash_featurize(d: &Dataset, dim: usize, seed: u64) -> Result<EmbeddingTable> {
    if dim < 8 {
        return Err(Error::InvalidArgument(format!(
            "hashed feature dim must be at least 8, got {dim}"
        )));
    }
    let rows: Vec<(String, [Vec<f64>; 5])> = d
        .examples()
        .par_iter()
        .map(|ex| {
            let (prompt, chosen, rejected) = original_texts(ex);
            let vecs = [
                hash_text(prompt, dim, seed),
                hash_text(chosen, dim, seed),
                hash_text(rejected, dim, seed),
                hash_text(&format!("{prompt}\n{chosen}"), dim, seed),
                hash_text(&format!("{prompt}\n{rejected}"), dim, seed),
            ];
            (ex.id.clone(), vecs)
        })
        .collect();
    let mut table = EmbeddingTable::new(dim, FeatureSource::HashedNgrams { dim, seed })?;
    for (id, vecs) in rows {
        for (role, v) in Role::ALL.into_iter().zip(vecs) {
            table.insert(&id, role, v)?;
        }
    }
    Ok(table)
}

/// `a·b / (‖a‖‖b‖)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "cosine similarity".into(),
            expected: a.len(),
            found: b.len(),
        });
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidArgument(
            "cosine similarity of a zero vector is undefined".into(),
        ));
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    pub histogram: Vec<HistogramBin>,
    pub high_info_fraction: f64,
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_example: Option<Vec<(String, f64)>>,
}

impl SimilarityReport {
    pub fn total(&self) -> usize {
        self.histogram.iter().map(|b| b.count).sum()
    }
}

/// Equal-width bins over `[-1, 1]`; each bin is `[lo, hi)` except the last,
/// which also includes 1.
pub fn histogram(values: impl IntoIterator<Item = f64>, bins: usize) -> Vec<HistogramBin> {
    let width = 2.0 / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            lo: -1.0 + i as f64 * width,
            hi: if i + 1 == bins {
                1.0
            } else {
                -1.0 + (i + 1) as f64 * width
            },
            count: 0,
        })
        .collect();
    for v in values {
        let i = (((v + 1.0) / width).floor().max(0.0) as usize).min(bins - 1);
        out[i].count += 1;
    }
    out
}

fn pair_similarities(d: &Dataset, e: &EmbeddingTable) -> Result<Vec<f64>> {
    e.response_pairs(d)?
        .par_iter()
        .map(|(c, r)| cosine_similarity(c, r))
        .collect()
}

pub fn similarity_report(
    d: &Dataset,
    e: &EmbeddingTable,
    threshold: f64,
    bins: usize,
) -> Result<SimilarityReport> {
    if bins == 0 {
        return Err(Error::InvalidArgument(
            "histogram needs at least one bin".into(),
        ));
    }
    if d.is_empty() {
        return Err(Error::InvalidArgument(
            "similarity report of an empty dataset".into(),
        ));
    }
    let sims = pair_similarities(d, e)?;
    let below = sims.iter().filter(|&&s| s < threshold).count();
    Ok(SimilarityReport {
        histogram: histogram(sims.iter().copied(), bins),
        high_info_fraction: below as f64 / sims.len() as f64,
        threshold,
        per_example: Some(d.ids().map(str::to_owned).zip(sims).collect()),
    })
}

/// Seeded sample of `size` examples among pairs with similarity below
/// `threshold`.
pub fn high_info_subset(
    d: &Dataset,
    e: &EmbeddingTable,
    threshold: f64,
    size: usize,
    seed: u64,
) -> Result<Dataset> {
    let sims = pair_similarities(d, e)?;
    let qualifying: Vec<PreferenceExample> = d
        .iter()
        .zip(&sims)
        .filter(|(_, &s)| s < threshold)
        .map(|(ex, _)| ex.clone())
        .collect();
    if qualifying.len() < size {
        return Err(Error::InsufficientData {
            what: format!("high-information subset (similarity < {threshold})"),
            needed: size,
            available: qualifying.len(),
        });
    }
    d.derive(qualifying).sample(size, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::PreferenceExample;

    fn ex(id: &str, chosen: &str, rejected: &str) -> PreferenceExample {
        PreferenceExample {
            id: id.into(),
            prompt: "prompt".into(),
            chosen: chosen.into(),
            rejected: rejected.into(),
            meta: Default::default(),
        }
    }

    fn load(text: &str, opts: LoadOptions) -> Result<EmbeddingTable> {
        EmbeddingTable::load_reader(text.as_bytes(), "mem".into(), opts)
    }

    #[test]
    fn load_two_lines() {
        let t = load(
            "{\"key\":\"a:chosen\",\"vec\":[1,0,0,0]}\n{\"key\":\"a:rejected\",\"vec\":[0,1,0,0]}\n",
            LoadOptions::default(),
        )
        .unwrap();
        assert_eq!((t.len(), t.dim()), (2, 4));
        assert!(t.is_normalized());
        assert_eq!(t.get("a", Role::Rejected).unwrap(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn load_errors() {
        let err = load(
            "{\"key\":\"a:chosen\",\"vec\":[1,0,0,0]}\n{\"key\":\"b:chosen\",\"vec\":[1,0,0]}\n",
            LoadOptions::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("b:chosen"), "{err}");

        let err = load("{\"key\":\"a:winner\",\"vec\":[1]}", LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("unknown role"), "{err}");

        let dup = "{\"key\":\"a:chosen\",\"vec\":[1]}\n{\"key\":\"a:chosen\",\"vec\":[1]}";
        let err = load(dup, LoadOptions::default()).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");

        let opts = LoadOptions {
            expect_dim: Some(3),
            ..Default::default()
        };
        assert!(load("{\"key\":\"a:chosen\",\"vec\":[1,0]}", opts).is_err());
    }

    #[test]
    fn ids_may_contain_colons() {
        let t = load(
            "{\"key\":\"hh:12:chosen\",\"vec\":[3,4]}",
            LoadOptions {
                renormalize: true,
                ..Default::default()
            },
        )
        .unwrap();
        let v = t.get("hh:12", Role::Chosen).unwrap();
        assert!((v[0] - 0.6).abs() < 1e-15 && (v[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine_similarity(&[1.0, 2.0], &[1.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = cosine_similarity(&[1.0, 0.0], &[h, h]).unwrap();
        assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(cosine_similarity(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn hashed_vectors_are_unit_and_deterministic() {
        for text in ["", "a", "ab", "hello world", "日本語テキスト"] {
            let v = hash_text(text, 64, 1);
            assert!((norm(&v) - 1.0).abs() < 1e-9, "{text:?}");
            assert_eq!(v, hash_text(text, 64, 1));
        }
    }

    #[test]
    fn hash_featurize_identical_texts() {
        let d = Dataset::from_examples("mem", vec![ex("a", "same reply", "other reply")]).unwrap();
        let t = hash_featurize(&d, 32, 0).unwrap();
        assert_eq!(t.len(), 5);
        assert_eq!(t, hash_featurize(&d, 32, 0).unwrap());
        assert!(hash_featurize(&d, 4, 0).is_err());

        let a = hash_text("same reply", 32, 0);
        let s = cosine_similarity(&a, &hash_text("same reply", 32, 0)).unwrap();
        assert_eq!(s, 1.0);
    }

    fn table_with(sims: &[(f64, f64)]) -> (Dataset, EmbeddingTable) {
        let mut t = EmbeddingTable::new(2, FeatureSource::InMemory).unwrap();
        let mut exs = Vec::new();
        for (i, &(c, r)) in sims.iter().enumerate() {
            let id = format!("p{i}");
            t.insert(&id, Role::Chosen, vec![c.cos(), c.sin()]).unwrap();
            t.insert(&id, Role::Rejected, vec![r.cos(), r.sin()])
                .unwrap();
            exs.push(ex(&id, &format!("c{i}"), &format!("r{i}")));
        }
        (Dataset::from_examples("mem", exs).unwrap(), t)
    }

    #[test]
    fn report_hand_count() {
        // angles chosen so cos(angle) equals the listed similarity
        let angles: Vec<(f64, f64)> = [0.5f64, 0.7, 0.9, 0.95]
            .iter()
            .map(|s| (0.0, s.acos()))
            .collect();
        let (d, t) = table_with(&angles);
        let r = similarity_report(&d, &t, DEFAULT_SIMILARITY_THRESHOLD, 50).unwrap();
        assert_eq!(r.high_info_fraction, 0.5);
        assert_eq!(r.total(), 4);
        assert_eq!(r.histogram.len(), 50);
        let per = r.per_example.unwrap();
        assert!((per[0].1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identical_pairs_have_no_high_info() {
        let (d, t) = table_with(&[(0.3, 0.3), (1.0, 1.0)]);
        let r = similarity_report(&d, &t, 0.8, 10).unwrap();
        assert_eq!(r.high_info_fraction, 0.0);
        assert_eq!(r.histogram[9].count, 2);
    }

    #[test]
    fn missing_embeddings_listed() {
        let (_, t) = table_with(&[(0.0, 1.0)]);
        let d =
            Dataset::from_examples("mem", vec![ex("p0", "a", "b"), ex("zz", "a", "b")]).unwrap();
        match similarity_report(&d, &t, 0.8, 10).unwrap_err() {
            Error::MissingEmbeddings { keys } => {
                assert_eq!(keys, ["zz:chosen", "zz:rejected"])
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn high_info_subset_cases() {
        let (d, t) = table_with(&[(0.0, 1.5), (0.0, 0.1), (0.0, 1.2), (0.0, 0.05)]);
        // cos 1.5 ~ 0.07, cos 1.2 ~ 0.36 qualify
        let s = high_info_subset(&d, &t, 0.8, 2, 9).unwrap();
        let mut ids: Vec<_> = s.ids().collect();
        ids.sort();
        assert_eq!(ids, ["p0", "p2"]);
        assert_eq!(s, high_info_subset(&d, &t, 0.8, 2, 9).unwrap());

        match high_info_subset(&d, &t, 0.8, 3, 9).unwrap_err() {
            Error::InsufficientData { available, .. } => assert_eq!(available, 2),
            e => panic!("{e}"),
        }
        assert_eq!(high_info_subset(&d, &t, 1.1, 4, 9).unwrap().len(), 4);
    }

    #[test]
    fn flipped_rows_swap_lookup_roles() {
        let (d, t) = table_with(&[(0.0, 1.0)]);
        let mut flipped = d.examples()[0].clone();
        std::mem::swap(&mut flipped.chosen, &mut flipped.rejected);
        flipped.meta.insert("flipped".into(), "true".into());
        let fd = d.derive(vec![flipped]);
        let pairs = t.pair_features(&fd, FeatureMode::ResponseOnly).unwrap();
        assert_eq!(pairs[0].0, t.get("p0", Role::Rejected).unwrap());
        assert_eq!(pairs[0].1, t.get("p0", Role::Chosen).unwrap());
    }
}
