//! Canonical pairwise preference data: ingestion, filters and deterministic
//! partitioning.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::{unit_draw, Domain};

/// Meta key set on rows whose chosen/rejected were swapped by noise injection.
pub const FLIPPED_META_KEY: &str = "flipped";
/// Meta key marking a tie in the source data.
pub const TIE_META_KEY: &str = "tie";

/// One `(prompt, chosen, rejected)` record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceExample {
    pub id: String,
    pub prompt: String,
    pub chosen: String,
    pub rejected: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl PreferenceExample {
    /// True when this row's responses were swapped by label-noise injection.
    pub fn is_flipped(&self) -> bool {
        self.meta.get(FLIPPED_META_KEY).map(String::as_str) == Some("true")
    }

    fn is_tie(&self) -> bool {
        self.meta
            .get(TIE_META_KEY)
            .is_some_and(|v| v.eq_ignore_ascii_case("true"))
            || normalize_ws(&self.chosen) == normalize_ws(&self.rejected)
    }
}

fn normalize_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Whitespace-split token count; the stand-in for a model tokenizer.
pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TiePolicy {
    #[default]
    Drop,
    Error,
}

/// Per-rule drop counts. `kept + tie_dropped + length_dropped == ingested`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FilterLog {
    pub ingested: usize,
    pub kept: usize,
    pub tie_dropped: usize,
    pub length_dropped: usize,
}

impl FilterLog {
    pub fn dropped(&self) -> usize {
        self.tie_dropped + self.length_dropped
    }

    pub fn is_conserved(&self) -> bool {
        self.kept + self.dropped() == self.ingested
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub filter_log: FilterLog,
}

/// An ordered, immutable collection of preference examples.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    examples: Vec<PreferenceExample>,
    provenance: Provenance,
}

#[derive(Deserialize)]
struct RawRecord {
    #[serde(default)]
    id: Option<String>,
    prompt: String,
    chosen: String,
    rejected: String,
    #[serde(default)]
    meta: BTreeMap<String, String>,
}

impl Dataset {
    /// Builds a dataset from in-memory examples, checking the id and
    /// non-empty-response invariants. Ties are rejected.
    pub fn from_examples(
        source: impl Into<String>,
        examples: Vec<PreferenceExample>,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(examples.len());
        for (i, ex) in examples.iter().enumerate() {
            validate(ex, i + 1)?;
            if ex.is_tie() {
                return Err(Error::Tie {
                    id: ex.id.clone(),
                    line: i + 1,
                });
            }
            if !seen.insert(ex.id.as_str()) {
                return Err(Error::DuplicateId {
                    id: ex.id.clone(),
                    line: i + 1,
                });
            }
        }
        let n = examples.len();
        Ok(Self {
            examples,
            provenance: Provenance {
                source: source.into(),
                filter_log: FilterLog {
                    ingested: n,
                    kept: n,
                    ..FilterLog::default()
                },
            },
        })
    }

    pub fn examples(&self) -> &[PreferenceExample] {
        &self.examples
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.examples.iter().map(|e| e.id.as_str())
    }

    pub fn iter(&self) -> std::slice::Iter<'_, PreferenceExample> {
        self.examples.iter()
    }

    /// Same provenance, different example set. Used by derived views
    /// (splits, subsamples, noisy copies).
    pub(crate) fn derive(&self, examples: Vec<PreferenceExample>) -> Self {
        Self {
            examples,
            provenance: self.provenance.clone(),
        }
    }

    /// Streams a JSONL file into a dataset.
    pub fn ingest(path: impl AsRef<Path>, tie_policy: TiePolicy) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::ingest_reader(BufReader::new(file), path.display().to_string(), tie_policy)
    }

    pub fn ingest_reader<R: BufRead>(
        reader: R,
        source: impl Into<String>,
        tie_policy: TiePolicy,
    ) -> Result<Self> {
        let source = source.into();
        let mut examples = Vec::new();
        let mut seen: HashSet<String> = HashSet::new();
        let mut log = FilterLog::default();

        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| Error::io(&source, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            let ex = PreferenceExample {
                id: raw.id.unwrap_or_else(|| format!("line-{line_no}")),
                prompt: raw.prompt,
                chosen: raw.chosen,
                rejected: raw.rejected,
                meta: raw.meta,
            };
            validate(&ex, line_no)?;
            if !seen.insert(ex.id.clone()) {
                return Err(Error::DuplicateId {
                    id: ex.id,
                    line: line_no,
                });
            }
            log.ingested += 1;
            if ex.is_tie() {
                match tie_policy {
                    TiePolicy::Drop => {
                        log.tie_dropped += 1;
                        continue;
                    }
                    TiePolicy::Error => {
                        return Err(Error::Tie {
                            id: ex.id,
                            line: line_no,
                        })
                    }
                }
            }
            examples.push(ex);
        }
        log.kept = examples.len();

        Ok(Self {
            examples,
            provenance: Provenance {
                source,
                filter_log: log,
            },
        })
    }

    /// Writes the canonical JSONL form (ids always explicit).
    pub fn write_jsonl(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for ex in &self.examples {
            serde_json::to_writer(&mut w, ex)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Drops examples where prompt plus either response exceeds `max_tokens`
    /// whitespace tokens. Pass `usize::MAX` for no limit.
    pub fn length_filter(&self, max_tokens: usize) -> Result<Self> {
        if max_tokens == 0 {
            return Err(Error::InvalidArgument(
                "max_tokens must be at least 1; use a large value for no limit".into(),
            ));
        }
        let kept: Vec<_> = self
            .examples
            .iter()
            .filter(|ex| {
                let p = token_count(&ex.prompt);
                p.saturating_add(token_count(&ex.chosen)) <= max_tokens
                    && p.saturating_add(token_count(&ex.rejected)) <= max_tokens
            })
            .cloned()
            .collect();
        let n_kept = kept.len();
        let mut out = self.derive(kept);
        let log = &mut out.provenance.filter_log;
        log.length_dropped += self.len() - n_kept;
        log.kept = n_kept;
        Ok(out)
    }

    /// Deterministic train/eval partition. Both halves keep ingestion order.
    pub fn split(&self, spec: &SplitSpec) -> Result<(Self, Self)> {
        if !(spec.eval_fraction > 0.0 && spec.eval_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "eval_fraction must lie in (0, 1), got {}",
                spec.eval_fraction
            )));
        }
        let n = self.len();
        if n < 2 {
            return Err(Error::InsufficientData {
                what: "train/eval split".into(),
                needed: 2,
                available: n,
            });
        }
        let n_eval = ((spec.eval_fraction * n as f64).round() as usize).clamp(1, n - 1);

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
        let mut in_eval = vec![false; n];
        for &i in &order[..n_eval] {
            in_eval[i] = true;
        }
        let (eval, train): (Vec<_>, Vec<_>) = self
            .examples
            .iter()
            .cloned()
            .zip(in_eval)
            .partition(|(_, e)| *e);
        Ok((
            self.derive(train.into_iter().map(|(ex, _)| ex).collect()),
            self.derive(eval.into_iter().map(|(ex, _)| ex).collect()),
        ))
    }

    /// Nested subsample: the `⌈fraction·n⌉` examples with the lowest seeded
    /// per-id priority, returned in priority order. For a fixed seed, a
    /// smaller fraction always yields a subset of a larger one.
    pub fn subsample(&self, fraction: f64, seed: u64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "subsample fraction must lie in (0, 1], got {fraction}"
            )));
        }
        let k = subsample_size(fraction, self.len());
        if k == 0 {
            return Err(Error::InsufficientData {
                what: format!("subsample at fraction {fraction}"),
                needed: 1,
                available: 0,
            });
        }
        Ok(self.lowest_priority(k, Domain::Subsample, seed))
    }

    /// Seeded uniform sample of exactly `size` examples (priority order).
    pub fn sample(&self, size: usize, seed: u64) -> Result<Self> {
        if size > self.len() {
            return Err(Error::InsufficientData {
                what: "sample".into(),
                needed: size,
                available: self.len(),
            });
        }
        Ok(self.lowest_priority(size, Domain::Sample, seed))
    }

    fn lowest_priority(&self, k: usize, domain: Domain, seed: u64) -> Self {
        let mut keyed: Vec<(f64, &PreferenceExample)> = self
            .examples
            .iter()
            .map(|ex| (unit_draw(domain, seed, &ex.id), ex))
            .collect();
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));
        self.derive(
            keyed
                .into_iter()
                .take(k)
                .map(|(_, ex)| ex.clone())
                .collect(),
        )
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a PreferenceExample;
    type IntoIter = std::slice::Iter<'a, PreferenceExample>;

    fn into_iter(self) -> Self::IntoIter {
        self.examples.iter()
    }
}

/// `⌈fraction·n⌉`, ignoring floating-point dust just above an integer.
pub fn subsample_size(fraction: f64, n: usize) -> usize {
    let exact = fraction * n as f64;
    ((exact - 1e-9).ceil().max(0.0) as usize).min(n)
}

fn validate(ex: &PreferenceExample, line: usize) -> Result<()> {
    let fail = |message: &str| {
        Err(Error::Parse {
            line,
            message: message.to_string(),
        })
    };
    if ex.id.is_empty() {
        return fail("id must be non-empty");
    }
    if ex.chosen.trim().is_empty() {
        return fail("chosen response is empty");
    }
    if ex.rejected.trim().is_empty() {
        return fail("rejected response is empty");
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub eval_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            eval_fraction: 0.1,
            seed: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jsonl(lines: &[&str]) -> Result<Dataset> {
        Dataset::ingest_reader(lines.join("\n").as_bytes(), "mem", TiePolicy::Drop)
    }

    fn example(id: &str, prompt: &str, chosen: &str, rejected: &str) -> PreferenceExample {
        PreferenceExample {
            id: id.into(),
            prompt: prompt.into(),
            chosen: chosen.into(),
            rejected: rejected.into(),
            meta: BTreeMap::new(),
        }
    }

    fn numbered(n: usize) -> Dataset {
        let examples = (0..n)
            .map(|i| example(&format!("ex-{i}"), "p", &format!("good {i}"), "bad"))
            .collect();
        Dataset::from_examples("mem", examples).unwrap()
    }

    #[test]
    fn ingest_three_lines() {
        let d = jsonl(&[
            r#"{"prompt":"p1","chosen":"a","rejected":"b"}"#,
            r#"{"id":"x","prompt":"p2","chosen":"c","rejected":"d"}"#,
            r#"{"prompt":"p3","chosen":"e","rejected":"f","meta":{"src":"m"}}"#,
        ])
        .unwrap();
        assert_eq!(d.len(), 3);
        let ids: Vec<_> = d.ids().collect();
        assert_eq!(ids, ["line-1", "x", "line-3"]);
        let log = d.provenance().filter_log;
        assert_eq!((log.ingested, log.kept, log.dropped()), (3, 3, 0));
    }

    #[test]
    fn ingest_drops_ties() {
        let d = jsonl(&[
            r#"{"prompt":"p1","chosen":"a","rejected":"b"}"#,
            r#"{"prompt":"p2","chosen":"c","rejected":"d","meta":{"tie":"true"}}"#,
            r#"{"prompt":"p3","chosen":"same  text","rejected":" same text"}"#,
        ])
        .unwrap();
        assert_eq!(d.ids().collect::<Vec<_>>(), ["line-1"]);
        let log = d.provenance().filter_log;
        assert_eq!(log.tie_dropped, 2);
        assert!(log.is_conserved());
    }

    #[test]
    fn tie_under_error_policy() {
        let data = r#"{"prompt":"p","chosen":"c","rejected":"d","meta":{"tie":"true"}}"#;
        let err = Dataset::ingest_reader(data.as_bytes(), "mem", TiePolicy::Error).unwrap_err();
        assert!(matches!(err, Error::Tie { line: 1, .. }), "{err}");
    }

    #[test]
    fn empty_chosen_names_line() {
        let err = jsonl(&[
            r#"{"prompt":"p1","chosen":"a","rejected":"b"}"#,
            r#"{"prompt":"p2","chosen":"","rejected":"b"}"#,
        ])
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(err.to_string().starts_with("line 2"));
    }

    #[test]
    fn malformed_and_duplicate_lines() {
        let err = jsonl(&[r#"{"prompt":"p1","chosen":"a","rejected":"b"}"#, "{nope"]).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));

        let err = jsonl(&[
            r#"{"id":"a","prompt":"p","chosen":"x","rejected":"y"}"#,
            r#"{"id":"a","prompt":"p","chosen":"z","rejected":"y"}"#,
        ])
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateId { ref id, line: 2 } if id == "a"));
    }

    #[test]
    fn length_filter_boundary() {
        let prompt = vec!["w"; 13].join(" ");
        let long = vec!["t"; 500].join(" ");
        let ok = vec!["t"; 499].join(" ");
        let d = Dataset::from_examples(
            "mem",
            vec![
                example("drop", &prompt, &long, "short"),
                example("keep", &prompt, &ok, "short"),
            ],
        )
        .unwrap();
        let f = d.length_filter(512).unwrap();
        assert_eq!(f.ids().collect::<Vec<_>>(), ["keep"]);
        assert_eq!(f.provenance().filter_log.length_dropped, 1);
        assert!(f.provenance().filter_log.is_conserved());

        assert_eq!(d.length_filter(usize::MAX).unwrap().len(), 2);
        assert!(d.length_filter(0).is_err());
        assert!(Dataset::default().length_filter(512).unwrap().is_empty());
    }

    #[test]
    fn split_sizes_and_determinism() {
        let d = numbered(10);
        let spec = SplitSpec {
            eval_fraction: 0.2,
            seed: 7,
        };
        let (tr, ev) = d.split(&spec).unwrap();
        assert_eq!((tr.len(), ev.len()), (8, 2));
        let (tr2, ev2) = d.split(&spec).unwrap();
        assert_eq!((tr, ev), (tr2, ev2));

        let (_, ev) = d
            .split(&SplitSpec {
                eval_fraction: 0.05,
                seed: 7,
            })
            .unwrap();
        assert_eq!(ev.len(), 1);
        assert!(numbered(1).split(&spec).is_err());
    }

    #[test]
    fn subsample_sizes() {
        let d = numbered(1000);
        assert_eq!(d.subsample(0.1, 3).unwrap().len(), 100);
        let full = d.subsample(1.0, 3).unwrap();
        let mut a: Vec<_> = full.ids().collect();
        let mut b: Vec<_> = d.ids().collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
        assert!(d.subsample(0.0, 3).is_err());
        assert!(d.subsample(1.5, 3).is_err());
        assert!(numbered(5).subsample(0.01, 1).is_ok());
    }

    #[test]
    fn subsample_nested() {
        let d = numbered(200);
        let half: HashSet<_> = d
            .subsample(0.5, 11)
            .unwrap()
            .ids()
            .map(str::to_owned)
            .collect();
        let quarter = d.subsample(0.25, 11).unwrap();
        assert!(quarter.ids().all(|id| half.contains(id)));
    }
}
