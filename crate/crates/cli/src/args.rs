use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use prefaudit_core::reward::BatchSize;
use prefaudit_core::AuditConfig;

#[derive(Debug, Parser)]
#[command(
    name = "prefaudit",
    version,
    about = "Audit pairwise preference datasets for reward modeling"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Counts, token-length distribution and filter log.
    Stats(CommonArgs),
    /// Train a Bradley-Terry reward head on the train split.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Evaluate a saved model.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Model file written by `train`.
        #[arg(long)]
        model: PathBuf,
        /// Which part of the split to evaluate on.
        #[arg(long, value_enum, default_value_t = SplitPart::Eval)]
        split: SplitPart,
    },
    /// Label-flip noise sweep.
    Noise {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Scaling curve over nested subsamples, with saturation and gain per doubling.
    Scale {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        scale: ScaleArgs,
    },
    /// Expected calibration error of z-split predictions across noise rates.
    Calibration {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        /// Number of equal-width calibration bins.
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Cosine similarity of chosen/rejected response embeddings.
    Similarity {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        sim: SimilarityArgs,
        /// Number of histogram bins over [-1, 1].
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Train on high-information pairs vs. a random subset of the same size.
    InfoCompare {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        sim: SimilarityArgs,
        #[command(flatten)]
        info: InfoArgs,
    },
    /// Run every analysis and write report.json, CSVs and SVG plots.
    Audit {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        scale: ScaleArgs,
        #[command(flatten)]
        sim: SimilarityArgs,
        #[command(flatten)]
        info: InfoArgs,
        /// Number of calibration bins.
        #[arg(long)]
        bins: Option<usize>,
        /// Number of similarity histogram bins.
        #[arg(long)]
        hist_bins: Option<usize>,
    },
    /// Write a synthetic Bradley-Terry dataset (and embeddings for `vectors`).
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitPart {
    Train,
    Eval,
    All,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Canonical preference JSONL file.
    #[arg(long)]
    pub data: PathBuf,
    /// Embedding JSONL file; hashed n-gram features are used when absent.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Rescale loaded embeddings to unit norm.
    #[arg(long)]
    pub renormalize: bool,
    /// TOML config file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub eval_fraction: Option<f64>,
    /// Whitespace-token limit for prompt plus response (default 512).
    #[arg(long)]
    pub max_tokens: Option<usize>,
    /// Width of the hashed n-gram featurizer.
    #[arg(long)]
    pub hash_dim: Option<usize>,
    #[arg(long, default_value = "prefaudit-out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub l2: Option<f64>,
    /// Mini-batch size, or `full`.
    #[arg(long, value_parser = parse_batch)]
    pub batch_size: Option<BatchSize>,
    /// Stop after this many epochs without eval improvement.
    #[arg(long)]
    pub patience: Option<usize>,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    /// Comma-separated ascending flip rates in [0, 0.5].
    #[arg(long, value_delimiter = ',')]
    pub noise_rates: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct ScaleArgs {
    /// Comma-separated ascending training fractions in (0, 1].
    #[arg(long, value_delimiter = ',')]
    pub fractions: Option<Vec<f64>>,
    /// Saturation target as a fraction of full-data accuracy.
    #[arg(long)]
    pub target: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimilarityArgs {
    /// Pairs with cosine similarity below this are high-information.
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    /// Training subset size for both arms.
    #[arg(long)]
    pub size: Option<usize>,
    /// Comma-separated seeds, one paired run each.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SynthKind {
    /// Word-bag texts whose hidden reward hashed features can learn.
    Text,
    /// Vector responses with a matching embedding file.
    Vectors,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = SynthKind::Text)]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 5000)]
    pub n: usize,
    /// Vector dimension (`vectors` only).
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "prefaudit-out")]
    pub out_dir: PathBuf,
}

fn parse_batch(s: &str) -> Result<BatchSize, String> {
    if s.eq_ignore_ascii_case("full") {
        return Ok(BatchSize::Full);
    }
    s.parse::<usize>()
        .map(BatchSize::Size)
        .map_err(|_| format!("expected a positive integer or `full`, got `{s}`"))
}

fn read_config(path: &Path) -> Result<AuditConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

/// Defaults, then the config file, then flags.
pub fn resolve(common: &CommonArgs) -> Result<AuditConfig> {
    let mut cfg = match &common.config {
        Some(p) => read_config(p)?,
        None => AuditConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
        cfg.train.seed = seed;
    }
    set(&mut cfg.eval_fraction, common.eval_fraction);
    set(&mut cfg.max_tokens, common.max_tokens);
    set(&mut cfg.hash_dim, common.hash_dim);
    Ok(cfg)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl TrainArgs {
    pub fn apply(&self, cfg: &mut AuditConfig) {
        set(&mut cfg.train.learning_rate, self.lr);
        set(&mut cfg.train.epochs, self.epochs);
        set(&mut cfg.train.l2, self.l2);
        set(&mut cfg.train.batch_size, self.batch_size);
        if self.patience.is_some() {
            cfg.train.early_stop_patience = self.patience;
        }
    }
}

impl NoiseArgs {
    pub fn apply(&self, cfg: &mut AuditConfig) {
        set(&mut cfg.noise_rates, self.noise_rates.clone());
    }
}

impl ScaleArgs {
    pub fn apply(&self, cfg: &mut AuditConfig) {
        set(&mut cfg.fractions, self.fractions.clone());
        set(&mut cfg.saturation_target, self.target);
    }
}

impl SimilarityArgs {
    pub fn apply(&self, cfg: &mut AuditConfig) {
        set(&mut cfg.threshold, self.threshold);
    }
}

impl InfoArgs {
    pub fn apply(&self, cfg: &mut AuditConfig) {
        if self.size.is_some() {
            cfg.info_size = self.size;
        }
        set(&mut cfg.info_seeds, self.seeds.clone());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(
            &path,
            "seed = 5\nthreshold = 0.7\nmax_tokens = 100\n[train]\nepochs = 3\nbatch_size = 16\n",
        )
        .unwrap();
        let cli = Cli::try_parse_from([
            "prefaudit",
            "train",
            "--data",
            "d.jsonl",
            "--config",
            path.to_str().unwrap(),
            "--max-tokens",
            "64",
            "--lr",
            "0.2",
        ])
        .unwrap();
        let Command::Train { common, train } = cli.command else {
            panic!()
        };
        let mut cfg = resolve(&common).unwrap();
        train.apply(&mut cfg);
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.threshold, 0.7);
        assert_eq!(cfg.max_tokens, 64);
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.train.batch_size, BatchSize::Size(16));
        assert_eq!(cfg.train.learning_rate, 0.2);
        assert_eq!(cfg.train.l2, 1e-4);
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "sead = 5\n").unwrap();
        let common = CommonArgs {
            data: "x".into(),
            embeddings: None,
            renormalize: false,
            config: Some(path),
            seed: None,
            eval_fraction: None,
            max_tokens: None,
            hash_dim: None,
            out_dir: "o".into(),
        };
        assert!(resolve(&common).is_err());
    }

    #[test]
    fn batch_parsing() {
        assert_eq!(parse_batch("full").unwrap(), BatchSize::Full);
        assert_eq!(parse_batch("8").unwrap(), BatchSize::Size(8));
        assert!(parse_batch("lots").is_err());
    }
}
