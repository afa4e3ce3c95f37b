use anyhow::{bail, Result};
use prefaudit_core::audit::{load_dataset, AuditConfig, AuditReport};
use prefaudit_core::calibration::{calibration_of_points, reliability_data};
use prefaudit_core::dataset::token_count;
use prefaudit_core::features::{FeatureSource, ENCODER_DIM};
use prefaudit_core::noise::sweep_points;
use prefaudit_core::reward::EpochStats;
use prefaudit_core::synthetic::{bt_text, bt_vectors, TextConfig, VectorConfig};
use prefaudit_core::{
    doubling_gain, evaluate, hash_featurize, info_compare, run_audit, saturation, scaling_sweep,
    similarity_report, train, Dataset, EmbeddingTable, LoadOptions, NoiseSweepResult, RewardModel,
    ScalingCurve,
};
use serde::Serialize;
use serde_json::json;

use crate::args::{CommonArgs, SplitPart, SynthArgs, SynthKind};
use crate::output::Out;
use crate::plot::{self, Chart, Series, XScale};

pub struct Ctx {
    pub cfg: AuditConfig,
    pub data: Dataset,
    pub out: Out,
}

impl Ctx {
    pub fn load(common: &CommonArgs, cfg: AuditConfig) -> Result<Self> {
        let data = load_dataset(&common.data, &cfg)?;
        if data.is_empty() {
            bail!(prefaudit_core::Error::InsufficientData {
                what: "examples after filtering".into(),
                needed: 1,
                available: 0,
            });
        }
        Ok(Self {
            out: Out::new(&common.out_dir)?,
            cfg,
            data,
        })
    }

    /// Loaded embedding file, or hashed n-gram features of the data.
    pub fn features(&self, common: &CommonArgs) -> Result<(EmbeddingTable, bool)> {
        match &common.embeddings {
            Some(p) => {
                let opts = LoadOptions {
                    expect_dim: None,
                    renormalize: common.renormalize,
                };
                Ok((EmbeddingTable::load(p, opts)?, false))
            }
            None => Ok((
                hash_featurize(&self.data, self.cfg.hash_dim, self.cfg.seed)?,
                true,
            )),
        }
    }

    pub fn split(&self) -> Result<(Dataset, Dataset)> {
        Ok(self.data.split(&self.cfg.split_spec())?)
    }
}

fn note(msg: impl AsRef<str>) {
    eprintln!("prefaudit: {}", msg.as_ref());
}

fn features_note(table: &EmbeddingTable, hashed: bool) {
    if hashed {
        note(format!("no embedding file given; using {}", table.source()));
    } else if table.dim() != ENCODER_DIM {
        note(format!("embedding dimension is {}", table.dim()));
    }
}

#[derive(Serialize)]
struct LengthStats {
    min: usize,
    median: f64,
    p90: usize,
    max: usize,
    mean: f64,
}

fn length_stats(mut v: Vec<usize>) -> LengthStats {
    v.sort_unstable();
    let n = v.len();
    let median = if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    };
    // nearest-rank percentile
    let p90 = v[((0.9 * n as f64).ceil() as usize).clamp(1, n) - 1];
    LengthStats {
        min: v[0],
        median,
        p90,
        max: v[n - 1],
        mean: v.iter().sum::<usize>() as f64 / n as f64,
    }
}

pub fn stats(ctx: &Ctx) -> Result<()> {
    let d = &ctx.data;
    let col = |f: &dyn Fn(&prefaudit_core::PreferenceExample) -> usize| {
        length_stats(d.iter().map(f).collect())
    };
    // a dataset too small to split still has stats
    let split = ctx
        .split()
        .ok()
        .map(|(t, e)| json!({"train": t.len(), "eval": e.len()}));
    let body = json!({
        "dataset": d.provenance().source,
        "examples": d.len(),
        "filter_log": d.provenance().filter_log,
        "split": split,
        "tokens": {
            "prompt": col(&|e| token_count(&e.prompt)),
            "chosen": col(&|e| token_count(&e.chosen)),
            "rejected": col(&|e| token_count(&e.rejected)),
            "pair_max": col(&|e| token_count(&e.prompt)
                + token_count(&e.chosen).max(token_count(&e.rejected))),
        },
    });
    ctx.out.json("stats.json", &body)?;
    println!("{}", serde_json::to_string_pretty(&body)?);
    Ok(())
}

pub fn train_cmd(ctx: &Ctx, common: &CommonArgs) -> Result<()> {
    let (table, hashed) = ctx.features(common)?;
    features_note(&table, hashed);
    let (tr, ev) = ctx.split()?;
    let outcome = train(&tr, &table, &ctx.cfg.train, Some(&ev))?;
    let model_path = ctx.out.path("model.json")?;
    outcome.model.save(&model_path)?;
    ctx.out.csv("train_history.csv", outcome.history.iter())?;
    let last: Option<&EpochStats> = outcome.history.last();
    println!(
        "{}",
        json!({
            "model": model_path,
            "n_train": tr.len(),
            "n_eval": ev.len(),
            "epochs_run": outcome.history.len(),
            "final_loss": last.map(|s| s.loss),
            "train_accuracy": last.map(|s| s.train_accuracy),
            "eval_accuracy": last.and_then(|s| s.eval_accuracy),
        })
    );
    Ok(())
}

#[derive(Serialize)]
struct PredictionRow<'a> {
    id: &'a str,
    p_win: f64,
    correct: bool,
}

pub fn eval_cmd(
    ctx: &Ctx,
    common: &CommonArgs,
    model_path: &std::path::Path,
    part: SplitPart,
) -> Result<()> {
    let model = RewardModel::load(model_path)?;
    let table = match (&common.embeddings, &model.feature_spec.source) {
        (None, FeatureSource::HashedNgrams { dim, seed }) => {
            hash_featurize(&ctx.data, *dim, *seed)?
        }
        (None, other) => bail!(prefaudit_core::Error::InvalidArgument(format!(
            "model was trained on `{other}` features; pass --embeddings"
        ))),
        (Some(_), _) => ctx.features(common)?.0,
    };
    let subset = match part {
        SplitPart::All => ctx.data.clone(),
        SplitPart::Train => ctx.split()?.0,
        SplitPart::Eval => ctx.split()?.1,
    };
    let ev = evaluate(&model, &subset, &table)?;
    ctx.out.csv(
        "predictions.csv",
        ev.predictions.iter().map(|p| PredictionRow {
            id: &p.id,
            p_win: p.p_win,
            correct: p.correct,
        }),
    )?;
    let body = json!({"n": subset.len(), "accuracy": ev.accuracy});
    ctx.out.json("eval.json", &body)?;
    println!("{body}");
    Ok(())
}

#[derive(Serialize)]
struct NoiseRow {
    rate: f64,
    accuracy: f64,
    invariance_score: f64,
    concentration: f64,
    flips: usize,
}

fn noise_rows(r: &NoiseSweepResult) -> Vec<NoiseRow> {
    (0..r.rates.len())
        .map(|i| NoiseRow {
            rate: r.rates[i],
            accuracy: r.accuracy[i],
            invariance_score: r.invariance_score[i],
            concentration: r.concentration[i],
            flips: r.flip_counts[i],
        })
        .collect()
}

pub fn noise_cmd(ctx: &Ctx, common: &CommonArgs) -> Result<()> {
    let (table, hashed) = ctx.features(common)?;
    features_note(&table, hashed);
    let (tr, ev) = ctx.split()?;
    let points = sweep_points(
        &tr,
        &ev,
        &table,
        &ctx.cfg.noise_rates,
        &ctx.cfg.train,
        ctx.cfg.seed,
    )?;
    let result = NoiseSweepResult::from_points(&points);
    ctx.out.csv("noise.csv", noise_rows(&result))?;
    ctx.out.json("noise.json", &result)?;
    println!("{}", serde_json::to_string(&result)?);
    Ok(())
}

#[derive(Serialize)]
struct ScalingRow {
    fraction: f64,
    size: usize,
    accuracy: f64,
}

#[derive(Serialize)]
struct SaturationRow {
    fraction: f64,
    performance_fraction: f64,
}

fn scaling_rows(c: &ScalingCurve) -> Vec<ScalingRow> {
    (0..c.fractions.len())
        .map(|i| ScalingRow {
            fraction: c.fractions[i],
            size: c.sizes[i],
            accuracy: c.accuracy[i],
        })
        .collect()
}

fn saturation_rows(s: &prefaudit_core::SaturationCurve) -> Vec<SaturationRow> {
    s.data_fraction
        .iter()
        .zip(&s.performance_fraction)
        .map(|(&fraction, &performance_fraction)| SaturationRow {
            fraction,
            performance_fraction,
        })
        .collect()
}

pub fn scale_cmd(ctx: &Ctx, common: &CommonArgs) -> Result<()> {
    let (table, hashed) = ctx.features(common)?;
    features_note(&table, hashed);
    let (tr, ev) = ctx.split()?;
    let curve = scaling_sweep(
        &tr,
        &ev,
        &table,
        &ctx.cfg.fractions,
        &ctx.cfg.train,
        ctx.cfg.seed,
    )?;
    let sat = saturation(&curve, ctx.cfg.saturation_target)?;
    let gain = doubling_gain(&curve).ok();
    ctx.out.csv("curves/scaling.csv", scaling_rows(&curve))?;
    ctx.out
        .csv("curves/saturation.csv", saturation_rows(&sat))?;
    let body = json!({"curve": curve, "saturation": sat, "doubling_gain": gain});
    ctx.out.json("scaling.json", &body)?;
    println!("{body}");
    Ok(())
}

#[derive(Serialize)]
struct CalibrationRow {
    rate: f64,
    bin_lo: f64,
    bin_hi: f64,
    count: usize,
    conf: Option<f64>,
    acc: Option<f64>,
}

fn calibration_rows(cal: &[prefaudit_core::calibration::NoiseCalibration]) -> Vec<CalibrationRow> {
    cal.iter()
        .flat_map(|c| {
            c.report.bins.iter().map(move |b| CalibrationRow {
                rate: c.rate,
                bin_lo: b.lo,
                bin_hi: b.hi,
                count: b.count,
                conf: b.conf,
                acc: b.acc,
            })
        })
        .collect()
}

pub fn calibration_cmd(ctx: &Ctx, common: &CommonArgs) -> Result<()> {
    let (table, hashed) = ctx.features(common)?;
    features_note(&table, hashed);
    let (tr, ev) = ctx.split()?;
    let points = sweep_points(
        &tr,
        &ev,
        &table,
        &ctx.cfg.noise_rates,
        &ctx.cfg.train,
        ctx.cfg.seed,
    )?;
    let cal = calibration_of_points(&points, ctx.cfg.calibration_bins)?;
    ctx.out.csv("calibration.csv", calibration_rows(&cal))?;
    let summary: Vec<_> = cal
        .iter()
        .map(|c| json!({"rate": c.rate, "ece": c.ece, "n_records": c.report.n_records}))
        .collect();
    let body = json!({"bins": ctx.cfg.calibration_bins, "ece": summary});
    ctx.out.json("calibration.json", &body)?;
    println!("{body}");
    Ok(())
}

#[derive(Serialize)]
struct SimilarityRow<'a> {
    id: &'a str,
    similarity: f64,
}

#[derive(Serialize)]
struct HistRow {
    lo: f64,
    hi: f64,
    count: usize,
}

pub fn similarity_cmd(ctx: &Ctx, common: &CommonArgs) -> Result<()> {
    let (table, hashed) = ctx.features(common)?;
    features_note(&table, hashed);
    let mut report = similarity_report(
        &ctx.data,
        &table,
        ctx.cfg.threshold,
        ctx.cfg.similarity_bins,
    )?;
    let per = report.per_example.take().unwrap_or_default();
    ctx.out.csv(
        "similarity.csv",
        per.iter()
            .map(|(id, s)| SimilarityRow { id, similarity: *s }),
    )?;
    ctx.out.csv(
        "similarity_histogram.csv",
        report.histogram.iter().map(|b| HistRow {
            lo: b.lo,
            hi: b.hi,
            count: b.count,
        }),
    )?;
    ctx.out.json("similarity.json", &report)?;
    println!(
        "{}",
        json!({"threshold": report.threshold, "high_info_fraction": report.high_info_fraction, "n": per.len()})
    );
    Ok(())
}

#[derive(Serialize)]
struct InfoRow {
    kind: &'static str,
    seed: u64,
    accuracy: f64,
}

fn info_rows(ic: &prefaudit_core::InfoCompare) -> Vec<InfoRow> {
    ic.rows
        .iter()
        .map(|r| InfoRow {
            kind: r.kind.as_str(),
            seed: r.seed,
            accuracy: r.accuracy,
        })
        .collect()
}

pub fn info_compare_cmd(ctx: &Ctx, common: &CommonArgs) -> Result<()> {
    let (table, hashed) = ctx.features(common)?;
    features_note(&table, hashed);
    let (tr, ev) = ctx.split()?;
    let size = match ctx.cfg.info_size {
        Some(s) => s,
        None => {
            let sims = similarity_report(&tr, &table, ctx.cfg.threshold, 1)?;
            let qualifying = sims
                .per_example
                .unwrap_or_default()
                .iter()
                .filter(|(_, s)| *s < ctx.cfg.threshold)
                .count();
            qualifying.min(tr.len() / 2)
        }
    };
    let ic = info_compare(
        &tr,
        &ev,
        &table,
        ctx.cfg.threshold,
        size,
        &ctx.cfg.train,
        &ctx.cfg.info_seeds,
    )?;
    ctx.out.csv("info_compare.csv", info_rows(&ic))?;
    ctx.out.json("info_compare.json", &ic)?;
    println!("{}", serde_json::to_string(&ic)?);
    Ok(())
}

pub fn audit_cmd(ctx: &Ctx, common: &CommonArgs) -> Result<()> {
    let table = match &common.embeddings {
        Some(_) => Some(ctx.features(common)?.0),
        None => None,
    };
    let output = run_audit(&ctx.data, table, &ctx.cfg)?;
    let r = &output.report;
    for w in &r.provenance.warnings {
        note(w);
    }
    let out = &ctx.out;
    out.text("report.json", &r.to_json()?)?;
    out.csv("curves/scaling.csv", scaling_rows(&r.scaling.curve))?;
    if let Some(sat) = &r.scaling.saturation {
        out.csv("curves/saturation.csv", saturation_rows(sat))?;
    }
    out.csv("curves/noise.csv", noise_rows(&r.noise))?;
    out.csv("curves/calibration.csv", calibration_rows(&r.calibration))?;
    out.csv(
        "curves/similarity.csv",
        output
            .similarity_per_example
            .iter()
            .map(|(id, s)| SimilarityRow { id, similarity: *s }),
    )?;
    out.csv(
        "curves/similarity_histogram.csv",
        r.similarity.histogram.iter().map(|b| HistRow {
            lo: b.lo,
            hi: b.hi,
            count: b.count,
        }),
    )?;
    if let Some(ic) = &r.info_compare {
        out.csv("curves/info_compare.csv", info_rows(ic))?;
    }
    write_plots(out, r)?;
    println!(
        "{}",
        json!({
            "report": out.path("report.json")?,
            "n_train": r.provenance.n_train,
            "n_eval": r.provenance.n_eval,
            "warnings": r.provenance.warnings.len(),
        })
    );
    Ok(())
}

fn write_plots(out: &Out, r: &AuditReport) -> Result<()> {
    let unit = Some((0.0, 1.0));
    let c = &r.scaling.curve;
    let svg = plot::line_chart(
        &Chart {
            title: "Scaling curve",
            x_label: "training fraction",
            y_label: "eval accuracy",
            x_scale: XScale::Log2,
            x_range: None,
            y_range: None,
        },
        &[Series::line(
            "accuracy",
            c.fractions
                .iter()
                .copied()
                .zip(c.accuracy.iter().copied())
                .collect(),
        )],
    );
    out.text("plots/scaling.svg", &svg)?;

    if let Some(sat) = &r.scaling.saturation {
        let target = Series {
            dashed: true,
            ..Series::line(
                format!("target {}", sat.target),
                vec![(sat.data_fraction[0], sat.target), (1.0, sat.target)],
            )
        };
        let svg = plot::line_chart(
            &Chart {
                title: "Saturation",
                x_label: "training fraction",
                y_label: "fraction of full-data accuracy",
                x_scale: XScale::Log2,
                x_range: None,
                y_range: None,
            },
            &[
                Series::line(
                    "performance",
                    sat.data_fraction
                        .iter()
                        .copied()
                        .zip(sat.performance_fraction.iter().copied())
                        .collect(),
                ),
                target,
            ],
        );
        out.text("plots/saturation.svg", &svg)?;
    }

    let ecdf: Vec<Series> = r
        .noise_ecdf
        .iter()
        .map(|e| Series {
            step: true,
            ..Series::line(format!("flip {}", e.rate), e.points.clone())
        })
        .collect();
    let svg = plot::line_chart(
        &Chart {
            title: "Predicted win probability ECDF",
            x_label: "p(chosen wins)",
            y_label: "cumulative fraction",
            x_scale: XScale::Linear,
            x_range: unit,
            y_range: unit,
        },
        &ecdf,
    );
    out.text("plots/noise_ecdf.svg", &svg)?;

    let n = &r.noise;
    let svg = plot::line_chart(
        &Chart {
            title: "Label noise",
            x_label: "flip rate",
            y_label: "value",
            x_scale: XScale::Linear,
            x_range: None,
            y_range: Some((0.0, 1.05)),
        },
        &[
            Series::line(
                "concentration",
                n.rates
                    .iter()
                    .copied()
                    .zip(n.concentration.iter().copied())
                    .collect(),
            ),
            Series::line(
                "invariance",
                n.rates
                    .iter()
                    .copied()
                    .zip(n.invariance_score.iter().copied())
                    .collect(),
            ),
            Series::line(
                "accuracy",
                n.rates
                    .iter()
                    .copied()
                    .zip(n.accuracy.iter().copied())
                    .collect(),
            ),
        ],
    );
    out.text("plots/concentration.svg", &svg)?;

    let bins: Vec<_> = r
        .similarity
        .histogram
        .iter()
        .map(|b| (b.lo, b.hi, b.count))
        .collect();
    let svg = plot::histogram(
        &Chart {
            title: "Chosen/rejected cosine similarity",
            x_label: "cosine similarity",
            y_label: "pairs",
            x_scale: XScale::Linear,
            x_range: Some((-1.0, 1.0)),
            y_range: None,
        },
        &bins,
    );
    out.text("plots/similarity_hist.svg", &svg)?;

    let mut rel: Vec<Series> = r
        .calibration
        .iter()
        .map(|c| {
            Series::line(
                format!("flip {} (ECE {:.3})", c.rate, c.ece),
                reliability_data(&c.report)
                    .iter()
                    .map(|row| (row.conf, row.acc))
                    .collect(),
            )
        })
        .collect();
    rel.push(Series {
        dashed: true,
        ..Series::line("ideal", vec![(0.0, 0.0), (1.0, 1.0)])
    });
    let svg = plot::line_chart(
        &Chart {
            title: "Reliability",
            x_label: "mean confidence",
            y_label: "empirical accuracy",
            x_scale: XScale::Linear,
            x_range: unit,
            y_range: unit,
        },
        &rel,
    );
    out.text("plots/reliability.svg", &svg)?;
    Ok(())
}

pub fn synth_cmd(args: &SynthArgs) -> Result<()> {
    let out = Out::new(&args.out_dir)?;
    let data = out.path("data.jsonl")?;
    match args.kind {
        SynthKind::Text => {
            bt_text(&TextConfig {
                n: args.n,
                seed: args.seed,
                ..Default::default()
            })?
            .write_jsonl(&data)?;
            println!("{}", json!({"data": data}));
        }
        SynthKind::Vectors => {
            let s = bt_vectors(&VectorConfig {
                n: args.n,
                dim: args.dim,
                seed: args.seed,
                ..Default::default()
            })?;
            s.dataset.write_jsonl(&data)?;
            let emb = out.path("embeddings.jsonl")?;
            s.embeddings.write_jsonl(&emb)?;
            println!("{}", json!({"data": data, "embeddings": emb}));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_stats_nearest_rank() {
        let s = length_stats((1..=10).collect());
        assert_eq!((s.min, s.max, s.p90), (1, 10, 9));
        assert_eq!(s.median, 5.5);
        assert_eq!(s.mean, 5.5);
        let s = length_stats(vec![7]);
        assert_eq!((s.min, s.p90, s.max), (7, 7, 7));
        assert_eq!(s.median, 7.0);
    }
}
