mod args;
mod commands;
mod output;
mod plot;

use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

use args::{resolve, Cli, Command};
use commands::Ctx;

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Stats(common) => {
            let cfg = resolve(&common)?;
            commands::stats(&Ctx::load(&common, cfg)?)
        }
        Command::Train { common, train } => {
            let mut cfg = resolve(&common)?;
            train.apply(&mut cfg);
            commands::train_cmd(&Ctx::load(&common, cfg)?, &common)
        }
        Command::Eval {
            common,
            model,
            split,
        } => {
            let cfg = resolve(&common)?;
            commands::eval_cmd(&Ctx::load(&common, cfg)?, &common, &model, split)
        }
        Command::Noise {
            common,
            train,
            noise,
        } => {
            let mut cfg = resolve(&common)?;
            train.apply(&mut cfg);
            noise.apply(&mut cfg);
            commands::noise_cmd(&Ctx::load(&common, cfg)?, &common)
        }
        Command::Scale {
            common,
            train,
            scale,
        } => {
            let mut cfg = resolve(&common)?;
            train.apply(&mut cfg);
            scale.apply(&mut cfg);
            commands::scale_cmd(&Ctx::load(&common, cfg)?, &common)
        }
        Command::Calibration {
            common,
            train,
            noise,
            bins,
        } => {
            let mut cfg = resolve(&common)?;
            train.apply(&mut cfg);
            noise.apply(&mut cfg);
            if let Some(b) = bins {
                cfg.calibration_bins = b;
            }
            commands::calibration_cmd(&Ctx::load(&common, cfg)?, &common)
        }
        Command::Similarity { common, sim, bins } => {
            let mut cfg = resolve(&common)?;
            sim.apply(&mut cfg);
            if let Some(b) = bins {
                cfg.similarity_bins = b;
            }
            commands::similarity_cmd(&Ctx::load(&common, cfg)?, &common)
        }
        Command::InfoCompare {
            common,
            train,
            sim,
            info,
        } => {
            let mut cfg = resolve(&common)?;
            train.apply(&mut cfg);
            sim.apply(&mut cfg);
            info.apply(&mut cfg);
            commands::info_compare_cmd(&Ctx::load(&common, cfg)?, &common)
        }
        Command::Audit {
            common,
            train,
            noise,
            scale,
            sim,
            info,
            bins,
            hist_bins,
        } => {
            let mut cfg = resolve(&common)?;
            train.apply(&mut cfg);
            noise.apply(&mut cfg);
            scale.apply(&mut cfg);
            sim.apply(&mut cfg);
            info.apply(&mut cfg);
            if let Some(b) = bins {
                cfg.calibration_bins = b;
            }
            if let Some(b) = hist_bins {
                cfg.similarity_bins = b;
            }
            commands::audit_cmd(&Ctx::load(&common, cfg)?, &common)
        }
        Command::Synth(args) => commands::synth_cmd(&args),
    }
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    e.chain()
        .find_map(|c| c.downcast_ref::<prefaudit_core::Error>())
        .map(|e| e.kind())
        .unwrap_or("runtime")
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({
                "error": {"kind": error_kind(&e), "message": format!("{e:#}")}
            });
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
