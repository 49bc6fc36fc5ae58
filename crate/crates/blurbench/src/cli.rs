use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use blurbench_core::report::Format;
use blurbench_core::schedule::Technique;
use blurbench_core::BlurLevel;
use clap::{Parser, Subcommand};

use crate::commands::{self, Console, ReportInputs, ScoreInputs};
use crate::config::{parse_format, RunConfig, Settings, SEED_ENV};

/// Motion-blur robustness toolkit for image captioning evaluation.
#[derive(Debug, Parser)]
#[command(name = "blurbench", version)]
pub struct Cli {
    /// Seed for augmentation planning [default: config, then $BLURBENCH_SEED, then 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat key=value config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: out]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Console output format: markdown or csv
    #[arg(long, global = true, value_parser = parse_format)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

fn parse_technique(s: &str) -> Result<Technique, String> {
    s.parse()
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write MB0..MB3 variants of PGM/PPM images as <stem>.<level>.<ext>
    Blur {
        /// Image files or directories
        inputs: Vec<PathBuf>,
        /// Comma-separated levels [default: MB0,MB1,MB2,MB3]
        #[arg(long, value_delimiter = ',')]
        levels: Vec<BlurLevel>,
    },
    /// Assign per-sample blur levels for a training technique
    Plan {
        /// Sample keys, one per line
        #[arg(long)]
        keys: Option<PathBuf>,
        /// No-Aug, ObjDet-Aug, Cap-Aug or ObjDet-Cap-Aug
        #[arg(long, value_parser = parse_technique)]
        technique: Option<Technique>,
    },
    /// Score captions with CIDEr-D per blur level
    Score {
        /// COCO-style caption JSON
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Prediction JSON array
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Blur-flag CSV; adds with_blur / no_blur rows at MB0
        #[arg(long)]
        flags: Option<PathBuf>,
        /// Label for the technique column [default: config, then predictions file stem]
        #[arg(long)]
        technique: Option<String>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        max_n: Option<usize>,
    },
    /// Build degradation tables and region-feature histograms
    Report {
        /// Score CSV file(s)
        #[arg(long, num_args = 1..)]
        scores: Vec<PathBuf>,
        /// Feature-count CSV
        #[arg(long)]
        features: Option<PathBuf>,
        /// Blur-flag CSV; enables the subset table
        #[arg(long)]
        flags: Option<PathBuf>,
        #[arg(long)]
        bin_width: Option<u64>,
    },
}

impl Cli {
    fn flag_settings(&self) -> Settings {
        let mut s = Settings {
            seed: self.seed,
            out: self.out.clone(),
            format: self.format,
            ..Default::default()
        };
        let mut path = |k: &str, v: &Option<PathBuf>| {
            if let Some(p) = v {
                s.paths.insert(k.to_owned(), p.clone());
            }
        };
        match &self.command {
            Command::Blur { .. } => {}
            Command::Plan { keys, .. } => path("keys", keys),
            Command::Score { dataset, predictions, flags, .. } => {
                path("dataset", dataset);
                path("predictions", predictions);
                path("flags", flags);
            }
            Command::Report { features, flags, .. } => {
                path("features", features);
                path("flags", flags);
            }
        }
        match &self.command {
            Command::Blur { levels, .. } if !levels.is_empty() => {
                let mut levels = levels.clone();
                levels.sort();
                levels.dedup();
                s.levels = Some(levels);
            }
            Command::Blur { .. } => {}
            Command::Plan { technique, .. } => s.technique = technique.map(|t| t.name().to_owned()),
            Command::Score { technique, sigma, max_n, .. } => {
                s.technique = technique.clone();
                s.cider_sigma = *sigma;
                s.cider_max_n = *max_n;
            }
            Command::Report { bin_width, .. } => s.bin_width = *bin_width,
        }
        s
    }
}

fn required<'a>(cfg: &'a RunConfig, key: &str, flag: &str) -> Result<&'a std::path::Path> {
    cfg.path(key)
        .with_context(|| format!("missing --{flag} (or `{key}` in the config file)"))
}

fn execute(cli: Cli, con: &mut Console) -> Result<bool> {
    let file = match &cli.config {
        Some(p) => Settings::load_file(p)?,
        None => Settings::default(),
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let cfg = RunConfig::resolve(cli.flag_settings(), file, env_seed.as_deref())?;
    let _ = writeln!(con.out, "seed: {} ({:?})", cfg.seed, cfg.seed_source);
    match &cli.command {
        Command::Blur { inputs, .. } => commands::cmd_blur(inputs, &cfg.levels, &cfg.out, con),
        Command::Plan { .. } => {
            let keys = required(&cfg, "keys", "keys")?;
            let technique = cfg
                .technique()
                .context("missing --technique (or `technique` in the config file)")?;
            commands::cmd_plan(keys, technique, cfg.seed, &cfg.out, con)
        }
        Command::Score { .. } => {
            let predictions = required(&cfg, "predictions", "predictions")?;
            let label = match &cfg.technique {
                Some(t) => t.clone(),
                None => predictions
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default(),
            };
            let inputs = ScoreInputs {
                dataset: required(&cfg, "dataset", "dataset")?,
                predictions,
                flags: cfg.path("flags"),
                technique: &label,
                cider: cfg.cider,
            };
            commands::cmd_score(&inputs, &cfg.out, con)
        }
        Command::Report { scores, .. } => {
            let scores = if scores.is_empty() {
                vec![required(&cfg, "scores", "scores")?.to_path_buf()]
            } else {
                scores.clone()
            };
            let inputs = ReportInputs {
                scores: &scores,
                features: cfg.path("features"),
                flags: cfg.path("flags"),
                bin_width: cfg.bin_width,
                format: cfg.format,
            };
            commands::cmd_report(&inputs, &cfg.out, con)
        }
    }
}

/// Exit codes: 0 success, 1 some items failed, 2 usage or fatal error.
pub fn run() -> ExitCode {
    let cli = Cli::parse();
    let (mut stdout, mut stderr) = (std::io::stdout().lock(), std::io::stderr().lock());
    let mut con = Console {
        out: &mut stdout,
        err: &mut stderr,
    };
    match execute(cli, &mut con) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let _ = writeln!(con.err, "error: {e:#}");
            ExitCode::from(2)
        }
    }
}
