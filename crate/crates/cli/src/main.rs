use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use logratio_cli::config::{DataSource, ExperimentConfig, Preset, DEFAULT_ZERO_REPLACEMENT};
use logratio_cli::ingest::save_assays;
use logratio_cli::report::{self, Format};
use logratio_cli::runner::load_source;
use logratio_cli::{emit_report, emit_tables, run_experiment};

#[derive(Parser)]
#[command(name = "logratio", version, about = "Log-ratio transform x classifier benchmark grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic assay CSV.
    Gen {
        /// Config whose synthetic data source is used; defaults to the paper-like preset.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Generator seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples_per_zone: Option<usize>,
        /// Output directory; the file is written as `assays.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the grid described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: Format,
    },
    /// Re-emit tables and plot data from a saved results file.
    Report {
        #[arg(long)]
        results: PathBuf,
        /// Defaults to the directory holding the results file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: Format,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Gen {
            config,
            seed,
            samples_per_zone,
            out,
        } => {
            let source = match config {
                Some(path) => {
                    let cfg = ExperimentConfig::load(&path).with_context(|| format!("loading {}", path.display()))?;
                    cfg.data_source
                }
                None => DataSource::Synthetic {
                    preset: Preset::Paperlike,
                    samples_per_zone: None,
                    imbalance: None,
                    seed: None,
                },
            };
            let DataSource::Synthetic {
                preset,
                samples_per_zone: cfg_n,
                imbalance,
                seed: cfg_seed,
            } = source
            else {
                bail!("gen needs a synthetic data source");
            };
            let source = DataSource::Synthetic {
                preset,
                samples_per_zone: samples_per_zone.or(cfg_n),
                imbalance,
                seed: seed.or(cfg_seed),
            };
            let dataset = load_source(&source, DEFAULT_ZERO_REPLACEMENT)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let path = out.join("assays.csv");
            save_assays(&dataset, &path)?;
            println!("wrote {} rows to {}", dataset.len(), path.display());
        }
        Command::Run {
            config,
            seed,
            out,
            format,
        } => {
            let mut cfg = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let report = run_experiment(&cfg)?;
            let written = emit_report(&report, &cfg.output_dir, format)?;
            let echo = cfg.output_dir.join("config.toml");
            fs::write(&echo, cfg.to_toml()).with_context(|| format!("writing {}", echo.display()))?;
            for t in &report.transforms {
                let gm = report.geometric_mean_f1.get(t).map_or("-".to_string(), |v| format!("{v:.2}"));
                println!("{t}: geometric mean F1 {gm}");
            }
            for cell in report.failures() {
                println!("failed: {} / {}", cell.transform, cell.classifier);
            }
            println!("wrote {} files to {}", written.len() + 1, cfg.output_dir.display());
        }
        Command::Report { results, out, format } => {
            let records = report::read_results(&results).with_context(|| format!("reading {}", results.display()))?;
            let rs = report::from_records(&records)?;
            let out = out.unwrap_or_else(|| results.parent().map(PathBuf::from).unwrap_or_default());
            let written = emit_tables(&rs, &out, format)?;
            println!("wrote {} files to {}", written.len(), out.display());
        }
    }
    Ok(())
}
