//! `fg`: batch front end for the deforestation pipeline.
//!
//! Exit status is 0 on success, 1 on a fatal error and 2 when some items of
//! a batch failed or had no data. Errors are printed to stderr as one JSON
//! line: `{"error": kind, "message": text}`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fg_core::catalog::read_queries;
use fg_core::config::RunConfig;
use fg_core::pipeline::{
    read_json, run_catalog, run_evaluate, run_fuse, run_predict_import, run_predict_index, run_preprocess, run_synth,
    write_json, StageSummary,
};
use fg_core::synth::{CorpusSpec, DateCounts};
use fg_core::Error;

#[derive(Parser)]
#[command(name = "fg", version, about = "Multi-satellite deforestation mapping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Index,
    Import,
}

#[derive(Subcommand)]
enum Command {
    /// Index every tile under a data directory.
    Catalog {
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Build normalized 256×256 stacks for every band-complete acquisition.
    Preprocess {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Produce one probability mask per stack, or import external masks.
    Predict {
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long, required_if_eq("method", "index"))]
        stacks: Option<PathBuf>,
        #[arg(long, required_if_eq("method", "import"))]
        masks_dir: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Fuse the masks of each query into one binary map.
    Fuse {
        #[arg(long)]
        masks: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Score fused maps against labels.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Generate a synthetic corpus with known ground truth.
    Synth {
        #[arg(long)]
        scenes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
        /// Comma-separated `YYYY-MM` list.
        #[arg(long, default_value = "2020-08", value_parser = parse_months)]
        months: Months,
        #[arg(long, default_value_t = 0.01)]
        noise: f64,
        #[arg(long, default_value_t = 0.3)]
        outlier_rate: f64,
        #[arg(long, default_value_t = 1)]
        sentinel1_dates: usize,
        #[arg(long, default_value_t = 2)]
        sentinel2_dates: usize,
        #[arg(long, default_value_t = 10)]
        landsat8_dates: usize,
    },
}

#[derive(Clone)]
struct Months(Vec<(i32, u32)>);

fn parse_months(text: &str) -> Result<Months, String> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (y, m) = item.trim().split_once('-').ok_or(format!("expected YYYY-MM, got {item:?}"))?;
            let year = y.parse().map_err(|_| format!("bad year in {item:?}"))?;
            let month: u32 = m.parse().map_err(|_| format!("bad month in {item:?}"))?;
            if !(1..=12).contains(&month) {
                return Err(format!("month out of range in {item:?}"));
            }
            Ok((year, month))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Months)
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Error> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string(value).expect("summary serializes"));
}

fn finish(summary: &StageSummary) -> ExitCode {
    print_json(summary);
    for f in &summary.failed {
        eprintln!("{}", serde_json::json!({"error": f.kind, "item": f.item, "message": f.message}));
    }
    if summary.is_partial() {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Catalog { data_dir, out, config } => {
            let cfg = load_config(config.as_deref())?;
            let catalog = run_catalog(&data_dir, &out, &cfg)?;
            print_json(&serde_json::json!({
                "records": catalog.records().len(),
                "skipped": catalog.skipped().len(),
            }));
            Ok(ExitCode::SUCCESS)
        }
        Command::Preprocess { catalog, config, out_dir } => {
            let cfg = load_config(config.as_deref())?;
            let catalog = read_json(&catalog)?;
            Ok(finish(&run_preprocess(&catalog, &out_dir, &cfg)?))
        }
        Command::Predict {
            method,
            stacks,
            masks_dir,
            config,
            out_dir,
        } => {
            let cfg = load_config(config.as_deref())?;
            let summary = match method {
                Method::Index => run_predict_index(&stacks.expect("required by clap"), &out_dir, &cfg)?,
                Method::Import => run_predict_import(&masks_dir.expect("required by clap"), &out_dir, &cfg)?,
            };
            Ok(finish(&summary))
        }
        Command::Fuse {
            masks,
            queries,
            config,
            out_dir,
        } => {
            let cfg = load_config(config.as_deref())?;
            let queries = read_queries(&queries)?;
            Ok(finish(&run_fuse(&masks, &queries, &out_dir, &cfg)?))
        }
        Command::Evaluate { pred, truth, out, config } => {
            let cfg = load_config(config.as_deref())?;
            let (report, failed) = run_evaluate(&pred, &truth, &cfg)?;
            write_json(&report, &out)?;
            print_json(&report.aggregate);
            Ok(finish(&StageSummary {
                written: vec![out.display().to_string()],
                failed,
                ..StageSummary::default()
            }))
        }
        Command::Synth {
            scenes,
            seed,
            out_dir,
            months,
            noise,
            outlier_rate,
            sentinel1_dates,
            sentinel2_dates,
            landsat8_dates,
        } => {
            let spec = CorpusSpec {
                scenes,
                seed,
                months: months.0,
                dates: DateCounts {
                    sentinel1: sentinel1_dates,
                    sentinel2: sentinel2_dates,
                    landsat8: landsat8_dates,
                },
                noise_sigma: noise,
                outlier_rate,
            };
            let manifest = run_synth(&spec, &out_dir)?;
            print_json(&serde_json::json!({
                "scenes": manifest.scenes.len(),
                "files": manifest.file_count(),
            }));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", serde_json::json!({"error": e.kind(), "message": e.to_string()}));
            ExitCode::from(1)
        }
    }
}
