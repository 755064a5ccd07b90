use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use beampred::Dataset;
use beampred_cli::experiments::{self as ex, AwarenessMode};
use beampred_cli::RunConfig;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "beampred", version, about = "mmWave beam-power prediction from vehicle locations")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed for scene generation and the train/test split.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when omitted (generate defaults to the dataset path).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Args)]
struct DatasetArg {
    /// JSONL dataset written by `generate`.
    #[arg(long)]
    dataset: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate scenes and write a JSONL dataset.
    Generate {
        #[arg(long)]
        samples: Option<usize>,
        /// Also write a flat CSV export.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Strongest-beam RMSE of OLS, random forest and gradient boosting.
    Table2(DatasetArg),
    /// RMSE as vehicle groups (or single vehicles) are added to the features.
    AwarenessSweep {
        #[command(flatten)]
        data: DatasetArg,
        #[arg(long)]
        per_vehicle: bool,
    },
    /// RMSE, alignment and throughput over the CQI grid.
    QuantSweep {
        #[command(flatten)]
        data: DatasetArg,
        /// Train one model per beam pair and report alignment and throughput.
        #[arg(long)]
        all_beams: bool,
        /// Write the per-row error CDF here.
        #[arg(long)]
        cdf_out: Option<PathBuf>,
    },
    /// Alignment probability and throughput ratio of all-beam regression
    /// versus the classifier.
    EvalAllbeams {
        #[command(flatten)]
        data: DatasetArg,
        /// Write the full metric reports as JSON here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print one scene and its traced paths as JSON.
    DumpPaths {
        #[arg(long, default_value_t = 0)]
        scene_id: u64,
    },
}

fn load_config(common: &Common) -> anyhow::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.run.seed = s;
    }
    if let Some(w) = common.workers {
        cfg.run.workers = w;
    }
    Ok(cfg)
}

fn load_prepared(cfg: &RunConfig, data: &DatasetArg) -> anyhow::Result<ex::Prepared> {
    let path = data.dataset.clone().unwrap_or_else(|| cfg.run.dataset.clone());
    let ds = Dataset::load(&path).with_context(|| format!("loading dataset {}", path.display()))?;
    ex::prepare(&ds, cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = load_config(&cli.common)?;
    cfg.validate()?;
    if cfg.run.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.run.workers)
            .build_global()
            .context("configuring worker pool")?;
    }
    let out = cli.common.out.as_deref();
    match cli.command {
        Command::Generate { samples, csv } => {
            if let Some(n) = samples {
                cfg.run.n_samples = n;
            }
            let ds = ex::generate(&cfg, true)?;
            let path = out.map(PathBuf::from).unwrap_or_else(|| cfg.run.dataset.clone());
            ds.save(&path).with_context(|| format!("writing {}", path.display()))?;
            if let Some(csv) = csv {
                let w = std::io::BufWriter::new(std::fs::File::create(&csv)?);
                ds.write_csv(w)?;
            }
            let outages = ds.len() - ds.without_outages().len();
            eprintln!("wrote {} samples ({outages} outages) to {}", ds.len(), path.display());
            for (k, v) in ex::power_summary(&ds) {
                eprintln!("strongest beam {k}: {v:.2} dBm");
            }
        }
        Command::Table2(data) => {
            let prep = load_prepared(&cfg, &data)?;
            let rows = ex::table2(&cfg, &prep)?;
            ex::write_output(out, &ex::table2_csv(&cfg, &prep, &rows))?;
        }
        Command::AwarenessSweep { data, per_vehicle } => {
            let prep = load_prepared(&cfg, &data)?;
            let mode = if per_vehicle { AwarenessMode::Vehicle } else { AwarenessMode::Level };
            let rows = ex::awareness_sweep(&cfg, &prep, mode)?;
            ex::write_output(out, &ex::awareness_csv(&cfg, &prep, mode, &rows))?;
        }
        Command::QuantSweep { data, all_beams, cdf_out } => {
            let prep = load_prepared(&cfg, &data)?;
            let rows = ex::quantization_sweep(&cfg, &prep, all_beams)?;
            ex::write_output(out, &ex::quant_csv(&cfg, &prep, &rows))?;
            if let Some(p) = cdf_out {
                ex::write_output(Some(&p), &ex::quant_cdf_csv(&rows))?;
            }
        }
        Command::EvalAllbeams { data, report } => {
            let prep = load_prepared(&cfg, &data)?;
            let rows = ex::eval_allbeams(&cfg, &prep)?;
            ex::write_output(out, &ex::allbeams_csv(&cfg, &prep, &rows))?;
            if let Some(p) = report {
                ex::write_output(Some(&p), &serde_json::to_string_pretty(&rows)?)?;
            }
        }
        Command::DumpPaths { scene_id } => {
            let dump = ex::dump_paths(&cfg, scene_id)?;
            ex::write_output(out, &(serde_json::to_string_pretty(&dump)? + "\n"))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
