use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use efem_core::harness::{pipeline, zoo_entry, RunConfig};
use efem_core::Error;

#[derive(Parser)]
#[command(name = "efem", version, about = "Transient forecasting with fuzzy-weighted similarity losses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Run configuration (`section.key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic scenario campaign as CSV.
    Generate,
    /// Write the split, normalization statistics and selected features.
    Select,
    /// Train one model and write its checkpoint and epoch log.
    Train {
        #[arg(long, default_value = "EFEM-BiLSTM")]
        model: String,
    },
    /// Forecast the showcase test window with MC-dropout bands.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Score a checkpoint on the test split.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Train and evaluate the model zoo.
    Compare,
    /// Evaluate expert opinions into metric scores and loss weights.
    FuzzyScore {
        /// Opinion file; the built-in reference panel when omitted.
        #[arg(long)]
        opinions: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<RunConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var("EFEM_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config(format!("EFEM_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn print_files(files: &[PathBuf]) {
    for f in files {
        println!("{}", f.display());
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    configure_threads()?;
    let cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Generate => print_files(&pipeline::generate(&cfg)?),
        Command::Select => {
            let (data, files) = pipeline::select(&cfg)?;
            eprintln!(
                "selected {} of {} channels; split {}/{}/{} scenarios",
                data.selection.indices.len(),
                data.channel_names().len(),
                data.split.train.len(),
                data.split.val.len(),
                data.split.test.len()
            );
            print_files(&files);
        }
        Command::Train { model } => {
            let entry = zoo_entry(&model)?;
            let (_, files) = pipeline::train(&cfg, &entry, &mut |e| {
                eprintln!(
                    "epoch {:>4}  train {:.6}  val mse {:.6}{}",
                    e.epoch,
                    e.train_loss,
                    e.val_mse,
                    e.score.map(|s| format!("  score {s:.4}")).unwrap_or_default()
                );
            })?;
            print_files(&files);
        }
        Command::Predict { checkpoint } => print_files(&pipeline::predict(&cfg, &checkpoint)?),
        Command::Evaluate { checkpoint } => {
            let (report, files) = pipeline::evaluate(&cfg, &checkpoint)?;
            eprint!("{}", report.to_csv());
            print_files(&files);
        }
        Command::Compare => {
            let (report, files) = pipeline::compare(&cfg)?;
            eprint!("{}", report.to_csv());
            print_files(&files);
        }
        Command::FuzzyScore { opinions } => {
            let (table, weights, files) = pipeline::fuzzy_score(&cfg, opinions.as_deref())?;
            eprint!("{}", table.to_csv());
            eprintln!(
                "loss weights: shape {:.3}, time {:.3}, space {:.3}",
                weights.shape, weights.time, weights.space
            );
            print_files(&files);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("usage: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
        Err(e) => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("{}: {}", e.class(), message);
            ExitCode::FAILURE
        }
    }
}
