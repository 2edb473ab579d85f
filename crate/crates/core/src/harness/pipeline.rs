//! One function per command: each regenerates what it needs from the
//! configuration and writes its outputs under `cfg.out_dir`.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::RunConfig;
use super::data::{prepare_data, PreparedData};
use super::emit::{showcase_band, slug, write_epoch_log, write_file, write_predictions, write_report};
use super::evaluate::{evaluate_model, EvaluationReport};
use super::train::{train_model, EpochLog, TrainedModel};
use super::zoo::{select_zoo, ModelZooEntry};
use crate::error::{config, Result};
use crate::fuzzy::{derive_loss_weights, MetricScoreTable, OpinionMatrix};
use crate::nn::Checkpoint;
use crate::scenario::{generate_campaign, write_scenario};
use crate::similarity::LossWeights;

/// Writes every scenario of the campaign as CSV plus metadata.
pub fn generate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let campaign = generate_campaign(&cfg.scenario_config(), &cfg.break_sizes)?;
    let dir = cfg.out_dir.join("scenarios");
    campaign
        .iter()
        .enumerate()
        .map(|(i, s)| write_scenario(s, &dir, &format!("scenario_{i:02}")))
        .collect()
}

/// Writes the split, normalization statistics and feature selection.
pub fn select(cfg: &RunConfig) -> Result<(PreparedData, Vec<PathBuf>)> {
    let data = prepare_data(cfg)?;
    let names = data.channel_names().to_vec();
    let split = serde_json::json!({
        "train": data.split.train,
        "val": data.split.val,
        "test": data.split.test,
    });
    let files = vec![
        write_file(&cfg.out_dir.join("features.csv"), &data.selection.to_csv(&names))?,
        write_file(&cfg.out_dir.join("norm_stats.csv"), &data.stats.to_csv(&names))?,
        write_file(
            &cfg.out_dir.join("split.json"),
            &format!("{}\n", serde_json::to_string_pretty(&split).expect("json")),
        )?,
    ];
    Ok((data, files))
}

/// Trains one model and writes its checkpoint and epoch log.
pub fn train(
    cfg: &RunConfig,
    entry: &ModelZooEntry,
    on_epoch: &mut dyn FnMut(&EpochLog),
) -> Result<(TrainedModel, Vec<PathBuf>)> {
    let data = prepare_data(cfg)?;
    let trained = train_model(entry, &data.train, &data.val, cfg, on_epoch)?;
    let ckpt = cfg.out_dir.join(format!("{}.ckpt", slug(entry.name)));
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| crate::Error::io(&cfg.out_dir, e))?;
    trained.checkpoint.save(&ckpt)?;
    let log = write_epoch_log(&cfg.out_dir, entry.name, &trained.log)?;
    Ok((trained, vec![ckpt, log]))
}

/// MC-dropout forecast of the showcase window with CSVs and plots.
pub fn predict(cfg: &RunConfig, checkpoint: &Path) -> Result<Vec<PathBuf>> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let data = prepare_data(cfg)?;
    let show = showcase_band(&ckpt, &data, cfg.n_passes, cfg.seed)?;
    write_predictions(&cfg.out_dir.join("predictions"), &show, &data)
}

/// Test-split metrics of a stored model.
pub fn evaluate(cfg: &RunConfig, checkpoint: &Path) -> Result<(EvaluationReport, Vec<PathBuf>)> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let data = prepare_data(cfg)?;
    let row = evaluate_model(&ckpt, &data.test, &data.forecast_names())?;
    let report = EvaluationReport::new(cfg.seed, cfg.hash(), vec![row]);
    let files = write_report(&cfg.out_dir, &report)?;
    Ok((report, files))
}

/// Trains and evaluates entries on the same data. Entries train
/// independently (each with its own RNG stream) and may run in parallel.
pub fn compare_models(
    zoo: &[ModelZooEntry],
    data: &PreparedData,
    cfg: &RunConfig,
) -> Result<(EvaluationReport, Vec<TrainedModel>)> {
    if zoo.len() < 2 {
        return Err(config("a comparison needs at least two models"));
    }
    let names = data.forecast_names();
    let results: Vec<(TrainedModel, super::evaluate::ModelReport)> = zoo
        .par_iter()
        .map(|entry| {
            let trained = train_model(entry, &data.train, &data.val, cfg, &mut |_| {})?;
            let row = evaluate_model(&trained.checkpoint, &data.test, &names)?;
            Ok((trained, row))
        })
        .collect::<Result<_>>()?;
    let (trained, rows): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok((EvaluationReport::new(cfg.seed, cfg.hash(), rows), trained))
}

/// Full comparison: report, per-model epoch logs, and prediction files for
/// the feedback model (or the first model when it is not in the zoo).
pub fn compare(cfg: &RunConfig) -> Result<(EvaluationReport, Vec<PathBuf>)> {
    let zoo = select_zoo(&cfg.models)?;
    let data = prepare_data(cfg)?;
    let (report, trained) = compare_models(&zoo, &data, cfg)?;
    let mut files = write_report(&cfg.out_dir, &report)?;
    for t in &trained {
        files.push(write_epoch_log(&cfg.out_dir.join("logs"), t.entry.name, &t.log)?);
    }
    let showcase = trained
        .iter()
        .find(|t| t.entry.feedback())
        .unwrap_or(&trained[0]);
    let show = showcase_band(&showcase.checkpoint, &data, cfg.n_passes, cfg.seed)?;
    files.extend(write_predictions(&cfg.out_dir.join("predictions"), &show, &data)?);
    Ok((report, files))
}

/// Fuzzy metric scores and the loss weights derived from them.
pub fn fuzzy_score(cfg: &RunConfig, opinions: Option<&Path>) -> Result<(MetricScoreTable, LossWeights, Vec<PathBuf>)> {
    let matrix = match opinions {
        Some(p) => OpinionMatrix::from_file(p)?,
        None => OpinionMatrix::reference(),
    };
    let table = matrix.evaluate()?;
    let weights = derive_loss_weights(&table)?;
    let weights_csv = format!(
        "index,weight\nshape,{:.6}\ntime,{:.6}\nspace,{:.6}\n",
        weights.shape, weights.time, weights.space
    );
    let files = vec![
        write_file(&cfg.out_dir.join("fuzzy_scores.csv"), &table.to_csv())?,
        write_file(&cfg.out_dir.join("loss_weights.csv"), &weights_csv)?,
    ];
    Ok((table, weights, files))
}
