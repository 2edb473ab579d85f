use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{s, Axis};

use super::data::PreparedData;
use super::evaluate::EvaluationReport;
use super::svg::{forecast_svg, ForecastPlot};
use super::train::{model_inputs, EpochLog, ModelMeta, epoch_log_csv};
use crate::error::{shape, Error, Result};
use crate::nn::Checkpoint;
use crate::uncertainty::{confidence_band, mc_dropout_predict, postprocess, prediction_csv, ConfidenceBand};

/// Lowercase file-name form of a label: runs of other characters become `_`.
pub fn slug(label: &str) -> String {
    let mut out = String::new();
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<PathBuf> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

/// `report.csv` (pooled), `report_channels.csv` and `report.json`.
pub fn write_report(dir: &Path, report: &EvaluationReport) -> Result<Vec<PathBuf>> {
    Ok(vec![
        write_file(&dir.join("report.csv"), &report.to_csv())?,
        write_file(&dir.join("report_channels.csv"), &report.channels_csv())?,
        write_file(&dir.join("report.json"), &report.to_json())?,
    ])
}

pub fn write_epoch_log(dir: &Path, model: &str, log: &[EpochLog]) -> Result<PathBuf> {
    write_file(&dir.join(format!("{}_log.csv", slug(model))), &epoch_log_csv(log))
}

/// MC-dropout forecast of one test window, in physical units.
#[derive(Debug, Clone)]
pub struct Showcase {
    pub model: String,
    pub scenario: usize,
    pub start: usize,
    pub band: ConfidenceBand,
}

/// Forecast band for the first window of the test scenario with the largest
/// break; its history ends where the fault begins for the default timing.
pub fn showcase_band(ckpt: &Checkpoint, data: &PreparedData, n_passes: usize, seed: u64) -> Result<Showcase> {
    let meta = ModelMeta::from_checkpoint(ckpt)?;
    let scenario = data.showcase_scenario();
    let sample = data
        .test
        .origins
        .iter()
        .position(|&o| o == (scenario, 0))
        .ok_or_else(|| shape("showcase window missing from the test split"))?;
    let x = data.test.inputs.slice(s![sample..sample + 1, .., ..]);
    let x = model_inputs(x, meta.score);
    let ens = mc_dropout_predict(&ckpt.network, x.view(), n_passes, seed)?;
    let band = postprocess(&confidence_band(&ens), &data.stats, &data.test.target_indices)?;
    Ok(Showcase {
        model: meta.model,
        scenario,
        start: 0,
        band,
    })
}

/// Per forecast channel: a prediction CSV and an SVG plot.
pub fn write_predictions(dir: &Path, show: &Showcase, data: &PreparedData) -> Result<Vec<PathBuf>> {
    let series = &data.campaign[show.scenario];
    let l = data.test.inputs.len_of(Axis(1));
    let h = data.test.targets.len_of(Axis(1));
    let names = data.forecast_names();
    let dt = series.time_s.get(1).copied().unwrap_or(1.0) - series.time_s[0];
    let mut written = Vec::new();
    for (k, &channel) in data.forecast_channels.iter().enumerate() {
        let col = series.values.column(channel);
        let truth: Vec<f64> = col.slice(s![show.start + l..show.start + l + h]).to_vec();
        let t0 = series.time_s[show.start + l];
        let stem = format!("prediction_{:02}_{}", k, slug(&names[k]));
        let csv = prediction_csv(&show.band, 0, k, &truth, t0, dt);
        written.push(write_file(&dir.join(format!("{stem}.csv")), &csv)?);

        let time = |i: usize| series.time_s[i];
        let pick = |a: &ndarray::Array3<f64>| -> Vec<(f64, f64)> {
            (0..h).map(|j| (time(show.start + l + j), a[[0, j, k]])).collect()
        };
        let plot = ForecastPlot {
            title: &format!("{} ({}, break {:.4} m²)", names[k], show.model, series.break_size),
            unit_label: &names[k],
            history: (show.start..show.start + l).map(|i| (time(i), col[i])).collect(),
            truth: truth
                .iter()
                .enumerate()
                .map(|(j, v)| (time(show.start + l + j), *v))
                .collect(),
            mean: pick(&show.band.mean),
            lower: pick(&show.band.lower),
            upper: pick(&show.band.upper),
        };
        written.push(write_file(&dir.join(format!("{stem}.svg")), &forecast_svg(&plot))?);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs() {
        assert_eq!(slug("Cold-leg #1 Temperature"), "cold_leg_1_temperature");
        assert_eq!(slug("EFEM-BiLSTM"), "efem_bilstm");
    }
}
