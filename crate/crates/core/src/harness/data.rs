use ndarray::{Array2, ArrayView2};

use super::config::RunConfig;
use crate::error::Result;
use crate::prep::{
    make_windows, select_features, split_campaign, zscore_fit_apply, FeatureSelection, NormStats,
    Split, WindowedDataset,
};
use crate::scenario::{generate_campaign, ScenarioSeries};

/// A generated campaign cut into normalized train/validation/test windows.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub campaign: Vec<ScenarioSeries>,
    pub split: Split,
    /// Statistics of every channel, fitted on the training scenarios.
    pub stats: NormStats,
    pub selection: FeatureSelection,
    /// Channels that are forecast.
    pub forecast_channels: Vec<usize>,
    pub train: WindowedDataset,
    pub val: WindowedDataset,
    pub test: WindowedDataset,
}

impl PreparedData {
    pub fn channel_names(&self) -> &[String] {
        &self.campaign[0].channel_names
    }

    pub fn forecast_names(&self) -> Vec<String> {
        self.forecast_channels
            .iter()
            .map(|&c| self.channel_names()[c].clone())
            .collect()
    }

    /// Test scenario with the largest break.
    pub fn showcase_scenario(&self) -> usize {
        *self
            .split
            .test
            .iter()
            .max_by(|&&a, &&b| {
                self.campaign[a]
                    .break_size
                    .total_cmp(&self.campaign[b].break_size)
            })
            .expect("test split is never empty")
    }
}

/// Generates the campaign and runs split, normalization, feature selection
/// and windowing. Statistics and correlations come from training scenarios
/// only.
pub fn prepare_data(cfg: &RunConfig) -> Result<PreparedData> {
    cfg.validate()?;
    let campaign = generate_campaign(&cfg.scenario_config(), &cfg.break_sizes)?;
    let split = split_campaign(campaign.len(), cfg.split_ratio, cfg.seed)?;
    let train_blocks: Vec<ArrayView2<f64>> =
        split.train.iter().map(|&i| campaign[i].values.view()).collect();
    let stats = NormStats::fit(&train_blocks)?;
    let train_series: Vec<ScenarioSeries> =
        split.train.iter().map(|&i| campaign[i].clone()).collect();
    let all_targets = campaign[0].target_indices.clone();
    let selection = select_features(&train_series, &all_targets, cfg.select_threshold)?;
    let forecast_channels = all_targets[..cfg.forecast_targets].to_vec();

    let normalized: Vec<Array2<f64>> = campaign
        .iter()
        .map(|s| zscore_fit_apply(s.values.view(), Some(&stats)).map(|(v, _)| v))
        .collect::<Result<_>>()?;
    let windows = |ids: &[usize]| {
        let blocks: Vec<Array2<f64>> = ids.iter().map(|&i| normalized[i].clone()).collect();
        let mut ds = make_windows(
            &blocks,
            &stats,
            &selection.indices,
            &forecast_channels,
            cfg.window,
        )?;
        for o in &mut ds.origins {
            o.0 = ids[o.0];
        }
        Ok::<_, crate::Error>(ds)
    };
    let train = windows(&split.train)?;
    let val = windows(&split.val)?;
    let test = windows(&split.test)?;
    Ok(PreparedData {
        campaign,
        split,
        stats,
        selection,
        forecast_channels,
        train,
        val,
        test,
    })
}
