//! Run configuration, training with fuzzy feedback, the model comparison and
//! everything written to disk.

mod config;
mod data;
mod emit;
mod evaluate;
pub mod pipeline;
mod svg;
mod train;
mod zoo;

pub use config::{RunConfig, WeightSource, CONFIG_KEYS};
pub use data::{prepare_data, PreparedData};
pub use emit::{showcase_band, slug, write_epoch_log, write_predictions, write_report, Showcase};
pub use evaluate::{evaluate_forecasts, evaluate_model, ChannelMetrics, EvaluationReport, MetricRow, ModelReport};
pub use pipeline::compare_models;
pub use svg::{forecast_svg, ForecastPlot};
pub use train::{
    epoch_log_csv, forecast, index_metrics, model_inputs, train_model, EpochLog, ModelMeta, TrainedModel,
};
pub use zoo::{select_zoo, zoo_entry, LossKind, ModelZooEntry, DEFAULT_ZOO};
