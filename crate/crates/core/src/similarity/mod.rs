//! Sequence-similarity measures: hard and soft dynamic time warping, the
//! temporal distortion index, point metrics, and the weighted composite
//! training loss built from them.

mod composite;
mod cost;
mod dtw;
mod metrics;
mod soft;
mod tdi;

pub use composite::{composite_loss, mse_loss, LossWeights, DEFAULT_GAMMA};
pub use cost::{pairwise_cost, pairwise_cost_1d, CostMatrix};
pub use dtw::{dtw_hard, AlignmentPath};
pub use metrics::{point_metrics, PointMetrics};
pub use soft::{soft_dtw, soft_min, SoftDtwResult};
pub use tdi::{penalty_matrix, soft_dtw_and_tdi, soft_tdi_with_grad, tdi, TdiMode};
