//! Expert fuzzy evaluation: linguistic ratings become trapezoidal fuzzy
//! numbers, experts are weighted by position, experience and education, and
//! opinions are merged with a similarity aggregation that balances expert
//! weight against consensus. The resulting per-metric scores set the loss
//! weights and drive the per-epoch feedback channel.

mod expert;
mod feedback;
mod number;
mod opinions;
mod sam;

pub use expert::{expert_weight, Education, ExpertProfile, Position};
pub use feedback::{derive_loss_weights, feedback_score, score_channel, IndexMetrics, NEUTRAL_SCORE};
pub use number::{defuzzify_centroid, pairwise_similarity, term_to_fuzzy, LinguisticTerm, TrapezoidalFuzzyNumber};
pub use opinions::{MetricScoreTable, OpinionMatrix, REFERENCE_PANEL};
pub use sam::{sam_aggregate, sam_aggregate_with_beta, DEFAULT_BETA};
