use std::fmt::Write as _;
use std::path::Path;

use super::expert::{expert_weight, ExpertProfile};
use super::number::LinguisticTerm;
use super::sam::sam_aggregate;
use crate::error::{config, Error, Result};

/// The five-expert panel and its ratings of ten forecast-quality metrics
/// used to calibrate the default loss weights.
pub const REFERENCE_PANEL: &str = "\
# Expert panel: id, position, years of experience, education.
expert,position,years,education
1,Professor,22,PhD
2,Associate Professor,16,PhD
3,Assistant Professor,7,PhD
4,Senior Engineer,12,Bachelor
5,Engineer,3,Master

# One linguistic rating per expert, in panel order.
metric,e1,e2,e3,e4,e5
MAE,M,M,M,H,H
MAPE,M,M,M,H,H
MSE,H,M,M,M,H
RMSE,H,M,H,M,VH
SSE,M,L,M,L,M
EditDistance,M,M,L,M,M
DTW,VH,H,M,H,VH
TDI,M,H,H,M,H
CrossCorrelation,M,H,M,M,M
LCS,H,M,M,M,H
";

/// Experts × metrics matrix of linguistic ratings.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionMatrix {
    pub experts: Vec<ExpertProfile>,
    pub metrics: Vec<String>,
    /// `ratings[metric][expert]`.
    pub ratings: Vec<Vec<LinguisticTerm>>,
}

enum Block {
    None,
    Experts,
    Metrics,
}

impl OpinionMatrix {
    pub fn reference() -> Self {
        Self::parse(REFERENCE_PANEL).expect("reference panel parses")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses the two-block comma-delimited format. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut block = Block::None;
        let mut experts = Vec::new();
        let mut metrics = Vec::new();
        let mut ratings = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            match fields[0].to_ascii_lowercase().as_str() {
                "expert" => {
                    block = Block::Experts;
                    continue;
                }
                "metric" => {
                    block = Block::Metrics;
                    continue;
                }
                _ => {}
            }
            match block {
                Block::None => return Err(err("expected an `expert,...` header".into())),
                Block::Experts => {
                    if fields.len() != 4 {
                        return Err(err(format!("expected 4 fields, found {}", fields.len())));
                    }
                    let years = fields[2]
                        .parse::<u32>()
                        .map_err(|_| err(format!("invalid years {:?}", fields[2])))?;
                    let position = fields[1].parse().map_err(|e: Error| err(e.to_string()))?;
                    let education = fields[3].parse().map_err(|e: Error| err(e.to_string()))?;
                    experts.push(ExpertProfile::new(position, years, education));
                }
                Block::Metrics => {
                    if fields.len() != experts.len() + 1 {
                        return Err(err(format!(
                            "metric {:?} has {} ratings for {} experts",
                            fields[0],
                            fields.len() - 1,
                            experts.len()
                        )));
                    }
                    let row = fields[1..]
                        .iter()
                        .map(|t| t.parse::<LinguisticTerm>().map_err(|e| err(e.to_string())))
                        .collect::<Result<Vec<_>>>()?;
                    metrics.push(fields[0].to_string());
                    ratings.push(row);
                }
            }
        }
        if experts.is_empty() {
            return Err(config("opinion file lists no experts"));
        }
        if metrics.is_empty() {
            return Err(config("opinion file lists no metrics"));
        }
        Ok(Self {
            experts,
            metrics,
            ratings,
        })
    }

    /// Aggregates every metric row into a defuzzified score.
    pub fn evaluate(&self) -> Result<MetricScoreTable> {
        let weights = expert_weight(&self.experts)?;
        let mut scores = Vec::with_capacity(self.metrics.len());
        for (name, row) in self.metrics.iter().zip(&self.ratings) {
            let opinions: Vec<_> = row.iter().map(|t| t.fuzzy()).collect();
            let (_, score) = sam_aggregate(&opinions, &weights)?;
            scores.push((name.clone(), score));
        }
        Ok(MetricScoreTable(scores))
    }
}

/// Metric name → defuzzified score, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricScoreTable(pub Vec<(String, f64)>);

impl MetricScoreTable {
    pub fn get(&self, metric: &str) -> Option<f64> {
        self.0
            .iter()
            .find(|(name, _)| name.eq_ignore_ascii_case(metric))
            .map(|(_, s)| *s)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,score\n");
        for (name, score) in &self.0 {
            let _ = writeln!(out, "{name},{score:.6}");
        }
        out
    }
}
