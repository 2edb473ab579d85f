use std::fmt;
use std::str::FromStr;

use crate::error::{config, Error, Result};

/// Trapezoidal membership function `(a1, a2, a3, a4)` on `[0, 1]`, flat
/// between `a2` and `a3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapezoidalFuzzyNumber([f64; 4]);

impl TrapezoidalFuzzyNumber {
    pub fn new(a1: f64, a2: f64, a3: f64, a4: f64) -> Result<Self> {
        let a = [a1, a2, a3, a4];
        if a.iter().any(|v| !(0.0..=1.0).contains(v)) || !(a1 <= a2 && a2 <= a3 && a3 <= a4) {
            return Err(config(format!("invalid trapezoidal fuzzy number {a:?}")));
        }
        Ok(Self(a))
    }

    /// Component-wise combination `Σ c_u · F_u`; the caller guarantees the
    /// coefficients are non-negative and sum to one.
    pub(crate) fn convex_combination(parts: &[Self], coeffs: &[f64]) -> Self {
        let mut out = [0.0; 4];
        for (f, c) in parts.iter().zip(coeffs) {
            for (o, a) in out.iter_mut().zip(f.0) {
                *o += c * a;
            }
        }
        Self(out)
    }

    pub fn components(&self) -> [f64; 4] {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinguisticTerm {
    VeryLow,
    Low,
    Moderate,
    High,
    VeryHigh,
}

impl LinguisticTerm {
    pub const ALL: [LinguisticTerm; 5] = [
        LinguisticTerm::VeryLow,
        LinguisticTerm::Low,
        LinguisticTerm::Moderate,
        LinguisticTerm::High,
        LinguisticTerm::VeryHigh,
    ];

    pub fn code(self) -> &'static str {
        match self {
            LinguisticTerm::VeryLow => "VL",
            LinguisticTerm::Low => "L",
            LinguisticTerm::Moderate => "M",
            LinguisticTerm::High => "H",
            LinguisticTerm::VeryHigh => "VH",
        }
    }

    pub fn fuzzy(self) -> TrapezoidalFuzzyNumber {
        TrapezoidalFuzzyNumber(match self {
            LinguisticTerm::VeryLow => [0.00, 0.00, 0.10, 0.20],
            LinguisticTerm::Low => [0.10, 0.25, 0.25, 0.40],
            LinguisticTerm::Moderate => [0.30, 0.45, 0.55, 0.70],
            LinguisticTerm::High => [0.60, 0.75, 0.75, 0.90],
            LinguisticTerm::VeryHigh => [0.80, 0.90, 0.90, 1.00],
        })
    }

    /// The next stronger term, if any.
    pub fn upgrade(self) -> Option<Self> {
        let i = Self::ALL.iter().position(|t| *t == self)?;
        Self::ALL.get(i + 1).copied()
    }
}

impl FromStr for LinguisticTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "VL" => Ok(LinguisticTerm::VeryLow),
            "L" => Ok(LinguisticTerm::Low),
            "M" => Ok(LinguisticTerm::Moderate),
            "H" => Ok(LinguisticTerm::High),
            "VH" => Ok(LinguisticTerm::VeryHigh),
            other => Err(Error::Parse {
                line: 0,
                message: format!("unknown linguistic term {other:?} (expected VL, L, M, H or VH)"),
            }),
        }
    }
}

impl fmt::Display for LinguisticTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Parses a rating code and returns its fuzzy number.
pub fn term_to_fuzzy(term: &str) -> Result<TrapezoidalFuzzyNumber> {
    Ok(term.parse::<LinguisticTerm>()?.fuzzy())
}

/// Agreement `1 - ¼ Σ |a_i - b_i|` between two opinions.
pub fn pairwise_similarity(a: &TrapezoidalFuzzyNumber, b: &TrapezoidalFuzzyNumber) -> f64 {
    1.0 - 0.25 * a.0.iter().zip(b.0).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Centroid (centre of area) of the trapezoid.
pub fn defuzzify_centroid(f: &TrapezoidalFuzzyNumber) -> f64 {
    let [a1, a2, a3, a4] = f.0;
    let den = 3.0 * (a4 + a3 - a2 - a1);
    if den.abs() < 1e-15 {
        return a1;
    }
    ((a4 * a4 + a3 * a3 + a3 * a4) - (a1 * a1 + a2 * a2 + a1 * a2)) / den
}
