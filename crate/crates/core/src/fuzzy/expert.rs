use std::str::FromStr;

use crate::error::{config, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Position {
    Professor,
    /// Associate professor or senior engineer.
    AssociateProfessor,
    /// Assistant professor or engineer.
    AssistantProfessor,
    /// Technician or operator.
    Technician,
}

impl Position {
    fn points(self) -> f64 {
        match self {
            Position::Professor => 4.0,
            Position::AssociateProfessor => 3.0,
            Position::AssistantProfessor => 2.0,
            Position::Technician => 1.0,
        }
    }
}

impl FromStr for Position {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_lowercase();
        match key.as_str() {
            "professor" => Ok(Position::Professor),
            "associateprofessor" | "seniorengineer" => Ok(Position::AssociateProfessor),
            "assistantprofessor" | "engineer" => Ok(Position::AssistantProfessor),
            "technician" | "operator" => Ok(Position::Technician),
            _ => Err(config(format!("unknown professional position {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Education {
    PhD,
    Master,
    Bachelor,
}

impl Education {
    fn points(self) -> f64 {
        match self {
            Education::PhD => 2.0,
            Education::Master => 1.5,
            Education::Bachelor => 1.0,
        }
    }
}

impl FromStr for Education {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_lowercase();
        match key.as_str() {
            "phd" | "doctorate" => Ok(Education::PhD),
            "master" | "masters" => Ok(Education::Master),
            "bachelor" | "bachelors" | "undergraduate" => Ok(Education::Bachelor),
            _ => Err(config(format!("unknown education level {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpertProfile {
    pub position: Position,
    pub years_experience: u32,
    pub education: Education,
}

impl ExpertProfile {
    pub fn new(position: Position, years_experience: u32, education: Education) -> Self {
        Self {
            position,
            years_experience,
            education,
        }
    }

    /// Raw credibility score: position + experience bracket + education.
    pub fn score(&self) -> f64 {
        let experience = match self.years_experience {
            30.. => 4.0,
            20..=29 => 3.0,
            10..=19 => 2.0,
            _ => 1.0,
        };
        self.position.points() + experience + self.education.points()
    }
}

/// Normalized expert weights `score / Σ score`.
pub fn expert_weight(profiles: &[ExpertProfile]) -> Result<Vec<f64>> {
    if profiles.is_empty() {
        return Err(config("expert panel is empty"));
    }
    let scores: Vec<f64> = profiles.iter().map(ExpertProfile::score).collect();
    let total: f64 = scores.iter().sum();
    Ok(scores.into_iter().map(|s| s / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_edges() {
        let p = |y| ExpertProfile::new(Position::Technician, y, Education::Bachelor).score();
        assert_eq!(p(0), 3.0);
        assert_eq!(p(9), 3.0);
        assert_eq!(p(10), 4.0);
        assert_eq!(p(19), 4.0);
        assert_eq!(p(20), 5.0);
        assert_eq!(p(29), 5.0);
        assert_eq!(p(30), 6.0);
    }

    #[test]
    fn identical_profiles_split_evenly() {
        let e = ExpertProfile::new(Position::Professor, 5, Education::Master);
        assert_eq!(expert_weight(&[e, e]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn parses_aliases() {
        assert_eq!("Senior Engineer".parse::<Position>().unwrap(), Position::AssociateProfessor);
        assert_eq!("Ph.D.".parse::<Education>().unwrap(), Education::PhD);
        assert_eq!("Undergraduate".parse::<Education>().unwrap(), Education::Bachelor);
    }
}
