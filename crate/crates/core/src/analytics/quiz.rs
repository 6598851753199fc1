use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::stats::{mean, median, population_std};
use super::{column, parse_int, AnalyticsError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    /// n denominator.
    pub population_std: f64,
    pub min: u32,
    pub max: u32,
}

/// Descriptive statistics of 0–10 quiz scores.
pub fn quiz_stats(scores: &[u32]) -> Result<QuizStats> {
    if let Some(&bad) = scores.iter().find(|&&s| s > 10) {
        return Err(AnalyticsError::InvalidScore(i64::from(bad)));
    }
    let xs: Vec<f64> = scores.iter().map(|&s| f64::from(s)).collect();
    Ok(QuizStats {
        n: xs.len(),
        mean: mean(&xs).ok_or(AnalyticsError::NoData)?,
        median: median(&xs).ok_or(AnalyticsError::NoData)?,
        population_std: population_std(&xs).ok_or(AnalyticsError::NoData)?,
        min: *scores.iter().min().ok_or(AnalyticsError::NoData)?,
        max: *scores.iter().max().ok_or(AnalyticsError::NoData)?,
    })
}

/// Reads the `score` column (plus optional `participant`) from CSV.
pub fn read_quiz_scores<R: Read>(reader: R) -> Result<Vec<(String, u32)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let score_col = column(&headers, &["score"]).ok_or_else(|| AnalyticsError::Format("missing column score".into()))?;
    let id_col = column(&headers, &["participant", "id"]);
    let mut out = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let v = parse_int(rec.get(score_col).unwrap_or(""), "score", n + 1)?;
        if !(0..=10).contains(&v) {
            return Err(AnalyticsError::InvalidScore(v));
        }
        let id = id_col.and_then(|c| rec.get(c)).map_or_else(|| format!("P{}", n + 1), str::to_string);
        out.push((id, v as u32));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizReport {
    pub scores: Vec<(String, u32)>,
    pub stats: QuizStats,
}

impl QuizReport {
    pub fn compute(scores: Vec<(String, u32)>) -> Result<Self> {
        let values: Vec<u32> = scores.iter().map(|(_, s)| *s).collect();
        Ok(Self { stats: quiz_stats(&values)?, scores })
    }

    pub fn to_text(&self) -> String {
        let s = &self.stats;
        let mut out = String::from("Quiz scores\n");
        for (p, v) in &self.scores {
            let _ = writeln!(out, "  {p:<12} {v:>2}");
        }
        let _ = writeln!(
            out,
            "n = {}, range {}-{}, mean {:.2}, median {:.2}, std {:.3} (population)",
            s.n, s.min, s.max, s.mean, s.median, s.population_std
        );
        out
    }
}
