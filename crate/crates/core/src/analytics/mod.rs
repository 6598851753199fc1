//! Evaluation arithmetic: SUS scoring of 7-point Likert responses, per-item
//! statistics, quiz score statistics and cost totals.
//!
//! Two standard-deviation conventions coexist on purpose: per-item SUS
//! statistics use the sample (n − 1) denominator, quiz statistics the
//! population (n) denominator.

mod cost;
mod quiz;
mod stats;
mod sus;

pub use cost::{read_costs, CostReport};
pub use quiz::{quiz_stats, read_quiz_scores, QuizReport, QuizStats};
pub use stats::{mean, median, population_std, sample_std};
pub use sus::{
    read_likert, sus_item_stats, sus_overall, sus_overall_unrounded, sus_participant_score, sus_participant_score_exact,
    ItemStats, LikertMatrix, SusReport, LIKERT_MAX, LIKERT_MIN, SUS_ITEMS,
};

#[derive(Debug, thiserror::Error)]
pub enum AnalyticsError {
    #[error("participant {participant}: item {item} has response {value}, expected {LIKERT_MIN}-{LIKERT_MAX}")]
    InvalidLikert { participant: String, item: usize, value: i64 },
    #[error("participant {participant}: expected {SUS_ITEMS} responses, found {found}")]
    WrongItemCount { participant: String, found: usize },
    #[error("quiz score {0} outside 0-10")]
    InvalidScore(i64),
    #[error("no data")]
    NoData,
    #[error("CSV: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = AnalyticsError> = std::result::Result<T, E>;

/// Column index by case-insensitive header name.
pub(crate) fn column(headers: &csv::StringRecord, names: &[&str]) -> Option<usize> {
    headers.iter().position(|h| names.iter().any(|n| h.trim().eq_ignore_ascii_case(n)))
}

pub(crate) fn parse_int(field: &str, what: &str, row: usize) -> Result<i64> {
    field.trim().parse().map_err(|_| AnalyticsError::Format(format!("row {row}: {what} {field:?} is not an integer")))
}
