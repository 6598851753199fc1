use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::stats::{mean, median, sample_std};
use super::{column, parse_int, AnalyticsError, Result};

pub const SUS_ITEMS: usize = 10;
pub const LIKERT_MIN: u8 = 1;
pub const LIKERT_MAX: u8 = 7;

/// Validated 7-point responses, one row of ten items per participant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikertMatrix {
    participants: Vec<String>,
    responses: Vec<[u8; SUS_ITEMS]>,
}

impl LikertMatrix {
    pub fn new(rows: Vec<(String, Vec<i64>)>) -> Result<Self> {
        let mut participants = Vec::with_capacity(rows.len());
        let mut responses = Vec::with_capacity(rows.len());
        for (participant, values) in rows {
            if values.len() != SUS_ITEMS {
                return Err(AnalyticsError::WrongItemCount { participant, found: values.len() });
            }
            let mut row = [0u8; SUS_ITEMS];
            for (i, &v) in values.iter().enumerate() {
                if !(i64::from(LIKERT_MIN)..=i64::from(LIKERT_MAX)).contains(&v) {
                    return Err(AnalyticsError::InvalidLikert { participant, item: i + 1, value: v });
                }
                row[i] = v as u8;
            }
            participants.push(participant);
            responses.push(row);
        }
        Ok(Self { participants, responses })
    }

    pub fn participants(&self) -> &[String] {
        &self.participants
    }

    pub fn responses(&self) -> &[[u8; SUS_ITEMS]] {
        &self.responses
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    /// Rows of the named participants, in the given order.
    pub fn subset(&self, ids: &[&str]) -> Self {
        let (participants, responses) = ids
            .iter()
            .filter_map(|id| self.participants.iter().position(|p| p == id))
            .map(|i| (self.participants[i].clone(), self.responses[i]))
            .unzip();
        Self { participants, responses }
    }
}

/// Reads `q1`..`q10` columns (plus an optional `participant` or `id`
/// column) from CSV.
pub fn read_likert<R: Read>(reader: R) -> Result<LikertMatrix> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let id_col = column(&headers, &["participant", "id"]);
    let item_cols = (1..=SUS_ITEMS)
        .map(|i| column(&headers, &[&format!("q{i}")]).ok_or_else(|| AnalyticsError::Format(format!("missing column q{i}"))))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = n + 1;
        let id = id_col.and_then(|c| rec.get(c)).map_or_else(|| format!("P{row}"), str::to_string);
        let values = item_cols
            .iter()
            .enumerate()
            .map(|(i, &c)| parse_int(rec.get(c).unwrap_or(""), &format!("q{}", i + 1), row))
            .collect::<Result<Vec<_>>>()?;
        rows.push((id, values));
    }
    LikertMatrix::new(rows)
}

/// Raw points before scaling: odd items give x − 1, even items 7 − x.
/// The 5-point rescaling 1 + (x − 1)·2/3 turns this into a SUS sum of
/// 2m/3, so the score is exactly 5m/3.
fn raw_points(row: &[u8; SUS_ITEMS]) -> u32 {
    row.iter()
        .enumerate()
        .map(|(i, &x)| if i % 2 == 0 { u32::from(x) - 1 } else { 7 - u32::from(x) })
        .sum()
}

fn check_row(row: &[u8; SUS_ITEMS]) -> Result<()> {
    match row.iter().position(|x| !(LIKERT_MIN..=LIKERT_MAX).contains(x)) {
        Some(i) => Err(AnalyticsError::InvalidLikert { participant: "row".into(), item: i + 1, value: i64::from(row[i]) }),
        None => Ok(()),
    }
}

/// SUS score of one 7-point response row, rounded half up.
pub fn sus_participant_score(row: &[u8; SUS_ITEMS]) -> Result<u32> {
    check_row(row)?;
    // floor(5m/3 + 1/2) in integers
    Ok((10 * raw_points(row) + 3) / 6)
}

/// Unrounded SUS score.
pub fn sus_participant_score_exact(row: &[u8; SUS_ITEMS]) -> Result<f64> {
    check_row(row)?;
    Ok(f64::from(5 * raw_points(row)) / 3.0)
}

/// Mean of the rounded per-participant scores. This is the figure that
/// matches a table of printed integer scores.
pub fn sus_overall(m: &LikertMatrix) -> Result<f64> {
    let scores = m.responses.iter().map(|r| sus_participant_score(r).map(f64::from)).collect::<Result<Vec<_>>>()?;
    mean(&scores).ok_or(AnalyticsError::NoData)
}

/// Mean of the unrounded per-participant scores.
pub fn sus_overall_unrounded(m: &LikertMatrix) -> Result<f64> {
    let scores = m.responses.iter().map(sus_participant_score_exact).collect::<Result<Vec<_>>>()?;
    mean(&scores).ok_or(AnalyticsError::NoData)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemStats {
    pub item: usize,
    pub mean: f64,
    pub median: f64,
    /// n − 1 denominator.
    pub sample_std: f64,
    /// Set when n = 1 and the deviation is zero by convention.
    pub degenerate: bool,
}

/// Mean, median and sample standard deviation of the raw 7-point values of
/// each item.
pub fn sus_item_stats(m: &LikertMatrix) -> Result<Vec<ItemStats>> {
    if m.is_empty() {
        return Err(AnalyticsError::NoData);
    }
    Ok((0..SUS_ITEMS)
        .map(|i| {
            let col: Vec<f64> = m.responses.iter().map(|r| f64::from(r[i])).collect();
            ItemStats {
                item: i + 1,
                mean: mean(&col).expect("non-empty"),
                median: median(&col).expect("non-empty"),
                sample_std: sample_std(&col).expect("non-empty"),
                degenerate: col.len() == 1,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SusReport {
    pub participants: Vec<(String, u32)>,
    pub overall: f64,
    pub overall_unrounded: f64,
    pub items: Vec<ItemStats>,
}

impl SusReport {
    pub fn compute(m: &LikertMatrix) -> Result<Self> {
        let participants = m
            .participants
            .iter()
            .zip(&m.responses)
            .map(|(p, r)| sus_participant_score(r).map(|s| (p.clone(), s)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { participants, overall: sus_overall(m)?, overall_unrounded: sus_overall_unrounded(m)?, items: sus_item_stats(m)? })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("SUS scores\n");
        for (p, s) in &self.participants {
            let _ = writeln!(out, "  {p:<12} {s:>3}");
        }
        let _ = writeln!(out, "Overall: {:.1} (mean of unrounded scores {:.2})", self.overall, self.overall_unrounded);
        out.push_str("\nItem   Mean  Median  Std\n");
        for it in &self.items {
            let flag = if it.degenerate { "  (n=1)" } else { "" };
            let _ = writeln!(out, "{:>4}  {:>5.2}  {:>6.1}  {:>4.2}{flag}", it.item, it.mean, it.median, it.sample_std);
        }
        out
    }
}
