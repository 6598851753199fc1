use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{column, AnalyticsError, Result};
use crate::providers::{cost_totals, report_total, UsageKind, UsageLedger};

/// Reads `phase,kind,cost_eur` rows (the cost column may also be called
/// `cost`) into a ledger. `units` is optional and defaults to 1.
pub fn read_costs<R: Read>(reader: R) -> Result<UsageLedger> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let need = |names: &[&str]| column(&headers, names).ok_or_else(|| AnalyticsError::Format(format!("missing column {}", names[0])));
    let phase_col = need(&["phase"])?;
    let kind_col = need(&["kind"])?;
    let cost_col = need(&["cost_eur", "cost"])?;
    let units_col = column(&headers, &["units"]);
    let mut ledger = UsageLedger::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = n + 1;
        let kind = match rec.get(kind_col).unwrap_or("").to_ascii_lowercase().as_str() {
            "text" => UsageKind::Text,
            "image" => UsageKind::Image,
            other => return Err(AnalyticsError::Format(format!("row {row}: unknown kind {other:?}"))),
        };
        let raw = rec.get(cost_col).unwrap_or("");
        let cost: f64 = raw.parse().map_err(|_| AnalyticsError::Format(format!("row {row}: cost {raw:?} is not a number")))?;
        let units = match units_col.and_then(|c| rec.get(c)).filter(|s| !s.is_empty()) {
            Some(u) => u.parse().map_err(|_| AnalyticsError::Format(format!("row {row}: units {u:?} is not an integer")))?,
            None => 1,
        };
        ledger
            .push_cost(rec.get(phase_col).unwrap_or(""), kind, units, cost)
            .map_err(|e| AnalyticsError::Format(format!("row {row}: {e}")))?;
    }
    Ok(ledger)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    /// Phase → kind → EUR.
    pub breakdown: BTreeMap<String, BTreeMap<UsageKind, f64>>,
    pub total_eur: f64,
    /// Total rounded to whole EUR.
    pub total_rounded: i64,
}

impl CostReport {
    pub fn compute(ledger: &UsageLedger) -> Result<Self> {
        if ledger.is_empty() {
            return Err(AnalyticsError::NoData);
        }
        let mut breakdown: BTreeMap<String, BTreeMap<UsageKind, f64>> = BTreeMap::new();
        for e in ledger.entries() {
            *breakdown.entry(e.phase.clone()).or_default().entry(e.kind).or_default() += e.cost_eur;
        }
        Ok(Self { breakdown, total_eur: cost_totals(ledger), total_rounded: report_total(ledger) })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("Phase         Kind    EUR\n");
        for (phase, kinds) in &self.breakdown {
            for (kind, eur) in kinds {
                let kind = match kind {
                    UsageKind::Text => "text",
                    UsageKind::Image => "image",
                };
                let _ = writeln!(out, "{phase:<13} {kind:<6} {eur:>6.2}");
            }
        }
        let _ = writeln!(out, "Total: {} EUR ({:.2})", self.total_rounded, self.total_eur);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn study_costs_total_33() {
        let ledger = read_costs(include_str!("../../assets/study/costs.csv").as_bytes()).unwrap();
        let r = CostReport::compute(&ledger).unwrap();
        assert_eq!(r.total_rounded, 33);
        assert_eq!(r.breakdown["development"][&UsageKind::Image], 18.0);
        assert_eq!(r.breakdown["playtest"][&UsageKind::Text], 1.0);
        assert!(r.to_text().contains("Total: 33 EUR"));
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(read_costs("phase,kind,cost\ndev,video,1\n".as_bytes()).is_err());
        assert!(read_costs("phase,kind,cost\ndev,text,-1\n".as_bytes()).is_err());
        assert!(read_costs("phase,kind\ndev,text\n".as_bytes()).is_err());
        assert!(matches!(CostReport::compute(&UsageLedger::new()), Err(AnalyticsError::NoData)));
    }
}
