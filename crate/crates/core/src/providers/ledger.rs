use serde::{Deserialize, Serialize};

use super::{ProviderError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UsageKind {
    Text,
    Image,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageEntry {
    pub phase: String,
    pub kind: UsageKind,
    pub units: u64,
    pub cost_eur: f64,
}

/// Append-only record of billed provider usage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UsageLedger {
    entries: Vec<UsageEntry>,
}

impl UsageLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[UsageEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends a pre-priced entry, e.g. a row of an exported cost table.
    pub fn push_cost(&mut self, phase: &str, kind: UsageKind, units: u64, cost_eur: f64) -> Result<()> {
        if !(cost_eur >= 0.0 && cost_eur.is_finite()) {
            return Err(ProviderError::InvalidRequest(format!("cost must be a non-negative number, got {cost_eur}")));
        }
        self.entries.push(UsageEntry { phase: phase.to_string(), kind, units, cost_eur });
        Ok(())
    }

    pub fn extend_from(&mut self, other: &UsageLedger) {
        self.entries.extend(other.entries.iter().cloned());
    }
}

/// EUR prices. Text is billed per thousand units (tokens).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriceTable {
    pub text_per_1k_units: f64,
    pub image_per_unit: f64,
}

impl Default for PriceTable {
    fn default() -> Self {
        Self { text_per_1k_units: 0.005, image_per_unit: 0.04 }
    }
}

impl PriceTable {
    pub fn unit_price(&self, kind: UsageKind) -> f64 {
        match kind {
            UsageKind::Text => self.text_per_1k_units / 1000.0,
            UsageKind::Image => self.image_per_unit,
        }
    }
}

pub fn record_usage(ledger: &mut UsageLedger, phase: &str, kind: UsageKind, units: i64, unit_price: f64) -> Result<()> {
    if units < 0 {
        return Err(ProviderError::InvalidUsage(units));
    }
    if !(unit_price >= 0.0 && unit_price.is_finite()) {
        return Err(ProviderError::InvalidRequest(format!("unit price must be non-negative, got {unit_price}")));
    }
    ledger.push_cost(phase, kind, units as u64, units as f64 * unit_price)
}

/// Sum of entry costs. Summed in sorted order so the result does not depend
/// on entry order.
pub fn cost_totals(ledger: &UsageLedger) -> f64 {
    let mut costs: Vec<f64> = ledger.entries.iter().map(|e| e.cost_eur).collect();
    costs.sort_by(f64::total_cmp);
    costs.iter().sum()
}

/// Whole-EUR total for reports, rounded half up on the total.
pub fn report_total(ledger: &UsageLedger) -> i64 {
    (cost_totals(ledger) + 0.5).floor() as i64
}
