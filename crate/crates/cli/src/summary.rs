use std::collections::BTreeMap;

use hartree_core::bootstrap::{BootstrapSummary, SmallnessBudget};
use hartree_core::diagnostics::{ConstantsLedger, DecayFit};
use serde::{Deserialize, Serialize};

use crate::config::ScenarioKind;

/// One declared pass/fail check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Human-readable measured value and limit.
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }

    /// `value <= limit`.
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self::new(name, value <= limit, format!("{value:.6e} <= {limit:.6e}"))
    }

    /// `lo <= value <= hi`.
    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self::new(name, lo <= value && value <= hi, format!("{value:.6} in [{lo}, {hi}]"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub quantity: String,
    pub exponent: f64,
    pub amplitude: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
}

impl FitReport {
    pub fn new(quantity: &str, fit: &DecayFit, window: (f64, f64)) -> Self {
        Self {
            quantity: quantity.to_string(),
            exponent: fit.exponent,
            amplitude: fit.amplitude,
            r_squared: fit.r_squared,
            window,
            points: fit.points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: ScenarioKind,
    /// Name of the config file or preset.
    pub label: String,
    pub seed: u64,
    pub fits: Vec<FitReport>,
    pub ledger: Option<ConstantsLedger>,
    pub bootstrap: Option<BootstrapSummary>,
    pub smallness: Option<SmallnessBudget>,
    pub guard_trip: Option<f64>,
    /// Further measured numbers, keyed by name.
    pub metrics: BTreeMap<String, f64>,
    /// Scenario-specific tables.
    pub tables: BTreeMap<String, serde_json::Value>,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub wall_clock_seconds: f64,
}

impl RunSummary {
    pub fn new(scenario: ScenarioKind, label: &str, seed: u64) -> Self {
        Self {
            scenario,
            label: label.to_string(),
            seed,
            fits: Vec::new(),
            ledger: None,
            bootstrap: None,
            smallness: None,
            guard_trip: None,
            metrics: BTreeMap::new(),
            tables: BTreeMap::new(),
            checks: Vec::new(),
            passed: false,
            wall_clock_seconds: 0.0,
        }
    }

    pub fn check(&mut self, c: Check) {
        debug_assert!(self.checks.iter().all(|x| x.name != c.name), "duplicate check {}", c.name);
        self.checks.push(c);
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    pub fn table<T: Serialize>(&mut self, name: &str, rows: &T) {
        let v = serde_json::to_value(rows).expect("table rows serialize");
        self.tables.insert(name.to_string(), v);
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Adds a failing entry for every declared check the run did not report.
    pub(crate) fn finish(&mut self, declared: &[String], seconds: f64) {
        for name in declared {
            if self.find(name).is_none() {
                self.checks.push(Check::new(name, false, "not evaluated"));
            }
        }
        self.passed = self.checks.iter().all(|c| c.passed);
        self.wall_clock_seconds = seconds;
    }
}
