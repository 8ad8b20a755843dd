//! Machine-readable verification reports.
//!
//! Reports serialize to JSON with a fixed key order (struct declaration
//! order) and checks in a fixed pipeline order, so identical inputs produce
//! byte-identical files apart from the timestamp.

use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub suite: String,
    pub manifold: String,
    pub timestamp: String,
    pub environment: Environment,
    pub checks: Vec<CheckRecord>,
    pub overall_pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Environment {
    pub seed: u64,
    pub truncation_level: usize,
    pub tolerances: BTreeMap<String, f64>,
}

/// How a recorded residual is compared against the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparator {
    /// Pass iff residual ≤ tolerance (the usual case).
    #[serde(rename = "le")]
    Le,
    /// Pass iff residual ≥ tolerance (negative-control witnesses).
    #[serde(rename = "ge")]
    Ge,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub id: String,
    pub samples: usize,
    pub skipped: usize,
    pub max_residual: Option<f64>,
    pub tolerance: f64,
    pub comparator: Comparator,
    pub pass: bool,
    pub note: String,
    pub error: Option<String>,
}

impl CheckRecord {
    pub fn passed(
        id: impl Into<String>,
        samples: usize,
        skipped: usize,
        residual: f64,
        tolerance: f64,
        comparator: Comparator,
    ) -> Self {
        let pass = match comparator {
            Comparator::Le => residual <= tolerance,
            Comparator::Ge => residual >= tolerance,
        };
        CheckRecord {
            id: id.into(),
            samples,
            skipped,
            max_residual: Some(residual),
            tolerance,
            comparator,
            pass,
            note: String::new(),
            error: None,
        }
    }

    pub fn failed_with_error(id: impl Into<String>, tolerance: f64, message: String) -> Self {
        CheckRecord {
            id: id.into(),
            samples: 0,
            skipped: 0,
            max_residual: None,
            tolerance,
            comparator: Comparator::Le,
            pass: false,
            note: String::new(),
            error: Some(message),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

impl Report {
    pub fn new(
        suite: impl Into<String>,
        manifold: impl Into<String>,
        seed: u64,
        truncation_level: usize,
        tolerances: BTreeMap<String, f64>,
        checks: Vec<CheckRecord>,
    ) -> Self {
        let overall_pass = checks.iter().all(|c| c.pass);
        Report {
            suite: suite.into(),
            manifold: manifold.into(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            environment: Environment {
                seed,
                truncation_level,
                tolerances,
            },
            checks,
            overall_pass,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report with the timestamp field blanked, for byte comparisons.
    pub fn to_json_without_timestamp(&self) -> String {
        let mut clone = self.clone();
        clone.timestamp = String::new();
        serde_json::to_string_pretty(&clone).expect("report serializes")
    }

    /// One human-readable line per check.
    pub fn summary_lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                let status = if c.pass { "PASS" } else { "FAIL" };
                let cmp = match c.comparator {
                    Comparator::Le => "<=",
                    Comparator::Ge => ">=",
                };
                match (&c.max_residual, &c.error) {
                    (Some(r), _) => format!(
                        "{status} {id}  residual {r:.3e} {cmp} {tol:.1e}  ({n} samples{skip})",
                        id = c.id,
                        tol = c.tolerance,
                        n = c.samples,
                        skip = if c.skipped > 0 {
                            format!(", {} skipped", c.skipped)
                        } else {
                            String::new()
                        }
                    ),
                    (None, Some(e)) => format!("{status} {id}  error: {e}", id = c.id),
                    (None, None) => format!("{status} {id}", id = c.id),
                }
            })
            .collect()
    }
}
