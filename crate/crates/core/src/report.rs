//! Check entries and the aggregated verification report.

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "qlame.report/1";

/// One named numerical check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub params: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl CheckEntry {
    /// Passes iff `residual < threshold`; a non-finite residual always fails
    /// and is stored as `f64::MAX` so the report stays valid JSON.
    pub fn new(name: impl Into<String>, params: impl Into<String>, residual: f64, threshold: f64) -> Self {
        let finite = residual.is_finite();
        let residual = if finite { residual } else { f64::MAX };
        CheckEntry {
            name: name.into(),
            params: params.into(),
            residual,
            threshold,
            pass: finite && residual < threshold,
        }
    }

    /// A check that must hold exactly (residual 0 or 1).
    pub fn exact(name: impl Into<String>, params: impl Into<String>, holds: bool) -> Self {
        Self::new(name, params, if holds { 0.0 } else { 1.0 }, 0.5)
    }

    /// A check whose computation itself failed.
    pub fn failed(name: impl Into<String>, params: impl Into<String>, threshold: f64) -> Self {
        Self::new(name, params, f64::INFINITY, threshold)
    }

    pub fn line(&self) -> String {
        format!(
            "{:<4} {:<36} {:<40} residual={:.2e} threshold={:.2e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.params,
            self.residual,
            self.threshold
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

/// Verification report; `overall_pass` holds iff every entry passes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: String,
    pub artifact_version: String,
    pub config: serde_json::Value,
    pub entries: Vec<CheckEntry>,
    pub summary: Summary,
    pub overall_pass: bool,
}

impl Report {
    /// Assemble a report with entries sorted by name, then params.
    pub fn new(config: serde_json::Value, mut entries: Vec<CheckEntry>) -> Self {
        entries.sort_by(|a, b| a.name.cmp(&b.name).then_with(|| a.params.cmp(&b.params)));
        let passed = entries.iter().filter(|e| e.pass).count();
        let summary = Summary {
            total: entries.len(),
            passed,
            failed: entries.len() - passed,
        };
        Report {
            schema_version: SCHEMA_VERSION.to_string(),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            overall_pass: summary.failed == 0,
            entries,
            summary,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entry_pass_logic() {
        assert!(CheckEntry::new("a", "", 1e-12, 1e-10).pass);
        assert!(!CheckEntry::new("a", "", 1e-8, 1e-10).pass);
        let nan = CheckEntry::new("a", "", f64::NAN, 1e-10);
        assert!(!nan.pass);
        assert_eq!(nan.residual, f64::MAX);
        assert!(CheckEntry::exact("a", "", true).pass);
        assert!(!CheckEntry::exact("a", "", false).pass);
    }

    #[test]
    fn report_is_sorted_and_summarised() {
        let r = Report::new(
            serde_json::json!({}),
            vec![
                CheckEntry::new("b", "x", 0.0, 1.0),
                CheckEntry::new("a", "y", 2.0, 1.0),
                CheckEntry::new("a", "x", 0.0, 1.0),
            ],
        );
        let names: Vec<_> = r.entries.iter().map(|e| (e.name.as_str(), e.params.as_str())).collect();
        assert_eq!(names, vec![("a", "x"), ("a", "y"), ("b", "x")]);
        assert_eq!(r.summary, Summary { total: 3, passed: 2, failed: 1 });
        assert!(!r.overall_pass);
        let json = serde_json::to_string(&r).unwrap();
        let back: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(back.entries, r.entries);
    }
}
