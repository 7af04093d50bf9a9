//! Machine-readable verification reports.
//!
//! A [`Report`] is a deterministic JSON document: the artifact version, the
//! command that produced it, an echo of the configuration (sorted keys), and
//! one record per check with the measured value and the tolerance it was held
//! to. No timestamps or environment data — the same configuration serializes
//! to the same bytes, which is what makes reports diff-able CI artifacts.

use std::collections::BTreeMap;

use serde::Serialize;

/// One check: `measured <= tolerance` is a pass. Measured values are
/// non-negative error magnitudes (residuals, deviations, or mismatch counts),
/// so exact checks carry tolerance zero. The anchor names the invariant
/// family the check belongs to, drawn from the fixed table in [`crate::checks`].
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub anchor: String,
    pub status: String,
    pub measured: f64,
    pub tolerance: f64,
}

impl CheckRecord {
    /// Build a record, deciding pass/fail from the measurement. A NaN
    /// measurement fails.
    pub fn measure(
        name: impl Into<String>,
        anchor: impl Into<String>,
        measured: f64,
        tolerance: f64,
    ) -> CheckRecord {
        let passed = measured <= tolerance;
        CheckRecord {
            name: name.into(),
            anchor: anchor.into(),
            status: if passed { "pass" } else { "fail" }.into(),
            measured,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == "pass"
    }
}

/// A full verification report; serialize with [`Report::to_json`].
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub version: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub records: Vec<CheckRecord>,
    pub passed: bool,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Report {
        Report {
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: BTreeMap::new(),
            records: Vec::new(),
            passed: true,
        }
    }

    /// Echo one configuration entry (stored under sorted keys).
    pub fn config(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.config.insert(key.into(), value.to_string());
        self
    }

    /// Append a record; the overall status is the conjunction of all records.
    pub fn push(&mut self, record: CheckRecord) -> &mut Self {
        self.passed &= record.passed();
        self.records.push(record);
        self
    }

    /// Pretty JSON with a trailing newline. Field order is fixed by the
    /// struct declarations and map keys are sorted, so output is
    /// byte-deterministic for a fixed configuration.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serialization cannot fail");
        out.push('\n');
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_fail_and_conjunction() {
        let mut report = Report::new("demo");
        report.config("seed", 7).config("alpha", 0.5);
        report.push(CheckRecord::measure("a", "anchor-a", 1e-9, 1e-6));
        assert!(report.passed);
        report.push(CheckRecord::measure("b", "anchor-b", 2.0, 1.0));
        assert!(!report.passed);
        // a later pass cannot flip the conjunction back
        report.push(CheckRecord::measure("c", "anchor-c", 0.0, 0.0));
        assert!(!report.passed);
        assert_eq!(report.records.len(), 3);
        assert_eq!(report.records[0].status, "pass");
        assert_eq!(report.records[1].status, "fail");
    }

    #[test]
    fn nan_measurements_fail() {
        assert!(!CheckRecord::measure("n", "anchor", f64::NAN, 1.0).passed());
    }

    #[test]
    fn serialization_is_stable() {
        let mut report = Report::new("demo");
        report.config("zeta", "z").config("alpha", "a");
        report.push(CheckRecord::measure("a", "anchor-a", 0.25, 0.5));
        let first = report.to_json();
        assert_eq!(first, report.to_json());
        assert!(first.ends_with('\n'));
        // keys render sorted regardless of insertion order
        let alpha = first.find("\"alpha\"").unwrap();
        let zeta = first.find("\"zeta\"").unwrap();
        assert!(alpha < zeta);
        // exact numeric rendering, no timestamps
        assert!(first.contains("\"measured\": 0.25"));
        assert!(!first.to_lowercase().contains("time"));
    }
}
