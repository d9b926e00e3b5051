//! Machine-readable verification reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "1.0.0";

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Whether a record's value must stay below or reach its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub point: usize,
    pub residual: f64,
    pub threshold: f64,
    pub bound: Bound,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub records: usize,
    pub max_residual: f64,
    pub min_residual: f64,
    pub threshold: f64,
    pub bound: Bound,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: String,
    pub artifact_version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub records: Vec<CheckRecord>,
    pub summary: BTreeMap<String, CheckSummary>,
    pub diagnostics: Vec<String>,
    pub pass: bool,
    pub timing: Timing,
}

/// Stands in for a residual that could not be computed.
pub const FAILED_RESIDUAL: f64 = f64::MAX;

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        FAILED_RESIDUAL
    } else {
        v.clamp(-FAILED_RESIDUAL, FAILED_RESIDUAL)
    }
}

impl VerificationReport {
    pub fn new(command: impl Into<String>) -> Self {
        VerificationReport {
            schema_version: SCHEMA_VERSION.to_string(),
            artifact_version: ARTIFACT_VERSION.to_string(),
            command: command.into(),
            config: serde_json::Value::Null,
            records: Vec::new(),
            summary: BTreeMap::new(),
            diagnostics: Vec::new(),
            pass: true,
            timing: Timing::default(),
        }
    }

    /// Records a residual that must not exceed `threshold`.
    pub fn push(&mut self, check: &str, point: usize, residual: f64, threshold: f64) {
        let residual = sanitize(residual);
        self.insert(CheckRecord {
            check: check.to_string(),
            point,
            residual,
            threshold,
            bound: Bound::Upper,
            pass: residual <= threshold,
        });
    }

    /// Records a value that must reach `threshold`.
    pub fn push_lower(&mut self, check: &str, point: usize, value: f64, threshold: f64) {
        let value = if value.is_nan() { 0.0 } else { sanitize(value) };
        self.insert(CheckRecord {
            check: check.to_string(),
            point,
            residual: value,
            threshold,
            bound: Bound::Lower,
            pass: value >= threshold,
        });
    }

    /// Records a point whose evaluation failed outright.
    pub fn push_failure(&mut self, check: &str, point: usize, threshold: f64, reason: &str) {
        self.push(check, point, FAILED_RESIDUAL, threshold);
        self.diagnose(format!("{check} at point {point}: {reason}"));
    }

    fn insert(&mut self, record: CheckRecord) {
        let entry = self.summary.entry(record.check.clone()).or_insert(CheckSummary {
            records: 0,
            max_residual: f64::MIN,
            min_residual: f64::MAX,
            threshold: record.threshold,
            bound: record.bound,
            pass: true,
        });
        entry.records += 1;
        entry.max_residual = entry.max_residual.max(record.residual);
        entry.min_residual = entry.min_residual.min(record.residual);
        entry.pass &= record.pass;
        self.pass &= record.pass;
        self.records.push(record);
    }

    pub fn diagnose(&mut self, msg: impl Into<String>) {
        self.diagnostics.push(msg.into());
    }

    /// Appends every record and diagnostic of `other`, prefixing check ids.
    pub fn absorb(&mut self, prefix: &str, other: VerificationReport) {
        for mut r in other.records {
            if !prefix.is_empty() {
                r.check = format!("{prefix}.{}", r.check);
            }
            self.insert(r);
        }
        self.diagnostics.extend(other.diagnostics.into_iter().map(|d| {
            if prefix.is_empty() {
                d
            } else {
                format!("{prefix}: {d}")
            }
        }));
    }

    pub fn max_residual(&self, check: &str) -> Option<f64> {
        self.summary.get(check).map(|s| s.max_residual)
    }

    pub fn check_passed(&self, check: &str) -> Option<bool> {
        self.summary.get(check).map(|s| s.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per record: `check,point,residual,threshold,bound,pass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,point,residual,threshold,bound,pass\n");
        for r in &self.records {
            let bound = match r.bound {
                Bound::Upper => "upper",
                Bound::Lower => "lower",
            };
            out.push_str(&format!(
                "{},{},{:e},{:e},{},{}\n",
                r.check, r.point, r.residual, r.threshold, bound, r.pass
            ));
        }
        out
    }
}

/// JSON Schema of [`VerificationReport`].
pub fn report_schema() -> serde_json::Value {
    serde_json::json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "$id": format!("pharmonic/verification-report/{SCHEMA_VERSION}"),
        "title": "VerificationReport",
        "schema_version": SCHEMA_VERSION,
        "type": "object",
        "required": [
            "schema_version", "artifact_version", "command", "config",
            "records", "summary", "diagnostics", "pass", "timing"
        ],
        "properties": {
            "schema_version": { "type": "string", "const": SCHEMA_VERSION },
            "artifact_version": { "type": "string" },
            "command": { "type": "string" },
            "config": { "type": "object" },
            "records": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["check", "point", "residual", "threshold", "bound", "pass"],
                    "properties": {
                        "check": { "type": "string" },
                        "point": { "type": "integer", "minimum": 0 },
                        "residual": { "type": "number" },
                        "threshold": { "type": "number" },
                        "bound": { "type": "string", "enum": ["upper", "lower"] },
                        "pass": { "type": "boolean" }
                    }
                }
            },
            "summary": {
                "type": "object",
                "additionalProperties": {
                    "type": "object",
                    "required": ["records", "max_residual", "min_residual", "threshold", "bound", "pass"],
                    "properties": {
                        "records": { "type": "integer", "minimum": 0 },
                        "max_residual": { "type": "number" },
                        "min_residual": { "type": "number" },
                        "threshold": { "type": "number" },
                        "bound": { "type": "string", "enum": ["upper", "lower"] },
                        "pass": { "type": "boolean" }
                    }
                }
            },
            "diagnostics": { "type": "array", "items": { "type": "string" } },
            "pass": { "type": "boolean" },
            "timing": {
                "type": "object",
                "required": ["elapsed_ms"],
                "properties": { "elapsed_ms": { "type": "number", "minimum": 0 } }
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_tracks_every_record() {
        let mut r = VerificationReport::new("t");
        r.push("a", 0, 1e-12, 1e-9);
        r.push_lower("b", 0, 0.5, 1e-3);
        assert!(r.pass);
        r.push("a", 1, 1e-3, 1e-9);
        assert!(!r.pass);
        assert_eq!(r.check_passed("a"), Some(false));
        assert_eq!(r.check_passed("b"), Some(true));
        assert_eq!(r.max_residual("a"), Some(1e-3));
    }

    #[test]
    fn nan_is_a_failure_and_serializes() {
        let mut r = VerificationReport::new("t");
        r.push("a", 0, f64::NAN, 1.0);
        r.push_lower("b", 0, f64::NAN, 1.0);
        assert!(!r.pass);
        let back: VerificationReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn absorb_prefixes() {
        let mut inner = VerificationReport::new("x");
        inner.push("tau", 3, 0.0, 1.0);
        inner.diagnose("note");
        let mut outer = VerificationReport::new("y");
        outer.absorb("eigen", inner);
        assert_eq!(outer.records[0].check, "eigen.tau");
        assert_eq!(outer.diagnostics, vec!["eigen: note".to_string()]);
        assert!(outer.to_csv().lines().nth(1).unwrap().starts_with("eigen.tau,3,"));
    }

    #[test]
    fn schema_has_version() {
        let s = report_schema();
        assert_eq!(s["schema_version"], SCHEMA_VERSION);
        assert_eq!(s["required"].as_array().unwrap().len(), 9);
    }
}
