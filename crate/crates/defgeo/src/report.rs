//! Machine-readable run reports: per-point records, identity summaries, and
//! provenance, serializable as CSV or JSON.
//!
//! Reports are deterministic: the same inputs produce byte-identical output
//! except for the provenance timestamp. Floating-point values are written
//! with 17 significant digits in CSV and shortest-round-trip form in JSON,
//! so either format reproduces the computed binary values exactly.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A completed run: provenance, the swept records, and the identity summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub provenance: Provenance,
    /// Header names for coordinates followed by all value columns; every
    /// point record's `coordinates ++ values` aligns with this.
    pub columns: Vec<String>,
    pub points: Vec<PointRecord>,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the canonical input description.
    pub config_hash: String,
    /// Differentiation scheme the run used.
    pub scheme: String,
    pub tool_version: String,
    /// Unix seconds; the one nondeterministic field.
    pub timestamp: u64,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, scheme: impl Into<String>) -> Provenance {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Provenance {
            config_hash: config_hash.into(),
            scheme: scheme.into(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub coordinates: Vec<f64>,
    pub values: Vec<f64>,
}

/// One verified identity: its tolerance and the largest residual observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: String,
    pub tolerance: f64,
    pub max_residual: f64,
    pub passed: bool,
}

impl IdentityCheck {
    pub fn new(name: impl Into<String>, tolerance: f64, max_residual: f64) -> IdentityCheck {
        IdentityCheck {
            name: name.into(),
            tolerance,
            max_residual,
            passed: max_residual <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// True when every check passed.
    pub passed: bool,
    pub checks: Vec<IdentityCheck>,
}

impl Report {
    pub fn new(
        provenance: Provenance,
        columns: Vec<String>,
        points: Vec<PointRecord>,
        checks: Vec<IdentityCheck>,
    ) -> Report {
        for record in &points {
            assert_eq!(
                record.coordinates.len() + record.values.len(),
                columns.len(),
                "point records must align with the column header"
            );
        }
        let passed = checks.iter().all(|c| c.passed);
        Report {
            provenance,
            columns,
            points,
            summary: Summary { passed, checks },
        }
    }

    /// CSV rendering: the point table when the run swept a grid, otherwise
    /// the summary table. 17 significant digits per value.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if self.points.is_empty() {
            out.push_str("check,tolerance,max_residual,passed\n");
            for c in &self.summary.checks {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    c.name,
                    fmt_value(c.tolerance),
                    fmt_value(c.max_residual),
                    c.passed
                ));
            }
        } else {
            out.push_str(&self.columns.join(","));
            out.push('\n');
            for record in &self.points {
                let mut first = true;
                for value in record.coordinates.iter().chain(&record.values) {
                    if !first {
                        out.push(',');
                    }
                    out.push_str(&fmt_value(*value));
                    first = false;
                }
                out.push('\n');
            }
        }
        out
    }

    /// JSON rendering of the whole report object.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable one-line-per-check summary (for stderr).
    pub fn summary_lines(&self) -> Vec<String> {
        self.summary
            .checks
            .iter()
            .map(|c| {
                format!(
                    "{} {}: max residual {:.3e} (tolerance {:.3e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.max_residual,
                    c.tolerance
                )
            })
            .collect()
    }
}

/// 17 significant digits — enough to reproduce any f64 exactly.
fn fmt_value(value: f64) -> String {
    format!("{value:.16e}")
}

/// Hex SHA-256, used for provenance hashes.
pub fn sha256_hex(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let provenance = Provenance {
            config_hash: "deadbeef".to_string(),
            scheme: "analytic".to_string(),
            tool_version: "0.0.0".to_string(),
            timestamp: 1_234_567,
        };
        Report::new(
            provenance,
            vec!["x".into(), "y".into(), "K".into()],
            vec![
                PointRecord {
                    coordinates: vec![0.25, -0.5],
                    values: vec![0.25],
                },
                PointRecord {
                    coordinates: vec![0.5, 0.5],
                    values: vec![0.25],
                },
            ],
            vec![IdentityCheck::new("curvature_constant", 1e-6, 3e-9)],
        )
    }

    #[test]
    fn csv_points_table() {
        let csv = sample().to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,y,K"));
        assert_eq!(
            lines.next(),
            Some("2.5000000000000000e-1,-5.0000000000000000e-1,2.5000000000000000e-1")
        );
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn csv_summary_table_when_no_points() {
        let provenance = Provenance {
            config_hash: "00".to_string(),
            scheme: "analytic".to_string(),
            tool_version: "0.0.0".to_string(),
            timestamp: 0,
        };
        let report = Report::new(
            provenance,
            vec![],
            vec![],
            vec![
                IdentityCheck::new("a", 1e-10, 1e-12),
                IdentityCheck::new("b", 1e-10, 2e-9),
            ],
        );
        assert!(!report.summary.passed);
        let csv = report.to_csv();
        assert!(csv.starts_with("check,tolerance,max_residual,passed\n"));
        // 17 significant digits render the nearest f64 exactly, so decimal
        // inputs that are inexact in binary pick up their true trailing digits.
        assert!(csv.contains("a,1.0000000000000000e-10,9.9999999999999998e-13,true"));
        assert!(csv.contains("b,1.0000000000000000e-10,2.0000000000000001e-9,false"));
    }

    #[test]
    fn json_round_trips_exactly() {
        let report = sample();
        let json = report.to_json();
        let back: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn reports_are_deterministic() {
        let a = sample();
        let mut b = sample();
        b.provenance.timestamp = 999; // the one field allowed to differ
        let strip = |r: &Report| {
            let mut r = r.clone();
            r.provenance.timestamp = 0;
            (r.to_csv(), { r.to_json() })
        };
        assert_eq!(strip(&a), strip(&b));
        assert_eq!(a.to_csv(), b.to_csv()); // CSV has no timestamp at all
    }

    #[test]
    fn misaligned_records_are_rejected() {
        let provenance = Provenance {
            config_hash: String::new(),
            scheme: String::new(),
            tool_version: String::new(),
            timestamp: 0,
        };
        let result = std::panic::catch_unwind(|| {
            Report::new(
                provenance,
                vec!["x".into()],
                vec![PointRecord {
                    coordinates: vec![0.0],
                    values: vec![1.0],
                }],
                vec![],
            )
        });
        assert!(result.is_err());
    }

    #[test]
    fn sha256_known_answer() {
        assert_eq!(
            sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_ne!(sha256_hex("abc"), sha256_hex("abd"));
    }

    #[test]
    fn value_formatting_is_round_trip_exact() {
        for value in [0.1, 1.0 / 3.0, std::f64::consts::PI, 2.5e-17, -4.0] {
            let text = fmt_value(value);
            let back: f64 = text.parse().unwrap();
            assert_eq!(back, value, "{text}");
        }
    }
}
