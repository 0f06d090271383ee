//! Machine-readable pass/fail records.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::numerics::hp::HPComplex;

/// Digits used when rendering high-precision values into reports.
pub const REPORT_DIGITS: usize = 30;

pub fn fmt_complex(z: &HPComplex) -> String {
    format!("{:.*}", REPORT_DIGITS, z)
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ReportRow {
    pub claim: String,
    pub params: BTreeMap<String, String>,
    pub lhs: String,
    pub rhs: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ReportRow {
    pub fn new(claim: impl Into<String>) -> Self {
        ReportRow {
            claim: claim.into(),
            params: BTreeMap::new(),
            lhs: String::new(),
            rhs: String::new(),
            residual: 0.0,
            tolerance: 0.0,
            pass: false,
            notes: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    /// Numeric comparison `|lhs − rhs| < tolerance`.
    pub fn compare(mut self, lhs: &HPComplex, rhs: &HPComplex, tolerance: f64) -> Self {
        self.lhs = fmt_complex(lhs);
        self.rhs = fmt_complex(rhs);
        self.residual = (lhs - rhs).abs_f64();
        self.tolerance = tolerance;
        self.pass = self.residual < tolerance;
        self
    }

    /// Exact comparison of two rendered values.
    pub fn exact(mut self, lhs: impl ToString, rhs: impl ToString, equal: bool) -> Self {
        self.lhs = lhs.to_string();
        self.rhs = rhs.to_string();
        self.residual = if equal { 0.0 } else { 1.0 };
        self.tolerance = 0.0;
        self.pass = equal;
        self
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct VerificationReport {
    pub claim: String,
    pub pass: bool,
    pub rows: Vec<ReportRow>,
}

impl VerificationReport {
    pub fn new(claim: impl Into<String>) -> Self {
        VerificationReport { claim: claim.into(), pass: true, rows: Vec::new() }
    }

    pub fn push(&mut self, row: ReportRow) {
        self.pass &= row.pass;
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        for row in other.rows {
            self.push(row);
        }
    }

    pub fn worst_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_passes_only_if_all_rows_pass() {
        let a = HPComplex::from_f64(1.0, 0.0, 128);
        let b = HPComplex::from_f64(1.0, 1e-12, 128);
        let mut r = VerificationReport::new("demo");
        r.push(ReportRow::new("close").compare(&a, &b, 1e-10));
        assert!(r.pass);
        r.push(ReportRow::new("far").compare(&a, &b, 1e-14));
        assert!(!r.pass);
        assert!((r.worst_residual() - 1e-12).abs() < 1e-20);
    }
}
