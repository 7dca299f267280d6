//! Structured verification reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::linalg::Complex64;

/// Outcome of an identity check: both sides, the residual, and the tolerance
/// it was judged against. `meta` echoes whatever configuration produced the
/// numbers so a report is reproducible on its own.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub lhs: [f64; 2],
    pub rhs: [f64; 2],
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    pub meta: BTreeMap<String, serde_json::Value>,
}

impl VerificationReport {
    pub fn new(lhs: Complex64, rhs: Complex64, tol: f64) -> Self {
        let residual = (lhs - rhs).norm();
        Self {
            lhs: [lhs.re, lhs.im],
            rhs: [rhs.re, rhs.im],
            residual,
            tol,
            pass: residual <= tol,
            meta: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: serde_json::Value) -> Self {
        self.meta.insert(key.to_string(), value);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_and_pass_flag() {
        let r = VerificationReport::new(
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 1e-12),
            1e-9,
        );
        assert!(r.pass);
        assert!((r.residual - 1e-12).abs() <= 1e-15);

        let r = VerificationReport::new(Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), 1e-9);
        assert!(!r.pass);
    }

    #[test]
    fn json_round_trip() {
        let r = VerificationReport::new(Complex64::new(0.5, -0.5), Complex64::new(0.5, -0.5), 1e-8)
            .with_meta("method", serde_json::json!("counting"));
        let text = r.to_json();
        let back: VerificationReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.lhs, r.lhs);
        assert!(back.pass);
        assert_eq!(back.meta["method"], serde_json::json!("counting"));
    }
}
