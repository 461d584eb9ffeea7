//! Machine-readable check reports.

use serde::{Deserialize, Serialize};

/// One named check: passes when `value` is finite and at most `tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Case {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, pass: value.is_finite() && value <= tolerance }
    }

    /// Passes when `value >= threshold`; `tolerance` records the threshold.
    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, tolerance: threshold, pass: value.is_finite() && value >= threshold }
    }

    /// Passes when `|value - target| <= tolerance`; `value` is the distance to the target.
    pub fn near(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        Self::at_most(name, (value - target).abs(), tolerance)
    }

    /// Records a boolean outcome as `0` (pass) or `1` (fail) against tolerance `0`.
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 0.0 } else { 1.0 }, tolerance: 0.0, pass: ok }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub cases: Vec<Case>,
    pub wall_time: f64,
}

impl Report {
    pub fn new(suite: impl Into<String>) -> Self {
        Self { suite: suite.into(), cases: Vec::new(), wall_time: 0.0 }
    }

    pub fn push(&mut self, case: Case) {
        self.cases.push(case);
    }

    pub fn passed(&self) -> bool {
        self.cases.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Case> {
        self.cases.iter().filter(|c| !c.pass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_never_passes() {
        assert!(!Case::at_most("x", f64::NAN, 1.0).pass);
        assert!(!Case::at_least("x", f64::NAN, 1.0).pass);
        assert!(Case::near("x", 2.05, 2.0, 0.1).pass);
    }

    #[test]
    fn report_round_trips() {
        let mut r = Report::new("demo");
        r.push(Case::at_most("a", 1e-9, 1e-8));
        r.push(Case::flag("b", false));
        assert!(!r.passed());
        let s = serde_json::to_string(&r).unwrap();
        let back: Report = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.failures().count(), 1);
    }
}
