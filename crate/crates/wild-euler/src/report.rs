//! Structured pass/fail records shared by the verification entry points.

use serde::Serialize;
use std::collections::BTreeMap;

/// One named check. `anchor` is a stable identifier of the mathematical fact
/// being verified; `asserted` distinguishes hard requirements from
/// diagnostics that are reported without gating the overall outcome.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
    pub anchor: String,
    pub asserted: bool,
}

/// Verification outcome of one suite: the overall flag is the conjunction of
/// all asserted checks.
#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub name: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub residual_norms: BTreeMap<String, f64>,
}

impl VerificationReport {
    pub fn new(name: impl Into<String>) -> Self {
        VerificationReport {
            name: name.into(),
            pass: true,
            checks: Vec::new(),
            residual_norms: BTreeMap::new(),
        }
    }

    pub fn push(
        &mut self,
        name: impl Into<String>,
        anchor: impl Into<String>,
        value: f64,
        tolerance: f64,
        pass: bool,
    ) {
        self.push_full(name, anchor, value, tolerance, pass, true);
    }

    /// A check that is recorded but does not gate the overall outcome.
    pub fn push_diagnostic(
        &mut self,
        name: impl Into<String>,
        anchor: impl Into<String>,
        value: f64,
        tolerance: f64,
        pass: bool,
    ) {
        self.push_full(name, anchor, value, tolerance, pass, false);
    }

    fn push_full(
        &mut self,
        name: impl Into<String>,
        anchor: impl Into<String>,
        value: f64,
        tolerance: f64,
        pass: bool,
        asserted: bool,
    ) {
        if asserted && !pass {
            self.pass = false;
        }
        self.checks.push(Check {
            name: name.into(),
            pass,
            value,
            tolerance,
            anchor: anchor.into(),
            asserted,
        });
    }

    pub fn record_norm(&mut self, name: impl Into<String>, value: f64) {
        self.residual_norms.insert(name.into(), value);
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}
