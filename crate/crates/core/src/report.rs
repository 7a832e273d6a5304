//! Machine-readable verification reports.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const REPORT_SCHEMA: &str = "hh-report/1";

/// Where a target value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    /// A closed-form constant or formula.
    Analytic,
    /// Holds exactly up to rounding: unitarity, duality, determinism.
    Identity,
    /// Compared against an independent computation.
    Oracle,
    /// An inequality or scaling law with no explicit constant.
    Property,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Expected {
    /// `|measured - value| <= tolerance * max(|value|, 1)` when relative, else `<= tolerance`.
    Value {
        value: f64,
        tolerance: f64,
        relative: bool,
    },
    AtMost {
        bound: f64,
    },
    AtLeast {
        bound: f64,
    },
    Within {
        lo: f64,
        hi: f64,
    },
}

impl Expected {
    pub fn accepts(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        match *self {
            Expected::Value {
                value,
                tolerance,
                relative,
            } => {
                let scale = if relative {
                    value.abs().max(f64::MIN_POSITIVE)
                } else {
                    1.0
                };
                (x - value).abs() <= tolerance * scale
            }
            Expected::AtMost { bound } => x <= bound,
            Expected::AtLeast { bound } => x >= bound,
            Expected::Within { lo, hi } => (lo..=hi).contains(&x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub expected: Expected,
    pub basis: Basis,
    pub pass: bool,
    /// Quadrature or truncation error estimate behind `measured`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_estimate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: f64, expected: Expected, basis: Basis) -> Self {
        Self {
            name: name.into(),
            measured,
            expected,
            basis,
            pass: expected.accepts(measured),
            error_estimate: None,
            note: None,
        }
    }

    pub fn value(name: impl Into<String>, measured: f64, value: f64, tolerance: f64, basis: Basis) -> Self {
        Self::new(
            name,
            measured,
            Expected::Value {
                value,
                tolerance,
                relative: true,
            },
            basis,
        )
    }

    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64, basis: Basis) -> Self {
        Self::new(name, measured, Expected::AtMost { bound }, basis)
    }

    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64, basis: Basis) -> Self {
        Self::new(name, measured, Expected::AtLeast { bound }, basis)
    }

    pub fn within(name: impl Into<String>, measured: f64, lo: f64, hi: f64, basis: Basis) -> Self {
        Self::new(name, measured, Expected::Within { lo, hi }, basis)
    }

    /// A check that could not be evaluated; always fails.
    pub fn failed(name: impl Into<String>, expected: Expected, basis: Basis, reason: String) -> Self {
        Self {
            name: name.into(),
            measured: f64::NAN,
            expected,
            basis,
            pass: false,
            error_estimate: None,
            note: Some(reason),
        }
    }

    pub fn with_error(mut self, e: f64) -> Self {
        self.error_estimate = Some(e);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Plot-ready columns attached to a suite (ladders, fitted curves).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub pass: bool,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<Series>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl SuiteReport {
    pub fn new(suite: impl Into<String>, checks: Vec<Check>, series: Vec<Series>) -> Self {
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        Self {
            suite: suite.into(),
            pass,
            checks,
            series,
            wall_time_s: None,
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: String,
    pub config: RunConfig,
    pub pass: bool,
    pub suites: Vec<SuiteReport>,
}

impl VerificationReport {
    pub fn new(config: RunConfig, suites: Vec<SuiteReport>) -> Self {
        let pass = suites.iter().all(|s| s.pass);
        Self {
            schema: REPORT_SCHEMA.into(),
            config,
            pass,
            suites,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.suite == name)
    }
}
