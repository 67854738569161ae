//! Protocols for the external verifier and executor, and the probe texts
//! sent to them.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::value::{RenderStyle, Value};

/// Default per-probe timeout.
pub const DEFAULT_PROBE_TIMEOUT_MS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    Check,
    Decide,
    Plausible,
}

/// One verifier query about a proposition `expr`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Probe {
    #[serde(rename = "probe")]
    pub kind: ProbeKind,
    /// The application, e.g. `binaryToDecimal_precond ([1, 2, 1])`.
    pub expr: String,
    /// Definition unfolded before simplification in plausible probes.
    pub goal: String,
    pub negated: bool,
    pub timeout_ms: u64,
}

impl Probe {
    pub fn check(expr: &str, timeout_ms: u64) -> Self {
        Self::new(ProbeKind::Check, expr, "", false, timeout_ms)
    }

    pub fn decide(expr: &str, negated: bool, timeout_ms: u64) -> Self {
        Self::new(ProbeKind::Decide, expr, "", negated, timeout_ms)
    }

    pub fn plausible(expr: &str, unfold: &str, negated: bool, timeout_ms: u64) -> Self {
        Self::new(ProbeKind::Plausible, expr, unfold, negated, timeout_ms)
    }

    fn new(kind: ProbeKind, expr: &str, goal: &str, negated: bool, timeout_ms: u64) -> Self {
        Self {
            kind,
            expr: expr.into(),
            goal: goal.into(),
            negated,
            timeout_ms,
        }
    }

    /// The prover command this probe stands for.
    pub fn command(&self) -> String {
        let neg = if self.negated { "¬ " } else { "" };
        match self.kind {
            ProbeKind::Check => format!("#check {}", self.expr),
            ProbeKind::Decide => format!("#guard decide ({neg}{})", self.expr),
            ProbeKind::Plausible => format!(
                "example: {neg}{} := by\n  unfold {}\n  simp_all!\n  plausible",
                self.expr, self.goal
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeStatus {
    Pass,
    Fail,
    Counterexample,
    Timeout,
    Error,
}

impl fmt::Display for ProbeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProbeStatus::Pass => "pass",
            ProbeStatus::Fail => "fail",
            ProbeStatus::Counterexample => "counterexample",
            ProbeStatus::Timeout => "timeout",
            ProbeStatus::Error => "error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeResult {
    #[serde(rename = "result")]
    pub status: ProbeStatus,
    #[serde(default)]
    pub detail: String,
}

impl ProbeResult {
    pub fn new(status: ProbeStatus, detail: impl Into<String>) -> Self {
        Self {
            status,
            detail: detail.into(),
        }
    }
}

/// Transport-level failure: the backend could not be reached or answered
/// nonsense. Distinct from a probe that ran and failed.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("backend unavailable: {0}")]
pub struct BackendError(pub String);

pub trait VerifierBackend {
    fn probe(&self, probe: &Probe) -> Result<ProbeResult, BackendError>;
}

/// Why an implementation produced no value.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error("runtime failure: {0}")]
    Runtime(String),
    #[error("timed out")]
    Timeout,
    #[error(transparent)]
    Unavailable(#[from] BackendError),
}

pub trait Executor {
    /// Runs definition `impl_ref` on positional arguments.
    fn run(&self, impl_ref: &str, args: &[Value]) -> Result<Value, RunError>;
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DefineError {
    #[error("does not compile: {0}")]
    Compile(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Loading generated definitions (candidate specifications, adversarial
/// implementations) into the backend under a module prefix.
pub trait Workspace {
    /// Returns the qualified names defined.
    fn define(&mut self, module: &str, source: &str) -> Result<Vec<String>, DefineError>;
}

/// Renders `name (arg1) (arg2) ...` with prover-style literals.
pub fn application<'a>(name: &str, args: impl IntoIterator<Item = &'a Value>) -> String {
    let mut s = String::from(name);
    for a in args {
        s.push_str(" (");
        s.push_str(&a.render(RenderStyle::Prover));
        s.push(')');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn probe_commands_match_prover_syntax() {
        let expr = application("binaryToDecimal_precond", &[Value::ListNat(vec![1, 2, 1])]);
        assert_eq!(expr, "binaryToDecimal_precond ([1, 2, 1])");
        assert_eq!(
            Probe::check(&expr, 1).command(),
            "#check binaryToDecimal_precond ([1, 2, 1])"
        );
        assert_eq!(
            Probe::decide(&expr, false, 1).command(),
            "#guard decide (binaryToDecimal_precond ([1, 2, 1]))"
        );
        assert_eq!(
            Probe::decide(&expr, true, 1).command(),
            "#guard decide (¬ binaryToDecimal_precond ([1, 2, 1]))"
        );
        assert_eq!(
            Probe::plausible(&expr, "binaryToDecimal_precond", true, 1).command(),
            "example: ¬ binaryToDecimal_precond ([1, 2, 1]) := by\n  unfold binaryToDecimal_precond\n  simp_all!\n  plausible"
        );
    }

    #[test]
    fn probe_wire_format() {
        let p = Probe::decide("f (1)", true, 10);
        let j = serde_json::to_string(&p).unwrap();
        assert_eq!(j, r#"{"probe":"decide","expr":"f (1)","goal":"","negated":true,"timeout_ms":10}"#);
        let r: ProbeResult = serde_json::from_str(r#"{"result":"counterexample"}"#).unwrap();
        assert_eq!(r.status, ProbeStatus::Counterexample);
    }
}
