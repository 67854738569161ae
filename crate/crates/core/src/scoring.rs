//! Scoring implementations and specifications against a suite.

use alloc::string::String;
use alloc::vec::Vec;

use serde_json::{Map, Value as Json};

use crate::backend::{application, BackendError, Executor, RunError, VerifierBackend};
use crate::classify::{decide_proposition, ClassifyError, VerdictValue};
use crate::suite::{InputMap, Task, TestSuite};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeScore {
    pub passed: usize,
    pub total: usize,
}

impl CodeScore {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.passed as f64 / self.total as f64
        }
    }
}

/// Runs `impl_ref` on every expected pair. A failed run counts as a miss.
pub fn evaluate_code<E: Executor + ?Sized>(
    task: &Task,
    impl_ref: &str,
    suite: &TestSuite,
    exec: &E,
) -> Result<CodeScore, BackendError> {
    let mut passed = 0;
    for pair in &suite.expected_pairs {
        let args: Vec<Value> = pair.input.ordered(&task.signature).cloned().collect();
        match exec.run(impl_ref, &args) {
            Ok(v) if v == pair.output => passed += 1,
            Ok(_) | Err(RunError::Runtime(_)) | Err(RunError::Timeout) => {}
            Err(RunError::Unavailable(e)) => return Err(e),
        }
    }
    Ok(CodeScore {
        passed,
        total: suite.expected_pairs.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProbeCategory {
    /// Precondition must hold on an expected input.
    ExpectedInput,
    /// Precondition must fail on an unexpected input.
    UnexpectedInput,
    /// Postcondition must hold on an expected pair.
    ExpectedPair,
    /// Postcondition must fail on an unexpected output.
    UnexpectedOutput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpecOutcome {
    Holds,
    FailsAsRequired,
    Violation,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecProbe {
    pub category: ProbeCategory,
    pub case: String,
    pub outcome: SpecOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpecScore {
    pub probes: Vec<SpecProbe>,
}

impl SpecScore {
    fn count(&self, f: impl Fn(SpecOutcome) -> bool) -> usize {
        self.probes.iter().filter(|p| f(p.outcome)).count()
    }

    pub fn violations(&self) -> usize {
        self.count(|o| o == SpecOutcome::Violation)
    }

    pub fn unknowns(&self) -> usize {
        self.count(|o| o == SpecOutcome::Unknown)
    }

    /// Passes with unknown probes counted as violations.
    pub fn lower_pass(&self) -> bool {
        self.violations() == 0 && self.unknowns() == 0
    }

    /// Passes with unknown probes counted as satisfied.
    pub fn upper_pass(&self) -> bool {
        self.violations() == 0
    }

    /// Fraction of satisfied probes, unknowns counted as violations.
    pub fn lower_fraction(&self) -> f64 {
        self.fraction(self.probes.len() - self.violations() - self.unknowns())
    }

    /// Fraction of satisfied probes, unknowns counted as satisfied.
    pub fn upper_fraction(&self) -> f64 {
        self.fraction(self.probes.len() - self.violations())
    }

    fn fraction(&self, ok: usize) -> f64 {
        if self.probes.is_empty() {
            1.0
        } else {
            ok as f64 / self.probes.len() as f64
        }
    }
}

fn outcome(v: VerdictValue, must_hold: bool) -> SpecOutcome {
    match (v, must_hold) {
        (VerdictValue::Unknown, _) => SpecOutcome::Unknown,
        (VerdictValue::Expected, true) => SpecOutcome::Holds,
        (VerdictValue::Unexpected, false) => SpecOutcome::FailsAsRequired,
        _ => SpecOutcome::Violation,
    }
}

/// Probes a precondition/postcondition pair against every case of a suite.
pub fn evaluate_spec<B: VerifierBackend + ?Sized>(
    task: &Task,
    precond_ref: &str,
    postcond_ref: &str,
    suite: &TestSuite,
    backend: &B,
    timeout_ms: u64,
) -> Result<SpecScore, BackendError> {
    let mut score = SpecScore::default();
    let mut probe = |category, goal: &str, input: &InputMap, output: Option<&Value>, must_hold| {
        let expr = application(goal, input.ordered(&task.signature).chain(output));
        let v = match decide_proposition(backend, &expr, goal, timeout_ms) {
            Ok(v) => v.value,
            Err(ClassifyError::BackendUnavailable(e)) => return Err(e),
            Err(ClassifyError::BackendInconsistency { expr }) => {
                log::warn!("{}: inconsistent answers for `{expr}`", task.id);
                VerdictValue::Unknown
            }
        };
        score.probes.push(SpecProbe {
            category,
            case: expr,
            outcome: outcome(v, must_hold),
        });
        Ok(())
    };
    for p in &suite.expected_pairs {
        probe(ProbeCategory::ExpectedInput, precond_ref, &p.input, None, true)?;
    }
    for i in &suite.unexpected_inputs {
        probe(ProbeCategory::UnexpectedInput, precond_ref, i, None, false)?;
    }
    for p in &suite.expected_pairs {
        probe(ProbeCategory::ExpectedPair, postcond_ref, &p.input, Some(&p.output), true)?;
    }
    for p in &suite.unexpected_outputs {
        probe(ProbeCategory::UnexpectedOutput, postcond_ref, &p.input, Some(&p.output), false)?;
    }
    Ok(score)
}

/// Per-task results aggregated across a task set.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Aggregate {
    pub tasks: usize,
    /// Mean per-task code score.
    pub code_mean: f64,
    /// Fraction of tasks whose code reproduces every expected pair.
    pub code_pass: f64,
    pub spec_lower: f64,
    pub spec_upper: f64,
}

pub fn aggregate(code: &[CodeScore], spec: &[SpecScore]) -> Aggregate {
    let frac = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    Aggregate {
        tasks: code.len().max(spec.len()),
        code_mean: if code.is_empty() {
            0.0
        } else {
            code.iter().map(CodeScore::fraction).sum::<f64>() / code.len() as f64
        },
        code_pass: frac(code.iter().filter(|c| c.total > 0 && c.passed == c.total).count(), code.len()),
        spec_lower: frac(spec.iter().filter(|s| s.lower_pass()).count(), spec.len()),
        spec_upper: frac(spec.iter().filter(|s| s.upper_pass()).count(), spec.len()),
    }
}

impl SpecScore {
    pub fn to_json(&self) -> Json {
        let mut m = Map::new();
        m.insert("lower_pass".into(), self.lower_pass().into());
        m.insert("upper_pass".into(), self.upper_pass().into());
        m.insert("lower_fraction".into(), self.lower_fraction().into());
        m.insert("upper_fraction".into(), self.upper_fraction().into());
        m.insert("violations".into(), self.violations().into());
        m.insert("unknowns".into(), self.unknowns().into());
        let bad: Vec<Json> = self
            .probes
            .iter()
            .filter(|p| matches!(p.outcome, SpecOutcome::Violation | SpecOutcome::Unknown))
            .map(|p| {
                let mut o = Map::new();
                o.insert("category".into(), alloc::format!("{:?}", p.category).into());
                o.insert("case".into(), p.case.clone().into());
                o.insert("outcome".into(), alloc::format!("{:?}", p.outcome).into());
                Json::Object(o)
            })
            .collect();
        m.insert("failing_probes".into(), Json::Array(bad));
        Json::Object(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probe(o: SpecOutcome) -> SpecProbe {
        SpecProbe {
            category: ProbeCategory::ExpectedPair,
            case: String::new(),
            outcome: o,
        }
    }

    #[test]
    fn unknown_separates_bounds() {
        let s = SpecScore {
            probes: alloc::vec![probe(SpecOutcome::Holds), probe(SpecOutcome::Unknown)],
        };
        assert!(!s.lower_pass() && s.upper_pass());
        assert!(s.lower_fraction() < s.upper_fraction());
        let a = aggregate(&[], &[s]);
        assert_eq!((a.spec_lower, a.spec_upper), (0.0, 1.0));
    }

    #[test]
    fn violation_fails_both() {
        let s = SpecScore {
            probes: alloc::vec![probe(SpecOutcome::FailsAsRequired), probe(SpecOutcome::Violation)],
        };
        assert!(!s.lower_pass() && !s.upper_pass());
        assert_eq!(s.lower_fraction(), s.upper_fraction());
    }
}
