//! Precondition-guided classification of candidate inputs and completion of
//! expected pairs with reference outputs.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::backend::{
    application, BackendError, Executor, Probe, ProbeResult, ProbeStatus, RunError, VerifierBackend,
};
use crate::suite::{InputMap, IoPair, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerdictValue {
    Expected,
    Unexpected,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    Syntax,
    Decide,
    Plausible,
}

impl fmt::Display for VerdictValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub value: VerdictValue,
    pub stage: Stage,
    pub transcript: Vec<(Probe, ProbeResult)>,
}

impl Verdict {
    /// Whether any plausible probe was issued.
    pub fn reached_plausible(&self) -> bool {
        self.transcript
            .iter()
            .any(|(p, _)| p.kind == crate::backend::ProbeKind::Plausible)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassifyError {
    #[error("backend passed both `{expr}` and its negation")]
    BackendInconsistency { expr: String },
    #[error(transparent)]
    BackendUnavailable(#[from] BackendError),
}

/// Decides the truth of the proposition `expr` (an application of `goal`)
/// with the syntax filter, bidirectional decide, then bidirectional
/// plausible. `Expected` means the proposition holds, `Unexpected` that it
/// fails.
pub fn decide_proposition<B: VerifierBackend + ?Sized>(
    backend: &B,
    expr: &str,
    goal: &str,
    timeout_ms: u64,
) -> Result<Verdict, ClassifyError> {
    let mut transcript = Vec::new();
    let mut ask = |p: Probe| -> Result<ProbeStatus, ClassifyError> {
        let r = backend.probe(&p)?;
        let s = r.status;
        transcript.push((p, r));
        Ok(s)
    };

    if ask(Probe::check(expr, timeout_ms))? != ProbeStatus::Pass {
        return Ok(done(VerdictValue::Unknown, Stage::Syntax, transcript));
    }

    let pos = ask(Probe::decide(expr, false, timeout_ms))?;
    let neg = ask(Probe::decide(expr, true, timeout_ms))?;
    match (pos == ProbeStatus::Pass, neg == ProbeStatus::Pass) {
        (true, true) => return Err(ClassifyError::BackendInconsistency { expr: expr.into() }),
        (true, false) => return Ok(done(VerdictValue::Expected, Stage::Decide, transcript)),
        (false, true) => return Ok(done(VerdictValue::Unexpected, Stage::Decide, transcript)),
        (false, false) => {}
    }

    // A counterexample to the negation witnesses the proposition.
    let refute_neg = ask(Probe::plausible(expr, goal, true, timeout_ms))?;
    let refute_pos = ask(Probe::plausible(expr, goal, false, timeout_ms))?;
    let value = match (
        refute_neg == ProbeStatus::Counterexample,
        refute_pos == ProbeStatus::Counterexample,
    ) {
        (true, true) => return Err(ClassifyError::BackendInconsistency { expr: expr.into() }),
        (true, false) => VerdictValue::Expected,
        (false, true) => VerdictValue::Unexpected,
        (false, false) => VerdictValue::Unknown,
    };
    Ok(done(value, Stage::Plausible, transcript))
}

fn done(value: VerdictValue, stage: Stage, transcript: Vec<(Probe, ProbeResult)>) -> Verdict {
    Verdict {
        value,
        stage,
        transcript,
    }
}

/// Classifies one candidate input against the task's precondition.
pub fn classify<B: VerifierBackend + ?Sized>(
    input: &InputMap,
    task: &Task,
    backend: &B,
    timeout_ms: u64,
) -> Result<Verdict, ClassifyError> {
    let expr = application(&task.precond_ref, input.ordered(&task.signature));
    decide_proposition(backend, &expr, &task.precond_ref, timeout_ms)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Partition {
    pub expected: Vec<InputMap>,
    pub unexpected: Vec<InputMap>,
    pub dropped: usize,
}

/// Backend errors from a batch, each attributed to its input.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{} input(s) could not be classified; first: {}: {}", .failures.len(), .failures[0].0, .failures[0].1)]
pub struct BatchError {
    pub failures: Vec<(String, ClassifyError)>,
}

/// Partitions candidates by verdict, preserving candidate order.
pub fn classify_all<B: VerifierBackend + ?Sized>(
    candidates: &[InputMap],
    task: &Task,
    backend: &B,
    timeout_ms: u64,
) -> Result<Partition, BatchError> {
    let verdicts = candidates
        .iter()
        .map(|c| classify(c, task, backend, timeout_ms).map(|v| v.value));
    partition(candidates, verdicts)
}

/// Partitions candidates given their verdicts in the same order.
pub fn partition(
    candidates: &[InputMap],
    verdicts: impl IntoIterator<Item = Result<VerdictValue, ClassifyError>>,
) -> Result<Partition, BatchError> {
    let mut out = Partition::default();
    let mut failures = Vec::new();
    for (c, v) in candidates.iter().zip(verdicts) {
        match v {
            Ok(VerdictValue::Expected) => out.expected.push(c.clone()),
            Ok(VerdictValue::Unexpected) => out.unexpected.push(c.clone()),
            Ok(VerdictValue::Unknown) => out.dropped += 1,
            Err(e) => failures.push((c.canonical_key(), e)),
        }
    }
    if failures.is_empty() {
        Ok(out)
    } else {
        Err(BatchError { failures })
    }
}

/// Runs the reference implementation on each expected input. Inputs whose
/// run fails or times out are left out.
pub fn complete_expected_pairs<E: Executor + ?Sized>(
    inputs: &[InputMap],
    task: &Task,
    exec: &E,
) -> Result<Vec<IoPair>, BackendError> {
    let mut pairs = Vec::with_capacity(inputs.len());
    for input in inputs {
        if let Some(pair) = complete_pair(input, task, exec)? {
            pairs.push(pair);
        }
    }
    Ok(pairs)
}

/// The expected pair for one input, or `None` if the reference run failed.
pub fn complete_pair<E: Executor + ?Sized>(
    input: &InputMap,
    task: &Task,
    exec: &E,
) -> Result<Option<IoPair>, BackendError> {
    let args: Vec<_> = input.ordered(&task.signature).cloned().collect();
    match exec.run(&task.impl_ref, &args) {
        Ok(out) => Ok(Some(IoPair::new(input.clone(), out))),
        Err(RunError::Unavailable(e)) => Err(e),
        Err(e) => {
            log::warn!("{}: reference run on {} excluded: {e}", task.id, input.canonical_key());
            Ok(None)
        }
    }
}
