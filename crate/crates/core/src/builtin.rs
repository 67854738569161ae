//! The in-process backend: answers verifier probes and runs implementations
//! with the bundled interpreter.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::backend::{
    BackendError, DefineError, Executor, Probe, ProbeKind, ProbeResult, ProbeStatus, RunError,
    VerifierBackend, Workspace,
};
use crate::lang::{EvalError, Limits, Mode, Program, Truth};
use crate::suite::Task;
use crate::value::Value;

#[derive(Debug, Clone, Default)]
pub struct BuiltinEvaluator {
    program: Program,
    limits: Limits,
}

impl BuiltinEvaluator {
    pub fn new(limits: Limits) -> Self {
        Self {
            program: Program::new(),
            limits,
        }
    }

    /// An evaluator with the task's ground-truth definitions loaded.
    pub fn for_task(task: &Task, limits: Limits) -> Result<Self, DefineError> {
        let mut ev = Self::new(limits);
        let src = task
            .defs
            .as_deref()
            .ok_or_else(|| DefineError::Compile(format!("task `{}` has no definitions", task.id)))?;
        ev.program
            .define(None, src)
            .map_err(|e| DefineError::Compile(e.to_string()))?;
        for r in [&task.precond_ref, &task.postcond_ref, &task.impl_ref] {
            if !ev.program.contains(r) {
                return Err(DefineError::Compile(format!("task `{}` does not define `{r}`", task.id)));
            }
        }
        Ok(ev)
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn program_mut(&mut self) -> &mut Program {
        &mut self.program
    }

    /// Truth of a closed proposition written in definition syntax.
    pub fn truth(&self, expr: &str, mode: Mode) -> Result<Truth, ProbeResult> {
        let e = self
            .program
            .compile_expr(expr, None)
            .map_err(|e| ProbeResult::new(ProbeStatus::Error, e.to_string()))?;
        self.program
            .eval_truth(&e, None, mode, self.limits)
            .map_err(|e| failure(&e))
    }
}

fn failure(e: &EvalError) -> ProbeResult {
    if e.is_divergence() {
        ProbeResult::new(ProbeStatus::Timeout, e.to_string())
    } else {
        ProbeResult::new(ProbeStatus::Error, e.to_string())
    }
}

fn holds(t: Truth, negated: bool) -> Truth {
    match (t, negated) {
        (Truth::Unknown, _) => Truth::Unknown,
        (t, false) => t,
        (Truth::True, true) => Truth::False,
        (Truth::False, true) => Truth::True,
    }
}

impl VerifierBackend for BuiltinEvaluator {
    fn probe(&self, p: &Probe) -> Result<ProbeResult, BackendError> {
        Ok(match p.kind {
            ProbeKind::Check => match self.program.compile_expr(&p.expr, None) {
                Ok(_) => ProbeResult::new(ProbeStatus::Pass, ""),
                Err(e) => ProbeResult::new(ProbeStatus::Fail, e.to_string()),
            },
            ProbeKind::Decide => match self.truth(&p.expr, Mode::Decide) {
                Ok(t) => match holds(t, p.negated) {
                    Truth::True => ProbeResult::new(ProbeStatus::Pass, ""),
                    _ => ProbeResult::new(ProbeStatus::Fail, "decide evaluated to false"),
                },
                Err(r) => r,
            },
            ProbeKind::Plausible => match self.truth(&p.expr, Mode::Sample) {
                Ok(t) => match holds(t, p.negated) {
                    Truth::False => ProbeResult::new(ProbeStatus::Counterexample, "found a counterexample"),
                    _ => ProbeResult::new(ProbeStatus::Pass, "no counterexample found"),
                },
                Err(r) => r,
            },
        })
    }
}

impl Executor for BuiltinEvaluator {
    fn run(&self, impl_ref: &str, args: &[Value]) -> Result<Value, RunError> {
        self.program.call(impl_ref, args, self.limits).map_err(|e| {
            if e.is_divergence() {
                RunError::Timeout
            } else {
                RunError::Runtime(e.to_string())
            }
        })
    }
}

impl Workspace for BuiltinEvaluator {
    fn define(&mut self, module: &str, source: &str) -> Result<Vec<String>, DefineError> {
        self.program
            .define(Some(module), source)
            .map_err(|e| DefineError::Compile(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::application;
    use crate::classify::{classify, Stage, VerdictValue};
    use crate::suite::{InputMap, ParamSignature};
    use crate::value::ValueType;
    use alloc::vec;

    const BIN: &str = "\
def binaryToDecimal_precond (digits : List Nat) : Prop :=
  digits.all (fun d => d == 0 || d == 1)

def binaryToDecimal (digits : List Nat) : Nat :=
  digits.foldl (fun acc d => acc * 2 + d) 0

def binaryToDecimal_postcond (digits : List Nat) (result : Nat) : Prop :=
  result - digits.foldl (fun acc d => acc * 2 + d) 0 = 0 ∧ digits.foldl (fun acc d => acc * 2 + d) 0 - result = 0
";

    fn task() -> Task {
        Task {
            id: "bin".into(),
            description: String::new(),
            signature: ParamSignature::new(vec![("digits".into(), ValueType::ListNat)]).unwrap(),
            precond_ref: "binaryToDecimal_precond".into(),
            postcond_ref: "binaryToDecimal_postcond".into(),
            impl_ref: "binaryToDecimal".into(),
            base_expected_inputs: vec![],
            base_unexpected_inputs: vec![],
            defs: Some(BIN.into()),
        }
    }

    fn digits(xs: &[u64]) -> InputMap {
        InputMap::from_pairs([("digits", Value::ListNat(xs.to_vec()))])
    }

    #[test]
    fn classifies_binary_digits() {
        let t = task();
        let ev = BuiltinEvaluator::for_task(&t, Limits::default()).unwrap();
        let v = classify(&digits(&[1, 2, 1]), &t, &ev, 1000).unwrap();
        assert_eq!((v.value, v.stage), (VerdictValue::Unexpected, Stage::Decide));
        let v = classify(&digits(&[1, 0, 1]), &t, &ev, 1000).unwrap();
        assert_eq!((v.value, v.stage), (VerdictValue::Expected, Stage::Decide));
        assert_eq!(ev.run("binaryToDecimal", &[Value::ListNat(vec![1, 0, 1])]), Ok(Value::Nat(5)));
    }

    #[test]
    fn unbounded_quantifiers_go_to_plausible() {
        let mut ev = BuiltinEvaluator::new(Limits::default());
        ev.define("m", "def sq (n : Nat) : Prop := ∃ k : Nat, k * k = n").unwrap();
        let d = ev.probe(&Probe::decide("m.sq (49)", false, 1)).unwrap();
        assert_eq!(d.status, ProbeStatus::Error);
        let p = ev.probe(&Probe::plausible("m.sq (49)", "m.sq", true, 1)).unwrap();
        assert_eq!(p.status, ProbeStatus::Counterexample);
        let p = ev.probe(&Probe::plausible("m.sq (49)", "m.sq", false, 1)).unwrap();
        assert_eq!(p.status, ProbeStatus::Pass);
    }

    #[test]
    fn missing_names_fail_the_syntax_filter() {
        let ev = BuiltinEvaluator::for_task(&task(), Limits::default()).unwrap();
        let r = ev.probe(&Probe::check(&application("nope", &[Value::Nat(1)]), 1)).unwrap();
        assert_eq!(r.status, ProbeStatus::Fail);
    }

    #[test]
    fn divergence_is_a_timeout() {
        let mut ev = BuiltinEvaluator::new(Limits::default());
        ev.define("m", "def loop (n : Nat) : Nat := loop (n + 1)").unwrap();
        assert_eq!(ev.run("m.loop", &[Value::Nat(0)]), Err(RunError::Timeout));
    }
}
