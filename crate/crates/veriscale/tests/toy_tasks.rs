mod common;

use common::*;
use veriscale::runner::with_big_stack;
use veriscale_core::backend::{Executor, Workspace};
use veriscale_core::classify::{classify, VerdictValue};
use veriscale_core::scoring::{evaluate_code, evaluate_spec};
use veriscale_core::seed_gen::{render_seed_prompt, SeedGenConfig};
use veriscale_core::suite::{IoPair, TestSuite};
use veriscale_core::value::Value;

#[test]
fn every_bundled_task_loads_with_mock_script() {
    let tasks = toy_tasks();
    assert_eq!(tasks.len(), 10);
    for b in &tasks {
        assert!(b.mock.is_some(), "{}", b.task.id);
        assert!(b.task.defs.is_some(), "{}", b.task.id);
        evaluator(b);
    }
}

#[test]
fn base_inputs_classify_as_declared() {
    with_big_stack(|| {
        for b in toy_tasks() {
            let ev = evaluator(&b);
            for (inputs, want) in [
                (&b.task.base_expected_inputs, VerdictValue::Expected),
                (&b.task.base_unexpected_inputs, VerdictValue::Unexpected),
            ] {
                for i in inputs {
                    let v = classify(i, &b.task, &ev, 1000).unwrap();
                    assert_eq!(v.value, want, "{} {i:?}", b.task.id);
                    assert_eq!(precondition_oracle(&b.task.id, i), want == VerdictValue::Expected);
                }
            }
        }
    });
}

#[test]
fn seed_prompt_golden() {
    let b = toy("max_element");
    let p = render_seed_prompt(&b.task, &SeedGenConfig::default()).unwrap();
    assert!(p.system.starts_with("You are an expert at generating diverse candidate inputs"));
    let want = r#"Generate candidate inputs for this Lean4 programming verification task.
Task description:
Return the largest element of a non-empty list of integers.

Ground-truth precondition:
def maxElement_precond (xs : List Int) : Prop :=
  xs.length > 0

Use of precondition:
- It defines the semantic boundary of valid inputs.
- Generate both inputs that satisfy it and inputs that violate it.
- Focus on hard boundary/edge cases around this condition.
- "likely-invalid" means: still valid JSON and type-compatible, but likely violates the precondition.
Validity mix target:
- total candidates: 40
- likely-invalid target: 16
- likely-valid target: 24
- If constraints make exact ratio hard, prioritize exact total count and boundary coverage.

Function parameters (JSON):
[{"name": "xs", "type": "List Int"}]

Example likely-valid inputs:
[{"input": {"xs": [1, 5, 3]}}, {"input": {"xs": [-2]}}, {"input": {"xs": [4, 4, -4]}}]

Example likely-invalid inputs (maybe no examples available, but generate if possible):
[{"input": {"xs": []}}]

Output format MUST be exactly a JSON array of objects:
[{"input": {"param": value, ...}}, ...]"#;
    assert_eq!(p.user, want);
}

#[test]
fn reference_and_reversal_scores() {
    with_big_stack(|| {
        let b = toy("insertion_sort");
        let mut ev = evaluator(&b);
        let suite = TestSuite {
            expected_pairs: [vec![3, 1, 2], vec![], vec![5, 5, -1]]
                .into_iter()
                .map(|xs| {
                    let mut sorted = xs.clone();
                    sorted.sort();
                    IoPair::new(input(&[("xs", ints(&xs))]), ints(&sorted))
                })
                .collect(),
            unexpected_inputs: Vec::new(),
            unexpected_outputs: vec![IoPair::new(input(&[("xs", ints(&[2, 1]))]), ints(&[2, 1]))],
        };
        let t = &b.task;
        let full = evaluate_code(t, &t.impl_ref, &suite, &ev).unwrap();
        assert_eq!((full.passed, full.total), (3, 3));

        let rev = ev.define("cand", "def rev (xs : List Int) : List Int := xs.reverse").unwrap();
        let nothing = ev.define("cand", "def nothing (xs : List Int) : List Int := []").unwrap();
        // Reversal matches on [] and [5, 5, -1]; the constant only on [].
        let score = evaluate_code(t, &rev[0], &suite, &ev).unwrap();
        assert_eq!((score.passed, score.total), (2, 3));
        assert_eq!(evaluate_code(t, &nothing[0], &suite, &ev).unwrap().passed, 1);
        assert_eq!(ev.run(&rev[0], &[ints(&[1, 2])]).unwrap(), ints(&[2, 1]));

        let gt = evaluate_spec(t, &t.precond_ref, &t.postcond_ref, &suite, &ev, 1000).unwrap();
        assert!(gt.lower_pass());
        let weak = ev
            .define(
                "weak",
                "def weak_post (xs : List Int) (result : List Int) : Prop := result.length = xs.length",
            )
            .unwrap();
        let weak = evaluate_spec(t, &t.precond_ref, &weak[0], &suite, &ev, 1000).unwrap();
        assert_eq!(weak.violations(), 1);
        assert!(!weak.upper_pass());
    });
}

#[test]
fn string_task_runs_on_characters() {
    with_big_stack(|| {
        let b = toy("count_vowels");
        let ev = evaluator(&b);
        let out = ev.run(&b.task.impl_ref, &[Value::String("hello world".into())]).unwrap();
        assert_eq!(out, Value::Nat(3));
    });
}
