#![allow(dead_code)]

use std::path::PathBuf;

use veriscale::io::{load_tasks, TaskBundle};
use veriscale_core::builtin::BuiltinEvaluator;
use veriscale_core::lang::Limits;
use veriscale_core::suite::InputMap;
use veriscale_core::value::Value;

pub fn toy_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../tasks/toy")
}

pub fn toy_tasks() -> Vec<TaskBundle> {
    load_tasks(&toy_dir()).expect("bundled tasks load")
}

pub fn toy(id: &str) -> TaskBundle {
    toy_tasks()
        .into_iter()
        .find(|b| b.task.id == id)
        .unwrap_or_else(|| panic!("no bundled task {id}"))
}

pub fn evaluator(b: &TaskBundle) -> BuiltinEvaluator {
    BuiltinEvaluator::for_task(&b.task, Limits::default()).expect("ground truth compiles")
}

pub fn ints(xs: &[i64]) -> Value {
    Value::ListInt(xs.to_vec())
}

pub fn input(pairs: &[(&str, Value)]) -> InputMap {
    InputMap::from_pairs(pairs.iter().cloned())
}

/// Hand-written ground-truth preconditions of the bundled tasks.
pub fn precondition_oracle(id: &str, m: &InputMap) -> bool {
    let int = |k: &str| match m.get(k) {
        Some(Value::Int(x)) => *x,
        v => panic!("{id}: {k} is {v:?}"),
    };
    let list_len = |k: &str| m.get(k).and_then(Value::len).unwrap_or_else(|| panic!("{id}: {k}"));
    match id {
        "binary_to_decimal" => match m.get("digits") {
            Some(Value::ListNat(d)) => d.iter().all(|&x| x <= 1),
            v => panic!("digits is {v:?}"),
        },
        "count_vowels" => match m.get("s") {
            Some(Value::String(s)) => s.chars().all(|c| c.is_ascii_lowercase() || c == ' '),
            v => panic!("s is {v:?}"),
        },
        "max_element" => list_len("xs") > 0,
        "safe_divide" => int("b") != 0,
        "pairwise_sum" => list_len("a") == list_len("b"),
        "sum_to_n" => matches!(m.get("n"), Some(Value::Nat(n)) if *n > 0),
        "int_sub" => int("a") >= int("b"),
        "insertion_sort" | "sum_array" | "reverse_string" => true,
        _ => panic!("no oracle for {id}"),
    }
}
