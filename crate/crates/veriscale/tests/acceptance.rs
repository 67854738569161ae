//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use veriscale::config::{Overrides, Settings};
use veriscale::runner::{run_all, with_big_stack, ClientSource};
use veriscale_core::adversarial::synthesize;
use veriscale_core::backend::Workspace;
use veriscale_core::classify::{classify, Stage, VerdictValue};
use veriscale_core::lang::{Limits, Mode, Truth};
use veriscale_core::mutation::{mutate_input, mutate_value, mutate_value_traced, IngredientPool, Mutation, MutationConfig};
use veriscale_core::reduction::{
    build_kill_matrix, reduce_unexpected_inputs, select_pairs, signature_of, KillMatrix, ReductionConfig,
    ReductionReport,
};
use veriscale_core::scoring::{evaluate_code, evaluate_spec};
use veriscale_core::seed_gen::parse_seed_response;
use veriscale_core::stats::compute_stats;
use veriscale_core::suite::{InputMap, IoPair, ParamSignature, SuiteCounts};
use veriscale_core::value::{Value, ValueType};

use common::*;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const ALL_TYPES: [ValueType; 8] = [
    ValueType::Int,
    ValueType::Nat,
    ValueType::ListInt,
    ValueType::ListNat,
    ValueType::ArrayInt,
    ValueType::ArrayNat,
    ValueType::ListChar,
    ValueType::String,
];

fn random_value(ty: ValueType, rng: &mut ChaCha8Rng) -> Value {
    let len = rng.random_range(0..8);
    let int = |rng: &mut ChaCha8Rng| rng.random_range(-1000..=1000i64);
    let nat = |rng: &mut ChaCha8Rng| rng.random_range(0..=1000u64);
    let ch = |rng: &mut ChaCha8Rng| char::from(rng.random_range(b'a'..=b'z'));
    match ty {
        ValueType::Int => Value::Int(int(rng)),
        ValueType::Nat => Value::Nat(nat(rng)),
        ValueType::ListInt => Value::ListInt((0..len).map(|_| int(rng)).collect()),
        ValueType::ArrayInt => Value::ArrayInt((0..len).map(|_| int(rng)).collect()),
        ValueType::ListNat => Value::ListNat((0..len).map(|_| nat(rng)).collect()),
        ValueType::ArrayNat => Value::ArrayNat((0..len).map(|_| nat(rng)).collect()),
        ValueType::ListChar => Value::ListChar((0..len).map(|_| ch(rng)).collect()),
        ValueType::String => Value::String((0..len).map(|_| ch(rng)).collect()),
    }
}

fn type_preservation() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let seeds: Vec<Value> = ALL_TYPES
        .iter()
        .flat_map(|&t| (0..20).map(move |_| t))
        .map(|t| random_value(t, &mut rng))
        .collect();
    let pool = IngredientPool::build(&[InputMap::from_pairs(
        seeds.iter().enumerate().map(|(i, v)| (format!("p{i}"), v.clone())),
    )]);
    let cfg = MutationConfig::default();
    let (mut draws, mut violations) = (0usize, 0usize);
    for &ty in &ALL_TYPES {
        let mut x = random_value(ty, &mut rng);
        for i in 0..12_500 {
            if i % 25 == 0 {
                x = random_value(ty, &mut rng);
            }
            let y = mutate_value(&x, &pool, &cfg, &mut rng);
            draws += 1;
            if y.value_type() != ty || y.validate().is_err() {
                violations += 1;
            }
            x = y;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(draws >= 100_000 && violations == 0 && secs < 30.0, || {
        format!("{draws} draws, {violations} violations, {secs:.2} s")
    })?;
    Ok(format!("{draws} draws over 8 types, 0 violations, {secs:.2} s"))
}

fn schema_distribution() -> Outcome {
    // Appendix A schema sets: 2 for scalars, 3 for String, 4 for sequences.
    let expected_count = |t: ValueType| match t {
        ValueType::Int | ValueType::Nat => 2,
        ValueType::String => 3,
        _ => 4,
    };
    let n = 100_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pool = IngredientPool::default();
    let mut worst = 0.0f64;
    for &ty in &ALL_TYPES {
        let k = expected_count(ty);
        let mut counts = vec![0usize; k];
        for _ in 0..n {
            let x = random_value(ty, &mut rng);
            match mutate_value_traced(&x, &pool, 0.0, &mut rng).1 {
                Mutation::Schema(s) => counts[s.ordinal(ty) - 1] += 1,
                Mutation::Reuse(_) => return Err(format!("{ty}: reuse with reuse disabled")),
            }
        }
        let p = 1.0 / k as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for (j, &c) in counts.iter().enumerate() {
            let z = (c as f64 - n as f64 * p).abs() / sigma;
            worst = worst.max(z);
            ensure(z <= 3.0, || format!("{ty} schema {}: {c} of {n} is {z:.2}σ from uniform", j + 1))?;
        }
    }
    Ok(format!("{n} draws per type, largest deviation {worst:.2}σ"))
}

fn figure2() -> Outcome {
    let b = toy("binary_to_decimal");
    let ev = evaluator(&b);
    let v = |d: Vec<u64>| classify(&input(&[("digits", Value::ListNat(d))]), &b.task, &ev, 10_000);
    let bad = v(vec![1, 2, 1]).map_err(|e| e.to_string())?;
    let good = v(vec![1, 0, 1]).map_err(|e| e.to_string())?;
    ensure(bad.value == VerdictValue::Unexpected && bad.stage == Stage::Decide, || {
        format!("[1,2,1] gave {} at {}", bad.value, bad.stage)
    })?;
    ensure(good.value == VerdictValue::Expected, || format!("[1,0,1] gave {}", good.value))?;
    Ok(format!("[1,2,1] → {} ({}), [1,0,1] → {}", bad.value, bad.stage, good.value))
}

fn figure3() -> Outcome {
    let b = toy("insertion_sort");
    let mut ev = evaluator(&b);
    let mut clients = b.mock.as_ref().ok_or("no mock script")?.clients();
    let (_, mut roles) = clients.split();
    let syn = synthesize(&b.task, &mut roles, &mut ev, &Default::default()).map_err(|e| e.to_string())?;
    ensure(syn.impls.len() == 7, || format!("{} implementations, expected 7", syn.impls.len()))?;
    let pair = IoPair::new(input(&[("xs", ints(&[0, -1, -2, -3, -4]))]), ints(&[-4, -3, -2, -1, 0]));
    let m = build_kill_matrix(&[pair], &syn.impls, &b.task.signature, &ev).map_err(|e| e.to_string())?;
    let survivors: Vec<&str> = (0..m.cols())
        .filter(|&j| !m.get(0, j))
        .map(|j| syn.impls[j].source_text.as_str())
        .collect();
    ensure(m.row_kills(0) == 6, || format!("{} kills", m.row_kills(0)))?;
    ensure(survivors.len() == 1 && survivors[0].contains("xs.reverse"), || {
        format!("survivor {survivors:?}")
    })?;
    Ok("row [0,-1,-2,-3,-4] kills 6 of 7, reverse survives".into())
}

fn classifier_oracle() -> Outcome {
    let mut total = 0;
    for b in toy_tasks() {
        let task = &b.task;
        let ev = evaluator(&b);
        let mock = b.mock.as_ref().ok_or("no mock script")?;
        let mut seeds = task.base_inputs();
        for r in &mock.seed {
            seeds.extend(parse_seed_response(r, &task.signature).unwrap_or_default());
        }
        let pool = IngredientPool::build(&seeds);
        let cfg = MutationConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(veriscale_core::rng::fnv1a(task.id.as_bytes()));
        let mut cands: Vec<InputMap> = Vec::new();
        while cands.len() < 1000 {
            let k = rng.random_range(0..seeds.len() + cands.len());
            let parent = if k < seeds.len() { &seeds[k] } else { &cands[k - seeds.len()] };
            let child = mutate_input(parent, &pool, &cfg, &mut rng);
            cands.push(child);
        }
        let (mut unknown, mut disagree) = (0, 0);
        for c in &cands {
            let verdict = classify(c, task, &ev, 10_000).map_err(|e| format!("{}: {e}", task.id))?;
            let args: Vec<Value> = c.ordered(&task.signature).cloned().collect();
            let direct = ev
                .program()
                .call_truth(&task.precond_ref, &args, Mode::Decide, Limits::default())
                .map_err(|e| format!("{}: {e}", task.id))?;
            let oracle = precondition_oracle(&task.id, c);
            let want = if oracle { VerdictValue::Expected } else { VerdictValue::Unexpected };
            if verdict.value == VerdictValue::Unknown {
                unknown += 1;
            } else if verdict.value != want || (direct == Truth::True) != oracle {
                disagree += 1;
            }
        }
        ensure(unknown == 0 && disagree == 0, || {
            format!("{}: {disagree} disagreements, {unknown} unknown", task.id)
        })?;
        total += cands.len();
    }
    Ok(format!("{total} candidates over 10 tasks, 0 disagreements, 0 unknown"))
}

/// Greedy cover written independently of the library: most new kills first,
/// lowest row on ties.
fn greedy_cover_size(rows: &[Vec<bool>], cols: usize) -> usize {
    let killable: BTreeSet<usize> = (0..cols).filter(|&j| rows.iter().any(|r| r[j])).collect();
    let mut covered = BTreeSet::new();
    let mut size = 0;
    while covered.len() < killable.len() {
        let best = (0..rows.len())
            .max_by_key(|&i| {
                let gain = (0..cols).filter(|&j| rows[i][j] && !covered.contains(&j)).count();
                (gain, std::cmp::Reverse(i))
            })
            .expect("rows remain while columns are uncovered");
        covered.extend((0..cols).filter(|&j| rows[best][j]));
        size += 1;
    }
    size
}

fn set_cover() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let budget = 50;
    for trial in 0..1000 {
        let n = rng.random_range(0..=200usize);
        let cols = rng.random_range(1..=50usize);
        let density = rng.random_range(0.0..0.3);
        let rows: Vec<Vec<bool>> = (0..n).map(|_| (0..cols).map(|_| rng.random_bool(density)).collect()).collect();
        let m = KillMatrix::from_rows(&rows, cols);
        let sel = select_pairs(&m, budget).rows();
        let killed = |rs: &[usize]| -> BTreeSet<usize> {
            let rows = &rows;
            rs.iter().flat_map(|&r| (0..cols).filter(move |&j| rows[r][j])).collect()
        };
        let all: Vec<usize> = (0..n).collect();
        ensure(killed(&sel) == killed(&all), || format!("trial {trial}: coverage lost"))?;
        let cover = greedy_cover_size(&rows, cols);
        ensure(sel.len() <= budget.max(cover), || {
            format!("trial {trial}: {} rows kept, cover {cover}", sel.len())
        })?;
    }
    Ok("1000 trials, coverage preserved and size within max(50, greedy cover) in all".into())
}

fn boundary_reduction() -> Outcome {
    let sig = ParamSignature::new(vec![
        ("a".into(), ValueType::ListInt),
        ("b".into(), ValueType::ListInt),
        ("k".into(), ValueType::Int),
    ])
    .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut inputs = Vec::new();
    let mut seen = BTreeSet::new();
    let list = |rng: &mut ChaCha8Rng, len: usize| Value::ListInt((0..len).map(|_| rng.random_range(1..=9)).collect());
    while inputs.len() < 400 {
        let la = rng.random_range(0..7);
        let lb = if rng.random_bool(0.7) { la } else { rng.random_range(0..7) };
        let k = if rng.random_bool(0.8) { rng.random_range(1..=50) } else { rng.random_range(-3..=0) };
        let m = input(&[("a", list(&mut rng, la)), ("b", list(&mut rng, lb)), ("k", Value::Int(k))]);
        if seen.insert(m.canonical_key()) {
            inputs.push(m);
        }
    }
    let flags = |f: &dyn Fn(&veriscale_core::reduction::StructuralSignature) -> bool| {
        inputs.iter().any(|i| f(&signature_of(i, &sig)))
    };
    ensure(
        flags(&|s| s.has_empty_container) && flags(&|s| s.has_zero) && flags(&|s| s.has_negative) && flags(&|s| s.mismatched_lengths),
        || "fixture does not span all four critical flags".into(),
    )?;
    let critical: BTreeSet<String> = inputs
        .iter()
        .map(|i| signature_of(i, &sig))
        .filter(|s| s.is_critical())
        .map(|s| s.label())
        .collect();
    let cfg = ReductionConfig::default();
    let kept = reduce_unexpected_inputs(&inputs, &sig, &cfg, &mut ReductionReport::default());
    let kept_buckets: BTreeSet<String> = kept.iter().map(|i| signature_of(i, &sig).label()).collect();
    ensure(critical.len() <= cfg.max_unexpected_inputs, || format!("{} critical buckets exceed the cap", critical.len()))?;
    let missing: Vec<&String> = critical.iter().filter(|c| !kept_buckets.contains(*c)).collect();
    ensure(missing.is_empty(), || format!("critical buckets without a representative: {missing:?}"))?;
    ensure(kept.len() <= 50, || format!("{} retained", kept.len()))?;
    Ok(format!("{} inputs, {} critical buckets all represented, {} retained", inputs.len(), critical.len(), kept.len()))
}

fn read_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).expect("output directory") {
            let p = e.expect("dir entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).expect("under root").display().to_string();
                out.push((rel, std::fs::read(&p).expect("readable")));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut trees = Vec::new();
    let mut times = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let start = Instant::now();
        let status = Command::new(env!("CARGO_BIN_EXE_veriscale"))
            .args(["pipeline", "--mock", "--seed", "42", "--tasks"])
            .arg(toy_dir())
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        times.push(start.elapsed());
        ensure(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
        trees.push(read_tree(&out));
    }
    let suites = trees[0].iter().filter(|(p, _)| p.ends_with(".suite.json")).count();
    ensure(suites == 30, || format!("{suites} suite files"))?;
    ensure(trees[0] == trees[1], || "runs differ".into())?;
    let slowest = times.iter().max().copied().unwrap_or(Duration::ZERO);
    ensure(slowest < Duration::from_secs(60), || format!("took {slowest:?}"))?;
    Ok(format!("{} files byte-identical across two runs, slowest {:.2} s", trees[0].len(), slowest.as_secs_f64()))
}

fn self_consistency() -> Outcome {
    let bundles = toy_tasks();
    let settings = Settings::resolve(None, Overrides::default()).map_err(|e| e.to_string())?;
    let outputs = run_all(&bundles, &settings, &ClientSource::Mock).map_err(|e| e.to_string())?;
    let mut weak_checked = Vec::new();
    for (b, o) in bundles.iter().zip(&outputs) {
        let task = &b.task;
        let mut ev = evaluator(b);
        for (label, suite) in [("full", &o.run.full), ("lite", &o.run.lite)] {
            let code = evaluate_code(task, &task.impl_ref, suite, &ev).map_err(|e| e.to_string())?;
            ensure(code.total > 0 && code.fraction() == 1.0, || {
                format!("{} {label}: code {}/{}", task.id, code.passed, code.total)
            })?;
            let spec = evaluate_spec(task, &task.precond_ref, &task.postcond_ref, suite, &ev, 10_000)
                .map_err(|e| e.to_string())?;
            ensure(spec.lower_fraction() == 1.0 && spec.upper_fraction() == 1.0, || {
                format!("{} {label}: spec {}", task.id, spec.to_json())
            })?;
        }
        let mock = b.mock.as_ref().ok_or("no mock script")?;
        for s in mock.specs.iter().filter(|s| s.label.contains("length-only")) {
            let (pre, post) = veriscale_core::adversarial::parse_spec_response(&s.response).ok_or("bad weak spec")?;
            ev.define("weak", &format!("{pre}\n\n{post}\n")).map_err(|e| e.to_string())?;
            let weak = format!("weak.{}", task.postcond_ref);
            let score = evaluate_spec(task, &task.precond_ref, &weak, &o.run.full, &ev, 10_000)
                .map_err(|e| e.to_string())?;
            ensure(score.upper_fraction() < 1.0 && !score.upper_pass(), || {
                format!("{}: length-only postcondition scores {}", task.id, score.upper_fraction())
            })?;
            weak_checked.push(format!("{} {:.3}", task.id, score.upper_fraction()));
        }
    }
    ensure(!weak_checked.is_empty(), || "no length-only fixture".into())?;
    Ok(format!(
        "reference code 1.0 and spec (1.0, 1.0) on full and lite suites of 10 tasks; length-only postconditions: {}",
        weak_checked.join(", ")
    ))
}

/// 100 suites whose category totals are `totals`.
fn suites_with_totals(totals: [usize; 3]) -> Vec<SuiteCounts> {
    (0..100)
        .map(|i| {
            let share = |t: usize| t / 100 + usize::from(i < t % 100);
            SuiteCounts {
                expected_pairs: share(totals[0]),
                unexpected_outputs: share(totals[1]),
                unexpected_inputs: share(totals[2]),
            }
        })
        .collect()
}

fn stats_multipliers() -> Outcome {
    // Table 1 means over 100 suites: baseline 5.89 / 12.69 / 0.65, expanded
    // 370.07 / 1114.01 / 119.00.
    let base = suites_with_totals([589, 1269, 65]);
    let plus = suites_with_totals([37007, 111401, 11900]);
    let s = compute_stats(&plus, Some(&base)).map_err(|e| e.to_string())?;
    let got: Vec<String> = s
        .categories
        .iter()
        .map(|c| c.multiplier.map_or("none".into(), |m| format!("{m:.2}")))
        .collect();
    ensure(got == ["62.83", "87.79", "183.08"], || format!("multipliers {got:?}"))?;
    Ok(format!("multipliers ×{}", got.join(" ×")))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("mutation type preservation", type_preservation),
        ("schema distribution", schema_distribution),
        ("Figure 2 classification", figure2),
        ("Figure 3 kill row", figure3),
        ("classifier oracle equivalence", classifier_oracle),
        ("set-cover preservation", set_cover),
        ("boundary reduction guarantee", boundary_reduction),
        ("end-to-end determinism", determinism),
        ("self-consistency scoring", self_consistency),
        ("stats multipliers", stats_multipliers),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = with_big_stack(|| std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into())));
        let line = match &outcome {
            Ok(detail) => format!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => format!("FAIL {:>2} {name}: {why}", i + 1),
        };
        failed += usize::from(outcome.is_err());
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{line}");
        let _ = out.flush();
    }
    if failed > 0 {
        let _ = writeln!(std::io::stdout(), "{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    let _ = writeln!(std::io::stdout(), "all {} criteria passed", criteria.len());
}
