use std::collections::BTreeSet;

use proptest::collection::vec;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use veriscale_core::backend::{Executor, Probe, ProbeStatus, VerifierBackend};
use veriscale_core::builtin::BuiltinEvaluator;
use veriscale_core::lang::{parse_defs, parse_expr, Limits};
use veriscale_core::mutation::{dedup_inputs, expand_candidates, mutate_value, IngredientPool, MutationConfig};
use veriscale_core::reduction::{
    co_filter, reduce_unexpected_inputs, select_pairs, signature_of, KillMatrix, ReductionConfig, ReductionReport,
};
use veriscale_core::suite::{InputMap, IoPair, ParamSignature, TestSuite};
use veriscale_core::value::{RenderStyle, Value, ValueType};

fn allowed_char() -> impl Strategy<Value = char> {
    prop_oneof![
        8 => proptest::char::range(' ', '~'),
        1 => Just('\n'),
        1 => Just('\t'),
    ]
}

fn value() -> impl Strategy<Value = Value> {
    prop_oneof![
        any::<i64>().prop_map(Value::Int),
        any::<u64>().prop_map(Value::Nat),
        vec(any::<i64>(), 0..6).prop_map(Value::ListInt),
        vec(any::<i64>(), 0..6).prop_map(Value::ArrayInt),
        vec(any::<u64>(), 0..6).prop_map(Value::ListNat),
        vec(any::<u64>(), 0..6).prop_map(Value::ArrayNat),
        vec(allowed_char(), 0..6).prop_map(Value::ListChar),
        vec(allowed_char(), 0..8).prop_map(|cs| Value::String(cs.into_iter().collect())),
    ]
}

fn small_value() -> impl Strategy<Value = Value> {
    prop_oneof![
        (-1000i64..1000).prop_map(Value::Int),
        (0u64..1000).prop_map(Value::Nat),
        vec(-1000i64..1000, 0..6).prop_map(Value::ListInt),
        vec(-1000i64..1000, 0..6).prop_map(Value::ArrayInt),
        vec(0u64..1000, 0..6).prop_map(Value::ListNat),
        vec(0u64..1000, 0..6).prop_map(Value::ArrayNat),
        vec(allowed_char(), 0..6).prop_map(Value::ListChar),
        vec(allowed_char(), 0..8).prop_map(|cs| Value::String(cs.into_iter().collect())),
    ]
}

fn kill_set(grid: &[Vec<bool>], rows: &[usize]) -> BTreeSet<usize> {
    rows.iter()
        .flat_map(|&r| grid[r].iter().enumerate().filter(|(_, &k)| k).map(|(j, _)| j))
        .collect()
}

proptest! {
    #[test]
    fn literal_round_trip(v in value()) {
        for style in [RenderStyle::Prover, RenderStyle::Json] {
            let text = v.render(style);
            prop_assert_eq!(Value::parse(&text, v.value_type()).unwrap(), v.clone(), "{}", text);
        }
    }

    #[test]
    fn json_payload_round_trip(v in value()) {
        let back = Value::from_json_payload(&v.to_json_payload(), v.value_type()).unwrap();
        prop_assert_eq!(back, v);
    }

    #[test]
    fn interpreter_reads_prover_literals(v in small_value()) {
        let ty = v.value_type().name();
        let mut ev = BuiltinEvaluator::new(Limits::default());
        let src = format!("def same (x : {ty}) : {ty} := x\n\ndef eqv (x : {ty}) (y : {ty}) : Prop := x = y");
        ev.program_mut().define(None, &src).unwrap();
        prop_assert_eq!(ev.run("same", std::slice::from_ref(&v)).unwrap(), v.clone());
        let lit = v.render(RenderStyle::Prover);
        let r = ev.probe(&Probe::decide(&format!("eqv ({lit}) ({lit})"), false, 1000)).unwrap();
        prop_assert_eq!(r.status, ProbeStatus::Pass, "{}", lit);
    }

    #[test]
    fn mutation_preserves_type(v in value(), seed in any::<u64>(), prob in 0.0f64..=1.0, others in vec(value(), 0..6)) {
        let pool_input = InputMap::from_pairs(others.into_iter().enumerate().map(|(i, v)| (format!("p{i}"), v)));
        let pool = IngredientPool::build([&pool_input]);
        let cfg = MutationConfig { ingredient_prob: prob, ..MutationConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = v;
        for _ in 0..20 {
            let y = mutate_value(&x, &pool, &cfg, &mut rng);
            prop_assert_eq!(y.value_type(), x.value_type());
            prop_assert!(y.validate().is_ok());
            x = y;
        }
    }

    #[test]
    fn expansion_is_fresh_and_deterministic(xs in vec(vec(-5i64..5, 0..4), 1..5), seed in any::<u64>()) {
        let seeds: Vec<InputMap> = xs.into_iter().map(|x| InputMap::from_pairs([("xs", Value::ListInt(x))])).collect();
        let cfg = MutationConfig { rng_seed: seed, ..MutationConfig::default() };
        let a = expand_candidates(&seeds, &cfg, "t").unwrap();
        let b = expand_candidates(&seeds, &cfg, "t").unwrap();
        prop_assert_eq!(&a, &b);
        let seed_keys: BTreeSet<String> = seeds.iter().map(InputMap::canonical_key).collect();
        let keys: BTreeSet<String> = a.iter().map(InputMap::canonical_key).collect();
        prop_assert_eq!(keys.len(), a.len());
        prop_assert!(keys.is_disjoint(&seed_keys));
        prop_assert!(a.len() <= dedup_inputs(seeds).len() * cfg.max_mutations_per_input);
    }

    #[test]
    fn cover_matches_brute_force(rows in 0usize..10, cols in 1usize..7, bits in vec(any::<bool>(), 70), budget in 1usize..12) {
        let grid: Vec<Vec<bool>> = (0..rows).map(|i| bits[i * cols..(i + 1) * cols].to_vec()).collect();
        let m = KillMatrix::from_rows(&grid, cols);
        let sel = select_pairs(&m, budget);
        let kills = |rs: &[usize]| kill_set(&grid, rs);
        let all: Vec<usize> = (0..rows).collect();
        prop_assert_eq!(kills(&sel.rows()), kills(&all));
        // Every cover step adds a kill.
        let mut seen = BTreeSet::new();
        for &r in &sel.cover {
            let before = seen.len();
            seen.extend(kills(&[r]));
            prop_assert!(seen.len() > before);
        }
        // The smallest cover found by exhaustive search never beats greedy by
        // more than the greedy bound allows, and the budget is respected.
        let target = kills(&all);
        let optimum = (0u32..(1 << rows))
            .filter(|mask| kills(&(0..rows).filter(|&r| mask & (1 << r) != 0).collect::<Vec<_>>()) == target)
            .map(u32::count_ones)
            .min()
            .unwrap() as usize;
        prop_assert!(sel.cover.len() >= optimum);
        let harmonic: f64 = (1..=cols).map(|k| 1.0 / k as f64).sum();
        prop_assert!(sel.cover.len() as f64 <= optimum as f64 * harmonic + 1e-9);
        prop_assert_eq!(sel.rows().len(), rows.min(budget.max(sel.cover.len())));
    }

    #[test]
    fn unexpected_reduction_invariants(
        raw in vec((vec(-3i64..4, 0..5), vec(-3i64..4, 0..5), -3i64..4), 0..120),
        cap in 1usize..30,
    ) {
        let sig = ParamSignature::new(vec![
            ("a".into(), ValueType::ListInt),
            ("b".into(), ValueType::ListInt),
            ("k".into(), ValueType::Int),
        ]).unwrap();
        let inputs = dedup_inputs(raw.into_iter().map(|(a, b, k)| {
            InputMap::from_pairs([("a", Value::ListInt(a)), ("b", Value::ListInt(b)), ("k", Value::Int(k))])
        }));
        let cfg = ReductionConfig { max_unexpected_inputs: cap, ..ReductionConfig::default() };
        let kept = reduce_unexpected_inputs(&inputs, &sig, &cfg, &mut ReductionReport::default());
        let again = reduce_unexpected_inputs(&inputs, &sig, &cfg, &mut ReductionReport::default());
        prop_assert_eq!(&kept, &again);
        prop_assert_eq!(kept.len(), inputs.len().min(cap));
        // A subsequence of the input.
        let mut it = inputs.iter();
        for k in &kept {
            prop_assert!(it.any(|i| i == k));
        }
        let critical: BTreeSet<String> = inputs.iter().map(|i| signature_of(i, &sig)).filter(|s| s.is_critical()).map(|s| s.label()).collect();
        let kept_labels: BTreeSet<String> = kept.iter().map(|i| signature_of(i, &sig).label()).collect();
        let represented = critical.iter().filter(|c| kept_labels.contains(*c)).count();
        prop_assert_eq!(represented, critical.len().min(cap));
    }

    #[test]
    fn co_filter_keeps_outputs_of_kept_inputs(xs in vec(0i64..6, 0..12), keep in vec(any::<bool>(), 12)) {
        let pair = |x: i64, y: i64| IoPair::new(InputMap::from_pairs([("x", Value::Int(x))]), Value::Int(y));
        let pairs: Vec<IoPair> = dedup_inputs(xs.iter().map(|&x| InputMap::from_pairs([("x", Value::Int(x))])))
            .into_iter()
            .map(|i| IoPair::new(i, Value::Int(0)))
            .collect();
        let kept: Vec<IoPair> = pairs.iter().zip(&keep).filter(|(_, k)| **k).map(|(p, _)| p.clone()).collect();
        let outputs: Vec<IoPair> = xs.iter().map(|&x| pair(x, x + 100)).collect();
        let out = co_filter(&outputs, &kept);
        for o in &outputs {
            let survives = out.contains(o);
            prop_assert_eq!(survives, kept.iter().any(|k| k.input == o.input));
        }
    }

    #[test]
    fn parser_never_panics(src in "\\PC{0,80}") {
        let _ = parse_defs(&src);
        let _ = parse_expr(&src);
    }

    #[test]
    fn parser_never_panics_on_token_soup(toks in vec(prop_oneof![
        Just("def"), Just("f"), Just("x"), Just("("), Just(")"), Just(":"), Just(":="), Just("Nat"), Just("List"),
        Just("Int"), Just("fun"), Just("=>"), Just("match"), Just("with"), Just("|"), Just("if"), Just("then"),
        Just("else"), Just("∀"), Just("∃"), Just("∈"), Just(","), Just("["), Just("]"), Just("#["), Just("1"),
        Just("-"), Just("+"), Just("·"), Just("."), Just("\n"), Just("'a'"), Just("\"s\""), Just("¬"), Just("∧"),
        Just("<"), Just("≤"), Just("!"), Just("::"), Just("let"),
    ], 0..40)) {
        let src = toks.join(" ");
        let _ = parse_defs(&src);
        let _ = parse_expr(&src);
        let mut ev = BuiltinEvaluator::new(Limits { fuel: 10_000, max_depth: 50 });
        if ev.program_mut().define(None, &src).is_ok() {
            let _ = ev.probe(&Probe::decide("True", false, 10));
        }
    }

    #[test]
    fn suite_document_round_trip(vals in vec((small_value(), small_value()), 0..6)) {
        let sig_free = |v: &Value| InputMap::from_pairs([("v", v.clone())]);
        let suite = TestSuite {
            expected_pairs: dedup_inputs(vals.iter().map(|(a, _)| sig_free(a))).into_iter().map(|i| IoPair::new(i, Value::Nat(1))).collect(),
            unexpected_inputs: dedup_inputs(vals.iter().map(|(_, b)| sig_free(b))),
            unexpected_outputs: Vec::new(),
        };
        let text = suite.to_json_string();
        let back = TestSuite::from_json_str(&text).unwrap();
        prop_assert_eq!(&back, &suite);
        prop_assert_eq!(back.to_json_string(), text);
    }
}
