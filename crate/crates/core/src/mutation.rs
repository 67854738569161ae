//! Type-aware mutation of candidate inputs.
//!
//! Each value type has a fixed set of mutation schemas. A mutation either
//! reuses a value from the ingredient pool (values already present in the
//! candidate set) or draws a schema uniformly and then its parameters
//! uniformly from the schema's parameter space.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::suite::InputMap;
use crate::value::{Value, ValueType};

/// Characters used by character-list modification and appending: ASCII
/// lowercase letters, digits and space.
pub const SIGMA_CHAR: [char; 37] = [
    'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'j', 'k', 'l', 'm', 'n', 'o', 'p', 'q', 'r', 's', 't', 'u', 'v',
    'w', 'x', 'y', 'z', '0', '1', '2', '3', '4', '5', '6', '7', '8', '9', ' ',
];

/// Special characters appended to strings.
pub const SIGMA_SP: [char; 9] = ['!', '?', '#', '@', ' ', '\n', '\t', '"', '\\'];

/// Offsets for scalar schemas.
pub const DELTAS: [i64; 5] = [-2, -1, 0, 1, 2];

/// Values appended by the sequence append schema.
pub const APPEND_RANGE: core::ops::RangeInclusive<i64> = -5..=5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MutationConfig {
    pub max_mutations_per_input: usize,
    #[serde(rename = "mutation_multi_step_size")]
    pub multi_step_size: usize,
    #[serde(rename = "mutation_ingredient_prob")]
    pub ingredient_prob: f64,
    pub rng_seed: u64,
}

impl Default for MutationConfig {
    fn default() -> Self {
        Self {
            max_mutations_per_input: 15,
            multi_step_size: 5,
            ingredient_prob: 0.3,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MutationError {
    #[error("no seed inputs to expand")]
    EmptySeedSet,
    #[error("invalid mutation config: {0}")]
    InvalidConfig(String),
}

impl MutationConfig {
    pub fn validate(&self) -> Result<(), MutationError> {
        if !(0.0..=1.0).contains(&self.ingredient_prob) {
            return Err(MutationError::InvalidConfig(alloc::format!(
                "mutation_ingredient_prob must be in [0, 1], got {}",
                self.ingredient_prob
            )));
        }
        if self.max_mutations_per_input == 0 || self.multi_step_size == 0 {
            return Err(MutationError::InvalidConfig(
                "max_mutations_per_input and mutation_multi_step_size must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// A concrete schema application. `op` selects between `x + δ` (1) and
/// `δ · x` (2) for element modification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Add { delta: i64 },
    Scale { delta: i64 },
    Modify { index: usize, op: u8, delta: i64 },
    Append { value: i64 },
    Delete { index: usize },
    Reverse,
    ModifyChar { index: usize, c: char },
    AppendChar { c: char },
    Clear,
}

impl Schema {
    /// 1-based position of the schema within its type's schema set.
    pub fn ordinal(&self, ty: ValueType) -> usize {
        match (self, ty) {
            (Schema::Add { .. }, _) => 1,
            (Schema::Scale { .. }, _) => 2,
            (Schema::Clear, _) => 1,
            (Schema::Reverse, ValueType::String) => 2,
            (Schema::AppendChar { .. }, ValueType::String) => 3,
            (Schema::Modify { .. } | Schema::ModifyChar { .. }, _) => 1,
            (Schema::Append { .. } | Schema::AppendChar { .. }, _) => 2,
            (Schema::Delete { .. }, _) => 3,
            (Schema::Reverse, _) => 4,
        }
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schema::Add { delta } => write!(f, "add({delta})"),
            Schema::Scale { delta } => write!(f, "scale({delta})"),
            Schema::Modify { index, op, delta } => write!(f, "modify({index}, {op}, {delta})"),
            Schema::Append { value } => write!(f, "append({value})"),
            Schema::Delete { index } => write!(f, "delete({index})"),
            Schema::Reverse => f.write_str("reverse"),
            Schema::ModifyChar { index, c } => write!(f, "modify({index}, {c:?})"),
            Schema::AppendChar { c } => write!(f, "append({c:?})"),
            Schema::Clear => f.write_str("clear"),
        }
    }
}

/// Number of schemas available for a type.
pub fn schema_count(ty: ValueType) -> usize {
    match ty {
        ValueType::Int | ValueType::Nat => 2,
        ValueType::String => 3,
        _ => 4,
    }
}

fn clip(z: i128) -> u64 {
    z.clamp(0, u64::MAX as i128) as u64
}

fn sat_i64(z: i128) -> i64 {
    z.clamp(i64::MIN as i128, i64::MAX as i128) as i64
}

fn scalar(op: u8, x: i128, delta: i64) -> i128 {
    if op == 1 {
        x + delta as i128
    } else {
        x * delta as i128
    }
}

fn pick<T: Copy, R: Rng + ?Sized>(rng: &mut R, items: &[T]) -> T {
    items[rng.random_range(0..items.len())]
}

/// Draws a schema for `x`: uniform over the type's schemas, then uniform over
/// the chosen schema's parameters. Index-dependent schemas on an empty
/// sequence still count as drawn and act as the identity.
pub fn sample_schema<R: Rng + ?Sized>(x: &Value, rng: &mut R) -> Schema {
    let ty = x.value_type();
    let which = rng.random_range(1..=schema_count(ty));
    let len = x.len().unwrap_or(0);
    let index = |rng: &mut R| if len == 0 { 0 } else { rng.random_range(0..len) };
    match (ty, which) {
        (ValueType::Int | ValueType::Nat, 1) => Schema::Add { delta: pick(rng, &DELTAS) },
        (ValueType::Int | ValueType::Nat, _) => Schema::Scale { delta: pick(rng, &DELTAS) },
        (ValueType::String, 1) => Schema::Clear,
        (ValueType::String, 2) => Schema::Reverse,
        (ValueType::String, _) => Schema::AppendChar { c: pick(rng, &SIGMA_SP) },
        (ValueType::ListChar, 1) => {
            let index = index(rng);
            Schema::ModifyChar {
                index,
                c: pick(rng, &SIGMA_CHAR),
            }
        }
        (ValueType::ListChar, 2) => Schema::AppendChar { c: pick(rng, &SIGMA_CHAR) },
        (_, 1) => {
            let index = index(rng);
            let op = rng.random_range(1..=2u8);
            Schema::Modify {
                index,
                op,
                delta: pick(rng, &DELTAS),
            }
        }
        (_, 2) => Schema::Append {
            value: rng.random_range(APPEND_RANGE),
        },
        (_, 3) => Schema::Delete { index: index(rng) },
        _ => Schema::Reverse,
    }
}

fn edit<T: Clone>(xs: &[T], schema: &Schema, modify: impl Fn(&T) -> T, append: impl Fn() -> Option<T>) -> Vec<T> {
    let mut out = xs.to_vec();
    match *schema {
        Schema::Modify { index, .. } | Schema::ModifyChar { index, .. } => {
            if let Some(slot) = out.get_mut(index) {
                *slot = modify(slot);
            }
        }
        Schema::Delete { index } => {
            if index < out.len() {
                out.remove(index);
            }
        }
        Schema::Reverse => out.reverse(),
        Schema::Append { .. } | Schema::AppendChar { .. } => out.extend(append()),
        _ => {}
    }
    out
}

/// Applies a schema. Schemas that do not belong to the value's type, and
/// index-dependent schemas with an out-of-range index, leave `x` unchanged.
pub fn apply_schema(x: &Value, schema: &Schema) -> Value {
    let (op, delta) = match *schema {
        Schema::Add { delta } => (1, delta),
        Schema::Scale { delta } => (2, delta),
        Schema::Modify { op, delta, .. } => (op, delta),
        _ => (1, 0),
    };
    let append_int = || match *schema {
        Schema::Append { value } => Some(value),
        _ => None,
    };
    let append_char = || match *schema {
        Schema::AppendChar { c } => Some(c),
        _ => None,
    };
    match x {
        Value::Int(v) => match schema {
            Schema::Add { .. } | Schema::Scale { .. } => Value::Int(sat_i64(scalar(op, *v as i128, delta))),
            _ => x.clone(),
        },
        Value::Nat(v) => match schema {
            Schema::Add { .. } | Schema::Scale { .. } => Value::Nat(clip(scalar(op, *v as i128, delta))),
            _ => x.clone(),
        },
        Value::ListInt(xs) | Value::ArrayInt(xs) => {
            let out = edit(xs, schema, |e| sat_i64(scalar(op, *e as i128, delta)), append_int);
            if matches!(x, Value::ListInt(_)) {
                Value::ListInt(out)
            } else {
                Value::ArrayInt(out)
            }
        }
        Value::ListNat(xs) | Value::ArrayNat(xs) => {
            let out = edit(
                xs,
                schema,
                |e| clip(scalar(op, *e as i128, delta)),
                || append_int().map(|v| clip(v as i128)),
            );
            if matches!(x, Value::ListNat(_)) {
                Value::ListNat(out)
            } else {
                Value::ArrayNat(out)
            }
        }
        Value::ListChar(cs) => {
            let c = match *schema {
                Schema::ModifyChar { c, .. } => c,
                _ => 'a',
            };
            Value::ListChar(edit(cs, schema, |_| c, append_char))
        }
        Value::String(s) => match schema {
            Schema::Clear => Value::String(String::new()),
            Schema::Reverse => Value::String(s.chars().rev().collect()),
            Schema::AppendChar { c } => {
                let mut out = s.clone();
                out.push(*c);
                Value::String(out)
            }
            _ => x.clone(),
        },
    }
}

/// Values observed in the current candidate set, bucketed by type.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngredientPool {
    by_type: BTreeMap<ValueType, Vec<Value>>,
}

impl IngredientPool {
    /// Collects every bound value of every candidate (a multiset per type).
    pub fn build<'a>(candidates: impl IntoIterator<Item = &'a InputMap>) -> Self {
        let mut by_type: BTreeMap<ValueType, Vec<Value>> = BTreeMap::new();
        for c in candidates {
            for v in c.values() {
                by_type.entry(v.value_type()).or_default().push(v.clone());
            }
        }
        Self { by_type }
    }

    pub fn bucket(&self, ty: ValueType) -> &[Value] {
        self.by_type.get(&ty).map_or(&[], Vec::as_slice)
    }
}

/// What a single mutation did.
#[derive(Debug, Clone, PartialEq)]
pub enum Mutation {
    Reuse(Value),
    Schema(Schema),
}

/// Mutates one value and reports how.
pub fn mutate_value_traced<R: Rng + ?Sized>(
    x: &Value,
    pool: &IngredientPool,
    ingredient_prob: f64,
    rng: &mut R,
) -> (Value, Mutation) {
    if rng.random_bool(ingredient_prob) {
        let bucket = pool.bucket(x.value_type());
        if !bucket.is_empty() {
            let v = bucket[rng.random_range(0..bucket.len())].clone();
            return (v.clone(), Mutation::Reuse(v));
        }
    }
    let schema = sample_schema(x, rng);
    (apply_schema(x, &schema), Mutation::Schema(schema))
}

pub fn mutate_value<R: Rng + ?Sized>(x: &Value, pool: &IngredientPool, cfg: &MutationConfig, rng: &mut R) -> Value {
    mutate_value_traced(x, pool, cfg.ingredient_prob, rng).0
}

/// Applies between 1 and `multi_step_size` single-parameter mutations, each
/// to a uniformly chosen parameter.
pub fn mutate_input<R: Rng + ?Sized>(m: &InputMap, pool: &IngredientPool, cfg: &MutationConfig, rng: &mut R) -> InputMap {
    let mut out = m.clone();
    if m.is_empty() {
        return out;
    }
    let names: Vec<String> = m.iter().map(|(k, _)| k.clone()).collect();
    let steps = rng.random_range(1..=cfg.multi_step_size.max(1));
    for _ in 0..steps {
        let name = &names[rng.random_range(0..names.len())];
        let current = out.get(name).expect("name taken from the map").clone();
        let next = mutate_value(&current, pool, cfg, rng);
        out.insert(name.clone(), next);
    }
    out
}

/// Removes duplicate inputs, keeping first occurrences in order.
pub fn dedup_inputs(inputs: impl IntoIterator<Item = InputMap>) -> Vec<InputMap> {
    let mut seen = BTreeSet::new();
    inputs
        .into_iter()
        .filter(|i| seen.insert(i.canonical_key()))
        .collect()
}

/// Expands deduplicated `seeds` with up to `max_mutations_per_input` new
/// mutants each. Returns only the new candidates, in seed order. The
/// ingredient pool is built from all seeds before any mutation, and each
/// seed uses its own random stream keyed by `(rng_seed, task_key, index)`.
pub fn expand_candidates(seeds: &[InputMap], cfg: &MutationConfig, task_key: &str) -> Result<Vec<InputMap>, MutationError> {
    cfg.validate()?;
    if seeds.is_empty() {
        return Err(MutationError::EmptySeedSet);
    }
    let seeds = dedup_inputs(seeds.iter().cloned());
    let pool = IngredientPool::build(&seeds);
    let mut seen: BTreeSet<String> = seeds.iter().map(InputMap::canonical_key).collect();
    let mut out = Vec::new();
    for (i, seed) in seeds.iter().enumerate() {
        let mut rng = rng::stream(cfg.rng_seed, task_key, i as u64);
        for _ in 0..cfg.max_mutations_per_input {
            let m = mutate_input(seed, &pool, cfg, &mut rng);
            if seen.insert(m.canonical_key()) {
                out.push(m);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn schema_examples() {
        assert_eq!(apply_schema(&Value::Int(3), &Schema::Add { delta: 2 }), Value::Int(5));
        assert_eq!(apply_schema(&Value::Nat(1), &Schema::Add { delta: -2 }), Value::Nat(0));
        assert_eq!(apply_schema(&Value::Nat(4), &Schema::Scale { delta: -1 }), Value::Nat(0));
        assert_eq!(
            apply_schema(&Value::ListInt(vec![]), &Schema::Delete { index: 0 }),
            Value::ListInt(vec![])
        );
        assert_eq!(
            apply_schema(&Value::String("ab".into()), &Schema::Reverse),
            Value::String("ba".into())
        );
        assert_eq!(
            apply_schema(&Value::ListNat(vec![1, 2]), &Schema::Modify { index: 1, op: 2, delta: -2 }),
            Value::ListNat(vec![1, 0])
        );
        assert_eq!(
            apply_schema(&Value::ArrayNat(vec![]), &Schema::Append { value: -5 }),
            Value::ArrayNat(vec![0])
        );
        assert_eq!(
            apply_schema(&Value::Int(i64::MAX), &Schema::Scale { delta: 2 }),
            Value::Int(i64::MAX)
        );
        assert_eq!(apply_schema(&Value::String("x".into()), &Schema::Clear), Value::String("".into()));
    }

    #[test]
    fn pool_buckets_by_type() {
        let a = InputMap::from_pairs([("a", Value::Int(3)), ("b", Value::Nat(3))]);
        let pool = IngredientPool::build([&a, &a]);
        assert_eq!(pool.bucket(ValueType::Int), &[Value::Int(3), Value::Int(3)]);
        assert_eq!(pool.bucket(ValueType::Nat), &[Value::Nat(3), Value::Nat(3)]);
        assert!(pool.bucket(ValueType::ListChar).is_empty());
    }

    #[test]
    fn reuse_takes_pool_values() {
        let pool = IngredientPool::build([&InputMap::from_pairs([("x", Value::Int(77))])]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (v, how) = mutate_value_traced(&Value::Int(0), &pool, 1.0, &mut rng);
        assert_eq!(v, Value::Int(77));
        assert_eq!(how, Mutation::Reuse(Value::Int(77)));
    }

    #[test]
    fn expansion_is_bounded_and_deterministic() {
        let seed = InputMap::from_pairs([("xs", Value::ListInt(vec![3, 1, 2]))]);
        let cfg = MutationConfig {
            rng_seed: 42,
            ..MutationConfig::default()
        };
        let a = expand_candidates(&[seed.clone(), seed.clone()], &cfg, "t").unwrap();
        let b = expand_candidates(core::slice::from_ref(&seed), &cfg, "t").unwrap();
        assert!(a.len() <= 15);
        assert_eq!(a, b);
        assert!(!a.contains(&seed));
        assert_eq!(expand_candidates(&[], &cfg, "t"), Err(MutationError::EmptySeedSet));
    }
}
