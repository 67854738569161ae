//! Suite reduction: structural bucketing of unexpected inputs and greedy
//! set cover over the kill matrix for expected pairs.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};

use crate::adversarial::AdversarialImpl;
use crate::backend::{BackendError, Executor, RunError};
use crate::suite::{InputMap, IoPair, ParamSignature};
use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionConfig {
    #[serde(rename = "MAX_REJECT_INPUTS_PER_TASK")]
    pub max_unexpected_inputs: usize,
    #[serde(rename = "KEEP_PER_CRITICAL_BUCKET")]
    pub keep_per_critical_bucket: usize,
    #[serde(rename = "MAX_ACCEPT_TEST_CASES_PER_TASK")]
    pub max_expected_pairs: usize,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            max_unexpected_inputs: 50,
            keep_per_critical_bucket: 1,
            max_expected_pairs: 50,
        }
    }
}

impl ReductionConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        if self.max_unexpected_inputs == 0 || self.keep_per_critical_bucket == 0 || self.max_expected_pairs == 0 {
            return Err("reduction budgets must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LengthClass {
    Zero,
    One,
    Small,
    Large,
}

impl LengthClass {
    fn of(n: usize) -> Self {
        match n {
            0 => Self::Zero,
            1 => Self::One,
            2..=5 => Self::Small,
            _ => Self::Large,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Self::Zero => "len0",
            Self::One => "len1",
            Self::Small => "len2-5",
            Self::Large => "len6+",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct StructuralSignature {
    pub has_empty_container: bool,
    pub has_zero: bool,
    pub has_negative: bool,
    pub mismatched_lengths: bool,
    pub sorted_ascending: bool,
    pub sorted_descending: bool,
    pub has_duplicates: bool,
    pub all_equal: bool,
    /// Length class of the longest sequence parameter; `None` without any.
    pub length_class: Option<LengthClass>,
}

impl StructuralSignature {
    pub fn is_critical(&self) -> bool {
        self.has_empty_container || self.has_zero || self.has_negative || self.mismatched_lengths
    }

    /// Short name of the bucket, e.g. `empty+asc+desc/len0`.
    pub fn label(&self) -> String {
        let flags = [
            (self.has_empty_container, "empty"),
            (self.has_zero, "zero"),
            (self.has_negative, "neg"),
            (self.mismatched_lengths, "mismatch"),
            (self.sorted_ascending, "asc"),
            (self.sorted_descending, "desc"),
            (self.has_duplicates, "dup"),
            (self.all_equal, "eq"),
        ];
        let on: Vec<&str> = flags.iter().filter(|f| f.0).map(|f| f.1).collect();
        let mut s = if on.is_empty() { String::from("plain") } else { on.join("+") };
        if let Some(l) = self.length_class {
            s.push('/');
            s.push_str(l.label());
        }
        s
    }
}

fn seq_keys(v: &Value) -> Option<Vec<i128>> {
    Some(match v {
        Value::ListInt(xs) | Value::ArrayInt(xs) => xs.iter().map(|&x| x.into()).collect(),
        Value::ListNat(xs) | Value::ArrayNat(xs) => xs.iter().map(|&x| x.into()).collect(),
        Value::ListChar(cs) => cs.iter().map(|&c| u32::from(c).into()).collect(),
        Value::String(s) => s.chars().map(|c| u32::from(c).into()).collect(),
        Value::Int(_) | Value::Nat(_) => return None,
    })
}

pub fn signature_of(input: &InputMap, signature: &ParamSignature) -> StructuralSignature {
    let mut s = StructuralSignature::default();
    let mut seqs = Vec::new();
    for v in input.ordered(signature) {
        match v {
            Value::Int(x) => {
                s.has_zero |= *x == 0;
                s.has_negative |= *x < 0;
            }
            Value::Nat(x) => s.has_zero |= *x == 0,
            other => seqs.push(seq_keys(other).expect("sequence value")),
        }
    }
    if seqs.is_empty() {
        return s;
    }
    s.has_empty_container = seqs.iter().any(Vec::is_empty);
    s.mismatched_lengths = seqs.len() >= 2 && seqs.iter().any(|q| q.len() != seqs[0].len());
    s.sorted_ascending = seqs.iter().all(|q| q.windows(2).all(|w| w[0] <= w[1]));
    s.sorted_descending = seqs.iter().all(|q| q.windows(2).all(|w| w[0] >= w[1]));
    s.has_duplicates = seqs.iter().any(|q| {
        let mut sorted = q.clone();
        sorted.sort_unstable();
        sorted.windows(2).any(|w| w[0] == w[1])
    });
    s.all_equal = seqs.iter().all(|q| q.windows(2).all(|w| w[0] == w[1]));
    s.length_class = seqs.iter().map(Vec::len).max().map(LengthClass::of);
    s
}

/// Audit record of one task's reduction.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReductionReport {
    pub critical_buckets: Vec<String>,
    pub retained_per_bucket: BTreeMap<String, usize>,
    pub cover_size: usize,
    pub fill_size: usize,
    /// Per adversarial implementation: retained pairs that kill it.
    pub kill_counts: BTreeMap<String, usize>,
}

impl ReductionReport {
    pub fn to_json(&self) -> Json {
        let mut m = Map::new();
        m.insert(
            "critical_buckets".into(),
            Json::Array(self.critical_buckets.iter().cloned().map(Json::String).collect()),
        );
        let counts = |b: &BTreeMap<String, usize>| {
            Json::Object(b.iter().map(|(k, v)| (k.clone(), Json::from(*v))).collect())
        };
        m.insert("retained_per_bucket".into(), counts(&self.retained_per_bucket));
        m.insert("cover_size".into(), self.cover_size.into());
        m.insert("fill_size".into(), self.fill_size.into());
        m.insert("kill_counts".into(), counts(&self.kill_counts));
        Json::Object(m)
    }
}

/// Boundary-preserving selection of at most `max_unexpected_inputs`
/// unexpected inputs. The result keeps the original order.
pub fn reduce_unexpected_inputs(
    inputs: &[InputMap],
    signature: &ParamSignature,
    cfg: &ReductionConfig,
    report: &mut ReductionReport,
) -> Vec<InputMap> {
    let cap = cfg.max_unexpected_inputs;
    let keys: Vec<String> = inputs.iter().map(InputMap::canonical_key).collect();
    let mut priority: Vec<usize> = (0..inputs.len()).collect();
    priority.sort_by(|&a, &b| keys[a].cmp(&keys[b]).then(a.cmp(&b)));

    // Buckets in order of their highest-priority member.
    let mut bucket_of: BTreeMap<StructuralSignature, usize> = BTreeMap::new();
    let mut buckets: Vec<(StructuralSignature, Vec<usize>)> = Vec::new();
    for &i in &priority {
        let sig = signature_of(&inputs[i], signature);
        let b = *bucket_of.entry(sig).or_insert_with(|| {
            buckets.push((sig, Vec::new()));
            buckets.len() - 1
        });
        buckets[b].1.push(i);
    }

    let mut chosen = vec![false; inputs.len()];
    let mut taken = 0usize;
    fn take(i: usize, chosen: &mut [bool], taken: &mut usize) {
        chosen[i] = true;
        *taken += 1;
    }

    let critical: Vec<usize> = (0..buckets.len()).filter(|&b| buckets[b].0.is_critical()).collect();
    report.critical_buckets = critical.iter().map(|&b| buckets[b].0.label()).collect();
    let wanted: usize = critical
        .iter()
        .map(|&b| buckets[b].1.len().min(cfg.keep_per_critical_bucket))
        .sum();
    if wanted > cap {
        for &b in critical.iter().take(cap) {
            take(buckets[b].1[0], &mut chosen, &mut taken);
        }
    } else {
        for &b in &critical {
            for &i in buckets[b].1.iter().take(cfg.keep_per_critical_bucket) {
                take(i, &mut chosen, &mut taken);
            }
        }
        // Round-robin over the other buckets.
        let others: Vec<&Vec<usize>> = buckets.iter().filter(|b| !b.0.is_critical()).map(|b| &b.1).collect();
        let mut depth = 0;
        while taken < cap && others.iter().any(|m| m.len() > depth) {
            for m in &others {
                if taken == cap {
                    break;
                }
                if let Some(&i) = m.get(depth) {
                    take(i, &mut chosen, &mut taken);
                }
            }
            depth += 1;
        }
        for &i in &priority {
            if taken == cap {
                break;
            }
            if !chosen[i] {
                take(i, &mut chosen, &mut taken);
            }
        }
    }

    report.retained_per_bucket.clear();
    for (sig, members) in &buckets {
        let n = members.iter().filter(|&&i| chosen[i]).count();
        if n > 0 {
            report.retained_per_bucket.insert(sig.label(), n);
        }
    }
    inputs
        .iter()
        .zip(&chosen)
        .filter(|(_, &c)| c)
        .map(|(m, _)| m.clone())
        .collect()
}

/// Expected pairs × adversarial implementations; a cell is set when the
/// implementation's output on the pair's input differs from the expected
/// output or the run fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KillMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<bool>,
}

impl KillMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            cells: vec![false; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<bool>], cols: usize) -> Self {
        let mut m = Self::new(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged kill matrix");
            m.cells[i * cols..(i + 1) * cols].copy_from_slice(r);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, kill: bool) {
        self.cells[row * self.cols + col] = kill;
    }

    pub fn row(&self, row: usize) -> &[bool] {
        &self.cells[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_kills(&self, row: usize) -> usize {
        self.row(row).iter().filter(|&&k| k).count()
    }

    /// Columns killed by at least one of `rows`.
    pub fn killed_by(&self, rows: impl IntoIterator<Item = usize>) -> Vec<bool> {
        let mut out = vec![false; self.cols];
        for r in rows {
            for (o, &k) in out.iter_mut().zip(self.row(r)) {
                *o |= k;
            }
        }
        out
    }
}

pub fn build_kill_matrix<E: Executor + ?Sized>(
    pairs: &[IoPair],
    impls: &[AdversarialImpl],
    signature: &ParamSignature,
    exec: &E,
) -> Result<KillMatrix, BackendError> {
    let mut m = KillMatrix::new(pairs.len(), impls.len());
    let mut memo: BTreeMap<(usize, &InputMap), Option<Value>> = BTreeMap::new();
    for (r, pair) in pairs.iter().enumerate() {
        let args: Vec<Value> = pair.input.ordered(signature).cloned().collect();
        for (c, imp) in impls.iter().enumerate() {
            let out = match memo.get(&(c, &pair.input)) {
                Some(o) => o.clone(),
                None => {
                    let o = match exec.run(&imp.impl_ref, &args) {
                        Ok(v) => Some(v),
                        Err(RunError::Unavailable(e)) => return Err(e),
                        Err(_) => None,
                    };
                    memo.insert((c, &pair.input), o.clone());
                    o
                }
            };
            m.set(r, c, out.as_ref() != Some(&pair.output));
        }
    }
    Ok(m)
}

/// Row indices chosen by adversary-killing reduction.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairSelection {
    /// Greedy cover, in selection order.
    pub cover: Vec<usize>,
    /// Budget fill, in selection order.
    pub fill: Vec<usize>,
}

impl PairSelection {
    /// All selected rows in ascending order.
    pub fn rows(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.cover.iter().chain(&self.fill).copied().collect();
        r.sort_unstable();
        r
    }
}

/// Greedy set cover of every killable column, then fill up to `budget` by
/// descending kill count. Ties go to the lowest row.
pub fn select_pairs(matrix: &KillMatrix, budget: usize) -> PairSelection {
    let killable = matrix.killed_by(0..matrix.rows());
    let mut covered = vec![false; matrix.cols()];
    let mut used = vec![false; matrix.rows()];
    let mut sel = PairSelection::default();
    loop {
        let mut best: Option<(usize, usize)> = None;
        for r in (0..matrix.rows()).filter(|&r| !used[r]) {
            let gain = matrix
                .row(r)
                .iter()
                .zip(&covered)
                .filter(|(&k, &c)| k && !c)
                .count();
            if gain > 0 && best.map_or(true, |(_, g)| gain > g) {
                best = Some((r, gain));
            }
        }
        let Some((r, _)) = best else { break };
        used[r] = true;
        sel.cover.push(r);
        for (c, &k) in covered.iter_mut().zip(matrix.row(r)) {
            *c |= k;
        }
    }
    debug_assert_eq!(covered, killable);

    let mut rest: Vec<usize> = (0..matrix.rows()).filter(|&r| !used[r]).collect();
    rest.sort_by(|&a, &b| matrix.row_kills(b).cmp(&matrix.row_kills(a)).then(a.cmp(&b)));
    for r in rest {
        if sel.cover.len() + sel.fill.len() >= budget {
            break;
        }
        sel.fill.push(r);
    }
    sel
}

/// Adversary-killing reduction of expected pairs. The result keeps the
/// original order.
pub fn reduce_expected_pairs(
    pairs: &[IoPair],
    matrix: &KillMatrix,
    impls: &[AdversarialImpl],
    cfg: &ReductionConfig,
    report: &mut ReductionReport,
) -> Vec<IoPair> {
    assert_eq!(pairs.len(), matrix.rows(), "kill matrix rows must align with pairs");
    let sel = select_pairs(matrix, cfg.max_expected_pairs);
    report.cover_size = sel.cover.len();
    report.fill_size = sel.fill.len();
    let rows = sel.rows();
    report.kill_counts = impls
        .iter()
        .enumerate()
        .map(|(c, imp)| (imp.id.clone(), rows.iter().filter(|&&r| matrix.get(r, c)).count()))
        .collect();
    rows.into_iter().map(|r| pairs[r].clone()).collect()
}

/// Keeps the unexpected outputs whose input is still among the expected
/// pairs.
pub fn co_filter(outputs: &[IoPair], kept: &[IoPair]) -> Vec<IoPair> {
    let inputs: alloc::collections::BTreeSet<&InputMap> = kept.iter().map(|p| &p.input).collect();
    outputs.iter().filter(|o| inputs.contains(&o.input)).cloned().collect()
}
