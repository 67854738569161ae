//! Candidate specifications, red-team implementations and harvesting of
//! unexpected outputs.

use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::backend::{application, BackendError, DefineError, Executor, RunError, VerifierBackend, Workspace};
use crate::classify::{decide_proposition, ClassifyError, VerdictValue};
use crate::lang::parse_defs;
use crate::prompt::{
    definition_header, definition_source, fill, Prompt, PromptError, ADVERSARIAL_TEMPLATE,
    DECOMPOSITION_TEMPLATE, SPECIFICATION_TEMPLATE,
};
use crate::seed_gen::{LlmClient, LlmError};
use crate::suite::{InputMap, IoPair, Task};
use crate::value::Value;

pub const IMPL_MARKER: &str = "-- Adversarial Implementation";
const POST_MARKER: &str = "-- Postcondition Implementation";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    RedTeam,
    FallbackDrop,
}

/// A generated (or weakened ground-truth) specification loaded into the
/// backend under module `id`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSpec {
    pub id: String,
    pub source_model: String,
    pub precond_text: String,
    pub postcond_text: String,
    pub postcond_ref: String,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversarialImpl {
    pub id: String,
    pub origin: Origin,
    pub source_spec: String,
    pub impl_ref: String,
    pub source_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct HarvestRecord {
    pub input: InputMap,
    pub adversarial_output: Value,
    pub reference_output: Value,
    pub accepting_spec: String,
    pub impl_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AdversarialError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("{stage} client failed: {source}")]
    Client { stage: &'static str, source: LlmError },
    #[error("no adversarial implementation blocks found")]
    NoBlocksFound,
    #[error("postcondition is not a conjunction of clauses")]
    NotConjunctive,
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("probe on {input}: {source}")]
    Probe { input: String, source: ClassifyError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdversarialConfig {
    pub max_adver_impl: usize,
    pub probe_timeout_ms: u64,
}

impl Default for AdversarialConfig {
    fn default() -> Self {
        Self {
            max_adver_impl: 5,
            probe_timeout_ms: crate::backend::DEFAULT_PROBE_TIMEOUT_MS,
        }
    }
}

fn header(task: &Task, name: &str, slot: &'static str) -> Result<String, PromptError> {
    task.defs
        .as_deref()
        .and_then(|d| definition_header(d, name))
        .ok_or(PromptError::MissingSlot(slot))
}

pub fn render_decomposition_prompt(task: &Task) -> Result<Prompt, PromptError> {
    Ok(Prompt {
        system: String::new(),
        user: fill(
            DECOMPOSITION_TEMPLATE.trim_end(),
            &[("problem_description", &task.description)],
        )?,
    })
}

/// Splits a decomposition answer into its `Input:` and `Output:` parts.
pub fn split_decomposition(text: &str) -> (String, String) {
    let text = text.trim();
    let at = text
        .match_indices("Output:")
        .find(|(i, _)| *i == 0 || text[..*i].ends_with('\n'))
        .map(|(i, _)| i);
    match at {
        Some(i) => (
            text[..i].trim_end().to_owned(),
            text[i..].trim_end().to_owned(),
        ),
        None => (text.to_owned(), String::new()),
    }
}

pub fn render_spec_prompt(task: &Task, decomposition: &str) -> Result<Prompt, PromptError> {
    let (input, output) = split_decomposition(decomposition);
    let pre = header(task, &task.precond_ref, "precond_signature")?;
    let post = header(task, &task.postcond_ref, "postcond_signature")?;
    Ok(Prompt {
        system: String::new(),
        user: fill(
            SPECIFICATION_TEMPLATE.trim_end(),
            &[
                ("problem_description", &task.description),
                ("input", &input),
                ("output", &output),
                ("precond_signature", &pre),
                ("postcond_signature", &post),
            ],
        )?,
    })
}

pub fn render_adversarial_prompt(task: &Task, spec: &CandidateSpec) -> Result<Prompt, PromptError> {
    let sig = header(task, &task.impl_ref, "impl_signature")?;
    Ok(Prompt {
        system: String::new(),
        user: fill(
            ADVERSARIAL_TEMPLATE.trim_end(),
            &[
                ("problem_description", &task.description),
                ("pre_condition", &spec.precond_text),
                ("post_condition", &spec.postcond_text),
                ("impl_signature", &sig),
            ],
        )?,
    })
}

/// Body of the first fenced code block, or the whole text if unfenced.
fn fenced(text: &str) -> &str {
    let Some(open) = text.find("```") else {
        return text;
    };
    let after = &text[open + 3..];
    let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
    let body = &after[body_start..];
    match body.find("```") {
        Some(close) => &body[..close],
        None => body,
    }
}

/// Splits a specification answer into precondition and postcondition code.
pub fn parse_spec_response(text: &str) -> Option<(String, String)> {
    let code = fenced(text);
    let at = code.find(POST_MARKER)?;
    let pre = code[..at]
        .lines()
        .filter(|l| !l.trim_start().starts_with("-- Precondition Implementation"))
        .collect::<Vec<_>>()
        .join("\n");
    let post = &code[at + POST_MARKER.len()..];
    Some((pre.trim().to_owned(), post.trim().to_owned()))
}

/// Numbered implementation blocks, in order, at most `cap` of them.
pub fn parse_adversarial_response(text: &str, cap: usize) -> Result<Vec<(usize, String)>, AdversarialError> {
    let marks: Vec<(usize, usize, usize)> = text
        .match_indices(IMPL_MARKER)
        .filter_map(|(i, m)| {
            let rest = &text[i + m.len()..];
            let line_end = rest.find('\n').unwrap_or(rest.len());
            let n = rest[..line_end].trim().parse::<usize>().ok()?;
            Some((i, i + m.len() + line_end, n))
        })
        .collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (k, &(_, body_start, n)) in marks.iter().enumerate() {
        let end = marks.get(k + 1).map_or(text.len(), |m| m.0);
        let mut body = &text[body_start..end];
        if let Some(fence) = body.find("```") {
            body = &body[..fence];
        }
        let body = body.trim();
        if body.is_empty() || !seen.insert(n) {
            continue;
        }
        out.push((n, body.to_owned()));
        if out.len() == cap {
            break;
        }
    }
    if out.is_empty() {
        return Err(AdversarialError::NoBlocksFound);
    }
    Ok(out)
}

/// Leave-one-out weakenings of the ground-truth postcondition, as
/// `(dropped clause, postcondition source)`.
pub fn fallback_drop_constraints(task: &Task) -> Result<Vec<(String, String)>, AdversarialError> {
    let src = task.defs.as_deref().unwrap_or("");
    let defs = parse_defs(src).map_err(|_| AdversarialError::NotConjunctive)?;
    let post = defs
        .iter()
        .find(|d| d.name == task.postcond_ref)
        .ok_or(AdversarialError::NotConjunctive)?;
    let clauses: Vec<&str> = post
        .body
        .conjuncts()
        .iter()
        .map(|c| src[c.span.start..c.span.end].trim())
        .collect();
    if clauses.len() < 2 {
        return Err(AdversarialError::NotConjunctive);
    }
    let head = definition_header(src, &task.postcond_ref).ok_or(AdversarialError::NotConjunctive)?;
    Ok((0..clauses.len())
        .map(|drop| {
            let kept: Vec<String> = clauses
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != drop)
                .map(|(_, c)| format!("({c})"))
                .collect();
            (clauses[drop].to_owned(), format!("{head} :=\n  {}", kept.join(" ∧ ")))
        })
        .collect())
}

/// The language-model roles of adversarial synthesis.
pub struct Clients<'a> {
    pub decomposer: &'a mut dyn LlmClient,
    /// One client per specification-generating model, with its label.
    pub spec_models: Vec<(String, &'a mut dyn LlmClient)>,
    pub red_team: &'a mut dyn LlmClient,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Synthesis {
    pub specs: Vec<CandidateSpec>,
    pub impls: Vec<AdversarialImpl>,
}

fn ask(client: &mut dyn LlmClient, p: &Prompt, stage: &'static str) -> Result<String, AdversarialError> {
    client
        .complete(&p.system, &p.user)
        .map_err(|source| AdversarialError::Client { stage, source })
}

fn load_spec<W: Workspace + ?Sized>(
    ws: &mut W,
    task: &Task,
    id: &str,
    source_model: &str,
    pre: &str,
    post: &str,
    origin: Origin,
) -> Result<Option<CandidateSpec>, AdversarialError> {
    let source = format!("{pre}\n\n{post}\n");
    match ws.define(id, &source) {
        Ok(names) => {
            let postcond_ref = format!("{id}.{}", task.postcond_ref);
            if !names.contains(&postcond_ref) {
                log::warn!("{}: spec {id} does not define `{}`", task.id, task.postcond_ref);
                return Ok(None);
            }
            Ok(Some(CandidateSpec {
                id: id.into(),
                source_model: source_model.into(),
                precond_text: pre.into(),
                postcond_text: post.into(),
                postcond_ref,
                origin,
            }))
        }
        Err(DefineError::Compile(e)) => {
            log::warn!("{}: spec {id} from {source_model} dropped: {e}", task.id);
            Ok(None)
        }
        Err(DefineError::Backend(e)) => Err(e.into()),
    }
}

/// Asks the red team to attack `spec` and loads every compiling
/// implementation.
pub fn attack_spec<W: Workspace + ?Sized>(
    task: &Task,
    spec: &CandidateSpec,
    red_team: &mut dyn LlmClient,
    ws: &mut W,
    cfg: &AdversarialConfig,
) -> Result<Vec<AdversarialImpl>, AdversarialError> {
    let text = ask(red_team, &render_adversarial_prompt(task, spec)?, "red-team")?;
    let blocks = match parse_adversarial_response(&text, cfg.max_adver_impl) {
        Ok(b) => b,
        Err(AdversarialError::NoBlocksFound) => {
            log::warn!("{}: no implementation blocks for {}", task.id, spec.id);
            return Ok(Vec::new());
        }
        Err(e) => return Err(e),
    };
    let mut out = Vec::new();
    for (n, block) in blocks {
        let id = format!("{}_adv{n}", spec.id);
        let names = match ws.define(&id, &block) {
            Ok(names) => names,
            Err(DefineError::Compile(e)) => {
                log::info!("{}: {id} dropped: {e}", task.id);
                continue;
            }
            Err(DefineError::Backend(e)) => return Err(e.into()),
        };
        let wanted = format!("{id}.{}{n}", task.impl_ref);
        let impl_ref = if names.contains(&wanted) {
            wanted
        } else {
            names.last().cloned().expect("a compiled block defines something")
        };
        out.push(AdversarialImpl {
            id,
            origin: spec.origin,
            source_spec: spec.id.clone(),
            impl_ref,
            source_text: block,
        });
    }
    Ok(out)
}

/// Decomposition, candidate specifications, red-team implementations, and
/// the constraint-dropping fallback when no implementation compiles.
pub fn synthesize<W: Workspace + ?Sized>(
    task: &Task,
    clients: &mut Clients<'_>,
    ws: &mut W,
    cfg: &AdversarialConfig,
) -> Result<Synthesis, AdversarialError> {
    let mut out = Synthesis::default();
    let decomposition = ask(clients.decomposer, &render_decomposition_prompt(task)?, "decomposition")?;
    let spec_prompt = render_spec_prompt(task, &decomposition)?;
    for (k, (label, client)) in clients.spec_models.iter_mut().enumerate() {
        let text = ask(*client, &spec_prompt, "specification")?;
        let Some((pre, post)) = parse_spec_response(&text) else {
            log::warn!("{}: unparseable specification from {label}", task.id);
            continue;
        };
        let id = format!("spec{}", k + 1);
        if let Some(spec) = load_spec(ws, task, &id, label, &pre, &post, Origin::RedTeam)? {
            out.specs.push(spec);
        }
    }
    for spec in &out.specs {
        out.impls.extend(attack_spec(task, spec, clients.red_team, ws, cfg)?);
    }
    if !out.impls.is_empty() {
        return Ok(out);
    }

    let weakened = match fallback_drop_constraints(task) {
        Ok(w) => w,
        Err(AdversarialError::NotConjunctive) => {
            log::warn!("{}: no adversarial implementations and no fallback", task.id);
            return Ok(out);
        }
        Err(e) => return Err(e),
    };
    let pre = task
        .defs
        .as_deref()
        .and_then(|d| definition_source(d, &task.precond_ref))
        .unwrap_or("")
        .to_owned();
    for (k, (dropped, post)) in weakened.into_iter().enumerate() {
        let id = format!("drop{}", k + 1);
        log::info!("{}: fallback {id} drops `{dropped}`", task.id);
        // The precondition is the ground truth one, already loaded globally.
        let Some(mut spec) = load_spec(ws, task, &id, "ground-truth", "", &post, Origin::FallbackDrop)? else {
            continue;
        };
        spec.precond_text = pre.clone();
        out.impls.extend(attack_spec(task, &spec, clients.red_team, ws, cfg)?);
        out.specs.push(spec);
    }
    Ok(out)
}

/// Whether postcondition `postcond_ref` accepts `output` on `input`.
pub fn postcondition_accepts<B: VerifierBackend + ?Sized>(
    backend: &B,
    task: &Task,
    postcond_ref: &str,
    input: &InputMap,
    output: &Value,
    timeout_ms: u64,
) -> Result<VerdictValue, ClassifyError> {
    let expr = application(postcond_ref, input.ordered(&task.signature).chain([output]));
    decide_proposition(backend, &expr, postcond_ref, timeout_ms).map(|v| v.value)
}

/// Runs each implementation on each expected input and keeps outputs that
/// differ from the reference yet satisfy the implementation's own spec.
pub fn harvest_unexpected_outputs<B: VerifierBackend + Executor + ?Sized>(
    task: &Task,
    impls: &[AdversarialImpl],
    specs: &[CandidateSpec],
    expected: &[IoPair],
    backend: &B,
    timeout_ms: u64,
) -> Result<Vec<HarvestRecord>, AdversarialError> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for imp in impls {
        let Some(spec) = specs.iter().find(|s| s.id == imp.source_spec) else {
            log::warn!("{}: {} has no known spec", task.id, imp.id);
            continue;
        };
        for pair in expected {
            let args: Vec<Value> = pair.input.ordered(&task.signature).cloned().collect();
            let got = match backend.run(&imp.impl_ref, &args) {
                Ok(v) => v,
                Err(RunError::Unavailable(e)) => return Err(e.into()),
                Err(_) => continue,
            };
            if got == pair.output || got.value_type() != pair.output.value_type() {
                continue;
            }
            if seen.contains(&(pair.input.clone(), got.clone())) {
                continue;
            }
            let verdict = postcondition_accepts(backend, task, &spec.postcond_ref, &pair.input, &got, timeout_ms)
                .map_err(|source| AdversarialError::Probe {
                    input: pair.input.canonical_key(),
                    source,
                })?;
            if verdict == VerdictValue::Expected {
                seen.insert((pair.input.clone(), got.clone()));
                out.push(HarvestRecord {
                    input: pair.input.clone(),
                    adversarial_output: got,
                    reference_output: pair.output.clone(),
                    accepting_spec: spec.id.clone(),
                    impl_id: imp.id.clone(),
                });
            }
        }
    }
    Ok(out)
}

/// Provenance line for one implementation.
pub fn provenance_json(imp: &AdversarialImpl) -> String {
    let mut m = serde_json::Map::new();
    m.insert("id".into(), imp.id.clone().into());
    m.insert(
        "origin".into(),
        match imp.origin {
            Origin::RedTeam => "RedTeam",
            Origin::FallbackDrop => "FallbackDrop",
        }
        .into(),
    );
    m.insert("source_spec".into(), imp.source_spec.clone().into());
    m.insert("source_text".into(), imp.source_text.clone().into());
    serde_json::Value::Object(m).to_string()
}

/// Convenience for callers that own boxed clients.
pub fn boxed_clients<'a>(
    decomposer: &'a mut Box<dyn LlmClient>,
    spec_models: &'a mut [(String, Box<dyn LlmClient>)],
    red_team: &'a mut Box<dyn LlmClient>,
) -> Clients<'a> {
    Clients {
        decomposer: decomposer.as_mut(),
        spec_models: spec_models
            .iter_mut()
            .map(|(l, c)| (l.to_string(), c.as_mut() as &mut dyn LlmClient))
            .collect(),
        red_team: red_team.as_mut(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::BuiltinEvaluator;
    use crate::lang::Limits;
    use crate::seed_gen::{MockLlm, PromptKind};
    use crate::suite::ParamSignature;
    use crate::value::ValueType;
    use alloc::vec;

    const DEFS: &str = "\
def insertionSort_precond (xs : List Int) : Prop := True

def insertionSort (xs : List Int) : List Int :=
  xs.foldr (fun x acc => insert x acc) []

def insert (x : Int) (ys : List Int) : List Int :=
  match ys with
  | [] => [x]
  | y :: rest => if x ≤ y then x :: ys else y :: insert x rest

def insertionSort_postcond (xs : List Int) (result : List Int) : Prop :=
  List.Pairwise (· ≤ ·) result ∧ List.isPerm xs result
";

    fn task() -> Task {
        Task {
            id: "sort".into(),
            description: "Sort a list of integers in ascending order.".into(),
            signature: ParamSignature::new(vec![("xs".into(), ValueType::ListInt)]).unwrap(),
            precond_ref: "insertionSort_precond".into(),
            postcond_ref: "insertionSort_postcond".into(),
            impl_ref: "insertionSort".into(),
            base_expected_inputs: vec![],
            base_unexpected_inputs: vec![],
            defs: Some(DEFS.into()),
        }
    }

    const SPEC: &str = "```lean
-- Precondition Implementation
def insertionSort_precond (xs : List Int) : Prop := True

-- Postcondition Implementation
def insertionSort_postcond (xs : List Int) (result : List Int) : Prop :=
  result.length = xs.length
```";

    const ATTACK: &str = "```lean
-- Adversarial Implementation 1
def insertionSort1 (xs : List Int) : List Int := xs.reverse

-- Adversarial Implementation 2
def insertionSort2 (xs : List Int) : List Int := List.replicate xs.length 0

-- Adversarial Implementation 3
def insertionSort3 (xs : List Int) : List Int := xs +

-- Adversarial Implementation 4
def insertionSort4 (xs : List Int) : List Int := []
```";

    #[test]
    fn blocks_are_split_by_marker() {
        let b = parse_adversarial_response(ATTACK, 5).unwrap();
        assert_eq!(b.len(), 4);
        assert_eq!(b[1], (2, "def insertionSort2 (xs : List Int) : List Int := List.replicate xs.length 0".into()));
        assert_eq!(parse_adversarial_response(ATTACK, 2).unwrap().len(), 2);
        assert_eq!(parse_adversarial_response("I cannot help.", 5), Err(AdversarialError::NoBlocksFound));
    }

    #[test]
    fn leave_one_out() {
        let w = fallback_drop_constraints(&task()).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[1].0, "List.isPerm xs result");
        assert_eq!(
            w[1].1,
            "def insertionSort_postcond (xs : List Int) (result : List Int) : Prop :=\n  (List.Pairwise (· ≤ ·) result)"
        );
        let mut t = task();
        t.postcond_ref = "insertionSort_precond".into();
        assert_eq!(fallback_drop_constraints(&t), Err(AdversarialError::NotConjunctive));
    }

    #[test]
    fn prompts_carry_their_slots() {
        let t = task();
        let d = render_decomposition_prompt(&t).unwrap();
        assert!(d.user.contains("(E: Explicit"));
        assert!(d.user.ends_with("Sort a list of integers in ascending order."));
        assert_eq!(render_spec_prompt(&t, ""), Err(PromptError::MissingSlot("input")));
        let s = render_spec_prompt(&t, "Input:\n    a. xs\nOutput:\n    a. res1").unwrap();
        assert!(s.user.contains("- **Output**:\nOutput:\n    a. res1"));
        assert!(s.user.contains("def insertionSort_postcond (xs : List Int) (result : List Int) : Prop"));
    }

    #[test]
    fn synthesis_and_harvest() {
        let t = task();
        let mut ev = BuiltinEvaluator::for_task(&t, Limits::default()).unwrap();
        let mut dec = MockLlm::new().respond(PromptKind::Decomposition, "Input:\n  a. xs\nOutput:\n  a. res1");
        let mut spec = MockLlm::new().respond(PromptKind::Specification, SPEC);
        let mut red = MockLlm::new().respond(PromptKind::Adversarial, ATTACK);
        let mut clients = Clients {
            decomposer: &mut dec,
            spec_models: vec![("length-only".into(), &mut spec as &mut dyn LlmClient)],
            red_team: &mut red,
        };
        let syn = synthesize(&t, &mut clients, &mut ev, &AdversarialConfig::default()).unwrap();
        assert_eq!(syn.specs.len(), 1);
        let ids: Vec<&str> = syn.impls.iter().map(|i| i.impl_ref.as_str()).collect();
        assert_eq!(
            ids,
            ["spec1_adv1.insertionSort1", "spec1_adv2.insertionSort2", "spec1_adv4.insertionSort4"]
        );

        let input = InputMap::from_pairs([("xs", Value::ListInt(vec![0, -1, -2, -3, -4]))]);
        let pair = IoPair::new(input.clone(), Value::ListInt(vec![-4, -3, -2, -1, 0]));
        let recs = harvest_unexpected_outputs(&t, &syn.impls, &syn.specs, &[pair], &ev, 1000).unwrap();
        // Reverse matches the reference; the empty list fails the length check.
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].adversarial_output, Value::ListInt(vec![0; 5]));
        assert_eq!(recs[0].impl_id, "spec1_adv2");
    }

    #[test]
    fn fallback_when_nothing_compiles() {
        let t = task();
        let mut ev = BuiltinEvaluator::for_task(&t, Limits::default()).unwrap();
        let mut dec = MockLlm::new().respond(PromptKind::Decomposition, "Input:\n  a. xs\nOutput:\n  a. res1");
        let mut spec = MockLlm::new().respond(PromptKind::Specification, SPEC);
        let mut red = MockLlm::new()
            .respond(PromptKind::Adversarial, "-- Adversarial Implementation 1\ndef insertionSort1 := oops")
            .respond(
                PromptKind::Adversarial,
                "-- Adversarial Implementation 1\ndef insertionSort1 (xs : List Int) : List Int := xs",
            )
            .respond(
                PromptKind::Adversarial,
                "-- Adversarial Implementation 1\ndef insertionSort1 (xs : List Int) : List Int := []",
            );
        let mut clients = Clients {
            decomposer: &mut dec,
            spec_models: vec![("length-only".into(), &mut spec as &mut dyn LlmClient)],
            red_team: &mut red,
        };
        let syn = synthesize(&t, &mut clients, &mut ev, &AdversarialConfig::default()).unwrap();
        assert_eq!(syn.specs.len(), 3);
        assert!(syn.impls.iter().all(|i| i.origin == Origin::FallbackDrop));
        assert_eq!(syn.impls.len(), 2);

        // Without sortedness the echo passes; without permutation `[]` does.
        let input = InputMap::from_pairs([("xs", Value::ListInt(vec![2, 1]))]);
        let pair = IoPair::new(input, Value::ListInt(vec![1, 2]));
        let recs = harvest_unexpected_outputs(&t, &syn.impls, &syn.specs, &[pair], &ev, 1000).unwrap();
        let got: Vec<(&str, &Value)> = recs.iter().map(|r| (r.accepting_spec.as_str(), &r.adversarial_output)).collect();
        assert_eq!(
            got,
            [("drop1", &Value::ListInt(vec![2, 1])), ("drop2", &Value::ListInt(vec![]))]
        );
        assert!(provenance_json(&syn.impls[0]).contains("\"origin\":\"FallbackDrop\""));
    }
}
