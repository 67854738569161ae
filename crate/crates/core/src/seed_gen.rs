//! LLM seed generation: prompt rendering, the client protocol, and strict
//! parsing of candidate inputs.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};

use crate::mutation::dedup_inputs;
use crate::prompt::{definition_source, format_template, Prompt, PromptError, SEED_TEMPLATE};
use crate::suite::{InputMap, ParamSignature, Task};
use crate::value::canonical_json;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedGenConfig {
    pub rounds: usize,
    pub candidates_per_round: usize,
    pub example_limit: usize,
    /// Defaults to 40% of `candidates_per_round`, rounded up.
    pub invalid_target: Option<usize>,
    /// Defaults to the rest of `candidates_per_round`.
    pub valid_target: Option<usize>,
}

impl Default for SeedGenConfig {
    fn default() -> Self {
        Self {
            rounds: 1,
            candidates_per_round: 40,
            example_limit: 5,
            invalid_target: None,
            valid_target: None,
        }
    }
}

impl SeedGenConfig {
    /// `(invalid, valid)` mix targets.
    pub fn targets(&self) -> (usize, usize) {
        let n = self.candidates_per_round;
        match (self.invalid_target, self.valid_target) {
            (Some(i), Some(v)) => (i, v),
            (Some(i), None) => (i, n.saturating_sub(i)),
            (None, Some(v)) => (n.saturating_sub(v), v),
            (None, None) => {
                let i = (n * 2).div_ceil(5);
                (i, n - i)
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.rounds == 0 || self.candidates_per_round == 0 {
            return Err("rounds and candidates_per_round must be at least 1".into());
        }
        let (i, v) = self.targets();
        if i + v != self.candidates_per_round {
            return Err(format!(
                "invalid_target + valid_target = {} but candidates_per_round = {}",
                i + v,
                self.candidates_per_round
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct LlmError(pub String);

/// Text-in, text-out access to a language model. Retries and timeouts are
/// the client's business.
pub trait LlmClient {
    fn complete(&mut self, system: &str, user: &str) -> Result<String, LlmError>;
}

impl<C: LlmClient + ?Sized> LlmClient for alloc::boxed::Box<C> {
    fn complete(&mut self, system: &str, user: &str) -> Result<String, LlmError> {
        (**self).complete(system, user)
    }
}

/// Which template a prompt was rendered from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptKind {
    Seed,
    Decomposition,
    Specification,
    Adversarial,
}

impl PromptKind {
    pub fn of(system: &str, user: &str) -> Option<Self> {
        if system.starts_with("You are an expert at generating diverse candidate inputs") {
            return Some(Self::Seed);
        }
        let text = if system.is_empty() { user } else { system };
        if text.contains("You are a mathematical modeling expert") {
            Some(Self::Decomposition)
        } else if text.contains("You are an expert in Lean4 programming") {
            Some(Self::Specification)
        } else if text.contains("You are an expert Red Teamer") {
            Some(Self::Adversarial)
        } else {
            None
        }
    }
}

/// Deterministic scripted client. Responses are queued per prompt kind;
/// the last response of a queue is repeated once the others are used up.
#[derive(Debug, Clone, Default)]
pub struct MockLlm {
    queues: BTreeMap<PromptKind, VecDeque<String>>,
    /// Every `(system, user)` pair received.
    pub calls: Vec<(String, String)>,
}

impl MockLlm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn respond(mut self, kind: PromptKind, response: impl Into<String>) -> Self {
        self.queues.entry(kind).or_default().push_back(response.into());
        self
    }
}

impl LlmClient for MockLlm {
    fn complete(&mut self, system: &str, user: &str) -> Result<String, LlmError> {
        self.calls.push((system.into(), user.into()));
        let kind = PromptKind::of(system, user).ok_or_else(|| LlmError("mock: unrecognised prompt".into()))?;
        let q = self
            .queues
            .get_mut(&kind)
            .filter(|q| !q.is_empty())
            .ok_or_else(|| LlmError(format!("mock: no scripted response for {kind:?} prompts")))?;
        Ok(if q.len() > 1 {
            q.pop_front().expect("non-empty")
        } else {
            q[0].clone()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SeedGenError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("no JSON array found in the response")]
    NoJsonArray,
    #[error("client failed in round {round}: {source}")]
    Client { round: usize, source: LlmError },
}

fn examples_json(inputs: &[InputMap], signature: &ParamSignature, limit: usize) -> String {
    let items = inputs
        .iter()
        .take(limit)
        .map(|m| {
            let mut o = Map::new();
            o.insert("input".into(), m.to_untagged_json(signature));
            Json::Object(o)
        })
        .collect();
    canonical_json(&Json::Array(items))
}

/// Instantiates the seed template for a task.
pub fn render_seed_prompt(task: &Task, cfg: &SeedGenConfig) -> Result<Prompt, SeedGenError> {
    let precond = task
        .defs
        .as_deref()
        .and_then(|d| definition_source(d, &task.precond_ref))
        .ok_or_else(|| PromptError::MissingPrecondText(task.precond_ref.clone()))?;
    let split = SEED_TEMPLATE
        .find("\n\nGenerate candidate inputs")
        .expect("seed template has a user part");
    let (invalid, valid) = cfg.targets();
    let count = cfg.candidates_per_round.to_string();
    let invalid = invalid.to_string();
    let valid = valid.to_string();
    let params = canonical_json(&task.signature.to_json());
    let accept = examples_json(&task.base_expected_inputs, &task.signature, cfg.example_limit);
    let reject = examples_json(&task.base_unexpected_inputs, &task.signature, cfg.example_limit);
    let user = format_template(
        SEED_TEMPLATE[split + 2..].trim_end(),
        &[
            ("description", &task.description),
            ("precond", precond),
            ("candidate_count", &count),
            ("invalid_target", &invalid),
            ("valid_target", &valid),
            ("parameters", &params),
            ("test_examples", &accept),
            ("reject_examples", &reject),
        ],
    )?;
    Ok(Prompt {
        system: SEED_TEMPLATE[..split].into(),
        user,
    })
}

/// Finds the first balanced `[...]` span that parses as a JSON array.
fn locate_array(text: &str) -> Option<Vec<Json>> {
    if let Ok(Json::Array(a)) = serde_json::from_str(text.trim()) {
        return Some(a);
    }
    let bytes = text.as_bytes();
    for (start, _) in text.match_indices('[') {
        let (mut depth, mut in_str, mut esc) = (0usize, false, false);
        for (i, &b) in bytes.iter().enumerate().skip(start) {
            if in_str {
                match (esc, b) {
                    (true, _) => esc = false,
                    (false, b'\\') => esc = true,
                    (false, b'"') => in_str = false,
                    _ => {}
                }
                continue;
            }
            match b {
                b'"' => in_str = true,
                b'[' => depth += 1,
                b']' => {
                    depth -= 1;
                    if depth == 0 {
                        if let Ok(Json::Array(a)) = serde_json::from_str(&text[start..=i]) {
                            return Some(a);
                        }
                        break;
                    }
                }
                _ => {}
            }
        }
    }
    None
}

/// Extracts well-typed inputs from a seed response. Items that do not match
/// the signature exactly are dropped one by one.
pub fn parse_seed_response(text: &str, signature: &ParamSignature) -> Result<Vec<InputMap>, SeedGenError> {
    let items = locate_array(text).ok_or(SeedGenError::NoJsonArray)?;
    let mut out = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let input = match item.as_object() {
            Some(o) if o.len() == 1 => o.get("input"),
            _ => None,
        };
        let Some(input) = input else {
            log::debug!("seed item {i} dropped: not an object with a single `input` key");
            continue;
        };
        match InputMap::from_json(input, Some(signature), &format!("/{i}/input")) {
            Ok(m) => out.push(m),
            Err(e) => log::debug!("seed item {i} dropped: {e}"),
        }
    }
    Ok(out)
}

/// Base inputs followed by everything the client proposes over `rounds`
/// rounds, deduplicated.
pub fn generate_seeds<C: LlmClient + ?Sized>(
    task: &Task,
    client: &mut C,
    cfg: &SeedGenConfig,
) -> Result<Vec<InputMap>, SeedGenError> {
    let prompt = render_seed_prompt(task, cfg)?;
    let mut all: Vec<InputMap> = task.base_inputs();
    for round in 0..cfg.rounds {
        let text = client
            .complete(&prompt.system, &prompt.user)
            .map_err(|source| SeedGenError::Client { round, source })?;
        match parse_seed_response(&text, &task.signature) {
            Ok(found) => all.extend(found),
            Err(e) => log::warn!("{}: seed round {round}: {e}", task.id),
        }
    }
    Ok(dedup_inputs(all))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::{Value, ValueType};
    use alloc::vec;

    fn sig() -> ParamSignature {
        ParamSignature::new(vec![("digits".into(), ValueType::ListNat)]).unwrap()
    }

    fn task() -> Task {
        Task {
            id: "t".into(),
            description: "Convert binary digits.".into(),
            signature: sig(),
            precond_ref: "p".into(),
            postcond_ref: "q".into(),
            impl_ref: "f".into(),
            base_expected_inputs: (0..13u64)
                .map(|i| InputMap::from_pairs([("digits", Value::ListNat(vec![i % 2]))]))
                .collect(),
            base_unexpected_inputs: vec![],
            defs: Some("def p (digits : List Nat) : Prop := digits.all (fun d => d ≤ 1)\n".into()),
        }
    }

    #[test]
    fn default_targets() {
        assert_eq!(SeedGenConfig::default().targets(), (16, 24));
    }

    #[test]
    fn prompt_slots() {
        let p = render_seed_prompt(&task(), &SeedGenConfig::default()).unwrap();
        assert!(p.system.ends_with("Return exactly the number of candidates requested by the user."));
        assert!(p.user.starts_with("Generate candidate inputs"));
        assert!(p.user.contains("- total candidates: 40"));
        assert!(p.user.contains("def p (digits : List Nat) : Prop := digits.all (fun d => d ≤ 1)"));
        assert!(p.user.contains("(maybe no examples available, but generate if possible):\n[]"));
        assert!(p.user.ends_with("[{\"input\": {\"param\": value, ...}}, ...]"));
        let accept = p.user.lines().find(|l| l.starts_with("[{\"input\": {\"digits\"")).unwrap();
        assert_eq!(accept.matches("\"input\"").count(), 5);
    }

    #[test]
    fn missing_precondition_text() {
        let mut t = task();
        t.defs = None;
        assert!(matches!(
            render_seed_prompt(&t, &SeedGenConfig::default()),
            Err(SeedGenError::Prompt(PromptError::MissingPrecondText(_)))
        ));
    }

    #[test]
    fn per_item_salvage() {
        let text = r#"Here you go:
```json
[{"input": {"digits": [1, 0, 1]}}, {"input": {"digits": [1]}, "expected": 1},
 {"input": {"digits": "abc"}}, {"input": {"digits": [-1]}}, {"input": {}}, {"input": {"digits": [], "x": 1}}]
```"#;
        let got = parse_seed_response(text, &sig()).unwrap();
        assert_eq!(got, [InputMap::from_pairs([("digits", Value::ListNat(vec![1, 0, 1]))])]);
        assert_eq!(parse_seed_response("no array here", &sig()), Err(SeedGenError::NoJsonArray));
        assert_eq!(parse_seed_response("[]", &sig()), Ok(vec![]));
    }

    #[test]
    fn rounds_dedup_and_keep_base() {
        let t = task();
        let mut llm = MockLlm::new().respond(PromptKind::Seed, r#"[{"input": {"digits": [1, 1, 1]}}]"#);
        let cfg = SeedGenConfig {
            rounds: 2,
            ..Default::default()
        };
        let seeds = generate_seeds(&t, &mut llm, &cfg).unwrap();
        assert_eq!(llm.calls.len(), 2);
        // 13 base inputs collapse to 2 distinct ones, plus one proposal.
        assert_eq!(seeds.len(), 3);

        let mut empty = MockLlm::new().respond(PromptKind::Seed, "[]");
        let seeds = generate_seeds(&t, &mut empty, &SeedGenConfig::default()).unwrap();
        assert_eq!(seeds, dedup_inputs(t.base_inputs()));
    }
}
