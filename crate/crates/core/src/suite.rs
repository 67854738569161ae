//! Parameter signatures, tasks, input maps and test suites, with their JSON
//! document formats.
//!
//! Documents are validated wholesale: any violation rejects the whole file
//! and reports a JSON pointer to the offending node.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde_json::{Map, Value as Json};

use crate::value::{canonical_json, Value, ValueError, ValueType};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("unknown parameter type `{name}` at {pointer}")]
    UnknownType { pointer: String, name: String },
}

fn schema(pointer: &str, message: impl Into<String>) -> FormatError {
    FormatError::Schema {
        pointer: pointer.into(),
        message: message.into(),
    }
}

fn child(pointer: &str, key: impl core::fmt::Display) -> String {
    let key = key.to_string().replace('~', "~0").replace('/', "~1");
    format!("{pointer}/{key}")
}

/// Ordered `(name, type)` parameter list of a task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSignature {
    params: Vec<(String, ValueType)>,
}

impl ParamSignature {
    pub fn new(params: Vec<(String, ValueType)>) -> Result<Self, FormatError> {
        let mut seen = BTreeSet::new();
        for (i, (name, _)) in params.iter().enumerate() {
            if !is_identifier(name) {
                return Err(schema(&format!("/signature/{i}/name"), format!("`{name}` is not an identifier")));
            }
            if !seen.insert(name.as_str()) {
                return Err(schema(&format!("/signature/{i}/name"), format!("duplicate parameter `{name}`")));
            }
        }
        Ok(Self { params })
    }

    pub fn params(&self) -> &[(String, ValueType)] {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn type_of(&self, name: &str) -> Option<ValueType> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, t)| *t)
    }

    /// Does `input` bind exactly these names with values of the right types?
    pub fn accepts(&self, input: &InputMap) -> bool {
        input.len() == self.params.len()
            && self
                .params
                .iter()
                .all(|(n, t)| input.get(n).is_some_and(|v| v.value_type() == *t))
    }

    /// Renders the Lean-style binder list, e.g. `(digits : List Nat)`.
    pub fn binders(&self) -> String {
        let parts: Vec<String> = self
            .params
            .iter()
            .map(|(n, t)| format!("({n} : {})", t.name()))
            .collect();
        parts.join(" ")
    }

    /// JSON array `[{"name": ..., "type": ...}]`.
    pub fn to_json(&self) -> Json {
        Json::Array(
            self.params
                .iter()
                .map(|(n, t)| {
                    let mut m = Map::new();
                    m.insert("name".into(), Json::String(n.clone()));
                    m.insert("type".into(), Json::String(t.name().into()));
                    Json::Object(m)
                })
                .collect(),
        )
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

/// Bindings from parameter name to value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct InputMap {
    bindings: BTreeMap<String, Value>,
}

impl InputMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, Value)>,
        S: Into<String>,
    {
        Self {
            bindings: pairs.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.bindings.get(name)
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Value) -> Option<Value> {
        self.bindings.insert(name.into(), value)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.bindings.iter()
    }

    pub fn values(&self) -> impl Iterator<Item = &Value> {
        self.bindings.values()
    }

    /// Values in signature order. Panics if a parameter is unbound; callers
    /// hold inputs already checked against the signature.
    pub fn ordered<'a>(&'a self, signature: &'a ParamSignature) -> impl Iterator<Item = &'a Value> + 'a {
        signature
            .params()
            .iter()
            .map(move |(n, _)| self.bindings.get(n).expect("input checked against signature"))
    }

    /// Tagged JSON object with keys in sorted order.
    pub fn to_json(&self) -> Json {
        let mut m = Map::new();
        for (k, v) in &self.bindings {
            m.insert(k.clone(), v.to_tagged_json());
        }
        Json::Object(m)
    }

    /// Untagged JSON object, the form shown in prompts.
    pub fn to_untagged_json(&self, signature: &ParamSignature) -> Json {
        let mut m = Map::new();
        for ((name, _), v) in signature.params().iter().zip(self.ordered(signature)) {
            m.insert(name.clone(), v.to_json_payload());
        }
        Json::Object(m)
    }

    /// Canonical identity used for deduplication and as the deterministic
    /// priority order.
    pub fn canonical_key(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("JSON values always serialise")
    }

    /// Decodes a binding object. With a signature, payloads may be untagged
    /// and keys must match exactly; without one, every value must be tagged.
    pub fn from_json(json: &Json, signature: Option<&ParamSignature>, pointer: &str) -> Result<Self, FormatError> {
        let obj = json
            .as_object()
            .ok_or_else(|| schema(pointer, "expected an object of parameter bindings"))?;
        let mut bindings = BTreeMap::new();
        for (k, v) in obj {
            let ptr = child(pointer, k);
            let expected = match signature {
                Some(sig) => Some(
                    sig.type_of(k)
                        .ok_or_else(|| schema(&ptr, format!("unexpected parameter `{k}`")))?,
                ),
                None => None,
            };
            bindings.insert(k.clone(), decode_value(v, expected, &ptr)?);
        }
        if let Some(sig) = signature {
            if let Some((missing, _)) = sig.params().iter().find(|(n, _)| !bindings.contains_key(n)) {
                return Err(schema(pointer, format!("missing parameter `{missing}`")));
            }
        }
        Ok(Self { bindings })
    }
}

/// Decodes a value that is either tagged (`{"type","value"}`) or, when an
/// expected type is known, an untagged payload.
pub fn decode_value(json: &Json, expected: Option<ValueType>, pointer: &str) -> Result<Value, FormatError> {
    let (ty, payload, payload_ptr) = match json.as_object() {
        Some(obj) => {
            for key in obj.keys() {
                if key != "type" && key != "value" {
                    return Err(schema(&child(pointer, key), "unexpected key in tagged value"));
                }
            }
            let name = obj
                .get("type")
                .and_then(Json::as_str)
                .ok_or_else(|| schema(&child(pointer, "type"), "missing type tag"))?;
            let ty = ValueType::from_name(name).ok_or_else(|| FormatError::UnknownType {
                pointer: child(pointer, "type"),
                name: name.into(),
            })?;
            if let Some(exp) = expected {
                if exp != ty {
                    return Err(schema(
                        &child(pointer, "type"),
                        format!("declared `{ty}` but the signature requires `{exp}`"),
                    ));
                }
            }
            let payload = obj
                .get("value")
                .ok_or_else(|| schema(&child(pointer, "value"), "missing value"))?;
            (ty, payload, child(pointer, "value"))
        }
        None => match expected {
            Some(ty) => (ty, json, pointer.to_string()),
            None => return Err(schema(pointer, "expected a tagged value")),
        },
    };
    Value::from_json_payload(payload, ty).map_err(|e| match e {
        ValueError::Syntax { message, .. } | ValueError::TypeMismatch { message, .. } => {
            schema(&payload_ptr, format!("not a valid `{ty}`: {message}"))
        }
    })
}

/// One benchmark problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub id: String,
    pub description: String,
    pub signature: ParamSignature,
    pub precond_ref: String,
    pub postcond_ref: String,
    pub impl_ref: String,
    pub base_expected_inputs: Vec<InputMap>,
    pub base_unexpected_inputs: Vec<InputMap>,
    /// Source text of the ground-truth definitions (precondition,
    /// postcondition, reference implementation). Not part of the task
    /// document; loaders attach it from a companion file.
    pub defs: Option<String>,
}

const TASK_KEYS: [&str; 8] = [
    "id",
    "description",
    "signature",
    "precond_ref",
    "postcond_ref",
    "impl_ref",
    "base_expected_inputs",
    "base_unexpected_inputs",
];

impl Task {
    pub fn from_json_str(text: &str) -> Result<Self, FormatError> {
        let json: Json = serde_json::from_str(text).map_err(|e| FormatError::Json(e.to_string()))?;
        Self::from_json(&json)
    }

    pub fn from_json(json: &Json) -> Result<Self, FormatError> {
        let obj = json.as_object().ok_or_else(|| schema("", "task must be an object"))?;
        for key in obj.keys() {
            if !TASK_KEYS.contains(&key.as_str()) {
                return Err(schema(&child("", key), "unknown key"));
            }
        }
        let string = |key: &str| -> Result<String, FormatError> {
            obj.get(key)
                .and_then(Json::as_str)
                .map(String::from)
                .ok_or_else(|| schema(&child("", key), "expected a string"))
        };
        let id = string("id")?;
        let description = string("description")?;
        let precond_ref = string("precond_ref")?;
        let postcond_ref = string("postcond_ref")?;
        let impl_ref = string("impl_ref")?;

        let sig_json = obj
            .get("signature")
            .and_then(Json::as_array)
            .ok_or_else(|| schema("/signature", "expected an array"))?;
        let mut params = Vec::new();
        for (i, p) in sig_json.iter().enumerate() {
            let ptr = format!("/signature/{i}");
            let p = p.as_object().ok_or_else(|| schema(&ptr, "expected an object"))?;
            for key in p.keys() {
                if key != "name" && key != "type" {
                    return Err(schema(&child(&ptr, key), "unknown key"));
                }
            }
            let name = p
                .get("name")
                .and_then(Json::as_str)
                .ok_or_else(|| schema(&child(&ptr, "name"), "expected a string"))?;
            let ty_name = p
                .get("type")
                .and_then(Json::as_str)
                .ok_or_else(|| schema(&child(&ptr, "type"), "expected a string"))?;
            let ty = ValueType::from_name(ty_name).ok_or_else(|| FormatError::UnknownType {
                pointer: child(&ptr, "type"),
                name: ty_name.into(),
            })?;
            params.push((name.to_string(), ty));
        }
        let signature = ParamSignature::new(params)?;

        let inputs = |key: &str| -> Result<Vec<InputMap>, FormatError> {
            let ptr = child("", key);
            let arr = match obj.get(key) {
                None => return Ok(Vec::new()),
                Some(j) => j.as_array().ok_or_else(|| schema(&ptr, "expected an array"))?,
            };
            let mut out: Vec<InputMap> = Vec::new();
            let mut seen = BTreeSet::new();
            for (i, item) in arr.iter().enumerate() {
                let item_ptr = child(&ptr, i);
                let m = InputMap::from_json(item, Some(&signature), &item_ptr)?;
                if !seen.insert(m.canonical_key()) {
                    return Err(schema(&item_ptr, "duplicate input"));
                }
                out.push(m);
            }
            Ok(out)
        };
        let base_expected_inputs = inputs("base_expected_inputs")?;
        let base_unexpected_inputs = inputs("base_unexpected_inputs")?;

        Ok(Task {
            id,
            description,
            signature,
            precond_ref,
            postcond_ref,
            impl_ref,
            base_expected_inputs,
            base_unexpected_inputs,
            defs: None,
        })
    }

    pub fn to_json(&self) -> Json {
        let untagged = |inputs: &[InputMap]| {
            Json::Array(inputs.iter().map(|m| m.to_untagged_json(&self.signature)).collect())
        };
        let mut m = Map::new();
        m.insert("id".into(), Json::String(self.id.clone()));
        m.insert("description".into(), Json::String(self.description.clone()));
        m.insert("signature".into(), self.signature.to_json());
        m.insert("precond_ref".into(), Json::String(self.precond_ref.clone()));
        m.insert("postcond_ref".into(), Json::String(self.postcond_ref.clone()));
        m.insert("impl_ref".into(), Json::String(self.impl_ref.clone()));
        m.insert("base_expected_inputs".into(), untagged(&self.base_expected_inputs));
        m.insert("base_unexpected_inputs".into(), untagged(&self.base_unexpected_inputs));
        Json::Object(m)
    }

    /// Base expected then base unexpected inputs, without duplicates.
    pub fn base_inputs(&self) -> Vec<InputMap> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for m in self.base_expected_inputs.iter().chain(&self.base_unexpected_inputs) {
            if seen.insert(m.canonical_key()) {
                out.push(m.clone());
            }
        }
        out
    }
}

/// An input paired with an output value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IoPair {
    pub input: InputMap,
    pub output: Value,
}

impl IoPair {
    pub fn new(input: InputMap, output: Value) -> Self {
        Self { input, output }
    }

    fn to_json(&self) -> Json {
        let mut m = Map::new();
        m.insert("input".into(), self.input.to_json());
        m.insert("output".into(), self.output.to_tagged_json());
        Json::Object(m)
    }

    fn from_json(json: &Json, pointer: &str) -> Result<Self, FormatError> {
        let obj = json
            .as_object()
            .ok_or_else(|| schema(pointer, "expected an object with `input` and `output`"))?;
        for key in obj.keys() {
            if key != "input" && key != "output" {
                return Err(schema(&child(pointer, key), "unknown key"));
            }
        }
        let input = obj
            .get("input")
            .ok_or_else(|| schema(&child(pointer, "input"), "missing"))?;
        let output = obj
            .get("output")
            .ok_or_else(|| schema(&child(pointer, "output"), "missing"))?;
        Ok(Self {
            input: InputMap::from_json(input, None, &child(pointer, "input"))?,
            output: decode_value(output, None, &child(pointer, "output"))?,
        })
    }
}

/// The three case categories for one task.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TestSuite {
    pub expected_pairs: Vec<IoPair>,
    pub unexpected_inputs: Vec<InputMap>,
    pub unexpected_outputs: Vec<IoPair>,
}

/// Per-category case counts of a suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SuiteCounts {
    pub expected_pairs: usize,
    pub unexpected_outputs: usize,
    pub unexpected_inputs: usize,
}

impl TestSuite {
    pub fn counts(&self) -> SuiteCounts {
        SuiteCounts {
            expected_pairs: self.expected_pairs.len(),
            unexpected_outputs: self.unexpected_outputs.len(),
            unexpected_inputs: self.unexpected_inputs.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.expected_pairs.is_empty() && self.unexpected_inputs.is_empty() && self.unexpected_outputs.is_empty()
    }

    pub fn to_json(&self) -> Json {
        let mut m = Map::new();
        m.insert(
            "expected_pairs".into(),
            Json::Array(self.expected_pairs.iter().map(IoPair::to_json).collect()),
        );
        m.insert(
            "unexpected_inputs".into(),
            Json::Array(self.unexpected_inputs.iter().map(InputMap::to_json).collect()),
        );
        m.insert(
            "unexpected_outputs".into(),
            Json::Array(self.unexpected_outputs.iter().map(IoPair::to_json).collect()),
        );
        Json::Object(m)
    }

    /// Pretty-printed document with a trailing newline. Byte-stable for equal
    /// suites.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("JSON values always serialise");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> Result<Self, FormatError> {
        let json: Json = serde_json::from_str(text).map_err(|e| FormatError::Json(e.to_string()))?;
        Self::from_json(&json)
    }

    pub fn from_json(json: &Json) -> Result<Self, FormatError> {
        const KEYS: [&str; 3] = ["expected_pairs", "unexpected_inputs", "unexpected_outputs"];
        let obj = json.as_object().ok_or_else(|| schema("", "suite must be an object"))?;
        for key in obj.keys() {
            if !KEYS.contains(&key.as_str()) {
                return Err(schema(&child("", key), "unknown key"));
            }
        }
        let array = |key: &str| -> Result<&[Json], FormatError> {
            match obj.get(key) {
                Some(j) => j
                    .as_array()
                    .map(Vec::as_slice)
                    .ok_or_else(|| schema(&child("", key), "expected an array")),
                None => Err(schema(&child("", key), "missing category")),
            }
        };
        let mut suite = TestSuite::default();
        let mut seen = BTreeSet::new();
        for (i, j) in array("expected_pairs")?.iter().enumerate() {
            let ptr = format!("/expected_pairs/{i}");
            let pair = IoPair::from_json(j, &ptr)?;
            if !seen.insert(pair.clone()) {
                return Err(schema(&ptr, "duplicate expected pair"));
            }
            suite.expected_pairs.push(pair);
        }
        let mut seen = BTreeSet::new();
        for (i, j) in array("unexpected_inputs")?.iter().enumerate() {
            let ptr = format!("/unexpected_inputs/{i}");
            let input = InputMap::from_json(j, None, &ptr)?;
            if !seen.insert(input.clone()) {
                return Err(schema(&ptr, "duplicate unexpected input"));
            }
            suite.unexpected_inputs.push(input);
        }
        let mut seen = BTreeSet::new();
        for (i, j) in array("unexpected_outputs")?.iter().enumerate() {
            let ptr = format!("/unexpected_outputs/{i}");
            let pair = IoPair::from_json(j, &ptr)?;
            if !seen.insert(pair.clone()) {
                return Err(schema(&ptr, "duplicate unexpected output"));
            }
            suite.unexpected_outputs.push(pair);
        }
        Ok(suite)
    }
}

/// Reads a JSON array of tagged input maps (the candidate-list format).
pub fn inputs_from_json_str(text: &str) -> Result<Vec<InputMap>, FormatError> {
    let json: Json = serde_json::from_str(text).map_err(|e| FormatError::Json(e.to_string()))?;
    let arr = json.as_array().ok_or_else(|| schema("", "expected an array of inputs"))?;
    arr.iter()
        .enumerate()
        .map(|(i, j)| InputMap::from_json(j, None, &format!("/{i}")))
        .collect()
}

pub fn inputs_to_json_string(inputs: &[InputMap]) -> String {
    let json = Json::Array(inputs.iter().map(InputMap::to_json).collect());
    let mut s = serde_json::to_string_pretty(&json).expect("JSON values always serialise");
    s.push('\n');
    s
}

/// One-line rendering of an input for logs and reports.
pub fn describe_input(input: &InputMap) -> String {
    let mut m = Map::new();
    for (k, v) in input.iter() {
        m.insert(k.clone(), v.to_json_payload());
    }
    canonical_json(&Json::Object(m))
}
