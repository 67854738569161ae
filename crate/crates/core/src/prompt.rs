//! Prompt templates and slot filling.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::lang::parse_defs;

pub const SEED_TEMPLATE: &str = include_str!("prompts/seed.txt");
pub const DECOMPOSITION_TEMPLATE: &str = include_str!("prompts/decomposition.txt");
pub const SPECIFICATION_TEMPLATE: &str = include_str!("prompts/specification.txt");
pub const ADVERSARIAL_TEMPLATE: &str = include_str!("prompts/adversarial.txt");

/// A rendered prompt. Templates without a system part leave it empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("prompt slot `{0}` is empty")]
    MissingSlot(&'static str),
    #[error("no source text for precondition `{0}`")]
    MissingPrecondText(String),
}

/// Replaces each `{name}` in `template` with its slot value. Only the named
/// slots are touched; other braces are left as written. Empty slot values
/// are an error.
pub fn fill(template: &str, slots: &[(&'static str, &str)]) -> Result<String, PromptError> {
    let mut out = String::from(template);
    for (name, value) in slots {
        if value.trim().is_empty() {
            return Err(PromptError::MissingSlot(name));
        }
        out = out.replace(&format!("{{{name}}}"), value);
    }
    Ok(out)
}

/// Format-string filling: `{{` and `}}` become literal braces and every
/// `{name}` must be a known slot.
pub fn format_template(template: &str, slots: &[(&'static str, &str)]) -> Result<String, PromptError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(i) = rest.find(['{', '}']) {
        out.push_str(&rest[..i]);
        let tail = &rest[i..];
        if tail.starts_with("{{") || tail.starts_with("}}") {
            out.push_str(&tail[..1]);
            rest = &tail[2..];
        } else if let Some(stripped) = tail.strip_prefix('{') {
            let end = stripped.find('}').unwrap_or(stripped.len());
            let name = &stripped[..end];
            let (slot, value) = slots
                .iter()
                .find(|(n, _)| *n == name)
                .ok_or(PromptError::MissingSlot("<unknown>"))?;
            if value.trim().is_empty() {
                return Err(PromptError::MissingSlot(slot));
            }
            out.push_str(value);
            rest = stripped.get(end + 1..).unwrap_or("");
        } else {
            out.push('}');
            rest = &tail[1..];
        }
    }
    out.push_str(rest);
    Ok(out)
}

/// The source text of definition `name` in `src`.
pub fn definition_source<'a>(src: &'a str, name: &str) -> Option<&'a str> {
    let defs = parse_defs(src).ok()?;
    let d = defs.into_iter().find(|d| d.name == name)?;
    Some(src[d.span.start..d.span.end].trim_end())
}

/// `def name (a : T) ... : R` for definition `name` in `src`.
pub fn definition_header(src: &str, name: &str) -> Option<String> {
    let defs = parse_defs(src).ok()?;
    let d = defs.into_iter().find(|d| d.name == name)?;
    let params: Vec<String> = d.params.iter().map(|(n, t)| format!("({n} : {t})")).collect();
    let mut s = format!("def {}", d.name);
    for p in params {
        s.push(' ');
        s.push_str(&p);
    }
    s.push_str(&format!(" : {}", d.ret));
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_leaves_foreign_braces() {
        let s = fill("a {x} {contents} {x}", &[("x", "1")]).unwrap();
        assert_eq!(s, "a 1 {contents} 1");
        assert_eq!(fill("{x}", &[("x", " ")]), Err(PromptError::MissingSlot("x")));
    }

    #[test]
    fn format_handles_escapes() {
        let s = format_template("[{{\"k\": {v}}}]", &[("v", "3")]).unwrap();
        assert_eq!(s, "[{\"k\": 3}]");
        assert!(format_template("{nope}", &[]).is_err());
    }

    #[test]
    fn definition_text_and_header() {
        let src = "def f (xs : List Int) (n : Nat) : Nat :=\n  n + xs.length\n\ndef g (n : Nat) : Prop := n > 0\n";
        assert_eq!(definition_source(src, "g"), Some("def g (n : Nat) : Prop := n > 0"));
        assert_eq!(
            definition_header(src, "f").as_deref(),
            Some("def f (xs : List Int) (n : Nat) : Nat")
        );
        assert_eq!(definition_source(src, "h"), None);
    }
}
