//! Scripted model responses for offline runs.

use serde::Deserialize;
use veriscale_core::seed_gen::{MockLlm, PromptKind};

use crate::llm::ClientSet;

/// Contents of `<id>.mock.json`. Each list is replayed in order and its
/// last entry repeats once the list runs out.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockScript {
    pub seed: Vec<String>,
    pub decomposition: String,
    /// One entry per simulated specification model.
    pub specs: Vec<MockSpec>,
    /// Red-team answers, in the order the specifications are attacked.
    pub adversarial: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockSpec {
    pub label: String,
    pub response: String,
}

fn scripted(kind: PromptKind, responses: &[String]) -> MockLlm {
    responses.iter().fold(MockLlm::new(), |m, r| m.respond(kind, r.clone()))
}

impl MockScript {
    pub fn clients(&self) -> ClientSet {
        ClientSet {
            seed: Box::new(scripted(PromptKind::Seed, &self.seed)),
            decomposer: Box::new(scripted(PromptKind::Decomposition, std::slice::from_ref(&self.decomposition))),
            spec_models: self
                .specs
                .iter()
                .map(|s| {
                    let c = scripted(PromptKind::Specification, std::slice::from_ref(&s.response));
                    (s.label.clone(), Box::new(c) as Box<_>)
                })
                .collect(),
            red_team: Box::new(scripted(PromptKind::Adversarial, &self.adversarial)),
        }
    }
}
