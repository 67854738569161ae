//! Per-task orchestration of expansion and reduction.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::adversarial::{
    harvest_unexpected_outputs, synthesize, AdversarialConfig, AdversarialError, AdversarialImpl, Clients,
    HarvestRecord, Synthesis,
};
use crate::backend::{BackendError, DefineError, Executor, VerifierBackend, Workspace, DEFAULT_PROBE_TIMEOUT_MS};
use crate::classify::{classify_all, complete_expected_pairs, BatchError};
use crate::mutation::{dedup_inputs, expand_candidates, MutationConfig, MutationError};
use crate::reduction::{
    build_kill_matrix, co_filter, reduce_expected_pairs, reduce_unexpected_inputs, KillMatrix, ReductionConfig,
    ReductionReport,
};
use crate::seed_gen::{generate_seeds, LlmClient, SeedGenConfig, SeedGenError};
use crate::suite::{InputMap, IoPair, Task, TestSuite};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: SeedGenConfig,
    pub mutation: MutationConfig,
    pub adversarial: AdversarialConfig,
    pub reduction: ReductionConfig,
    pub probe_timeout_ms: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: SeedGenConfig::default(),
            mutation: MutationConfig::default(),
            adversarial: AdversarialConfig::default(),
            reduction: ReductionConfig::default(),
            probe_timeout_ms: DEFAULT_PROBE_TIMEOUT_MS,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.seed.validate()?;
        self.mutation.validate().map_err(|e| alloc::format!("{e}"))?;
        self.reduction.validate().map_err(String::from)?;
        if self.adversarial.max_adver_impl == 0 {
            return Err("max_adver_impl must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PipelineError {
    #[error("seed generation: {0}")]
    Seeds(#[from] SeedGenError),
    #[error("mutation: {0}")]
    Mutation(#[from] MutationError),
    #[error("classification: {0}")]
    Classify(#[from] BatchError),
    #[error("adversarial synthesis: {0}")]
    Adversarial(#[from] AdversarialError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("cannot reload implementation {id}: {message}")]
    Reload { id: String, message: String },
}

impl PipelineError {
    /// Whether the failure lies with the verifier, executor or a client
    /// rather than with the inputs.
    pub fn is_backend(&self) -> bool {
        matches!(
            self,
            PipelineError::Backend(_)
                | PipelineError::Classify(_)
                | PipelineError::Seeds(SeedGenError::Client { .. })
                | PipelineError::Adversarial(
                    AdversarialError::Backend(_) | AdversarialError::Client { .. } | AdversarialError::Probe { .. },
                )
        )
    }
}

/// Seeds from the client plus their mutants, deduplicated.
pub fn expand<C: LlmClient + ?Sized>(
    task: &Task,
    client: &mut C,
    cfg: &PipelineConfig,
) -> Result<Vec<InputMap>, PipelineError> {
    let seeds = generate_seeds(task, client, &cfg.seed)?;
    let mutants = expand_candidates(&seeds, &cfg.mutation, &task.id)?;
    Ok(dedup_inputs(seeds.into_iter().chain(mutants)))
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Classified {
    /// Expected pairs and unexpected inputs; no unexpected outputs yet.
    pub suite: TestSuite,
    /// Candidates with an unknown verdict.
    pub dropped: usize,
    /// Expected inputs whose reference run failed.
    pub failed_runs: usize,
}

pub fn classify_candidates<B: VerifierBackend + Executor + ?Sized>(
    task: &Task,
    candidates: &[InputMap],
    backend: &B,
    cfg: &PipelineConfig,
) -> Result<Classified, PipelineError> {
    let part = classify_all(candidates, task, backend, cfg.probe_timeout_ms)?;
    let pairs = complete_expected_pairs(&part.expected, task, backend)?;
    Ok(Classified {
        failed_runs: part.expected.len() - pairs.len(),
        suite: TestSuite {
            expected_pairs: pairs,
            unexpected_inputs: part.unexpected,
            unexpected_outputs: Vec::new(),
        },
        dropped: part.dropped,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Harvested {
    pub synthesis: Synthesis,
    pub records: Vec<HarvestRecord>,
}

/// Synthesises adversarial implementations and fills in the suite's
/// unexpected outputs.
pub fn harvest<B: VerifierBackend + Executor + Workspace + ?Sized>(
    task: &Task,
    suite: &mut TestSuite,
    clients: &mut Clients<'_>,
    backend: &mut B,
    cfg: &PipelineConfig,
) -> Result<Harvested, PipelineError> {
    let synthesis = synthesize(task, clients, backend, &cfg.adversarial)?;
    let records = harvest_unexpected_outputs(
        task,
        &synthesis.impls,
        &synthesis.specs,
        &suite.expected_pairs,
        backend,
        cfg.probe_timeout_ms,
    )?;
    suite.unexpected_outputs = records
        .iter()
        .map(|r| IoPair::new(r.input.clone(), r.adversarial_output.clone()))
        .collect();
    Ok(Harvested { synthesis, records })
}

/// Loads previously synthesised implementations into a fresh backend.
pub fn reload_impls<W: Workspace + ?Sized>(ws: &mut W, impls: &[AdversarialImpl]) -> Result<(), PipelineError> {
    for imp in impls {
        match ws.define(&imp.id, &imp.source_text) {
            Ok(_) => {}
            Err(DefineError::Backend(e)) => return Err(e.into()),
            Err(DefineError::Compile(message)) => {
                return Err(PipelineError::Reload {
                    id: imp.id.clone(),
                    message,
                })
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduced {
    pub suite: TestSuite,
    pub report: ReductionReport,
    pub matrix: KillMatrix,
}

pub fn reduce<E: Executor + ?Sized>(
    task: &Task,
    suite: &TestSuite,
    impls: &[AdversarialImpl],
    exec: &E,
    cfg: &PipelineConfig,
) -> Result<Reduced, PipelineError> {
    let mut report = ReductionReport::default();
    let matrix = build_kill_matrix(&suite.expected_pairs, impls, &task.signature, exec)?;
    let pairs = reduce_expected_pairs(&suite.expected_pairs, &matrix, impls, &cfg.reduction, &mut report);
    let unexpected = reduce_unexpected_inputs(&suite.unexpected_inputs, &task.signature, &cfg.reduction, &mut report);
    let outputs = co_filter(&suite.unexpected_outputs, &pairs);
    Ok(Reduced {
        suite: TestSuite {
            expected_pairs: pairs,
            unexpected_inputs: unexpected,
            unexpected_outputs: outputs,
        },
        report,
        matrix,
    })
}

/// Everything one task's pipeline run produces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskRun {
    pub candidates: usize,
    pub dropped: usize,
    pub failed_runs: usize,
    pub full: TestSuite,
    pub lite: TestSuite,
    pub report: ReductionReport,
    pub harvested: Harvested,
}

/// All stages for one task.
pub fn run_task<B: VerifierBackend + Executor + Workspace + ?Sized>(
    task: &Task,
    seed_client: &mut dyn LlmClient,
    clients: &mut Clients<'_>,
    backend: &mut B,
    cfg: &PipelineConfig,
) -> Result<TaskRun, PipelineError> {
    let candidates = expand(task, seed_client, cfg)?;
    let classified = classify_candidates(task, &candidates, backend, cfg)?;
    let mut full = classified.suite;
    let harvested = harvest(task, &mut full, clients, backend, cfg)?;
    let reduced = reduce(task, &full, &harvested.synthesis.impls, backend, cfg)?;
    log::info!(
        "{}: {} candidates, {} dropped; full {:?}; lite {:?}",
        task.id,
        candidates.len(),
        classified.dropped,
        full.counts(),
        reduced.suite.counts()
    );
    Ok(TaskRun {
        candidates: candidates.len(),
        dropped: classified.dropped,
        failed_runs: classified.failed_runs,
        full,
        lite: reduced.suite,
        report: reduced.report,
        harvested,
    })
}
