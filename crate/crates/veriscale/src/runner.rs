//! Running pipeline stages over task sets.

use std::path::Path;
use std::time::Duration;

use rayon::prelude::*;
use serde_json::{json, Value as Json};
use veriscale_core::adversarial::AdversarialImpl;
use veriscale_core::backend::{
    BackendError, DefineError, Executor, Probe, ProbeResult, RunError, VerifierBackend, Workspace,
};
use veriscale_core::builtin::BuiltinEvaluator;
use veriscale_core::classify::complete_expected_pairs;
use veriscale_core::mutation::dedup_inputs;
use veriscale_core::pipeline::{run_task, TaskRun};
use veriscale_core::seed_gen::LlmClient;
use veriscale_core::stats::{compute_stats, render_table, SuiteStats};
use veriscale_core::suite::{SuiteCounts, Task, TestSuite};
use veriscale_core::value::Value;

use crate::config::{LlmSettings, LlmTransport, Settings};
use crate::error::{Error, Result};
use crate::io::{save_provenance, save_suite, write_atomic, write_json, TaskBundle};
use crate::llm::{ClientSet, CommandLlm, HttpLlm};
use crate::remote::SubprocessBackend;

/// Stack size for threads that run the interpreter. Deeply recursive
/// definitions recurse on the native stack.
pub const WORKER_STACK: usize = 256 << 20;

/// Runs `f` on a thread with [`WORKER_STACK`] bytes of stack.
pub fn with_big_stack<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(WORKER_STACK)
            .spawn_scoped(s, f)
            .expect("spawn worker thread")
            .join()
            .unwrap_or_else(|e| std::panic::resume_unwind(e))
    })
}

/// Applies `f` to every bundle on a pool of `workers` threads. Results keep
/// bundle order; the first error in that order wins.
pub fn par_tasks<T: Send>(
    bundles: &[TaskBundle],
    workers: usize,
    f: impl Fn(&TaskBundle) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .stack_size(WORKER_STACK)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| bundles.par_iter().map(&f).collect::<Vec<_>>())
        .into_iter()
        .collect()
}

/// The builtin evaluator or an external verifier process.
pub enum AnyBackend {
    Builtin(BuiltinEvaluator),
    Remote(SubprocessBackend),
}

fn define_error(task: &Task, e: DefineError) -> Error {
    match e {
        DefineError::Compile(m) => Error::Config(format!("{}: ground-truth definitions: {m}", task.id)),
        DefineError::Backend(e) => e.into(),
    }
}

impl AnyBackend {
    pub fn for_task(task: &Task, settings: &Settings) -> Result<Self> {
        match &settings.backend_command {
            None => BuiltinEvaluator::for_task(task, settings.limits)
                .map(AnyBackend::Builtin)
                .map_err(|e| define_error(task, e)),
            Some(argv) => SubprocessBackend::for_task(argv, task)
                .map(AnyBackend::Remote)
                .map_err(|e| define_error(task, e)),
        }
    }

    /// Loads extra definitions at top level.
    pub fn define_global(&mut self, source: &str) -> std::result::Result<Vec<String>, DefineError> {
        match self {
            AnyBackend::Builtin(b) => b
                .program_mut()
                .define(None, source)
                .map_err(|e| DefineError::Compile(e.to_string())),
            AnyBackend::Remote(r) => r.define_in(None, source),
        }
    }
}

impl VerifierBackend for AnyBackend {
    fn probe(&self, p: &Probe) -> std::result::Result<ProbeResult, BackendError> {
        match self {
            AnyBackend::Builtin(b) => b.probe(p),
            AnyBackend::Remote(r) => r.probe(p),
        }
    }
}

impl Executor for AnyBackend {
    fn run(&self, impl_ref: &str, args: &[Value]) -> std::result::Result<Value, RunError> {
        match self {
            AnyBackend::Builtin(b) => b.run(impl_ref, args),
            AnyBackend::Remote(r) => r.run(impl_ref, args),
        }
    }
}

impl Workspace for AnyBackend {
    fn define(&mut self, module: &str, source: &str) -> std::result::Result<Vec<String>, DefineError> {
        match self {
            AnyBackend::Builtin(b) => b.define(module, source),
            AnyBackend::Remote(r) => r.define(module, source),
        }
    }
}

/// Where model responses come from.
#[derive(Debug, Clone)]
pub enum ClientSource {
    /// Each task's `<id>.mock.json`.
    Mock,
    Live(LlmSettings),
}

impl ClientSource {
    pub fn from_settings(mock: bool, settings: &Settings) -> Result<Self> {
        match (mock, &settings.llm) {
            (true, _) => Ok(ClientSource::Mock),
            (false, Some(llm)) => Ok(ClientSource::Live(llm.clone())),
            (false, None) => Err(Error::Config(
                "no language model configured: pass --mock or set llm_endpoint or llm_command".into(),
            )),
        }
    }

    pub fn clients(&self, bundle: &TaskBundle) -> Result<ClientSet> {
        match self {
            ClientSource::Mock => bundle
                .mock
                .as_ref()
                .map(|m| m.clients())
                .ok_or_else(|| Error::Config(format!("{}: no mock script", bundle.task.id))),
            ClientSource::Live(s) => {
                let client = |model: &str| -> Result<Box<dyn LlmClient>> {
                    Ok(match &s.transport {
                        LlmTransport::Http { endpoint, api_key_env } => Box::new(
                            HttpLlm::new(endpoint, model, api_key_env.as_deref(), Duration::from_secs(s.timeout_s))
                                .map_err(Error::config)?,
                        ),
                        LlmTransport::Command(argv) => {
                            Box::new(CommandLlm::new(argv.clone(), model).map_err(Error::config)?)
                        }
                    })
                };
                Ok(ClientSet {
                    seed: client(&s.model)?,
                    decomposer: client(&s.model)?,
                    spec_models: s
                        .spec_models
                        .iter()
                        .map(|m| Ok((m.clone(), client(m)?)))
                        .collect::<Result<_>>()?,
                    red_team: client(&s.model)?,
                })
            }
        }
    }
}

/// The task's own inputs: base expected inputs with reference outputs and
/// base unexpected inputs.
pub fn base_suite<E: Executor + ?Sized>(task: &Task, exec: &E) -> Result<TestSuite> {
    let expected = dedup_inputs(task.base_expected_inputs.iter().cloned());
    Ok(TestSuite {
        expected_pairs: complete_expected_pairs(&expected, task, exec)?,
        unexpected_inputs: dedup_inputs(task.base_unexpected_inputs.iter().cloned()),
        unexpected_outputs: Vec::new(),
    })
}

/// Loads implementations from provenance and fills in their entry points.
pub fn reload_impls<W: Workspace + ?Sized>(
    ws: &mut W,
    task: &Task,
    impls: &mut [AdversarialImpl],
) -> Result<()> {
    for imp in impls {
        let names = ws.define(&imp.id, &imp.source_text).map_err(|e| match e {
            DefineError::Compile(m) => Error::Config(format!("{}: cannot reload {}: {m}", task.id, imp.id)),
            DefineError::Backend(e) => e.into(),
        })?;
        let prefix = format!("{}.{}", imp.id, task.impl_ref);
        imp.impl_ref = names
            .iter()
            .find(|n| n.starts_with(&prefix))
            .or(names.last())
            .cloned()
            .ok_or_else(|| Error::Config(format!("{}: {} defines nothing", task.id, imp.id)))?;
    }
    Ok(())
}

pub struct TaskOutput {
    pub id: String,
    pub base: TestSuite,
    pub run: TaskRun,
}

pub fn run_one(bundle: &TaskBundle, settings: &Settings, source: &ClientSource) -> Result<TaskOutput> {
    let task = &bundle.task;
    let mut backend = AnyBackend::for_task(task, settings)?;
    let base = base_suite(task, &backend)?;
    let mut clients = source.clients(bundle)?;
    let (seed, mut roles) = clients.split();
    let run = run_task(task, seed, &mut roles, &mut backend, &settings.pipeline)?;
    Ok(TaskOutput {
        id: task.id.clone(),
        base,
        run,
    })
}

pub fn run_all(bundles: &[TaskBundle], settings: &Settings, source: &ClientSource) -> Result<Vec<TaskOutput>> {
    par_tasks(bundles, settings.workers, |b| run_one(b, settings, source))
}

fn counts_json(c: SuiteCounts) -> Json {
    json!({
        "expected_pairs": c.expected_pairs,
        "unexpected_outputs": c.unexpected_outputs,
        "unexpected_inputs": c.unexpected_inputs,
    })
}

/// Per-task report: stage volumes, specifications, implementations and the
/// reduction audit.
pub fn task_report(o: &TaskOutput) -> Json {
    let s = &o.run.harvested.synthesis;
    json!({
        "id": o.id,
        "candidates": o.run.candidates,
        "dropped_unknown": o.run.dropped,
        "failed_reference_runs": o.run.failed_runs,
        "counts": {
            "base": counts_json(o.base.counts()),
            "full": counts_json(o.run.full.counts()),
            "lite": counts_json(o.run.lite.counts()),
        },
        "specs": s.specs.iter().map(|c| json!({
            "id": c.id,
            "source_model": c.source_model,
            "origin": c.origin,
            "postcond_ref": c.postcond_ref,
        })).collect::<Vec<_>>(),
        "impls": s.impls.iter().map(|i| i.impl_ref.clone()).collect::<Vec<_>>(),
        "reduction": o.run.report.to_json(),
    })
}

/// `(baseline, full, lite)` statistics, with multipliers against the
/// baseline.
pub fn run_stats(outputs: &[TaskOutput]) -> Result<[SuiteStats; 3]> {
    let base: Vec<_> = outputs.iter().map(|o| o.base.counts()).collect();
    let full: Vec<_> = outputs.iter().map(|o| o.run.full.counts()).collect();
    let lite: Vec<_> = outputs.iter().map(|o| o.run.lite.counts()).collect();
    let e = |e: veriscale_core::stats::EmptySuiteSet| Error::Config(e.to_string());
    Ok([
        compute_stats(&base, None).map_err(e)?,
        compute_stats(&full, Some(&base)).map_err(e)?,
        compute_stats(&lite, Some(&base)).map_err(e)?,
    ])
}

pub fn stats_json(rows: &[(&str, &SuiteStats)]) -> Json {
    Json::Object(rows.iter().map(|(l, s)| (l.to_string(), s.to_json())).collect())
}

/// Writes `base/`, `full/`, `lite/`, `provenance/` and `reports/` under
/// `out`, plus `stats.json` and `stats.txt`.
pub fn write_run(out: &Path, outputs: &[TaskOutput]) -> Result<()> {
    for o in outputs {
        save_suite(&out.join("base"), &o.id, &o.base)?;
        save_suite(&out.join("full"), &o.id, &o.run.full)?;
        save_suite(&out.join("lite"), &o.id, &o.run.lite)?;
        save_provenance(&out.join("provenance"), &o.id, &o.run.harvested.synthesis.impls)?;
        write_json(&out.join("reports").join(format!("{}.report.json", o.id)), &task_report(o))?;
    }
    let [base, full, lite] = run_stats(outputs)?;
    let rows = [("Baseline", &base), ("Plus", &full), ("Lite", &lite)];
    write_json(&out.join("stats.json"), &stats_json(&rows))?;
    write_atomic(&out.join("stats.txt"), render_table(&rows).as_bytes())
}
