//! Command-line interface.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value as Json};
use veriscale_core::builtin::BuiltinEvaluator;
use veriscale_core::pipeline::{classify_candidates, expand, harvest, reduce};
use veriscale_core::scoring::{aggregate, evaluate_code, evaluate_spec};
use veriscale_core::stats::{compute_stats, render_table};
use veriscale_core::suite::{inputs_from_json_str, inputs_to_json_string, SuiteCounts};

use crate::config::{FileConfig, Overrides, Settings};
use crate::error::{Error, Result};
use crate::io::{
    load_provenance, load_suite, load_suites, load_tasks, provenance_path, save_provenance, save_suite, suite_path,
    write_atomic, write_json, TaskBundle,
};
use crate::runner::{par_tasks, reload_impls, run_all, stats_json, with_big_stack, write_run, AnyBackend, ClientSource};

#[derive(Debug, Parser)]
#[command(name = "veriscale", version, about = "Expand and reduce test suites for verifiable code generation tasks")]
pub struct Cli {
    /// Print results as JSON and errors as JSON on stderr.
    #[arg(long, global = true)]
    pub json: bool,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Configuration file (flat TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Random seed for mutation.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Maximum number of tasks processed at once.
    #[arg(long)]
    pub workers: Option<usize>,
    /// External verifier command speaking the probe protocol, split on
    /// whitespace.
    #[arg(long)]
    pub backend_cmd: Option<String>,
    #[command(flatten)]
    pub overrides: Overrides,
}

impl Common {
    fn settings(&self) -> Result<Settings> {
        let file = self.config.as_deref().map(FileConfig::load).transpose()?;
        let mut s = Settings::resolve(file, self.overrides.clone())?;
        if let Some(seed) = self.seed {
            s.pipeline.mutation.rng_seed = seed;
        }
        if let Some(w) = self.workers {
            if w == 0 {
                return Err(Error::Config("--workers must be at least 1".into()));
            }
            s.workers = w;
        }
        if let Some(cmd) = &self.backend_cmd {
            s.backend_command = Some(cmd.split_whitespace().map(str::to_owned).collect());
        }
        Ok(s)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate seeds and mutants: writes <out>/<id>.inputs.json.
    Expand {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Use each task's scripted responses instead of a live model.
        #[arg(long)]
        mock: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Split candidates into expected pairs and unexpected inputs:
    /// writes <out>/<id>.suite.json.
    Classify {
        #[arg(long)]
        tasks: PathBuf,
        /// Directory of <id>.inputs.json files.
        #[arg(long)]
        inputs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Synthesise adversarial implementations and add unexpected outputs:
    /// writes <out>/<id>.suite.json and <out>/<id>.provenance.jsonl.
    Harvest {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        suites: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        mock: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Reduce harvested suites: writes <out>/<id>.suite.json and
    /// <out>/<id>.reduction.json.
    Reduce {
        #[arg(long)]
        tasks: PathBuf,
        /// Directory of suites with their provenance files.
        #[arg(long)]
        suites: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Table of suite volumes.
    Stats {
        #[arg(long)]
        suites: PathBuf,
        #[arg(long)]
        baseline: Option<PathBuf>,
    },
    /// Score an implementation and a specification against suites.
    Eval {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        suites: PathBuf,
        /// Directory of <id>.lean files with candidate definitions, loaded
        /// under module `candidate`.
        #[arg(long)]
        defs: Option<PathBuf>,
        /// Implementation to score; defaults to the task's reference.
        #[arg(long = "impl")]
        impl_ref: Option<String>,
        #[arg(long)]
        precond: Option<String>,
        #[arg(long)]
        postcond: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// All stages: writes base/, full/, lite/, provenance/, reports/ and
    /// stats under <out>.
    Pipeline {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        mock: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Answer probe-protocol requests on stdin with the builtin evaluator.
    Serve,
}

fn emit(json_mode: bool, value: &Json, text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = if json_mode {
        writeln!(out, "{}", serde_json::to_string_pretty(value).expect("JSON values always serialise"))
    } else {
        write!(out, "{text}")
    };
}

fn counts_line(id: &str, c: SuiteCounts) -> String {
    format!(
        "{id}: {} expected pairs, {} unexpected outputs, {} unexpected inputs\n",
        c.expected_pairs, c.unexpected_outputs, c.unexpected_inputs
    )
}

fn missing(path: &Path) -> Error {
    Error::Config(format!("missing {}", path.display()))
}

pub fn run(cli: Cli) -> Result<()> {
    let json_mode = cli.json;
    match cli.command {
        Command::Expand {
            tasks,
            out,
            mock,
            common,
        } => {
            let settings = common.settings()?;
            let source = ClientSource::from_settings(mock, &settings)?;
            let bundles = load_tasks(&tasks)?;
            let lens = par_tasks(&bundles, settings.workers, |b| {
                let mut clients = source.clients(b)?;
                let inputs = expand(&b.task, clients.seed.as_mut(), &settings.pipeline)?;
                write_atomic(
                    &out.join(format!("{}.inputs.json", b.task.id)),
                    inputs_to_json_string(&inputs).as_bytes(),
                )?;
                Ok(inputs.len())
            })?;
            let text: String = bundles
                .iter()
                .zip(&lens)
                .map(|(b, n)| format!("{}: {n} candidates\n", b.task.id))
                .collect();
            let j: Json = bundles.iter().zip(&lens).map(|(b, n)| (b.task.id.clone(), json!(n))).collect();
            emit(json_mode, &j, &text);
        }
        Command::Classify {
            tasks,
            inputs,
            out,
            common,
        } => {
            let settings = common.settings()?;
            let bundles = load_tasks(&tasks)?;
            let res = par_tasks(&bundles, settings.workers, |b| {
                let path = inputs.join(format!("{}.inputs.json", b.task.id));
                let text = std::fs::read_to_string(&path).map_err(|_| missing(&path))?;
                let cands = inputs_from_json_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                let backend = AnyBackend::for_task(&b.task, &settings)?;
                let c = classify_candidates(&b.task, &cands, &backend, &settings.pipeline)?;
                save_suite(&out, &b.task.id, &c.suite)?;
                Ok((c.suite.counts(), c.dropped))
            })?;
            let text: String = bundles.iter().zip(&res).map(|(b, (c, _))| counts_line(&b.task.id, *c)).collect();
            let j: Json = bundles
                .iter()
                .zip(&res)
                .map(|(b, (c, d))| {
                    (
                        b.task.id.clone(),
                        json!({"expected_pairs": c.expected_pairs, "unexpected_inputs": c.unexpected_inputs, "dropped_unknown": d}),
                    )
                })
                .collect();
            emit(json_mode, &j, &text);
        }
        Command::Harvest {
            tasks,
            suites,
            out,
            mock,
            common,
        } => {
            let settings = common.settings()?;
            let source = ClientSource::from_settings(mock, &settings)?;
            let bundles = load_tasks(&tasks)?;
            let res = par_tasks(&bundles, settings.workers, |b| {
                let path = suite_path(&suites, &b.task.id);
                let mut suite = load_suite(&path)?;
                let mut backend = AnyBackend::for_task(&b.task, &settings)?;
                let mut clients = source.clients(b)?;
                let (_, mut roles) = clients.split();
                let h = harvest(&b.task, &mut suite, &mut roles, &mut backend, &settings.pipeline)?;
                save_suite(&out, &b.task.id, &suite)?;
                save_provenance(&out, &b.task.id, &h.synthesis.impls)?;
                Ok((suite.counts(), h.synthesis.impls.len()))
            })?;
            let text: String = bundles.iter().zip(&res).map(|(b, (c, _))| counts_line(&b.task.id, *c)).collect();
            let j: Json = bundles
                .iter()
                .zip(&res)
                .map(|(b, (c, n))| (b.task.id.clone(), json!({"unexpected_outputs": c.unexpected_outputs, "impls": n})))
                .collect();
            emit(json_mode, &j, &text);
        }
        Command::Reduce {
            tasks,
            suites,
            out,
            common,
        } => {
            let settings = common.settings()?;
            let bundles = load_tasks(&tasks)?;
            let res = par_tasks(&bundles, settings.workers, |b| {
                let suite = load_suite(&suite_path(&suites, &b.task.id))?;
                let prov = provenance_path(&suites, &b.task.id);
                let mut impls = if prov.exists() { load_provenance(&prov)? } else { Vec::new() };
                let mut backend = AnyBackend::for_task(&b.task, &settings)?;
                reload_impls(&mut backend, &b.task, &mut impls)?;
                let r = reduce(&b.task, &suite, &impls, &backend, &settings.pipeline)?;
                save_suite(&out, &b.task.id, &r.suite)?;
                write_json(&out.join(format!("{}.reduction.json", b.task.id)), &r.report.to_json())?;
                Ok(r.suite.counts())
            })?;
            let text: String = bundles.iter().zip(&res).map(|(b, c)| counts_line(&b.task.id, *c)).collect();
            let j: Json = bundles
                .iter()
                .zip(&res)
                .map(|(b, c)| {
                    (
                        b.task.id.clone(),
                        json!({"expected_pairs": c.expected_pairs, "unexpected_outputs": c.unexpected_outputs, "unexpected_inputs": c.unexpected_inputs}),
                    )
                })
                .collect();
            emit(json_mode, &j, &text);
        }
        Command::Stats { suites, baseline } => {
            let counts = |dir: &Path| -> Result<Vec<SuiteCounts>> {
                Ok(load_suites(dir)?.values().map(|s| s.counts()).collect())
            };
            let plus = counts(&suites)?;
            let base = baseline.as_deref().map(counts).transpose()?;
            let e = |e: veriscale_core::stats::EmptySuiteSet| Error::Config(e.to_string());
            let plus_stats = compute_stats(&plus, base.as_deref()).map_err(e)?;
            let base_stats = base.as_deref().map(|b| compute_stats(b, None)).transpose().map_err(e)?;
            let mut rows = Vec::new();
            if let Some(b) = &base_stats {
                rows.push(("Baseline", b));
            }
            rows.push(("Suites", &plus_stats));
            emit(json_mode, &stats_json(&rows), &render_table(&rows));
        }
        Command::Eval {
            tasks,
            suites,
            defs,
            impl_ref,
            precond,
            postcond,
            common,
        } => {
            let settings = common.settings()?;
            let bundles = load_tasks(&tasks)?;
            let res = par_tasks(&bundles, settings.workers, |b| {
                eval_task(b, &suites, defs.as_deref(), [&impl_ref, &precond, &postcond], &settings)
            })?;
            let code: Vec<_> = res.iter().map(|r| r.1).collect();
            let spec: Vec<_> = res.iter().map(|r| r.2.clone()).collect();
            let agg = aggregate(&code, &spec);
            let mut text = String::new();
            for (id, c, s) in &res {
                text.push_str(&format!(
                    "{id}: code {}/{}  spec lower {}  upper {}\n",
                    c.passed,
                    c.total,
                    if s.lower_pass() { "pass" } else { "fail" },
                    if s.upper_pass() { "pass" } else { "fail" },
                ));
            }
            text.push_str(&format!(
                "tasks {}: code mean {:.4}, code pass {:.4}, spec lower {:.4}, spec upper {:.4}\n",
                agg.tasks, agg.code_mean, agg.code_pass, agg.spec_lower, agg.spec_upper
            ));
            let j = json!({
                "tasks": res.iter().map(|(id, c, s)| json!({
                    "id": id,
                    "code": {"passed": c.passed, "total": c.total, "score": c.fraction()},
                    "spec": s.to_json(),
                })).collect::<Vec<_>>(),
                "aggregate": {
                    "tasks": agg.tasks,
                    "code_mean": agg.code_mean,
                    "code_pass": agg.code_pass,
                    "spec_lower": agg.spec_lower,
                    "spec_upper": agg.spec_upper,
                },
            });
            emit(json_mode, &j, &text);
        }
        Command::Pipeline {
            tasks,
            out,
            mock,
            common,
        } => {
            let settings = common.settings()?;
            let source = ClientSource::from_settings(mock, &settings)?;
            let bundles = load_tasks(&tasks)?;
            let outputs = run_all(&bundles, &settings, &source)?;
            write_run(&out, &outputs)?;
            let [base, full, lite] = crate::runner::run_stats(&outputs)?;
            let rows = [("Baseline", &base), ("Plus", &full), ("Lite", &lite)];
            emit(json_mode, &stats_json(&rows), &render_table(&rows));
        }
        Command::Serve => {
            let mut ev = BuiltinEvaluator::default();
            crate::remote::serve(&mut ev, std::io::stdin().lock(), std::io::stdout().lock())
                .map_err(|e| Error::Backend(e.to_string()))?;
        }
    }
    Ok(())
}

type EvalRow = (String, veriscale_core::scoring::CodeScore, veriscale_core::scoring::SpecScore);

fn eval_task(
    b: &TaskBundle,
    suites: &Path,
    defs: Option<&Path>,
    [impl_ref, precond, postcond]: [&Option<String>; 3],
    settings: &Settings,
) -> Result<EvalRow> {
    let task = &b.task;
    let suite = load_suite(&suite_path(suites, &task.id))?;
    let mut backend = AnyBackend::for_task(task, settings)?;
    let module = match defs {
        Some(dir) => {
            let path = dir.join(format!("{}.lean", task.id));
            let src = std::fs::read_to_string(&path).map_err(|_| missing(&path))?;
            use veriscale_core::backend::Workspace;
            backend.define("candidate", &src).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            Some("candidate")
        }
        None => None,
    };
    let name = |given: &Option<String>, default: &str| {
        let n = given.as_deref().unwrap_or(default);
        match module {
            Some(m) => format!("{m}.{n}"),
            None => n.to_owned(),
        }
    };
    let code = evaluate_code(task, &name(impl_ref, &task.impl_ref), &suite, &backend)?;
    let spec = evaluate_spec(
        task,
        &name(precond, &task.precond_ref),
        &name(postcond, &task.postcond_ref),
        &suite,
        &backend,
        settings.pipeline.probe_timeout_ms,
    )?;
    Ok((task.id.clone(), code, spec))
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn main_with_args<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let args: Vec<OsString> = args.into_iter().collect();
    let json_mode = args.iter().any(|a| a == "--json");
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let err = Error::Usage(e.to_string());
            report(json_mode, &err);
            return err.exit_code();
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match with_big_stack(|| run(cli)) {
        Ok(()) => 0,
        Err(e) => {
            report(json_mode, &e);
            e.exit_code()
        }
    }
}

fn report(json_mode: bool, e: &Error) {
    let mut err = std::io::stderr().lock();
    let _ = if json_mode {
        writeln!(err, "{}", e.to_json())
    } else {
        match e {
            Error::Usage(m) => write!(err, "{m}"),
            _ => writeln!(err, "error: {e}"),
        }
    };
}
