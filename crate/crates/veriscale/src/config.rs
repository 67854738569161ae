//! The flat `key = value` configuration file (TOML syntax) and the matching
//! command-line overrides.
//!
//! ```toml
//! rounds = 1
//! candidates_per_round = 40
//! example_limit = 5
//! max_mutations_per_input = 15
//! mutation_multi_step_size = 5
//! mutation_ingredient_prob = 0.3
//! max_adver_impl = 5
//! MAX_REJECT_INPUTS_PER_TASK = 50
//! KEEP_PER_CRITICAL_BUCKET = 1
//! MAX_ACCEPT_TEST_CASES_PER_TASK = 50
//! rng_seed = 0
//! probe_timeout_ms = 10000
//! fuel = 2000000
//! max_depth = 100
//! workers = 4
//! backend_command = ["veriscale", "serve"]
//! llm_endpoint = "https://api.example.com/v1/chat/completions"
//! llm_command = ["my-llm-wrapper"]
//! llm_model = "some-model"
//! spec_models = ["model-a", "model-b"]
//! llm_api_key_env = "LLM_API_KEY"
//! llm_timeout_s = 300
//! ```

use std::path::Path;

use clap::Args;
use serde::Deserialize;
use veriscale_core::lang::Limits;
use veriscale_core::pipeline::PipelineConfig;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub rounds: Option<usize>,
    pub candidates_per_round: Option<usize>,
    pub example_limit: Option<usize>,
    pub max_mutations_per_input: Option<usize>,
    pub mutation_multi_step_size: Option<usize>,
    pub mutation_ingredient_prob: Option<f64>,
    pub max_adver_impl: Option<usize>,
    #[serde(rename = "MAX_REJECT_INPUTS_PER_TASK")]
    pub max_reject_inputs_per_task: Option<usize>,
    #[serde(rename = "KEEP_PER_CRITICAL_BUCKET")]
    pub keep_per_critical_bucket: Option<usize>,
    #[serde(rename = "MAX_ACCEPT_TEST_CASES_PER_TASK")]
    pub max_accept_test_cases_per_task: Option<usize>,
    pub rng_seed: Option<u64>,
    pub probe_timeout_ms: Option<u64>,
    pub fuel: Option<u64>,
    pub max_depth: Option<u32>,
    pub workers: Option<usize>,
    pub backend_command: Option<Vec<String>>,
    pub llm_endpoint: Option<String>,
    pub llm_command: Option<Vec<String>>,
    pub llm_model: Option<String>,
    pub spec_models: Option<Vec<String>>,
    pub llm_api_key_env: Option<String>,
    pub llm_timeout_s: Option<u64>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Table 3 overrides, named after the configuration keys.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long)]
    pub candidates_per_round: Option<usize>,
    #[arg(long)]
    pub example_limit: Option<usize>,
    #[arg(long)]
    pub max_mutations_per_input: Option<usize>,
    #[arg(long)]
    pub mutation_multi_step_size: Option<usize>,
    #[arg(long)]
    pub mutation_ingredient_prob: Option<f64>,
    #[arg(long)]
    pub max_adver_impl: Option<usize>,
    #[arg(long = "MAX_REJECT_INPUTS_PER_TASK")]
    pub max_reject_inputs_per_task: Option<usize>,
    #[arg(long = "KEEP_PER_CRITICAL_BUCKET")]
    pub keep_per_critical_bucket: Option<usize>,
    #[arg(long = "MAX_ACCEPT_TEST_CASES_PER_TASK")]
    pub max_accept_test_cases_per_task: Option<usize>,
    #[arg(long)]
    pub probe_timeout_ms: Option<u64>,
}

impl Overrides {
    fn into_file(self) -> FileConfig {
        FileConfig {
            rounds: self.rounds,
            candidates_per_round: self.candidates_per_round,
            example_limit: self.example_limit,
            max_mutations_per_input: self.max_mutations_per_input,
            mutation_multi_step_size: self.mutation_multi_step_size,
            mutation_ingredient_prob: self.mutation_ingredient_prob,
            max_adver_impl: self.max_adver_impl,
            max_reject_inputs_per_task: self.max_reject_inputs_per_task,
            keep_per_critical_bucket: self.keep_per_critical_bucket,
            max_accept_test_cases_per_task: self.max_accept_test_cases_per_task,
            probe_timeout_ms: self.probe_timeout_ms,
            ..FileConfig::default()
        }
    }
}

/// Where language-model requests go when not mocked.
#[derive(Debug, Clone, PartialEq)]
pub enum LlmTransport {
    Http { endpoint: String, api_key_env: Option<String> },
    Command(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmSettings {
    pub transport: LlmTransport,
    pub model: String,
    /// Models asked for candidate specifications; defaults to `model`.
    pub spec_models: Vec<String>,
    pub timeout_s: u64,
}

/// Everything a run needs, after merging defaults, file and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub pipeline: PipelineConfig,
    pub limits: Limits,
    pub workers: usize,
    pub backend_command: Option<Vec<String>>,
    pub llm: Option<LlmSettings>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            limits: Limits::default(),
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            backend_command: None,
            llm: None,
        }
    }
}

impl Settings {
    /// Applies `file` and then `flags` over the defaults.
    pub fn resolve(file: Option<FileConfig>, flags: Overrides) -> Result<Self> {
        let mut s = Settings::default();
        if let Some(f) = file {
            s.apply(f)?;
        }
        s.apply(flags.into_file())?;
        s.pipeline.validate().map_err(Error::Config)?;
        if s.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(s)
    }

    fn apply(&mut self, f: FileConfig) -> Result<()> {
        let p = &mut self.pipeline;
        macro_rules! set {
            ($src:expr => $dst:expr) => {
                if let Some(v) = $src {
                    $dst = v;
                }
            };
        }
        set!(f.rounds => p.seed.rounds);
        set!(f.candidates_per_round => p.seed.candidates_per_round);
        set!(f.example_limit => p.seed.example_limit);
        set!(f.max_mutations_per_input => p.mutation.max_mutations_per_input);
        set!(f.mutation_multi_step_size => p.mutation.multi_step_size);
        set!(f.mutation_ingredient_prob => p.mutation.ingredient_prob);
        set!(f.rng_seed => p.mutation.rng_seed);
        set!(f.max_adver_impl => p.adversarial.max_adver_impl);
        set!(f.max_reject_inputs_per_task => p.reduction.max_unexpected_inputs);
        set!(f.keep_per_critical_bucket => p.reduction.keep_per_critical_bucket);
        set!(f.max_accept_test_cases_per_task => p.reduction.max_expected_pairs);
        if let Some(t) = f.probe_timeout_ms {
            p.probe_timeout_ms = t;
            p.adversarial.probe_timeout_ms = t;
        }
        set!(f.fuel => self.limits.fuel);
        set!(f.max_depth => self.limits.max_depth);
        set!(f.workers => self.workers);
        if f.backend_command.is_some() {
            self.backend_command = f.backend_command;
        }
        let transport = match (f.llm_endpoint, f.llm_command) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("set llm_endpoint or llm_command, not both".into()));
            }
            (Some(endpoint), None) => Some(LlmTransport::Http {
                endpoint,
                api_key_env: f.llm_api_key_env,
            }),
            (None, Some(cmd)) => Some(LlmTransport::Command(cmd)),
            (None, None) => None,
        };
        if let Some(transport) = transport {
            let model = f.llm_model.unwrap_or_default();
            self.llm = Some(LlmSettings {
                spec_models: f.spec_models.unwrap_or_else(|| vec![model.clone()]),
                transport,
                model,
                timeout_s: f.llm_timeout_s.unwrap_or(300),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_table() {
        let s = Settings::resolve(None, Overrides::default()).unwrap();
        let p = &s.pipeline;
        assert_eq!((p.seed.rounds, p.seed.candidates_per_round, p.seed.example_limit), (1, 40, 5));
        assert_eq!(
            (p.mutation.max_mutations_per_input, p.mutation.multi_step_size, p.mutation.ingredient_prob),
            (15, 5, 0.3)
        );
        assert_eq!(p.adversarial.max_adver_impl, 5);
        assert_eq!(
            (p.reduction.max_unexpected_inputs, p.reduction.keep_per_critical_bucket, p.reduction.max_expected_pairs),
            (50, 1, 50)
        );
    }

    #[test]
    fn file_then_flags() {
        let f = FileConfig::parse("rounds = 3\nMAX_REJECT_INPUTS_PER_TASK = 10\nmutation_ingredient_prob = 0.5\n").unwrap();
        let flags = Overrides {
            rounds: Some(2),
            ..Overrides::default()
        };
        let s = Settings::resolve(Some(f), flags).unwrap();
        assert_eq!(s.pipeline.seed.rounds, 2);
        assert_eq!(s.pipeline.reduction.max_unexpected_inputs, 10);
        assert_eq!(s.pipeline.mutation.ingredient_prob, 0.5);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(FileConfig::parse("max_reject_inputs_per_task = 3").is_err());
        assert!(FileConfig::parse("[section]\nrounds = 1").is_err());
        let f = FileConfig::parse("mutation_ingredient_prob = 1.5").unwrap();
        assert!(matches!(Settings::resolve(Some(f), Overrides::default()), Err(Error::Config(_))));
    }

    #[test]
    fn llm_transport() {
        let f = FileConfig::parse("llm_endpoint = \"http://x\"\nllm_model = \"m\"\nllm_api_key_env = \"K\"").unwrap();
        let s = Settings::resolve(Some(f), Overrides::default()).unwrap();
        let llm = s.llm.unwrap();
        assert_eq!(llm.spec_models, vec!["m".to_string()]);
        assert!(matches!(llm.transport, LlmTransport::Http { api_key_env: Some(_), .. }));
        let f = FileConfig::parse("llm_endpoint = \"a\"\nllm_command = [\"b\"]").unwrap();
        assert!(Settings::resolve(Some(f), Overrides::default()).is_err());
    }
}
