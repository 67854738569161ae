//! Language-model clients: HTTP chat endpoints and external commands.

use std::io::Write;
use std::process::{Command, Stdio};
use std::time::Duration;

use serde_json::{json, Value as Json};
use veriscale_core::adversarial::{boxed_clients, Clients};
use veriscale_core::seed_gen::{LlmClient, LlmError};

/// Every client one task run needs.
pub struct ClientSet {
    pub seed: Box<dyn LlmClient>,
    pub decomposer: Box<dyn LlmClient>,
    pub spec_models: Vec<(String, Box<dyn LlmClient>)>,
    pub red_team: Box<dyn LlmClient>,
}

impl ClientSet {
    /// The seed client and the synthesis roles, borrowed separately.
    pub fn split(&mut self) -> (&mut dyn LlmClient, Clients<'_>) {
        (
            self.seed.as_mut(),
            boxed_clients(&mut self.decomposer, &mut self.spec_models, &mut self.red_team),
        )
    }
}

/// OpenAI-style chat completion endpoint.
pub struct HttpLlm {
    agent: ureq::Agent,
    endpoint: String,
    model: String,
    api_key: Option<String>,
}

impl HttpLlm {
    /// `api_key_env` names the environment variable holding the bearer
    /// token, if any.
    pub fn new(endpoint: &str, model: &str, api_key_env: Option<&str>, timeout: Duration) -> Result<Self, LlmError> {
        let api_key = match api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| LlmError(format!("environment variable {var} is not set")))?),
            None => None,
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Ok(Self {
            agent,
            endpoint: endpoint.into(),
            model: model.into(),
            api_key,
        })
    }

    fn body(&self, system: &str, user: &str) -> Json {
        let mut messages = Vec::new();
        if !system.is_empty() {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({"role": "user", "content": user}));
        json!({"model": self.model, "messages": messages})
    }
}

fn completion_text(reply: &Json) -> Option<String> {
    reply
        .pointer("/choices/0/message/content")
        .and_then(Json::as_str)
        .map(str::to_owned)
}

impl LlmClient for HttpLlm {
    fn complete(&mut self, system: &str, user: &str) -> Result<String, LlmError> {
        let mut req = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(self.body(system, user))
            .map_err(|e| LlmError(format!("{}: {e}", self.endpoint)))?;
        let reply: Json = resp
            .body_mut()
            .read_json()
            .map_err(|e| LlmError(format!("{}: {e}", self.endpoint)))?;
        completion_text(&reply).ok_or_else(|| LlmError(format!("{}: reply has no message content", self.endpoint)))
    }
}

/// Runs a command per request, writing `{"model","system","user"}` to its
/// stdin and taking its stdout as the completion.
pub struct CommandLlm {
    argv: Vec<String>,
    model: String,
}

impl CommandLlm {
    pub fn new(argv: Vec<String>, model: &str) -> Result<Self, LlmError> {
        if argv.is_empty() {
            return Err(LlmError("empty client command".into()));
        }
        Ok(Self {
            argv,
            model: model.into(),
        })
    }
}

impl LlmClient for CommandLlm {
    fn complete(&mut self, system: &str, user: &str) -> Result<String, LlmError> {
        let mut child = Command::new(&self.argv[0])
            .args(&self.argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| LlmError(format!("{}: {e}", self.argv[0])))?;
        let request = json!({"model": self.model, "system": system, "user": user});
        let mut stdin = child.stdin.take().expect("piped stdin");
        stdin
            .write_all(request.to_string().as_bytes())
            .map_err(|e| LlmError(e.to_string()))?;
        drop(stdin);
        let out = child.wait_with_output().map_err(|e| LlmError(e.to_string()))?;
        if !out.status.success() {
            return Err(LlmError(format!("{} exited with {}", self.argv[0], out.status)));
        }
        String::from_utf8(out.stdout).map_err(|_| LlmError("client output is not UTF-8".into()))
    }
}
