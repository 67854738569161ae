//! Newline-delimited JSON verifier protocol.
//!
//! Probe requests are `{"probe": "check"|"decide"|"plausible", "expr",
//! "goal", "negated", "timeout_ms"}` and answers are `{"result", "detail"}`.
//! Two extensions let the same process compile and run code:
//!
//! - `{"probe": "define", "module": name | null, "source"}` answers `pass`
//!   with `"names"`, or `error` with the compiler message.
//! - `{"probe": "run", "impl_ref", "args": [tagged values]}` answers `pass`
//!   with a tagged `"value"`, `timeout`, or `error`.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use serde_json::{json, Value as Json};
use veriscale_core::backend::{
    BackendError, DefineError, Executor, Probe, ProbeResult, ProbeStatus, RunError, VerifierBackend, Workspace,
};
use veriscale_core::builtin::BuiltinEvaluator;
use veriscale_core::suite::{decode_value, Task};
use veriscale_core::value::Value;

struct Pipe {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

/// A verifier and executor living in a persistent child process.
pub struct SubprocessBackend {
    pipe: Mutex<Pipe>,
}

impl SubprocessBackend {
    pub fn spawn(argv: &[String]) -> Result<Self, BackendError> {
        let (cmd, args) = argv
            .split_first()
            .ok_or_else(|| BackendError("empty backend command".into()))?;
        let mut child = Command::new(cmd)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| BackendError(format!("cannot start {cmd}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self {
            pipe: Mutex::new(Pipe { child, stdin, stdout }),
        })
    }

    /// Spawns the command and loads the task's ground-truth definitions.
    pub fn for_task(argv: &[String], task: &Task) -> Result<Self, DefineError> {
        let b = Self::spawn(argv)?;
        let src = task
            .defs
            .as_deref()
            .ok_or_else(|| DefineError::Compile(format!("task `{}` has no definitions", task.id)))?;
        b.define_in(None, src)?;
        Ok(b)
    }

    fn request(&self, req: &Json) -> Result<Json, BackendError> {
        let mut p = self.pipe.lock().map_err(|_| BackendError("backend lock poisoned".into()))?;
        let lost = |e: std::io::Error| BackendError(format!("backend connection lost: {e}"));
        writeln!(p.stdin, "{req}").map_err(lost)?;
        p.stdin.flush().map_err(lost)?;
        let mut line = String::new();
        if p.stdout.read_line(&mut line).map_err(lost)? == 0 {
            return Err(BackendError("backend closed its output".into()));
        }
        serde_json::from_str(&line).map_err(|e| BackendError(format!("malformed backend reply `{}`: {e}", line.trim())))
    }

    pub fn define_in(&self, module: Option<&str>, source: &str) -> Result<Vec<String>, DefineError> {
        let r = self.request(&json!({"probe": "define", "module": module, "source": source}))?;
        match r["result"].as_str() {
            Some("pass") => Ok(r["names"]
                .as_array()
                .map(|a| a.iter().filter_map(|n| n.as_str().map(str::to_owned)).collect())
                .unwrap_or_default()),
            Some("error") | Some("fail") => Err(DefineError::Compile(detail(&r))),
            _ => Err(BackendError(format!("unexpected define reply {r}")).into()),
        }
    }
}

impl Drop for SubprocessBackend {
    fn drop(&mut self) {
        if let Ok(p) = self.pipe.get_mut() {
            let _ = p.child.kill();
            let _ = p.child.wait();
        }
    }
}

fn detail(r: &Json) -> String {
    r["detail"].as_str().unwrap_or_default().to_owned()
}

impl VerifierBackend for SubprocessBackend {
    fn probe(&self, p: &Probe) -> Result<ProbeResult, BackendError> {
        let req = serde_json::to_value(p).expect("probes serialise");
        let r = self.request(&req)?;
        serde_json::from_value(r.clone()).map_err(|e| BackendError(format!("unexpected probe reply {r}: {e}")))
    }
}

impl Executor for SubprocessBackend {
    fn run(&self, impl_ref: &str, args: &[Value]) -> Result<Value, RunError> {
        let args: Vec<Json> = args.iter().map(Value::to_tagged_json).collect();
        let r = self.request(&json!({"probe": "run", "impl_ref": impl_ref, "args": args}))?;
        match r["result"].as_str() {
            Some("pass") => decode_value(&r["value"], None, "/value")
                .map_err(|e| RunError::Unavailable(BackendError(format!("bad value in run reply: {e}")))),
            Some("timeout") => Err(RunError::Timeout),
            Some("error") | Some("fail") => Err(RunError::Runtime(detail(&r))),
            _ => Err(RunError::Unavailable(BackendError(format!("unexpected run reply {r}")))),
        }
    }
}

impl Workspace for SubprocessBackend {
    fn define(&mut self, module: &str, source: &str) -> Result<Vec<String>, DefineError> {
        self.define_in(Some(module), source)
    }
}

/// Answers one request line with the builtin evaluator.
pub fn answer(ev: &mut BuiltinEvaluator, line: &str) -> Json {
    let reply = |status: ProbeStatus, detail: String| json!({"result": status, "detail": detail});
    let req: Json = match serde_json::from_str(line) {
        Ok(j) => j,
        Err(e) => return reply(ProbeStatus::Error, format!("malformed request: {e}")),
    };
    match req["probe"].as_str() {
        Some("define") => {
            let (Some(source), module) = (req["source"].as_str(), req["module"].as_str()) else {
                return reply(ProbeStatus::Error, "define needs a source".into());
            };
            match ev.program_mut().define(module, source) {
                Ok(names) => json!({"result": ProbeStatus::Pass, "detail": "", "names": names}),
                Err(e) => reply(ProbeStatus::Error, e.to_string()),
            }
        }
        Some("run") => {
            let Some(name) = req["impl_ref"].as_str() else {
                return reply(ProbeStatus::Error, "run needs an impl_ref".into());
            };
            let args: Result<Vec<Value>, _> = req["args"]
                .as_array()
                .map(Vec::as_slice)
                .unwrap_or_default()
                .iter()
                .enumerate()
                .map(|(i, a)| decode_value(a, None, &format!("/args/{i}")))
                .collect();
            match args.map(|a| ev.run(name, &a)) {
                Err(e) => reply(ProbeStatus::Error, e.to_string()),
                Ok(Ok(v)) => json!({"result": ProbeStatus::Pass, "detail": "", "value": v.to_tagged_json()}),
                Ok(Err(RunError::Timeout)) => reply(ProbeStatus::Timeout, String::new()),
                Ok(Err(e)) => reply(ProbeStatus::Error, e.to_string()),
            }
        }
        _ => match serde_json::from_value::<Probe>(req) {
            Ok(p) => match ev.probe(&p) {
                Ok(r) => serde_json::to_value(r).expect("results serialise"),
                Err(e) => reply(ProbeStatus::Error, e.to_string()),
            },
            Err(e) => reply(ProbeStatus::Error, format!("malformed probe: {e}")),
        },
    }
}

/// Serves requests line by line until `input` ends.
pub fn serve(ev: &mut BuiltinEvaluator, input: impl BufRead, mut output: impl Write) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        writeln!(output, "{}", answer(ev, &line))?;
        output.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use veriscale_core::lang::Limits;

    #[test]
    fn answers_probe_define_and_run() {
        let mut ev = BuiltinEvaluator::new(Limits::default());
        let r = answer(&mut ev, r#"{"probe":"define","module":null,"source":"def f (n : Nat) : Nat := n + 1"}"#);
        assert_eq!(r["result"], "pass");
        assert_eq!(r["names"][0], "f");
        let r = answer(&mut ev, r#"{"probe":"decide","expr":"f 1 = 2","goal":"","negated":false,"timeout_ms":10}"#);
        assert_eq!(r["result"], "pass");
        let r = answer(&mut ev, r#"{"probe":"run","impl_ref":"f","args":[{"type":"Nat","value":4}]}"#);
        assert_eq!(r["value"], json!({"type": "Nat", "value": 5}));
        let r = answer(&mut ev, r#"{"probe":"define","module":"m","source":"def g : Nat := ("}"#);
        assert_eq!(r["result"], "error");
        assert_eq!(answer(&mut ev, "nonsense")["result"], "error");
    }
}
