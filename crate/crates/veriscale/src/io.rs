//! Task bundles, suite directories and atomic file output.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use veriscale_core::adversarial::{AdversarialImpl, Origin};
use veriscale_core::suite::{Task, TestSuite};

use crate::error::{Error, Result};
use crate::mock::MockScript;

/// A task document with its companion files: `<id>.lean` holds the
/// ground-truth definitions and `<id>.mock.json` the scripted model
/// responses.
#[derive(Debug, Clone)]
pub struct TaskBundle {
    pub task: Task,
    pub mock: Option<MockScript>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Loads `<dir>/<stem>.task.json` and whatever companions exist.
pub fn load_task(path: &Path) -> Result<TaskBundle> {
    let mut task = Task::from_json_str(&read(path)?).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let stem = name.strip_suffix(".task.json").unwrap_or(name);
    let lean = path.with_file_name(format!("{stem}.lean"));
    if lean.exists() {
        task.defs = Some(read(&lean)?);
    }
    let mock_path = path.with_file_name(format!("{stem}.mock.json"));
    let mock = if mock_path.exists() {
        Some(
            serde_json::from_str(&read(&mock_path)?)
                .map_err(|e| Error::Config(format!("{}: {e}", mock_path.display())))?,
        )
    } else {
        None
    };
    Ok(TaskBundle { task, mock })
}

/// Every `*.task.json` in `dir`, sorted by task id. A single task file is
/// also accepted.
pub fn load_tasks(dir: &Path) -> Result<Vec<TaskBundle>> {
    if dir.is_file() {
        return Ok(vec![load_task(dir)?]);
    }
    let mut out = Vec::new();
    for path in files_with_suffix(dir, ".task.json")? {
        out.push(load_task(&path)?);
    }
    out.sort_by(|a, b| a.task.id.cmp(&b.task.id));
    for w in out.windows(2) {
        if w[0].task.id == w[1].task.id {
            return Err(Error::Config(format!("duplicate task id `{}` in {}", w[0].task.id, dir.display())));
        }
    }
    if out.is_empty() {
        return Err(Error::Config(format!("no *.task.json files in {}", dir.display())));
    }
    Ok(out)
}

fn files_with_suffix(dir: &Path, suffix: &str) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::Config(e.to_string()))?.path();
        if path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(suffix)) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: &dyn std::fmt::Display| Error::Config(format!("cannot write {}: {e}", path.display()));
    fs::create_dir_all(dir).map_err(|e| fail(&e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| fail(&e))?;
    tmp.write_all(contents).map_err(|e| fail(&e))?;
    tmp.as_file().sync_all().map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}

pub fn write_json(path: &Path, json: &serde_json::Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(json).expect("JSON values always serialise");
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn suite_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.suite.json"))
}

pub fn provenance_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.provenance.jsonl"))
}

pub fn save_suite(dir: &Path, id: &str, suite: &TestSuite) -> Result<()> {
    write_atomic(&suite_path(dir, id), suite.to_json_string().as_bytes())
}

pub fn load_suite(path: &Path) -> Result<TestSuite> {
    TestSuite::from_json_str(&read(path)?).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Every `<id>.suite.json` in `dir`, keyed by id.
pub fn load_suites(dir: &Path) -> Result<BTreeMap<String, TestSuite>> {
    let mut out = BTreeMap::new();
    for path in files_with_suffix(dir, ".suite.json")? {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let id = name.trim_end_matches(".suite.json").to_owned();
        out.insert(id, load_suite(&path)?);
    }
    if out.is_empty() {
        return Err(Error::Config(format!("no *.suite.json files in {}", dir.display())));
    }
    Ok(out)
}

pub fn save_provenance(dir: &Path, id: &str, impls: &[AdversarialImpl]) -> Result<()> {
    let mut s = String::new();
    for imp in impls {
        s.push_str(&veriscale_core::adversarial::provenance_json(imp));
        s.push('\n');
    }
    write_atomic(&provenance_path(dir, id), s.as_bytes())
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct ProvenanceLine {
    id: String,
    origin: String,
    source_spec: String,
    source_text: String,
}

/// Reads a provenance file. `impl_ref` is left empty; it is recovered when
/// the sources are loaded into a backend.
pub fn load_provenance(path: &Path) -> Result<Vec<AdversarialImpl>> {
    let text = read(path)?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = |m: String| Error::Config(format!("{}:{}: {m}", path.display(), n + 1));
        let p: ProvenanceLine = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        let origin = match p.origin.as_str() {
            "RedTeam" => Origin::RedTeam,
            "FallbackDrop" => Origin::FallbackDrop,
            o => return Err(bad(format!("unknown origin `{o}`"))),
        };
        out.push(AdversarialImpl {
            id: p.id,
            origin,
            source_spec: p.source_spec,
            impl_ref: String::new(),
            source_text: p.source_text,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/a.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path().join("sub")).unwrap().count(), 1);
    }

    #[test]
    fn provenance_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let imp = AdversarialImpl {
            id: "spec1_adv1".into(),
            origin: Origin::FallbackDrop,
            source_spec: "drop1".into(),
            impl_ref: "spec1_adv1.f1".into(),
            source_text: "def f1 (x : Nat) : Nat :=\n  0".into(),
        };
        save_provenance(dir.path(), "t", std::slice::from_ref(&imp)).unwrap();
        let back = load_provenance(&provenance_path(dir.path(), "t")).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].source_text, imp.source_text);
        assert_eq!(back[0].origin, Origin::FallbackDrop);
        assert!(back[0].impl_ref.is_empty());
    }
}
