use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Component, Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::html::ParsedStatement;
use super::DatasetError;
use crate::judge::{CheckMode, ExecError, Origin, Program, RunLimits, TestCase};
use crate::standings::Participant;

pub const FORMAT_VERSION: u32 = 1;

/// A program stored inside the bundle, optionally run through an interpreter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramRef {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub interpreter: Vec<String>,
    /// Relative to the bundle root.
    pub path: String,
}

impl ProgramRef {
    pub fn new(interpreter: &[&str], path: impl Into<String>) -> Self {
        Self {
            interpreter: interpreter.iter().map(|s| s.to_string()).collect(),
            path: path.into(),
        }
    }

    pub fn resolve(&self, root: &Path) -> Result<Program, ExecError> {
        let target = root.join(&self.path);
        let target = target.canonicalize().unwrap_or(target);
        let mut argv = self.interpreter.clone();
        argv.push(target.to_string_lossy().into_owned());
        Program::new(argv)
    }

    fn is_contained(&self) -> bool {
        let p = Path::new(&self.path);
        !self.path.is_empty() && p.components().all(|c| matches!(c, Component::Normal(_)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestEntry {
    pub name: String,
    pub origin: Origin,
}

/// Per-problem manifest entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemMeta {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_limit_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory_limit_mb: Option<u64>,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub multi_solution: bool,
    pub official_solution: ProgramRef,
    #[serde(default)]
    pub accepted_solutions: Vec<ProgramRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verifier: Option<ProgramRef>,
    /// Why the problem was dropped from scoring, if it was.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excluded: Option<String>,
    #[serde(default)]
    pub tests: Vec<TestEntry>,
}

impl ProblemMeta {
    /// Whether the problem may contribute to a rating. Multi-answer problems
    /// need a verifier; problems that failed verifier validation are out.
    pub fn scorable(&self) -> bool {
        self.excluded.is_none() && (!self.multi_solution || self.verifier.is_some())
    }

    pub fn limits(&self, default_time_limit_ms: u64) -> RunLimits {
        let base = RunLimits::default();
        RunLimits {
            time_limit_ms: self.time_limit_ms.unwrap_or(default_time_limit_ms),
            memory_limit_mb: self.memory_limit_mb.unwrap_or(base.memory_limit_mb),
            ..base
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub contest_id: String,
    #[serde(default)]
    pub name: String,
    pub division: u8,
    pub problems: Vec<ProblemMeta>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Standings {
    pub participants: Vec<Participant>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub location: String,
    pub message: String,
}

impl std::fmt::Display for Issue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// Every problem found while checking a bundle, not just the first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

impl ValidationReport {
    fn error(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Issue {
            location: location.into(),
            message: message.into(),
        });
    }

    fn warn(&mut self, location: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Issue {
            location: location.into(),
            message: message.into(),
        });
    }

    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for e in &self.errors {
            writeln!(f, "  error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "  warning: {w}")?;
        }
        Ok(())
    }
}

/// A loaded contest: manifest, statements, tests and human standings.
#[derive(Clone, Debug, PartialEq)]
pub struct ContestBundle {
    /// Directory that program paths resolve against.
    pub root: PathBuf,
    pub manifest: Manifest,
    pub statements: BTreeMap<String, ParsedStatement>,
    pub statement_html: BTreeMap<String, String>,
    pub tests: BTreeMap<String, Vec<TestCase>>,
    pub standings: Standings,
    pub warnings: Vec<Issue>,
}

impl ContestBundle {
    pub fn contest_id(&self) -> &str {
        &self.manifest.contest_id
    }

    pub fn division(&self) -> u8 {
        self.manifest.division
    }

    pub fn problem(&self, id: &str) -> Option<&ProblemMeta> {
        self.manifest.problems.iter().find(|p| p.id == id)
    }

    pub fn problem_mut(&mut self, id: &str) -> Option<&mut ProblemMeta> {
        self.manifest.problems.iter_mut().find(|p| p.id == id)
    }

    pub fn problem_ids(&self) -> Vec<String> {
        self.manifest.problems.iter().map(|p| p.id.clone()).collect()
    }

    pub fn scorable_problems(&self) -> Vec<String> {
        self.manifest
            .problems
            .iter()
            .filter(|p| p.scorable() && self.tests.get(&p.id).is_some_and(|t| !t.is_empty()))
            .map(|p| p.id.clone())
            .collect()
    }

    pub fn tests_for(&self, id: &str) -> &[TestCase] {
        self.tests.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn program(&self, r: &ProgramRef) -> Result<Program, ExecError> {
        r.resolve(&self.root)
    }

    /// Output checking for a problem: its verifier when it has one.
    pub fn check_mode(&self, id: &str, verifier_limits: RunLimits) -> Result<CheckMode, ExecError> {
        match self.problem(id).and_then(|p| p.verifier.as_ref()) {
            Some(v) => Ok(CheckMode::Verifier {
                program: self.program(v)?,
                limits: verifier_limits,
            }),
            None => Ok(CheckMode::Compare),
        }
    }

    /// Checks every documented invariant that can be checked in memory.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let m = &self.manifest;
        if m.format_version != FORMAT_VERSION {
            report.error(
                "manifest.json",
                format!("unsupported format_version {}", m.format_version),
            );
        }
        if m.contest_id.trim().is_empty() {
            report.error("manifest.json", "contest_id is empty");
        }
        if !(1..=4).contains(&m.division) {
            report.error("manifest.json", format!("division {} is not in 1..=4", m.division));
        }

        let mut seen = BTreeSet::new();
        for p in &m.problems {
            let at = format!("problem {}", p.id);
            if !is_safe_id(&p.id) {
                report.error(&at, "id must be non-empty and use only [A-Za-z0-9_-]");
            }
            if !seen.insert(p.id.as_str()) {
                report.error(&at, "duplicate problem id");
            }
            if p.time_limit_ms == Some(0) {
                report.error(&at, "time_limit_ms must be positive");
            }
            if p.memory_limit_mb == Some(0) {
                report.error(&at, "memory_limit_mb must be positive");
            }
            let programs = std::iter::once(("official_solution", &p.official_solution))
                .chain(p.accepted_solutions.iter().map(|r| ("accepted_solutions", r)))
                .chain(p.verifier.iter().map(|r| ("verifier", r)));
            for (field, r) in programs {
                if !r.is_contained() {
                    report.error(
                        &at,
                        format!("{field} path `{}` must be relative and stay inside the bundle", r.path),
                    );
                } else if !self.root.join(&r.path).is_file() {
                    report.error(&at, format!("{field} `{}` does not exist", r.path));
                }
            }
            match self.statements.get(&p.id) {
                None => report.error(&at, "missing statement.parsed.json"),
                Some(s) => {
                    if s.description.trim().is_empty() {
                        report.error(&at, "statement description is empty");
                    }
                    if s.input_format.trim().is_empty() {
                        report.error(&at, "statement input_format is empty");
                    }
                }
            }
            if p.multi_solution && p.verifier.is_none() && p.excluded.is_none() {
                report.warn(&at, "allows multiple answers but has no verifier; not scorable");
            }
            let tests = self.tests_for(&p.id);
            if p.scorable() && tests.is_empty() {
                report.error(&at, "scorable problem has no tests");
            }
            let mut names = BTreeSet::new();
            for t in tests {
                if !names.insert(t.id.as_str()) {
                    report.error(&at, format!("duplicate test `{}`", t.id));
                }
                if !is_safe_id(&t.id) {
                    report.error(&at, format!("test name `{}` is not a plain file name", t.id));
                }
                if t.input.is_empty() {
                    report.error(&at, format!("test `{}` has empty input", t.id));
                }
            }
        }
        for id in self.tests.keys().chain(self.statements.keys()) {
            if !seen.contains(id.as_str()) {
                report.error(
                    format!("problem {id}"),
                    "tests or statement for a problem not in the manifest",
                );
            }
        }

        let mut people = BTreeSet::new();
        for h in &self.standings.participants {
            let at = format!("standings participant {}", h.id);
            if !people.insert(h.id.as_str()) {
                report.error(&at, "duplicate participant id");
            }
            for pid in h.results.keys() {
                if !seen.contains(pid.as_str()) {
                    report.error(&at, format!("result for unknown problem `{pid}`"));
                }
            }
        }
        if self.standings.participants.is_empty() {
            report.warn("standings.json", "no participants; the contest cannot be rated");
        }
        report
    }

    /// Replaces a problem's tests and keeps the manifest listing in step.
    pub fn set_tests(&mut self, id: &str, tests: Vec<TestCase>) {
        if let Some(p) = self.problem_mut(id) {
            p.tests = entries(&tests);
        }
        self.tests.insert(id.to_owned(), tests);
    }

    /// Default time limit substituted for problems that lack one.
    pub fn defaulted_time_limits(&self) -> Vec<String> {
        self.manifest
            .problems
            .iter()
            .filter(|p| p.time_limit_ms.is_none())
            .map(|p| p.id.clone())
            .collect()
    }
}

fn entries(tests: &[TestCase]) -> Vec<TestEntry> {
    tests
        .iter()
        .map(|t| TestEntry {
            name: t.id.clone(),
            origin: t.origin,
        })
        .collect()
}

fn is_safe_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn sort_keys(v: Value) -> Value {
    match v {
        Value::Object(map) => {
            let mut pairs: Vec<(String, Value)> = map.into_iter().collect();
            pairs.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(pairs.into_iter().map(|(k, v)| (k, sort_keys(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let v = sort_keys(serde_json::to_value(value).expect("serializable"));
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}

pub fn write_canonical_json<T: Serialize>(path: &Path, value: &T) -> Result<(), DatasetError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| DatasetError::io(parent, e))?;
    }
    fs::write(path, canonical_json(value)).map_err(|e| DatasetError::io(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, DatasetError> {
    let text = fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| DatasetError::Json {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

fn read_utf8(path: &Path, report: &mut ValidationReport, at: &str) -> Option<String> {
    match fs::read(path) {
        Ok(bytes) => match String::from_utf8(bytes) {
            Ok(s) => Some(s),
            Err(_) => {
                report.error(at, format!("{} is not valid UTF-8", path.display()));
                None
            }
        },
        Err(e) => {
            report.error(at, format!("cannot read {}: {e}", path.display()));
            None
        }
    }
}

/// Loads and validates a bundle directory.
///
/// Structural problems (unreadable manifest or standings) fail immediately;
/// everything else is collected into one [`ValidationReport`].
pub fn load_bundle(dir: &Path) -> Result<ContestBundle, DatasetError> {
    let manifest: Manifest = read_json(&dir.join("manifest.json"))?;
    let standings: Standings = read_json(&dir.join("standings.json"))?;
    let mut report = ValidationReport::default();
    let mut statements = BTreeMap::new();
    let mut statement_html = BTreeMap::new();
    let mut tests = BTreeMap::new();

    for p in &manifest.problems {
        if !is_safe_id(&p.id) {
            continue;
        }
        let at = format!("problem {}", p.id);
        let pdir = dir.join("problems").join(&p.id);
        let parsed = pdir.join("statement.parsed.json");
        if parsed.is_file() {
            match read_json::<ParsedStatement>(&parsed) {
                Ok(s) => {
                    statements.insert(p.id.clone(), s);
                }
                Err(e) => report.error(&at, e.to_string()),
            }
        }
        let html = pdir.join("statement.html");
        if html.is_file() {
            if let Some(text) = read_utf8(&html, &mut report, &at) {
                statement_html.insert(p.id.clone(), text);
            }
        }

        let tdir = dir.join("tests").join(&p.id);
        let mut cases = Vec::with_capacity(p.tests.len());
        for entry in &p.tests {
            if !is_safe_id(&entry.name) {
                report.error(&at, format!("test name `{}` is not a plain file name", entry.name));
                continue;
            }
            let input = read_utf8(&tdir.join(format!("{}.in", entry.name)), &mut report, &at);
            let answer = read_utf8(&tdir.join(format!("{}.ans", entry.name)), &mut report, &at);
            if let (Some(input), Some(reference_output)) = (input, answer) {
                cases.push(TestCase {
                    id: entry.name.clone(),
                    input,
                    reference_output,
                    origin: entry.origin,
                });
            }
        }
        if tdir.is_dir() {
            let listed: BTreeSet<&str> = p.tests.iter().map(|t| t.name.as_str()).collect();
            if let Ok(rd) = fs::read_dir(&tdir) {
                let mut strays: Vec<String> = rd
                    .filter_map(|e| e.ok())
                    .filter_map(|e| e.path().file_stem().map(|s| s.to_string_lossy().into_owned()))
                    .filter(|stem| !listed.contains(stem.as_str()))
                    .collect();
                strays.sort();
                strays.dedup();
                for s in strays {
                    report.warn(&at, format!("test file `{s}` is not listed in the manifest"));
                }
            }
        }
        tests.insert(p.id.clone(), cases);
    }

    let known: BTreeSet<&str> = manifest.problems.iter().map(|p| p.id.as_str()).collect();
    for sub in ["problems", "tests"] {
        let Ok(rd) = fs::read_dir(dir.join(sub)) else { continue };
        let mut orphans: Vec<String> = rd
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_dir())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|name| !known.contains(name.as_str()))
            .collect();
        orphans.sort();
        for name in orphans {
            report.error(
                format!("{sub}/{name}"),
                "tests or statement for a problem not in the manifest",
            );
        }
    }

    let mut bundle = ContestBundle {
        root: dir.to_owned(),
        manifest,
        statements,
        statement_html,
        tests,
        standings,
        warnings: Vec::new(),
    };
    let mut structural = bundle.validate();
    report.errors.append(&mut structural.errors);
    report.warnings.append(&mut structural.warnings);
    if !report.is_ok() {
        return Err(DatasetError::Invalid(report));
    }
    bundle.warnings = report.warnings;
    Ok(bundle)
}

/// Writes `bundle` to `dest` in canonical form.
///
/// Program files are copied over when `dest` is not the bundle's own root.
/// Test directories are rewritten from scratch so removed tests disappear.
pub fn save_bundle(bundle: &ContestBundle, dest: &Path) -> Result<(), DatasetError> {
    let report = bundle.validate();
    if !report.is_ok() {
        return Err(DatasetError::Invalid(report));
    }
    fs::create_dir_all(dest).map_err(|e| DatasetError::io(dest, e))?;

    let mut manifest = bundle.manifest.clone();
    for p in &mut manifest.problems {
        p.tests = entries(bundle.tests_for(&p.id));
    }
    write_canonical_json(&dest.join("manifest.json"), &manifest)?;
    write_canonical_json(&dest.join("standings.json"), &bundle.standings)?;

    for p in &manifest.problems {
        let pdir = dest.join("problems").join(&p.id);
        if let Some(s) = bundle.statements.get(&p.id) {
            write_canonical_json(&pdir.join("statement.parsed.json"), s)?;
        }
        if let Some(h) = bundle.statement_html.get(&p.id) {
            fs::write(pdir.join("statement.html"), h).map_err(|e| DatasetError::io(&pdir, e))?;
        }
        let tdir = dest.join("tests").join(&p.id);
        if tdir.exists() {
            fs::remove_dir_all(&tdir).map_err(|e| DatasetError::io(&tdir, e))?;
        }
        fs::create_dir_all(&tdir).map_err(|e| DatasetError::io(&tdir, e))?;
        for t in bundle.tests_for(&p.id) {
            let input = tdir.join(format!("{}.in", t.id));
            fs::write(&input, &t.input).map_err(|e| DatasetError::io(&input, e))?;
            let answer = tdir.join(format!("{}.ans", t.id));
            fs::write(&answer, &t.reference_output).map_err(|e| DatasetError::io(&answer, e))?;
        }
    }

    if !same_dir(&bundle.root, dest) {
        for p in &manifest.problems {
            let refs = std::iter::once(&p.official_solution)
                .chain(&p.accepted_solutions)
                .chain(p.verifier.as_ref());
            for r in refs {
                copy_file(&bundle.root.join(&r.path), &dest.join(&r.path))?;
            }
        }
    }
    Ok(())
}

fn same_dir(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

fn copy_file(from: &Path, to: &Path) -> Result<(), DatasetError> {
    if let Some(parent) = to.parent() {
        fs::create_dir_all(parent).map_err(|e| DatasetError::io(parent, e))?;
    }
    fs::copy(from, to).map_err(|e| DatasetError::io(from, e))?;
    Ok(())
}

/// Bundle directories at or below `dir`, sorted by path.
pub fn find_bundles(dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let mut found = Vec::new();
    collect_bundles(dir, 0, &mut found)?;
    found.sort();
    Ok(found)
}

fn collect_bundles(dir: &Path, depth: usize, found: &mut Vec<PathBuf>) -> Result<(), DatasetError> {
    if dir.join("manifest.json").is_file() {
        found.push(dir.to_owned());
        return Ok(());
    }
    if depth >= 4 {
        return Ok(());
    }
    let rd = fs::read_dir(dir).map_err(|e| DatasetError::io(dir, e))?;
    for entry in rd {
        let entry = entry.map_err(|e| DatasetError::io(dir, e))?;
        if entry.file_type().map(|t| t.is_dir()).unwrap_or(false) {
            collect_bundles(&entry.path(), depth + 1, found)?;
        }
    }
    Ok(())
}
