//! Building a bundle from saved problem pages, standings and solution files.
//!
//! The source directory holds a `contest.json` describing the contest:
//!
//! ```json
//! {
//!   "contest_id": "2000",
//!   "division": 2,
//!   "standings": "standings.json",
//!   "problems": [
//!     {
//!       "id": "A",
//!       "html": "html/A.html",
//!       "official_solution": {"interpreter": ["python3"], "path": "sol/A.py"},
//!       "accepted_solutions": [{"interpreter": ["python3"], "path": "sol/A_2.py"}]
//!     }
//!   ]
//! }
//! ```
//!
//! Paths are relative to the source directory. Program files are copied
//! into `solutions/<id>/` of the new bundle.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::bundle::{
    load_bundle, save_bundle, ContestBundle, Manifest, ProblemMeta, ProgramRef, Standings, FORMAT_VERSION,
};
use super::html::parse_problem_html;
use super::DatasetError;
use crate::judge::{Origin, TestCase};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestSource {
    pub contest_id: String,
    #[serde(default)]
    pub name: String,
    pub division: u8,
    #[serde(default = "default_standings")]
    pub standings: String,
    pub problems: Vec<IngestProblem>,
}

fn default_standings() -> String {
    "standings.json".into()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestProblem {
    pub id: String,
    pub html: String,
    pub official_solution: ProgramRef,
    #[serde(default)]
    pub accepted_solutions: Vec<ProgramRef>,
    #[serde(default)]
    pub verifier: Option<ProgramRef>,
    #[serde(default)]
    pub multi_solution: bool,
    #[serde(default)]
    pub time_limit_ms: Option<u64>,
    #[serde(default)]
    pub memory_limit_mb: Option<u64>,
}

fn adopt(src: &Path, dest: &Path, r: &ProgramRef, pid: &str, stem: &str) -> Result<ProgramRef, DatasetError> {
    let from = src.join(&r.path);
    let ext = from
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    let rel = format!("solutions/{pid}/{stem}{ext}");
    let to = dest.join(&rel);
    fs::create_dir_all(to.parent().expect("has parent")).map_err(|e| DatasetError::io(&to, e))?;
    fs::copy(&from, &to).map_err(|e| DatasetError::io(&from, e))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        if let Ok(meta) = fs::metadata(&from) {
            let _ = fs::set_permissions(&to, fs::Permissions::from_mode(meta.permissions().mode()));
        }
    }
    Ok(ProgramRef {
        interpreter: r.interpreter.clone(),
        path: rel,
    })
}

/// Parses every snapshot, copies programs, turns samples into tests and
/// writes a validated bundle to `dest`.
pub fn ingest(source_dir: &Path, dest: &Path) -> Result<ContestBundle, DatasetError> {
    let spec_path = source_dir.join("contest.json");
    let text = fs::read_to_string(&spec_path).map_err(|e| DatasetError::io(&spec_path, e))?;
    let spec: IngestSource = serde_json::from_str(&text).map_err(|e| DatasetError::Json {
        path: spec_path.clone(),
        message: e.to_string(),
    })?;
    let standings_path = source_dir.join(&spec.standings);
    let standings_text = fs::read_to_string(&standings_path).map_err(|e| DatasetError::io(&standings_path, e))?;
    let standings: Standings = serde_json::from_str(&standings_text).map_err(|e| DatasetError::Json {
        path: standings_path.clone(),
        message: e.to_string(),
    })?;

    fs::create_dir_all(dest).map_err(|e| DatasetError::io(dest, e))?;
    let mut problems = Vec::new();
    let mut statements = BTreeMap::new();
    let mut statement_html = BTreeMap::new();
    let mut tests = BTreeMap::new();
    for p in &spec.problems {
        let html_path = source_dir.join(&p.html);
        let bytes = fs::read(&html_path).map_err(|e| DatasetError::io(&html_path, e))?;
        let html = String::from_utf8_lossy(&bytes).into_owned();
        let parsed = parse_problem_html(&html).map_err(|source| DatasetError::Statement {
            problem: p.id.clone(),
            source,
        })?;

        let official = adopt(source_dir, dest, &p.official_solution, &p.id, "official")?;
        let accepted = p
            .accepted_solutions
            .iter()
            .enumerate()
            .map(|(k, r)| adopt(source_dir, dest, r, &p.id, &format!("accepted_{}", k + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        let verifier = p
            .verifier
            .as_ref()
            .map(|r| adopt(source_dir, dest, r, &p.id, "verifier"))
            .transpose()?;

        let cases: Vec<TestCase> = parsed
            .samples
            .iter()
            .enumerate()
            .map(|(k, s)| TestCase {
                id: format!("{:03}", k + 1),
                input: s.input.clone(),
                reference_output: s.output.clone(),
                origin: Origin::Sample,
            })
            .collect();

        problems.push(ProblemMeta {
            id: p.id.clone(),
            title: parsed.title.clone(),
            time_limit_ms: p.time_limit_ms.or(parsed.time_limit_ms),
            memory_limit_mb: p.memory_limit_mb.or(parsed.memory_limit_mb),
            tags: parsed.tags.clone(),
            multi_solution: p.multi_solution,
            official_solution: official,
            accepted_solutions: accepted,
            verifier,
            excluded: None,
            tests: Vec::new(),
        });
        tests.insert(p.id.clone(), cases);
        statements.insert(p.id.clone(), parsed);
        statement_html.insert(p.id.clone(), html);
    }

    let mut bundle = ContestBundle {
        root: dest.to_owned(),
        manifest: Manifest {
            format_version: FORMAT_VERSION,
            contest_id: spec.contest_id,
            name: spec.name,
            division: spec.division,
            problems,
        },
        statements,
        statement_html,
        tests: BTreeMap::new(),
        standings,
        warnings: Vec::new(),
    };
    for (id, cases) in tests {
        bundle.set_tests(&id, cases);
    }
    save_bundle(&bundle, dest)?;
    load_bundle(dest)
}
