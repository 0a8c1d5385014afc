//! Shared helpers for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use walkdir::WalkDir;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .canonicalize()
        .expect("fixtures directory")
}

/// Recursively copies `src` into `dst`, keeping file modes.
pub fn copy_tree(src: &Path, dst: &Path) {
    for entry in WalkDir::new(src) {
        let entry = entry.unwrap();
        let rel = entry.path().strip_prefix(src).unwrap();
        let to = dst.join(rel);
        if entry.file_type().is_dir() {
            fs::create_dir_all(&to).unwrap();
        } else {
            fs::copy(entry.path(), &to).unwrap();
        }
    }
}

/// Every file under `dir`, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    WalkDir::new(dir)
        .sort_by_file_name()
        .into_iter()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e.path().strip_prefix(dir).unwrap().to_string_lossy().into_owned();
            (rel, fs::read(e.path()).unwrap())
        })
        .collect()
}

/// A fresh copy of fixture bundle `name` inside `tmp`.
pub fn bundle_copy(tmp: &Path, name: &str) -> PathBuf {
    let dst = tmp.join(name);
    copy_tree(&fixtures().join(name), &dst);
    dst
}

fn edit_json(path: &Path, f: impl FnOnce(&mut Value)) {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    f(&mut v);
    fs::write(path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
}

fn manifest(dir: &Path, f: impl FnOnce(&mut Value)) {
    edit_json(&dir.join("manifest.json"), f);
}

fn problem(v: &mut Value, i: usize) -> &mut Value {
    &mut v["problems"][i]
}

pub struct Violation {
    pub name: &'static str,
    /// Substring the load error has to contain.
    pub expect: &'static str,
    pub apply: fn(&Path),
}

/// One broken copy of bundle `c1` per documented invariant.
pub fn violations() -> Vec<Violation> {
    vec![
        Violation {
            name: "unsupported format version",
            expect: "unsupported format_version 7",
            apply: |d| manifest(d, |v| v["format_version"] = json!(7)),
        },
        Violation {
            name: "empty contest id",
            expect: "contest_id is empty",
            apply: |d| manifest(d, |v| v["contest_id"] = json!(" ")),
        },
        Violation {
            name: "division out of range",
            expect: "division 5 is not in 1..=4",
            apply: |d| manifest(d, |v| v["division"] = json!(5)),
        },
        Violation {
            name: "unsafe problem id",
            expect: "id must be non-empty",
            apply: |d| manifest(d, |v| problem(v, 0)["id"] = json!("../A")),
        },
        Violation {
            name: "duplicate problem id",
            expect: "duplicate problem id",
            apply: |d| manifest(d, |v| problem(v, 1)["id"] = json!("A")),
        },
        Violation {
            name: "zero time limit",
            expect: "time_limit_ms must be positive",
            apply: |d| manifest(d, |v| problem(v, 0)["time_limit_ms"] = json!(0)),
        },
        Violation {
            name: "zero memory limit",
            expect: "memory_limit_mb must be positive",
            apply: |d| manifest(d, |v| problem(v, 0)["memory_limit_mb"] = json!(0)),
        },
        Violation {
            name: "program path escapes the bundle",
            expect: "must be relative and stay inside the bundle",
            apply: |d| manifest(d, |v| problem(v, 0)["official_solution"]["path"] = json!("../x.py")),
        },
        Violation {
            name: "absolute program path",
            expect: "must be relative and stay inside the bundle",
            apply: |d| manifest(d, |v| problem(v, 2)["verifier"]["path"] = json!("/bin/true")),
        },
        Violation {
            name: "missing program file",
            expect: "does not exist",
            apply: |d| fs::remove_file(d.join("solutions/A/accepted_2.py")).unwrap(),
        },
        Violation {
            name: "missing statement",
            expect: "missing statement.parsed.json",
            apply: |d| fs::remove_file(d.join("problems/B/statement.parsed.json")).unwrap(),
        },
        Violation {
            name: "empty description",
            expect: "statement description is empty",
            apply: |d| {
                edit_json(&d.join("problems/A/statement.parsed.json"), |v| {
                    v["description"] = json!("  ")
                })
            },
        },
        Violation {
            name: "empty input format",
            expect: "statement input_format is empty",
            apply: |d| {
                edit_json(&d.join("problems/A/statement.parsed.json"), |v| {
                    v["input_format"] = json!("")
                })
            },
        },
        Violation {
            name: "unreadable statement",
            expect: "statement.parsed.json",
            apply: |d| fs::write(d.join("problems/A/statement.parsed.json"), "{").unwrap(),
        },
        Violation {
            name: "scorable problem without tests",
            expect: "scorable problem has no tests",
            apply: |d| manifest(d, |v| problem(v, 0)["tests"] = json!([])),
        },
        Violation {
            name: "duplicate test name",
            expect: "duplicate test `001`",
            apply: |d| manifest(d, |v| problem(v, 0)["tests"][1]["name"] = json!("001")),
        },
        Violation {
            name: "unsafe test name",
            expect: "is not a plain file name",
            apply: |d| manifest(d, |v| problem(v, 0)["tests"][0]["name"] = json!("../001")),
        },
        Violation {
            name: "listed test file missing",
            expect: "002.ans",
            apply: |d| fs::remove_file(d.join("tests/A/002.ans")).unwrap(),
        },
        Violation {
            name: "empty test input",
            expect: "has empty input",
            apply: |d| fs::write(d.join("tests/B/001.in"), "").unwrap(),
        },
        Violation {
            name: "test file not UTF-8",
            expect: "UTF-8",
            apply: |d| fs::write(d.join("tests/B/001.ans"), [0xff, 0xfe, b'\n']).unwrap(),
        },
        Violation {
            name: "tests for a problem not in the manifest",
            expect: "tests or statement for a problem not in the manifest",
            apply: |d| {
                manifest(d, |v| {
                    let problems = v["problems"].as_array_mut().unwrap();
                    problems.retain(|p| p["id"] != json!("B"));
                    let b_tests = d.join("tests/B");
                    assert!(b_tests.is_dir());
                })
            },
        },
        Violation {
            name: "unknown manifest field",
            expect: "unknown field",
            apply: |d| manifest(d, |v| v["extra"] = json!(1)),
        },
        Violation {
            name: "missing standings",
            expect: "standings.json",
            apply: |d| fs::remove_file(d.join("standings.json")).unwrap(),
        },
        Violation {
            name: "duplicate participant",
            expect: "duplicate participant id",
            apply: |d| {
                edit_json(&d.join("standings.json"), |v| {
                    let first = v["participants"][0].clone();
                    v["participants"].as_array_mut().unwrap().push(first);
                })
            },
        },
        Violation {
            name: "result for unknown problem",
            expect: "result for unknown problem `Z`",
            apply: |d| {
                edit_json(&d.join("standings.json"), |v| {
                    v["participants"][0]["results"]["Z"] = json!({"solved": false, "minute": null, "wrong": 1});
                })
            },
        },
        Violation {
            name: "solved result without minute",
            expect: "solved result is missing its minute",
            apply: |d| {
                edit_json(&d.join("standings.json"), |v| {
                    v["participants"][0]["results"]["A"] = json!({"solved": true, "minute": null, "wrong": 0});
                })
            },
        },
    ]
}
