//! Candidate directories: `<dir>/<problem>/<NN>.<ext>`, one file per
//! candidate, in file-name order. `.py` files run under `python3`, `.sh`
//! under `sh`; anything else is executed directly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

use cfelo::judge::Program;

fn program_for(path: &Path) -> Result<Program> {
    let abs = path
        .canonicalize()
        .with_context(|| format!("resolving {}", path.display()))?;
    let file = abs.to_string_lossy().into_owned();
    let argv = match path.extension().and_then(|e| e.to_str()) {
        Some("py") => vec!["python3".to_owned(), file],
        Some("sh") => vec!["sh".to_owned(), file],
        _ => vec![file],
    };
    Ok(Program::new(argv)?)
}

pub fn discover(dir: &Path) -> Result<BTreeMap<String, Vec<Program>>> {
    let mut out = BTreeMap::new();
    let entries = fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))?;
    for entry in entries {
        let entry = entry?;
        if !entry.file_type()?.is_dir() {
            continue;
        }
        let pid = entry.file_name().to_string_lossy().into_owned();
        let mut files: Vec<_> = fs::read_dir(entry.path())?
            .filter_map(|e| e.ok())
            .filter(|e| e.file_type().map(|t| t.is_file()).unwrap_or(false))
            .map(|e| e.path())
            .collect();
        files.sort();
        let programs = files.iter().map(|f| program_for(f)).collect::<Result<Vec<_>>>()?;
        out.insert(pid, programs);
    }
    Ok(out)
}
