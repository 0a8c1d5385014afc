//! Contest bundles: the on-disk package the rest of the crate consumes.
//!
//! ```text
//! <bundle>/
//!   manifest.json                      ids, division, limits, commands, test list
//!   standings.json                     final per-problem results of every human
//!   problems/<id>/statement.html       raw snapshot (optional)
//!   problems/<id>/statement.parsed.json
//!   tests/<id>/NNN.in, NNN.ans
//!   solutions/...                      programs referenced from the manifest
//! ```
//!
//! JSON files are written with sorted keys, two-space indentation and a
//! trailing LF, so saving an unchanged bundle reproduces it byte for byte.

mod bundle;
pub mod html;
mod ingest;
mod stats;

pub use bundle::{
    canonical_json, find_bundles, load_bundle, save_bundle, write_canonical_json, ContestBundle, Issue, Manifest,
    ProblemMeta, ProgramRef, Standings, TestEntry, ValidationReport, FORMAT_VERSION,
};
pub use html::{parse_problem_bytes, parse_problem_html, ParseError, ParsedStatement, Sample};
pub use ingest::{ingest, IngestProblem, IngestSource};
pub use stats::{corpus_stats, CorpusStats};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed JSON: {message}")]
    Json { path: PathBuf, message: String },
    #[error("bundle failed validation:\n{0}")]
    Invalid(ValidationReport),
    #[error("problem {problem}: {source}")]
    Statement {
        problem: String,
        #[source]
        source: ParseError,
    },
}

impl DatasetError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.into(),
            source,
        }
    }
}
