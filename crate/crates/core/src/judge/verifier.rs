//! Special-judge invocation.
//!
//! A verifier is called as `verifier <input> <candidate_output> <reference_output>`
//! with three file paths. Exit status 0 accepts, any other exit status rejects
//! and whatever the verifier wrote to stderr becomes the message. Being killed
//! by a signal or by the time limit is not a verdict on the candidate: it means
//! the verifier itself is broken.

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::exec::{execute_in, ExecError, Program, Termination};
use super::RunLimits;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VerifierVerdict {
    Accept,
    Reject(String),
}

impl VerifierVerdict {
    pub fn accepted(&self) -> bool {
        matches!(self, VerifierVerdict::Accept)
    }
}

#[derive(Debug, Error)]
pub enum VerifierError {
    #[error("verifier timed out after {0} ms")]
    Timeout(u64),
    #[error("verifier was killed by signal {0}")]
    Crashed(i32),
    #[error("verifier produced more than the output limit")]
    OutputOverflow,
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("could not stage verifier files: {0}")]
    Staging(#[from] std::io::Error),
}

/// Runs `verifier` on three files that already exist on disk.
pub fn run_verifier(
    verifier: &Program,
    input: &Path,
    candidate: &Path,
    reference: &Path,
    limits: &RunLimits,
) -> Result<VerifierVerdict, VerifierError> {
    let workdir = tempfile::tempdir()?;
    let out = execute_in(verifier, &[input, candidate, reference], b"", limits, workdir.path())?;
    if out.output_overflow {
        return Err(VerifierError::OutputOverflow);
    }
    if out.timed_out(limits) {
        return Err(VerifierError::Timeout(limits.time_limit_ms));
    }
    match out.termination {
        Termination::Exited(0) => Ok(VerifierVerdict::Accept),
        Termination::Exited(_) => Ok(VerifierVerdict::Reject(
            String::from_utf8_lossy(&out.stderr).trim().to_owned(),
        )),
        Termination::Signaled(sig) => Err(VerifierError::Crashed(sig)),
        Termination::TimedOut => Err(VerifierError::Timeout(limits.time_limit_ms)),
    }
}

/// Writes the three texts to a scratch directory and runs the verifier on them.
pub fn run_verifier_on(
    verifier: &Program,
    input: &[u8],
    candidate: &[u8],
    reference: &[u8],
    limits: &RunLimits,
) -> Result<VerifierVerdict, VerifierError> {
    let dir = tempfile::tempdir()?;
    let input_path = dir.path().join("input.txt");
    let candidate_path = dir.path().join("output.txt");
    let reference_path = dir.path().join("answer.txt");
    fs::write(&input_path, input)?;
    fs::write(&candidate_path, candidate)?;
    fs::write(&reference_path, reference)?;
    run_verifier(verifier, &input_path, &candidate_path, &reference_path, limits)
}
