//! Local judging of candidate programs.
//!
//! A candidate is run on each test of a problem in bundle order. The first
//! failing test decides the verdict, the way online judges report it. Output
//! is checked either by exact token comparison or by a problem-specific
//! verifier.

pub mod compare;
pub mod exec;
pub mod verifier;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compare::{check_output, compare_outputs, tokens, Mismatch};
pub use exec::{execute, ExecError, ExecOutcome, Program, Termination};
pub use verifier::{run_verifier, run_verifier_on, VerifierError, VerifierVerdict};

/// Default per-test time limit when problem metadata does not give one.
pub const DEFAULT_TIME_LIMIT_MS: u64 = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VerdictKind {
    #[serde(rename = "AC")]
    Accepted,
    #[serde(rename = "WA")]
    WrongAnswer,
    #[serde(rename = "TLE")]
    TimeLimitExceeded,
    #[serde(rename = "RE")]
    RuntimeError,
    /// Never executed.
    #[serde(rename = "SKIP")]
    Skipped,
}

impl VerdictKind {
    pub fn code(self) -> &'static str {
        match self {
            VerdictKind::Accepted => "AC",
            VerdictKind::WrongAnswer => "WA",
            VerdictKind::TimeLimitExceeded => "TLE",
            VerdictKind::RuntimeError => "RE",
            VerdictKind::Skipped => "SKIP",
        }
    }

    pub fn is_accepted(self) -> bool {
        self == VerdictKind::Accepted
    }

    /// An executed submission that was not accepted.
    pub fn is_failure(self) -> bool {
        matches!(
            self,
            VerdictKind::WrongAnswer | VerdictKind::TimeLimitExceeded | VerdictKind::RuntimeError
        )
    }
}

impl std::fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

impl std::str::FromStr for VerdictKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "AC" => Ok(VerdictKind::Accepted),
            "WA" => Ok(VerdictKind::WrongAnswer),
            "TLE" => Ok(VerdictKind::TimeLimitExceeded),
            "RE" => Ok(VerdictKind::RuntimeError),
            "SKIP" => Ok(VerdictKind::Skipped),
            other => Err(format!("unknown verdict `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_test: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl Verdict {
    pub fn accepted() -> Self {
        Self {
            kind: VerdictKind::Accepted,
            failed_test: None,
            message: None,
        }
    }

    pub fn skipped() -> Self {
        Self {
            kind: VerdictKind::Skipped,
            failed_test: None,
            message: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Sample,
    Generated,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub input: String,
    pub reference_output: String,
    pub origin: Origin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLimits {
    pub time_limit_ms: u64,
    /// Advisory only; not enforced.
    pub memory_limit_mb: u64,
    pub output_limit_bytes: usize,
}

impl Default for RunLimits {
    fn default() -> Self {
        Self {
            time_limit_ms: DEFAULT_TIME_LIMIT_MS,
            memory_limit_mb: 256,
            output_limit_bytes: 64 << 20,
        }
    }
}

impl RunLimits {
    pub fn validate(&self) -> Result<(), JudgeError> {
        if self.time_limit_ms == 0 || self.memory_limit_mb == 0 || self.output_limit_bytes == 0 {
            return Err(JudgeError::InvalidLimits);
        }
        Ok(())
    }
}

/// How outputs are checked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckMode {
    Compare,
    Verifier { program: Program, limits: RunLimits },
}

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("no tests to judge against")]
    NoTests,
    #[error("run limits must all be positive")]
    InvalidLimits,
    /// The harness could not run the candidate at all.
    #[error(transparent)]
    Infrastructure(#[from] ExecError),
    /// The verifier failed; the problem cannot be scored.
    #[error("verifier failed on test {test}: {source}")]
    Evaluation {
        test: String,
        #[source]
        source: VerifierError,
    },
}

/// Result of one candidate on one test.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub test: String,
    pub kind: VerdictKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub elapsed_ms: u64,
}

pub fn judge_test(
    program: &Program,
    test: &TestCase,
    limits: &RunLimits,
    mode: &CheckMode,
) -> Result<TestOutcome, JudgeError> {
    let out = execute(program, test.input.as_bytes(), limits)?;
    let finish = |kind, message: Option<String>| TestOutcome {
        test: test.id.clone(),
        kind,
        message,
        elapsed_ms: out.elapsed_ms,
    };
    if out.timed_out(limits) {
        return Ok(finish(
            VerdictKind::TimeLimitExceeded,
            Some(format!("exceeded {} ms", limits.time_limit_ms)),
        ));
    }
    if out.output_overflow {
        return Ok(finish(
            VerdictKind::WrongAnswer,
            Some(format!("output limit of {} bytes exceeded", limits.output_limit_bytes)),
        ));
    }
    match out.termination {
        Termination::Exited(0) => {}
        Termination::Exited(code) => return Ok(finish(VerdictKind::RuntimeError, Some(format!("exit status {code}")))),
        Termination::Signaled(sig) => {
            return Ok(finish(
                VerdictKind::RuntimeError,
                Some(format!("killed by signal {sig}")),
            ))
        }
        Termination::TimedOut => unreachable!("covered by timed_out"),
    }
    let checked = match mode {
        CheckMode::Compare => check_output(&out.stdout, test.reference_output.as_bytes()).map_err(|m| m.to_string()),
        CheckMode::Verifier {
            program: verifier,
            limits: vlimits,
        } => {
            let v = run_verifier_on(
                verifier,
                test.input.as_bytes(),
                &out.stdout,
                test.reference_output.as_bytes(),
                vlimits,
            )
            .map_err(|source| JudgeError::Evaluation {
                test: test.id.clone(),
                source,
            })?;
            match v {
                VerifierVerdict::Accept => Ok(()),
                VerifierVerdict::Reject(msg) if msg.is_empty() => Err("rejected by verifier".into()),
                VerifierVerdict::Reject(msg) => Err(msg),
            }
        }
    };
    Ok(match checked {
        Ok(()) => finish(VerdictKind::Accepted, None),
        Err(msg) => finish(VerdictKind::WrongAnswer, Some(msg)),
    })
}

/// Judges `program` on `tests` in order, stopping at the first failure.
pub fn judge_solution(
    program: &Program,
    tests: &[TestCase],
    limits: &RunLimits,
    mode: &CheckMode,
) -> Result<Verdict, JudgeError> {
    if tests.is_empty() {
        return Err(JudgeError::NoTests);
    }
    limits.validate()?;
    for test in tests {
        let outcome = judge_test(program, test, limits, mode)?;
        if !outcome.kind.is_accepted() {
            return Ok(Verdict {
                kind: outcome.kind,
                failed_test: Some(outcome.test),
                message: outcome.message,
            });
        }
    }
    Ok(Verdict::accepted())
}

/// Runs every test regardless of failures. Diagnostics only; scoring uses
/// [`judge_solution`].
pub fn judge_matrix(
    program: &Program,
    tests: &[TestCase],
    limits: &RunLimits,
    mode: &CheckMode,
) -> Result<Vec<TestOutcome>, JudgeError> {
    limits.validate()?;
    tests.iter().map(|t| judge_test(program, t, limits, mode)).collect()
}

/// A bounded set of worker threads for judging many candidates at once.
pub struct JudgePool {
    pool: rayon::ThreadPool,
}

impl JudgePool {
    pub fn new(workers: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .thread_name(|i| format!("judge-{i}"))
            .build()
            .expect("thread pool");
        Self { pool }
    }

    /// Judges every candidate; results come back in input order no matter
    /// which job finishes first.
    pub fn judge_all(
        &self,
        candidates: &[Program],
        tests: &[TestCase],
        limits: &RunLimits,
        mode: &CheckMode,
    ) -> Vec<Result<Verdict, JudgeError>> {
        self.pool.install(|| {
            candidates
                .par_iter()
                .map(|p| judge_solution(p, tests, limits, mode))
                .collect()
        })
    }

    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }
}
