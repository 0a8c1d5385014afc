//! Running one program on one input under wall-clock and output limits.

use std::io::{self, Read, Write};
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::RunLimits;

/// Stderr is only kept for diagnostics; anything past this is dropped.
const STDERR_CAP: usize = 64 * 1024;

/// A ready-to-run command line: an executable followed by its arguments.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Program {
    argv: Vec<String>,
}

impl Program {
    pub fn new<I, S>(argv: I) -> Result<Self, ExecError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
        if argv.is_empty() || argv[0].is_empty() {
            return Err(ExecError::EmptyCommand);
        }
        Ok(Self { argv })
    }

    pub fn argv(&self) -> &[String] {
        &self.argv
    }
}

impl std::fmt::Display for Program {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.argv.join(" "))
    }
}

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("empty command line")]
    EmptyCommand,
    #[error("failed to spawn `{program}`: {source}")]
    Spawn { program: String, source: io::Error },
    #[error("i/o error while supervising `{program}`: {source}")]
    Io { program: String, source: io::Error },
}

/// How the process ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Termination {
    Exited(i32),
    Signaled(i32),
    /// Killed by the harness at the time limit.
    TimedOut,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecOutcome {
    pub termination: Termination,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    /// Stdout went past `output_limit`; the process was killed and
    /// `stdout` holds only the first `output_limit` bytes.
    pub output_overflow: bool,
    pub elapsed_ms: u64,
}

impl ExecOutcome {
    pub fn success(&self) -> bool {
        self.termination == Termination::Exited(0)
    }

    pub fn timed_out(&self, limits: &RunLimits) -> bool {
        self.termination == Termination::TimedOut || self.elapsed_ms > limits.time_limit_ms
    }
}

/// Kills the whole process group when dropped, so grandchildren that
/// inherited the pipes cannot keep the readers blocked.
struct GroupGuard {
    pgid: i32,
}

impl GroupGuard {
    fn kill(&self) {
        // SAFETY: killpg has no memory-safety preconditions; ESRCH is fine.
        unsafe {
            libc::killpg(self.pgid, libc::SIGKILL);
        }
    }
}

impl Drop for GroupGuard {
    fn drop(&mut self) {
        self.kill();
    }
}

fn spawn_reader<R: Read + Send + 'static>(
    mut source: R,
    cap: usize,
    overflow: Option<Arc<AtomicBool>>,
) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut kept = Vec::new();
        let mut chunk = [0u8; 8192];
        loop {
            match source.read(&mut chunk) {
                Ok(0) => break,
                Ok(n) => {
                    let room = cap.saturating_sub(kept.len());
                    kept.extend_from_slice(&chunk[..n.min(room)]);
                    if n > room {
                        if let Some(flag) = &overflow {
                            flag.store(true, Ordering::SeqCst);
                        }
                    }
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(_) => break,
            }
        }
        kept
    })
}

/// Runs `program` with `stdin` as its standard input inside `workdir`.
pub fn execute_in(
    program: &Program,
    extra_args: &[&Path],
    stdin: &[u8],
    limits: &RunLimits,
    workdir: &Path,
) -> Result<ExecOutcome, ExecError> {
    let name = program.to_string();
    let mut cmd = Command::new(&program.argv[0]);
    cmd.args(&program.argv[1..])
        .args(extra_args)
        .current_dir(workdir)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0);

    let started = Instant::now();
    let mut child = cmd.spawn().map_err(|source| ExecError::Spawn {
        program: name.clone(),
        source,
    })?;
    let guard = GroupGuard {
        pgid: child.id() as i32,
    };

    let overflow = Arc::new(AtomicBool::new(false));
    let stdout = spawn_reader(
        child.stdout.take().expect("stdout is piped"),
        limits.output_limit_bytes,
        Some(overflow.clone()),
    );
    let stderr = spawn_reader(child.stderr.take().expect("stderr is piped"), STDERR_CAP, None);
    let writer = {
        let mut pipe = child.stdin.take().expect("stdin is piped");
        let data = stdin.to_vec();
        // A program that exits without reading its input closes the pipe.
        thread::spawn(move || {
            let _ = pipe.write_all(&data);
        })
    };

    let (termination, elapsed) =
        supervise(&mut child, &guard, limits, &overflow, started).map_err(|source| ExecError::Io {
            program: name.clone(),
            source,
        })?;
    guard.kill();
    drop(guard);

    let _ = writer.join();
    let stdout = stdout.join().unwrap_or_default();
    let stderr = stderr.join().unwrap_or_default();
    Ok(ExecOutcome {
        termination,
        stdout,
        stderr,
        output_overflow: overflow.load(Ordering::SeqCst),
        elapsed_ms: elapsed.as_millis() as u64,
    })
}

/// Same as [`execute_in`] with a fresh temporary working directory.
pub fn execute(program: &Program, stdin: &[u8], limits: &RunLimits) -> Result<ExecOutcome, ExecError> {
    let dir = tempfile::tempdir().map_err(|source| ExecError::Io {
        program: program.to_string(),
        source,
    })?;
    execute_in(program, &[], stdin, limits, dir.path())
}

fn supervise(
    child: &mut Child,
    guard: &GroupGuard,
    limits: &RunLimits,
    overflow: &AtomicBool,
    started: Instant,
) -> io::Result<(Termination, Duration)> {
    let deadline = Duration::from_millis(limits.time_limit_ms);
    let mut pause = Duration::from_micros(200);
    loop {
        if let Some(status) = child.try_wait()? {
            let elapsed = started.elapsed();
            let termination = match (status.code(), status.signal()) {
                (Some(code), _) => Termination::Exited(code),
                (None, Some(sig)) => Termination::Signaled(sig),
                (None, None) => Termination::Exited(-1),
            };
            return Ok((termination, elapsed));
        }
        let elapsed = started.elapsed();
        if elapsed > deadline {
            guard.kill();
            child.wait()?;
            return Ok((Termination::TimedOut, elapsed));
        }
        if overflow.load(Ordering::SeqCst) {
            guard.kill();
            let status = child.wait()?;
            let termination = status
                .signal()
                .map(Termination::Signaled)
                .unwrap_or(Termination::Exited(status.code().unwrap_or(-1)));
            return Ok((termination, started.elapsed()));
        }
        thread::sleep(pause);
        pause = (pause * 2).min(Duration::from_millis(5));
    }
}
