//! Corpus enrichment: generated stress inputs with oracle outputs,
//! multi-answer detection and verifier validation.
//!
//! Generation sends one prompt per problem through a [`TextGateway`], keeps
//! the inputs the official solution handles cleanly and stores its output as
//! the reference. Every exchange is written to `<bundle>/genlab/<id>.json`
//! so a run can be audited and replayed.

pub mod gateway;
pub mod prompt;

pub use gateway::{
    prompt_key, write_recording, GatewayError, GatewayReply, GatewaySettings, HttpGateway, Recording, RecordingGateway,
    ReplayGateway, Retrying, TextGateway,
};
pub use prompt::{
    build_testgen_prompt, parse_generation, render_problem, GenerationRejection, ZeroCount, DEFAULT_TEST_COUNT,
    TEMPLATE, TEMPLATE_VERSION,
};

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{save_bundle, write_canonical_json, ContestBundle, DatasetError};
use crate::judge::{
    compare_outputs, execute, judge_solution, run_verifier_on, tokens, CheckMode, ExecError, JudgeError, Origin,
    Program, RunLimits, Termination, TestCase, VerdictKind,
};

#[derive(Debug, Error)]
pub enum GenlabError {
    #[error("problem {problem}: {source}")]
    Gateway {
        problem: String,
        #[source]
        source: GatewayError,
    },
    #[error("unknown problem {0}")]
    UnknownProblem(String),
    #[error("problem {0} has no parsed statement")]
    MissingStatement(String),
    #[error(transparent)]
    Count(#[from] ZeroCount),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRejection {
    pub input: String,
    pub reason: String,
}

/// Audit trail of one generation round for one problem.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub problem_id: String,
    pub template_version: String,
    pub prompt: String,
    pub raw_response: String,
    /// Model label reported by the gateway.
    pub gateway: String,
    pub received_at: String,
    /// Inputs that became tests, in test order.
    pub accepted_inputs: Vec<String>,
    pub rejected_inputs: Vec<InputRejection>,
    /// Set when the whole reply was unusable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejection: Option<GenerationRejection>,
}

impl GenerationRecord {
    pub fn parsed_count(&self) -> usize {
        self.accepted_inputs.len() + self.rejected_inputs.len()
    }
}

/// A problem generation skipped, with the reason.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aborted {
    pub problem_id: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenReport {
    pub records: Vec<GenerationRecord>,
    pub aborted: Vec<Aborted>,
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

/// Runs the official solution on every input. Survivors become generated
/// tests numbered from `first_index`; the rest are rejected with a reason.
/// Inputs already present in `existing` count as duplicates.
pub fn oracle_outputs(
    inputs: &[String],
    official: &Program,
    limits: &RunLimits,
    existing: &[TestCase],
    first_index: usize,
) -> Result<(Vec<TestCase>, Vec<InputRejection>), ExecError> {
    let mut seen: BTreeSet<String> = existing.iter().map(|t| t.input.clone()).collect();
    // Filtering is sequential so duplicate handling does not depend on timing.
    let mut candidates = Vec::new();
    let mut rejected = Vec::new();
    for raw in inputs {
        let input = with_newline(raw.clone());
        if raw.trim().is_empty() {
            rejected.push(InputRejection {
                input: raw.clone(),
                reason: "empty input".into(),
            });
        } else if !seen.insert(input.clone()) {
            rejected.push(InputRejection {
                input: raw.clone(),
                reason: "duplicate input".into(),
            });
        } else {
            candidates.push((raw.clone(), input));
        }
    }
    let outcomes: Vec<_> = candidates
        .par_iter()
        .map(|(_, input)| execute(official, input.as_bytes(), limits))
        .collect::<Result<_, _>>()?;

    let mut tests = Vec::new();
    for ((raw, input), out) in candidates.into_iter().zip(outcomes) {
        let reason = if out.timed_out(limits) {
            Some("oracle timeout".to_owned())
        } else if out.output_overflow {
            Some("oracle output limit exceeded".to_owned())
        } else {
            match out.termination {
                Termination::Exited(0) => None,
                Termination::Exited(code) => Some(format!("oracle runtime error: exit status {code}")),
                Termination::Signaled(sig) => Some(format!("oracle runtime error: signal {sig}")),
                Termination::TimedOut => Some("oracle timeout".to_owned()),
            }
        };
        let reason = reason.or_else(|| match String::from_utf8(out.stdout.clone()) {
            Err(_) => Some("oracle output is not UTF-8".to_owned()),
            Ok(s) if s.trim().is_empty() => Some("empty output".to_owned()),
            Ok(_) => None,
        });
        match reason {
            Some(reason) => rejected.push(InputRejection { input: raw, reason }),
            None => tests.push(TestCase {
                id: format!("{:03}", first_index + tests.len()),
                input,
                reference_output: String::from_utf8(out.stdout).expect("checked above"),
                origin: Origin::Generated,
            }),
        }
    }
    Ok((tests, rejected))
}

/// Checks that the official solution passes the sample tests. Multi-answer
/// problems without a verifier cannot be checked and pass trivially.
pub fn check_official(
    bundle: &ContestBundle,
    pid: &str,
    default_time_limit_ms: u64,
) -> Result<Result<(), String>, GenlabError> {
    let meta = bundle
        .problem(pid)
        .ok_or_else(|| GenlabError::UnknownProblem(pid.into()))?;
    let samples: Vec<TestCase> = bundle
        .tests_for(pid)
        .iter()
        .filter(|t| t.origin == Origin::Sample)
        .cloned()
        .collect();
    if samples.is_empty() || (meta.multi_solution && meta.verifier.is_none()) {
        return Ok(Ok(()));
    }
    let limits = meta.limits(default_time_limit_ms);
    let official = bundle.program(&meta.official_solution)?;
    let mode = bundle.check_mode(pid, limits)?;
    let v = judge_solution(&official, &samples, &limits, &mode)?;
    if v.kind == VerdictKind::Accepted {
        Ok(Ok(()))
    } else {
        Ok(Err(format!(
            "official solution gets {} on sample {}{}",
            v.kind,
            v.failed_test.unwrap_or_default(),
            v.message.map(|m| format!(": {m}")).unwrap_or_default()
        )))
    }
}

#[derive(Clone, Debug)]
pub struct GenOptions {
    pub count: usize,
    pub default_time_limit_ms: u64,
    /// Cap on concurrent gateway calls.
    pub concurrency: usize,
    /// Restrict to these problems; all non-excluded problems otherwise.
    pub problems: Option<Vec<String>>,
}

impl Default for GenOptions {
    fn default() -> Self {
        Self {
            count: DEFAULT_TEST_COUNT,
            default_time_limit_ms: crate::judge::DEFAULT_TIME_LIMIT_MS,
            concurrency: 4,
            problems: None,
        }
    }
}

enum Planned {
    Run { pid: String, prompt: String },
    Skip(Aborted),
}

/// Generates tests for a bundle, replaces its generated tests, saves it in
/// place and writes one record per problem under `genlab/`.
///
/// With a replay gateway the result is byte-identical across runs.
pub fn gen_tests_for_bundle(
    bundle: &mut ContestBundle,
    gateway: &dyn TextGateway,
    opts: &GenOptions,
) -> Result<GenReport, GenlabError> {
    if opts.count == 0 {
        return Err(ZeroCount.into());
    }
    let pids: Vec<String> = match &opts.problems {
        Some(list) => {
            for p in list {
                if bundle.problem(p).is_none() {
                    return Err(GenlabError::UnknownProblem(p.clone()));
                }
            }
            bundle.problem_ids().into_iter().filter(|p| list.contains(p)).collect()
        }
        None => bundle
            .manifest
            .problems
            .iter()
            .filter(|p| p.excluded.is_none())
            .map(|p| p.id.clone())
            .collect(),
    };

    let mut plan = Vec::new();
    for pid in &pids {
        let doc = bundle
            .statements
            .get(pid)
            .ok_or_else(|| GenlabError::MissingStatement(pid.clone()))?;
        match check_official(bundle, pid, opts.default_time_limit_ms)? {
            Ok(()) => plan.push(Planned::Run {
                pid: pid.clone(),
                prompt: build_testgen_prompt(doc, opts.count)?,
            }),
            Err(reason) => plan.push(Planned::Skip(Aborted {
                problem_id: pid.clone(),
                reason,
            })),
        }
    }

    let calls = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.concurrency.max(1))
        .thread_name(|i| format!("gateway-{i}"))
        .build()
        .expect("thread pool");
    let replies: Vec<Option<Result<GatewayReply, GenlabError>>> = calls.install(|| {
        plan.par_iter()
            .map(|p| match p {
                Planned::Run { pid, prompt } => Some(gateway.send(prompt).map_err(|source| GenlabError::Gateway {
                    problem: pid.clone(),
                    source,
                })),
                Planned::Skip(_) => None,
            })
            .collect()
    });

    let mut report = GenReport::default();
    for (p, reply) in plan.into_iter().zip(replies) {
        let (pid, prompt) = match p {
            Planned::Skip(a) => {
                report.aborted.push(a);
                continue;
            }
            Planned::Run { pid, prompt } => (pid, prompt),
        };
        let reply = reply.expect("planned run has a reply")?;
        let meta = bundle.problem(&pid).expect("listed above");
        let limits = meta.limits(opts.default_time_limit_ms);
        let official = bundle.program(&meta.official_solution)?;
        let samples: Vec<TestCase> = bundle
            .tests_for(&pid)
            .iter()
            .filter(|t| t.origin == Origin::Sample)
            .cloned()
            .collect();

        let mut record = GenerationRecord {
            problem_id: pid.clone(),
            template_version: TEMPLATE_VERSION.into(),
            prompt,
            raw_response: reply.text.clone(),
            gateway: reply.model.clone(),
            received_at: reply.received_at,
            accepted_inputs: Vec::new(),
            rejected_inputs: Vec::new(),
            rejection: None,
        };
        let mut tests = samples.clone();
        match parse_generation(&reply.text) {
            Err(why) => record.rejection = Some(why),
            Ok(inputs) => {
                let (generated, rejected) = oracle_outputs(&inputs, &official, &limits, &samples, samples.len() + 1)?;
                record.accepted_inputs = generated.iter().map(|t| t.input.clone()).collect();
                record.rejected_inputs = rejected;
                tests.extend(generated);
            }
        }
        bundle.set_tests(&pid, tests);
        report.records.push(record);
    }

    let root = bundle.root.clone();
    save_bundle(bundle, &root)?;
    for r in &report.records {
        write_canonical_json(&root.join("genlab").join(format!("{}.json", r.problem_id)), r)?;
    }
    Ok(report)
}

/// Tests whose stored reference differs from what the official solution
/// prints now. Empty for a sound bundle.
pub fn verify_oracle(
    bundle: &ContestBundle,
    pid: &str,
    default_time_limit_ms: u64,
) -> Result<Vec<String>, GenlabError> {
    let meta = bundle
        .problem(pid)
        .ok_or_else(|| GenlabError::UnknownProblem(pid.into()))?;
    let limits = meta.limits(default_time_limit_ms);
    let official = bundle.program(&meta.official_solution)?;
    let mut bad = Vec::new();
    for t in bundle.tests_for(pid).iter().filter(|t| t.origin == Origin::Generated) {
        let out = execute(&official, t.input.as_bytes(), &limits)?;
        if !out.success() || out.stdout != t.reference_output.as_bytes() {
            bad.push(t.id.clone());
        }
    }
    Ok(bad)
}

/// Outcome of comparing accepted solutions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "detail")]
pub enum MultiSolution {
    Unique,
    /// Two solutions disagreed on this test.
    Multiple(String),
    /// Could not tell; handled as multi-answer.
    Undetermined(String),
}

impl MultiSolution {
    pub fn treat_as_multi(&self) -> bool {
        !matches!(self, MultiSolution::Unique)
    }
}

/// Needed number of accepted solutions for detection.
pub const DETECTION_SOLUTIONS: usize = 3;

/// Runs every solution on every test and compares outputs pairwise.
pub fn detect_multi_solution(
    solutions: &[Program],
    tests: &[TestCase],
    limits: &RunLimits,
) -> Result<MultiSolution, ExecError> {
    if solutions.len() < DETECTION_SOLUTIONS {
        return Ok(MultiSolution::Undetermined(format!(
            "only {} accepted solutions, need {DETECTION_SOLUTIONS}",
            solutions.len()
        )));
    }
    if tests.is_empty() {
        return Ok(MultiSolution::Undetermined("no tests".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..tests.len())
        .flat_map(|t| (0..solutions.len()).map(move |s| (t, s)))
        .collect();
    let outs = jobs
        .par_iter()
        .map(|&(t, s)| execute(&solutions[s], tests[t].input.as_bytes(), limits))
        .collect::<Result<Vec<_>, _>>()?;

    let mut failure = None;
    for (t, test) in tests.iter().enumerate() {
        let row = &outs[t * solutions.len()..(t + 1) * solutions.len()];
        let ok: Vec<&[u8]> = row
            .iter()
            .filter(|o| o.success() && !o.timed_out(limits) && !o.output_overflow)
            .map(|o| o.stdout.as_slice())
            .collect();
        if ok.len() < row.len() && failure.is_none() {
            failure = Some(format!("a solution failed to run on test {}", test.id));
        }
        for i in 0..ok.len() {
            for j in i + 1..ok.len() {
                if !compare_outputs(ok[i], ok[j]) {
                    return Ok(MultiSolution::Multiple(test.id.clone()));
                }
            }
        }
    }
    Ok(match failure {
        Some(why) => MultiSolution::Undetermined(why),
        None => MultiSolution::Unique,
    })
}

/// Detection on a bundle problem using its listed accepted solutions.
pub fn detect_for_problem(
    bundle: &ContestBundle,
    pid: &str,
    default_time_limit_ms: u64,
) -> Result<MultiSolution, GenlabError> {
    let meta = bundle
        .problem(pid)
        .ok_or_else(|| GenlabError::UnknownProblem(pid.into()))?;
    let programs = meta
        .accepted_solutions
        .iter()
        .map(|r| bundle.program(r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(detect_multi_solution(
        &programs,
        bundle.tests_for(pid),
        &meta.limits(default_time_limit_ms),
    )?)
}

fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

fn splice(text: &str, edits: &[((usize, usize), &str)]) -> String {
    let mut out = String::with_capacity(text.len());
    let mut at = 0;
    for ((s, e), with) in edits {
        out.push_str(&text[at..*s]);
        out.push_str(with);
        at = *e;
    }
    out.push_str(&text[at..]);
    out
}

fn bump(token: &str) -> Option<String> {
    if let Ok(v) = token.parse::<i128>() {
        return v.checked_add(1).map(|x| x.to_string());
    }
    let decimals = token.split_once('.').map(|(_, f)| f.len())?;
    let v: f64 = token.parse().ok()?;
    v.is_finite().then(|| format!("{:.*}", decimals, v + 1.0))
}

/// Up to three corrupted copies of `reference`: last token deleted, first
/// two distinct tokens swapped, first numeric token plus one. Mutants that
/// are token-equal to the reference or to any of `legit` are dropped.
pub fn corruption_samples(reference: &str, legit: &[&str]) -> Vec<String> {
    let spans = token_spans(reference);
    let tok = |i: usize| &reference[spans[i].0..spans[i].1];
    let mut mutants = Vec::new();
    if let Some(&last) = spans.last() {
        mutants.push(splice(reference, &[(last, "")]));
    }
    if let Some(j) = (1..spans.len()).find(|&j| tok(j) != tok(0)) {
        mutants.push(splice(reference, &[(spans[0], tok(j)), (spans[j], tok(0))]));
    }
    if let Some((i, v)) = (0..spans.len()).find_map(|i| bump(tok(i)).map(|v| (i, v))) {
        mutants.push(splice(reference, &[(spans[i], &v)]));
    }
    let same = |a: &str, b: &str| tokens(a).eq(tokens(b));
    let mut kept: Vec<String> = Vec::new();
    for m in mutants {
        if same(&m, reference) || legit.iter().any(|l| same(&m, l)) || kept.iter().any(|k| same(k, &m)) {
            continue;
        }
        kept.push(m);
    }
    kept
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifierReport {
    pub usable: bool,
    /// Verifier invocations that behaved as expected.
    pub passed_checks: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// The outputs a verifier has to agree with, per test.
pub struct ValidationCase<'a> {
    pub test: &'a TestCase,
    /// Outputs of accepted solutions on this test.
    pub accepted_outputs: Vec<String>,
}

/// Usable iff the verifier accepts every legitimate output (including the
/// reference) and rejects every corruption sample. A crash or timeout makes
/// it unusable.
pub fn validate_verifier(verifier: &Program, cases: &[ValidationCase<'_>], limits: &RunLimits) -> VerifierReport {
    let mut report = VerifierReport::default();
    if cases.is_empty() {
        report.failure = Some("no tests to validate against".into());
        return report;
    }
    for case in cases {
        let t = case.test;
        let legit: Vec<&str> = std::iter::once(t.reference_output.as_str())
            .chain(case.accepted_outputs.iter().map(String::as_str))
            .collect();
        let mut checks: Vec<(String, bool)> = legit.iter().map(|s| (s.to_string(), true)).collect();
        checks.extend(
            corruption_samples(&t.reference_output, &legit)
                .into_iter()
                .map(|m| (m, false)),
        );
        for (output, should_accept) in checks {
            let verdict = run_verifier_on(
                verifier,
                t.input.as_bytes(),
                output.as_bytes(),
                t.reference_output.as_bytes(),
                limits,
            );
            let failure = match verdict {
                Err(e) => Some(format!("test {}: {e}", t.id)),
                Ok(v) if v.accepted() != should_accept => Some(if should_accept {
                    format!("test {}: rejected a legitimate output", t.id)
                } else {
                    format!("test {}: accepted a corrupted output", t.id)
                }),
                Ok(_) => None,
            };
            if let Some(f) = failure {
                report.failure = Some(f);
                return report;
            }
            report.passed_checks += 1;
        }
    }
    report.usable = true;
    report
}

/// Validates a problem's verifier against its tests and accepted
/// solutions. Problems without a verifier are reported unusable.
pub fn validate_problem_verifier(
    bundle: &ContestBundle,
    pid: &str,
    default_time_limit_ms: u64,
    verifier_limits: &RunLimits,
) -> Result<VerifierReport, GenlabError> {
    let meta = bundle
        .problem(pid)
        .ok_or_else(|| GenlabError::UnknownProblem(pid.into()))?;
    let Some(vref) = &meta.verifier else {
        return Ok(VerifierReport {
            usable: false,
            passed_checks: 0,
            failure: Some("no verifier".into()),
        });
    };
    let verifier = bundle.program(vref)?;
    let limits = meta.limits(default_time_limit_ms);
    let solutions = meta
        .accepted_solutions
        .iter()
        .map(|r| bundle.program(r))
        .collect::<Result<Vec<_>, _>>()?;
    let tests = bundle.tests_for(pid);
    let mut cases = Vec::new();
    for t in tests {
        let mut outputs = Vec::new();
        for s in &solutions {
            let out = execute(s, t.input.as_bytes(), &limits)?;
            if !out.success() || out.timed_out(&limits) {
                return Ok(VerifierReport {
                    usable: false,
                    passed_checks: 0,
                    failure: Some(format!("accepted solution {s} failed on test {}", t.id)),
                });
            }
            outputs.push(String::from_utf8_lossy(&out.stdout).into_owned());
        }
        cases.push(ValidationCase {
            test: t,
            accepted_outputs: outputs,
        });
    }
    Ok(validate_verifier(&verifier, &cases, verifier_limits))
}

/// Records a validation result in the manifest: unusable verifiers exclude
/// the problem from scoring.
pub fn apply_verifier_report(bundle: &mut ContestBundle, pid: &str, report: &VerifierReport) {
    if let Some(p) = bundle.problem_mut(pid) {
        p.excluded = if report.usable {
            None
        } else {
            Some(format!(
                "unverifiable: {}",
                report.failure.as_deref().unwrap_or("verifier rejected")
            ))
        };
    }
}

/// Records a detection result. Undetermined counts as multi-answer.
pub fn apply_detection(bundle: &mut ContestBundle, pid: &str, result: &MultiSolution) {
    if let Some(p) = bundle.problem_mut(pid) {
        p.multi_solution = result.treat_as_multi();
    }
}

/// Whether a problem would be judged with a verifier or by token compare.
pub fn check_mode_name(mode: &CheckMode) -> &'static str {
    match mode {
        CheckMode::Compare => "compare",
        CheckMode::Verifier { .. } => "verifier",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sh(script: &str) -> Program {
        Program::new(["sh", "-c", script, "prog"]).unwrap()
    }

    fn limits() -> RunLimits {
        RunLimits {
            time_limit_ms: 1000,
            ..RunLimits::default()
        }
    }

    fn case(id: &str, input: &str, out: &str) -> TestCase {
        TestCase {
            id: id.into(),
            input: input.into(),
            reference_output: out.into(),
            origin: Origin::Sample,
        }
    }

    #[test]
    fn oracle_keeps_clean_inputs_and_explains_the_rest() {
        // Doubles the number; exits 3 on negatives, sleeps on 999, prints nothing on 0.
        let official = sh(r#"read n; case $n in -*) exit 3;; 999) sleep 5;; 0) exit 0;; esac; echo $((n*2))"#);
        let inputs: Vec<String> = ["4", "-1", "999", "0", "4\n", "", "7"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let existing = [case("001", "7\n", "14\n")];
        let (tests, rejected) = oracle_outputs(&inputs, &official, &limits(), &existing, 2).unwrap();
        assert_eq!(tests.len(), 1);
        assert_eq!(tests[0].id, "002");
        assert_eq!(tests[0].input, "4\n");
        assert_eq!(tests[0].reference_output, "8\n");
        assert_eq!(tests[0].origin, Origin::Generated);
        let reasons: Vec<_> = rejected.iter().map(|r| (r.input.as_str(), r.reason.as_str())).collect();
        assert_eq!(
            reasons,
            vec![
                ("4\n", "duplicate input"),
                ("", "empty input"),
                ("7", "duplicate input"),
                ("-1", "oracle runtime error: exit status 3"),
                ("999", "oracle timeout"),
                ("0", "empty output"),
            ]
        );
        assert_eq!(tests.len() + rejected.len(), inputs.len());
    }

    #[test]
    fn detection_outcomes() {
        let tests = [case("001", "3\n", "1 2\n")];
        let same = sh("echo 1 2");
        let spaced = sh("printf '1   2\\n'");
        let other = sh("echo 2 1");
        let crash = sh("kill -SEGV $$");
        let l = limits();
        assert_eq!(
            detect_multi_solution(&[same.clone(), spaced.clone(), same.clone()], &tests, &l).unwrap(),
            MultiSolution::Unique
        );
        assert_eq!(
            detect_multi_solution(&[same.clone(), same.clone(), other], &tests, &l).unwrap(),
            MultiSolution::Multiple("001".into())
        );
        let r = detect_multi_solution(&[same.clone(), same.clone(), crash], &tests, &l).unwrap();
        assert!(matches!(r, MultiSolution::Undetermined(_)) && r.treat_as_multi());
        assert!(matches!(
            detect_multi_solution(&[same.clone(), same], &tests, &l).unwrap(),
            MultiSolution::Undetermined(_)
        ));
    }

    #[test]
    fn corruptions_preserve_layout_and_differ_from_legit_outputs() {
        assert_eq!(
            corruption_samples("3\n1 2 5\n", &[]),
            vec!["3\n1 2 \n", "1\n3 2 5\n", "4\n1 2 5\n"]
        );
        // Swap is a no-op when every token is the same.
        assert_eq!(corruption_samples("7 7", &[]), vec!["7 ", "8 7"]);
        assert_eq!(corruption_samples("YES\n", &[]), vec!["\n"]);
        assert_eq!(corruption_samples("0.50", &[]), vec!["", "1.50"]);
        // "2 1" is also a valid answer, so the swap mutant is dropped.
        assert_eq!(corruption_samples("1 2", &["2 1"]), vec!["1 ", "2 2"]);
        assert!(corruption_samples("", &[]).is_empty());
    }

    fn verifier_cases(tests: &[TestCase]) -> Vec<ValidationCase<'_>> {
        tests
            .iter()
            .map(|t| ValidationCase {
                test: t,
                accepted_outputs: vec!["2 1\n".into()],
            })
            .collect()
    }

    #[test]
    fn verifier_battery() {
        // Any permutation of 1 2 is fine.
        let good = sh(r#"test "$(tr -s ' \n' '\n\n' < "$2" | sort | tr '\n' ' ')" = "1 2 ""#);
        let tests = [case("001", "2\n", "1 2\n")];
        let cases = verifier_cases(&tests);
        let l = limits();
        let r = validate_verifier(&good, &cases, &l);
        assert!(r.usable, "{r:?}");
        assert!(r.passed_checks >= 3);

        let all = validate_verifier(&sh("exit 0"), &cases, &l);
        assert!(!all.usable && all.failure.unwrap().contains("accepted a corrupted"));
        let none = validate_verifier(&sh("exit 1"), &cases, &l);
        assert!(!none.usable && none.failure.unwrap().contains("rejected a legitimate"));
        let crash = validate_verifier(&sh("kill -ABRT $$"), &cases, &l);
        assert!(!crash.usable && crash.failure.unwrap().contains("signal"));
        // Too strict: only the exact reference passes.
        let strict = validate_verifier(&sh(r#"cmp -s "$2" "$3""#), &cases, &l);
        assert!(!strict.usable);
    }
}
