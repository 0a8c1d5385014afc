//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cfelo::dataset::{find_bundles, load_bundle, save_bundle};
use cfelo::experiments::{rq1_ordering_delta, ContestContext, EvaluationRun};
use cfelo::genlab::gateway::ReplayGateway;
use cfelo::genlab::{
    apply_verifier_report, gen_tests_for_bundle, validate_problem_verifier, verify_oracle, GenOptions,
};
use cfelo::judge::{
    judge_solution, JudgePool, Origin, Program, RunLimits, TestCase, VerdictKind, DEFAULT_TIME_LIMIT_MS,
};
use cfelo::rating::{expected_rank, seek_rating, Rating, RatingPool, SearchParams};
use cfelo::standings::{rank_virtual, OrderingPolicy, Participant, ProblemResult, ScoreRow, ScoringRules, TieMode};
use common::{bundle_copy, copy_tree, fixtures, snapshot, violations};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const VERDICTS: [VerdictKind; 4] = [
    VerdictKind::Accepted,
    VerdictKind::WrongAnswer,
    VerdictKind::TimeLimitExceeded,
    VerdictKind::RuntimeError,
];

fn random_ratings(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(800.0..=3500.0)).collect()
}

fn elo_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = SearchParams::default();
    let started = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=5000);
        let pool = RatingPool::from_values(&random_ratings(&mut rng, n)).unwrap();
        let r = rng.random_range(800.0..=3500.0);
        let m = expected_rank(Rating::new(r).unwrap(), &pool);
        let got = seek_rating(m, &pool, &params).unwrap();
        worst = worst.max((got.rating - r).abs());
    }
    let secs = started.elapsed().as_secs_f64();
    let detail = format!("1000 pools, max |error| {worst:.2e}, {secs:.2} s");
    if worst <= 0.5 && secs < 10.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn monte_carlo_rank() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    const TRIALS: usize = 100_000;
    let mut worst_z = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(1..=50);
        let humans = random_ratings(&mut rng, n);
        let r = rng.random_range(800.0..=3500.0);
        let pool = RatingPool::from_values(&humans).unwrap();
        let expected = expected_rank(Rating::new(r).unwrap(), &pool);
        let beat: Vec<f64> = humans
            .iter()
            .map(|&h| 1.0 / (1.0 + 10f64.powf((r - h) / 400.0)))
            .collect();
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..TRIALS {
            let rank = 1.0 + beat.iter().filter(|&&p| rng.random::<f64>() < p).count() as f64;
            sum += rank;
            sum_sq += rank * rank;
        }
        let mean = sum / TRIALS as f64;
        let var = (sum_sq / TRIALS as f64 - mean * mean) * TRIALS as f64 / (TRIALS - 1) as f64;
        let se = (var / TRIALS as f64).sqrt();
        let z = if se > 0.0 {
            (mean - expected).abs() / se
        } else {
            (mean - expected).abs() * f64::INFINITY
        };
        worst_z = worst_z.max(if z.is_nan() { 0.0 } else { z });
    }
    let detail = format!("20 pairs x {TRIALS} trials, max deviation {worst_z:.2} standard errors");
    if worst_z <= 3.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// A random contest: `k` problems, humans whose solve chance rises with
/// rating and whose solve minute rises with difficulty.
fn synthetic_contest(rng: &mut ChaCha8Rng, k: usize) -> ContestContext {
    let problems: Vec<String> = (0..k).map(|i| ((b'A' + i as u8) as char).to_string()).collect();
    let n = rng.random_range(20..=200);
    let humans = (0..n)
        .map(|i| {
            let rating = rng.random_range(800.0..=3500.0);
            let skill = (rating - 800.0) / 2700.0;
            let mut results = BTreeMap::new();
            for (j, p) in problems.iter().enumerate() {
                let difficulty = (j as f64 + 0.5) / k as f64;
                let wrong = rng.random_range(0..=3);
                let r = if rng.random::<f64>() < (0.15 + skill - difficulty + 0.5).clamp(0.05, 0.95) {
                    ProblemResult::solved(rng.random_range(1..=10 + 25 * j as u32), wrong)
                } else {
                    ProblemResult::unsolved(wrong)
                };
                results.insert(p.clone(), r);
            }
            Participant {
                id: format!("h{i:03}"),
                rating: Rating::new(rating).unwrap(),
                results,
            }
        })
        .collect();
    ContestContext {
        contest_id: "synthetic".into(),
        division: 2,
        problems: problems.clone(),
        scorable: problems,
        humans,
    }
}

fn synthetic_run(ctx: &ContestContext, problems: BTreeMap<String, Vec<VerdictKind>>) -> EvaluationRun {
    EvaluationRun {
        run_id: "r".into(),
        model_label: "synthetic".into(),
        contest_id: ctx.contest_id.clone(),
        n_candidates: problems.values().map(Vec::len).max().unwrap_or(0),
        policy: OrderingPolicy::Worst,
        fingerprint: String::new(),
        tool_version: String::new(),
        problems,
    }
}

fn ordering_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rules = ScoringRules::default();
    let (mut negative, mut clean, mut clean_nonzero, mut failing_zero) = (0, 0, 0, 0);
    let mut same_rank = 0;
    for _ in 0..1000 {
        let k = rng.random_range(1..=6);
        let ctx = synthetic_contest(&mut rng, k);
        let verdicts: BTreeMap<String, Vec<VerdictKind>> = ctx
            .problems
            .iter()
            .map(|p| {
                let len = rng.random_range(1..=9);
                (p.clone(), (0..len).map(|_| VERDICTS[rng.random_range(0..4)]).collect())
            })
            .collect();
        let no_failure_on_solved = verdicts
            .values()
            .all(|seq| !seq.iter().any(|v| v.is_accepted()) || !seq.iter().any(|v| v.is_failure()));
        let n = verdicts.values().map(Vec::len).max().unwrap();
        let row = rq1_ordering_delta(&synthetic_run(&ctx, verdicts), &ctx, n, &rules).unwrap();
        if row.delta < 0.0 {
            negative += 1;
        }
        match (no_failure_on_solved, row.delta == 0.0) {
            (true, true) => clean += 1,
            (true, false) => clean_nonzero += 1,
            (false, true) => {
                failing_zero += 1;
                if row.optimal_rank == row.worst_rank {
                    same_rank += 1;
                }
            }
            (false, false) => {}
        }
    }
    let detail = format!(
        "delta < 0 in {negative}/1000; zero-failure/no-AC cases with delta = 0: {clean}, with delta != 0: {clean_nonzero}; \
         cases with failures on a solved problem but delta = 0: {failing_zero} \
         (optimal and worst rank equal in {same_rank} of them)"
    );
    if negative == 0 && clean_nonzero == 0 && failing_zero == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn n_amplification() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rules = ScoringRules::default();
    let ns = [3usize, 6, 9];
    let mut sums = [0.0f64; 3];
    for _ in 0..200 {
        let ctx = synthetic_contest(&mut rng, 5);
        let verdicts: BTreeMap<String, Vec<VerdictKind>> = ctx
            .problems
            .iter()
            .enumerate()
            .map(|(j, p)| {
                // Fixed per problem, rising with difficulty.
                let fail = 0.2 + 0.15 * j as f64;
                let seq = (0..9)
                    .map(|_| {
                        if rng.random::<f64>() < fail {
                            VERDICTS[rng.random_range(1..4)]
                        } else {
                            VerdictKind::Accepted
                        }
                    })
                    .collect();
                (p.clone(), seq)
            })
            .collect();
        let run = synthetic_run(&ctx, verdicts);
        for (i, &n) in ns.iter().enumerate() {
            sums[i] += rq1_ordering_delta(&run, &ctx, n, &rules).unwrap().delta;
        }
    }
    let means: Vec<f64> = sums.iter().map(|s| s / 200.0).collect();
    let detail = format!(
        "mean delta n=3: {:.1}, n=6: {:.1}, n=9: {:.1}",
        means[0], means[1], means[2]
    );
    if means.windows(2).all(|w| w[0] <= w[1]) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn standings_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let row = |rng: &mut ChaCha8Rng| ScoreRow {
        participant_id: String::new(),
        rating: None,
        solved: rng.random_range(0..=5),
        penalty: rng.random_range(0..=300),
    };
    let mut mismatches = 0;
    for _ in 0..10_000 {
        let n = rng.random_range(0..=1000);
        let humans: Vec<ScoreRow> = (0..n).map(|_| row(&mut rng)).collect();
        let model = row(&mut rng);
        for ties in [TieMode::Pessimistic, TieMode::Optimistic] {
            // Sort everyone by (solved desc, penalty asc); the tie mode decides
            // whether the model goes after or before equal humans.
            let model_after_ties = ties == TieMode::Pessimistic;
            let mut all: Vec<(u32, u64, bool)> = humans
                .iter()
                .map(|h| (h.solved, h.penalty, false))
                .chain([(model.solved, model.penalty, true)])
                .collect();
            all.sort_by(|a, b| {
                b.0.cmp(&a.0)
                    .then(a.1.cmp(&b.1))
                    .then(if model_after_ties { a.2.cmp(&b.2) } else { b.2.cmp(&a.2) })
            });
            let naive = all.iter().position(|e| e.2).unwrap() + 1;
            if naive != rank_virtual(&model, &humans, ties) {
                mismatches += 1;
            }
        }
    }
    let detail = format!("10000 instances x 2 tie modes, {mismatches} mismatches");
    if mismatches == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn load_judge_tests(dir: &Path) -> Vec<TestCase> {
    let mut ids: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "in"))
        .map(|p| p.file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    ids.sort();
    ids.into_iter()
        .map(|id| TestCase {
            input: fs::read_to_string(dir.join(format!("{id}.in"))).unwrap(),
            reference_output: fs::read_to_string(dir.join(format!("{id}.ans"))).unwrap(),
            origin: Origin::Generated,
            id,
        })
        .collect()
}

fn python(path: &Path) -> Program {
    Program::new(["python3".to_owned(), path.to_string_lossy().into_owned()]).unwrap()
}

fn judge_fixtures() -> Outcome {
    let root = fixtures().join("judge");
    let tests = load_judge_tests(&root.join("tests"));
    let expected: Vec<(String, String)> = fs::read_to_string(root.join("expected.txt"))
        .unwrap()
        .lines()
        .map(|l| {
            let (f, v) = l.split_once(' ').unwrap();
            (f.to_owned(), v.to_owned())
        })
        .collect();
    let programs: Vec<Program> = expected
        .iter()
        .map(|(f, _)| python(&root.join("programs").join(f)))
        .collect();
    let limits = RunLimits {
        time_limit_ms: 1000,
        ..RunLimits::default()
    };
    let batch: Vec<Program> = (0..10).flat_map(|_| programs.iter().cloned()).collect();
    let results = JudgePool::new(6).judge_all(&batch, &tests, &limits, &cfelo::judge::CheckMode::Compare);
    let reps: Vec<Vec<(String, Option<String>)>> = results
        .chunks(programs.len())
        .map(|rep| {
            rep.iter()
                .map(|r| {
                    let v = r.as_ref().unwrap();
                    (v.kind.code().to_owned(), v.failed_test.clone())
                })
                .collect()
        })
        .collect();
    let want: Vec<&str> = expected.iter().map(|(_, v)| v.as_str()).collect();
    let first: Vec<&str> = reps[0].iter().map(|(c, _)| c.as_str()).collect();
    let stable = reps.iter().all(|r| r == &reps[0]);
    let detail = format!("got {} over 10 repetitions, identical: {stable}", first.join("/"));
    if first == want && stable {
        Ok(detail)
    } else {
        Err(format!("{detail}; want {}", want.join("/")))
    }
}

fn verifier_gate() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let dir = bundle_copy(tmp.path(), "c1");
    let vlimits = RunLimits {
        time_limit_ms: 2000,
        ..RunLimits::default()
    };
    let mut verdicts = Vec::new();
    let mut ok = true;
    for (name, should_pass) in [
        ("good", true),
        ("accepts_all", false),
        ("rejects_all", false),
        ("crashes", false),
    ] {
        fs::copy(
            fixtures().join(format!("verifiers/{name}.py")),
            dir.join("solutions/C/verifier.py"),
        )
        .unwrap();
        let mut bundle = load_bundle(&dir).unwrap();
        let report = validate_problem_verifier(&bundle, "C", DEFAULT_TIME_LIMIT_MS, &vlimits).unwrap();
        ok &= report.usable == should_pass;
        verdicts.push(format!("{name}={}", if report.usable { "usable" } else { "unusable" }));
        if !should_pass {
            apply_verifier_report(&mut bundle, "C", &report);
            save_bundle(&bundle, &dir).unwrap();
            let reloaded = load_bundle(&dir).unwrap();
            let excluded = reloaded.problem("C").unwrap().excluded.clone().unwrap_or_default();
            let ctx = ContestContext::from_bundle(&reloaded);
            ok &= excluded.starts_with("unverifiable: ") && ctx.scorable == ["A", "B"];
            let mut p = reloaded.clone();
            p.problem_mut("C").unwrap().excluded = None;
            save_bundle(&p, &dir).unwrap();
        }
    }
    let detail = format!("{}; broken verifiers exclude C from scoring", verdicts.join(", "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn genlab_replay() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let gateway = ReplayGateway::new(fixtures().join("recordings"));
    let opts = GenOptions {
        count: 5,
        ..GenOptions::default()
    };
    let mut same_twice = true;
    let mut same_as_committed = true;
    let mut unsound = Vec::new();
    let mut tests = 0;
    for name in ["c1", "c2"] {
        let dir = bundle_copy(tmp.path(), name);
        let mut runs = Vec::new();
        for _ in 0..2 {
            let mut bundle = load_bundle(&dir).unwrap();
            gen_tests_for_bundle(&mut bundle, &gateway, &opts).unwrap();
            runs.push(snapshot(&dir));
        }
        same_twice &= runs[0] == runs[1];
        same_as_committed &= runs[0] == snapshot(&fixtures().join(name));
        let bundle = load_bundle(&dir).unwrap();
        for pid in bundle.problem_ids() {
            tests += bundle.tests_for(&pid).len();
            for bad in verify_oracle(&bundle, &pid, DEFAULT_TIME_LIMIT_MS).unwrap() {
                unsound.push(format!("{name}/{pid}/{bad}"));
            }
        }
    }
    let detail = format!(
        "two runs identical: {same_twice}, matches committed fixtures: {same_as_committed}, \
         {tests} tests replayed, {} mismatches",
        unsound.len()
    );
    if same_twice && same_as_committed && unsound.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail} {unsound:?}"))
    }
}

fn bundle_round_trip() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut stable = 0;
    let mut unstable = Vec::new();
    let bundles = find_bundles(&fixtures()).unwrap();
    for (i, src) in bundles.iter().enumerate() {
        let bundle = load_bundle(src).unwrap();
        let dst = tmp.path().join(format!("out{i}"));
        save_bundle(&bundle, &dst).unwrap();
        let mut want = snapshot(src);
        want.retain(|k, _| !k.starts_with("genlab/"));
        let copy = tmp.path().join(format!("inplace{i}"));
        copy_tree(src, &copy);
        save_bundle(&load_bundle(&copy).unwrap(), &copy).unwrap();
        if snapshot(&dst) == want && snapshot(&copy) == snapshot(src) {
            stable += 1;
        } else {
            unstable.push(src.display().to_string());
        }
    }
    let mut caught = 0;
    let mut missed = Vec::new();
    let all = violations();
    for v in &all {
        let case = tempfile::tempdir().unwrap();
        let dir = bundle_copy(case.path(), "c1");
        (v.apply)(&dir);
        match load_bundle(&dir) {
            Err(e) if e.to_string().contains(v.expect) => caught += 1,
            other => missed.push(format!(
                "{}: {:?}",
                v.name,
                other.map(|_| "loaded").map_err(|e| e.to_string())
            )),
        }
    }
    let detail = format!(
        "{stable}/{} bundles byte-stable, {caught}/{} invariant violations rejected",
        bundles.len(),
        all.len()
    );
    if unstable.is_empty() && missed.is_empty() && !bundles.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; unstable {unstable:?}; missed {missed:?}"))
    }
}

/// Golden ratings for the fixture contest, computed with 40-digit arithmetic.
const E2E_WORST: (usize, f64) = (4, 1801.9774739606);
const E2E_OPTIMAL: (usize, f64) = (3, 1945.65577077849);

fn end_to_end() -> Outcome {
    let bundle = load_bundle(&fixtures().join("c1")).unwrap();
    let vlimits = RunLimits {
        time_limit_ms: 10_000,
        ..RunLimits::default()
    };
    let solutions = fixtures().join("solutions/run1");
    let mut problems = BTreeMap::new();
    for pid in bundle.problem_ids() {
        let meta = bundle.problem(&pid).unwrap();
        let mode = bundle.check_mode(&pid, vlimits).unwrap();
        let mut files: Vec<_> = fs::read_dir(solutions.join(&pid))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        files.sort();
        let seq = files
            .iter()
            .map(|f| {
                judge_solution(
                    &python(f),
                    bundle.tests_for(&pid),
                    &meta.limits(DEFAULT_TIME_LIMIT_MS),
                    &mode,
                )
                .unwrap()
                .kind
            })
            .collect();
        problems.insert(pid, seq);
    }
    let ctx = ContestContext::from_bundle(&bundle);
    let run = synthetic_run(&ctx, problems);
    let row = rq1_ordering_delta(&run, &ctx, 3, &ScoringRules::default()).unwrap();
    let detail = format!(
        "worst rank {} rating {:.4} (golden {} / {}), optimal rank {} rating {:.4} (golden {} / {})",
        row.worst_rank,
        row.worst_rating,
        E2E_WORST.0,
        E2E_WORST.1,
        row.optimal_rank,
        row.optimal_rating,
        E2E_OPTIMAL.0,
        E2E_OPTIMAL.1
    );
    let close = |got: f64, want: f64| (got - want).abs() <= 0.5;
    if row.worst_rank == E2E_WORST.0
        && row.optimal_rank == E2E_OPTIMAL.0
        && close(row.worst_rating, E2E_WORST.1)
        && close(row.optimal_rating, E2E_OPTIMAL.1)
        && ctx.humans.len() == 10
        && ctx.problems.len() == 3
    {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("elo round trip", elo_round_trip),
        ("monte carlo rank check", monte_carlo_rank),
        ("ordering dominance", ordering_dominance),
        ("n-amplification shape", n_amplification),
        ("standings oracle", standings_oracle),
        ("judge fixtures", judge_fixtures),
        ("verifier gate", verifier_gate),
        ("genlab replay determinism", genlab_replay),
        ("bundle round trip", bundle_round_trip),
        ("end-to-end fixture", end_to_end),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
