//! Sensitivity experiments over stored evaluation runs.
//!
//! * rq1: rating gap between the optimal and the worst submission order, as
//!   a function of how many candidates per problem are considered.
//! * rq2: how the same model rates across contests of different divisions.
//! * rq3: how much ratings move between repeated runs of the same model.
//!
//! Runs are verdict files produced by judging; nothing here calls a model.
//! Every aggregate is computed on sorted inputs so reports are
//! byte-identical regardless of how parallel jobs finish.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{canonical_json, ContestBundle, DatasetError};
use crate::judge::VerdictKind;
use crate::standings::{
    score_model_contest, truncate_candidates, ContestScore, OrderingPolicy, Participant, ScoringRules, StandingsError,
};

/// Candidates per problem used for the division and run-variance studies.
pub const FIXED_N: usize = 3;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("no contest with id {0}")]
    UnknownContest(String),
    #[error("contest {0} is loaded twice")]
    DuplicateContest(String),
    #[error("run {run} on contest {contest}: {detail}")]
    ProblemMismatch {
        run: String,
        contest: String,
        detail: String,
    },
    #[error("runs are not comparable: {0}")]
    MismatchedRuns(String),
    #[error("no runs given")]
    NoRuns,
    #[error("candidate count must be at least 1")]
    ZeroCandidates,
    #[error(transparent)]
    Standings(#[from] StandingsError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// One model's verdicts on one contest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationRun {
    pub run_id: String,
    pub model_label: String,
    pub contest_id: String,
    /// Candidates generated per problem.
    pub n_candidates: usize,
    /// Submission order the run is scored with by default.
    pub policy: OrderingPolicy,
    /// Fingerprint of the configuration that produced the verdicts.
    #[serde(default)]
    pub fingerprint: String,
    #[serde(default)]
    pub tool_version: String,
    /// Verdicts in generation order, per problem.
    pub problems: BTreeMap<String, Vec<VerdictKind>>,
}

impl EvaluationRun {
    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| DatasetError::Json {
            path: path.to_owned(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        canonical_json(self)
    }
}

/// Every `*.json` run file directly inside `dir`, in file-name order.
pub fn load_runs(dir: &Path) -> Result<Vec<EvaluationRun>, DatasetError> {
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| DatasetError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| EvaluationRun::load(p)).collect()
}

/// What scoring needs from a contest.
#[derive(Clone, Debug, PartialEq)]
pub struct ContestContext {
    pub contest_id: String,
    pub division: u8,
    /// All problems of the contest.
    pub problems: Vec<String>,
    /// Problems that count towards the score.
    pub scorable: Vec<String>,
    pub humans: Vec<Participant>,
}

impl ContestContext {
    pub fn from_bundle(b: &ContestBundle) -> Self {
        Self {
            contest_id: b.contest_id().to_owned(),
            division: b.division(),
            problems: b.problem_ids(),
            scorable: b.scorable_problems(),
            humans: b.standings.participants.clone(),
        }
    }
}

pub type Contests = BTreeMap<String, ContestContext>;

pub fn index_contests<'a>(bundles: impl IntoIterator<Item = &'a ContestBundle>) -> Result<Contests, ExperimentError> {
    let mut out = Contests::new();
    for b in bundles {
        let ctx = ContestContext::from_bundle(b);
        if out.insert(ctx.contest_id.clone(), ctx).is_some() {
            return Err(ExperimentError::DuplicateContest(b.contest_id().to_owned()));
        }
    }
    Ok(out)
}

fn context<'a>(contests: &'a Contests, run: &EvaluationRun) -> Result<&'a ContestContext, ExperimentError> {
    let ctx = contests
        .get(&run.contest_id)
        .ok_or_else(|| ExperimentError::UnknownContest(run.contest_id.clone()))?;
    check_run(run, ctx)?;
    Ok(ctx)
}

/// The run must be for this contest and cover exactly its problems.
fn check_run(run: &EvaluationRun, ctx: &ContestContext) -> Result<(), ExperimentError> {
    if run.contest_id != ctx.contest_id {
        return Err(ExperimentError::ProblemMismatch {
            run: run.run_id.clone(),
            contest: run.contest_id.clone(),
            detail: format!("run is for contest {}, not {}", run.contest_id, ctx.contest_id),
        });
    }
    let have: BTreeSet<&String> = run.problems.keys().collect();
    let want: BTreeSet<&String> = ctx.problems.iter().collect();
    if have != want {
        let missing: Vec<_> = want.difference(&have).map(|s| s.as_str()).collect();
        let extra: Vec<_> = have.difference(&want).map(|s| s.as_str()).collect();
        return Err(ExperimentError::ProblemMismatch {
            run: run.run_id.clone(),
            contest: run.contest_id.clone(),
            detail: format!("missing [{}], unknown [{}]", missing.join(", "), extra.join(", ")),
        });
    }
    Ok(())
}

/// Scores a run with the first `n` candidates of every problem.
pub fn score_run(
    run: &EvaluationRun,
    ctx: &ContestContext,
    policy: OrderingPolicy,
    n: usize,
    rules: &ScoringRules,
) -> Result<ContestScore, ExperimentError> {
    if n == 0 {
        return Err(ExperimentError::ZeroCandidates);
    }
    check_run(run, ctx)?;
    let mut verdicts = BTreeMap::new();
    for (p, seq) in &run.problems {
        let seq = if seq.is_empty() {
            Vec::new()
        } else {
            truncate_candidates(seq, n)?
        };
        verdicts.insert(p.clone(), seq);
    }
    Ok(score_model_contest(
        &verdicts,
        &ctx.scorable,
        policy,
        rules,
        &ctx.humans,
    )?)
}

/// Descriptive statistics. The standard deviation divides by the count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub range: f64,
    pub q1: f64,
    pub q3: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Stats {
    /// `None` for an empty slice.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let (min, max) = (v[0], v[v.len() - 1]);
        Some(Self {
            count: v.len(),
            mean,
            median: quantile(&v, 0.5),
            std: var.sqrt(),
            min,
            max,
            range: max - min,
            q1: quantile(&v, 0.25),
            q3: quantile(&v, 0.75),
        })
    }
}

/// One rating of one run under one condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub model: String,
    pub run_id: String,
    pub contest_id: String,
    pub division: u8,
    pub condition: String,
    pub rank: usize,
    pub rating: f64,
}

/// Optimal minus worst for one run at one `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub model: String,
    pub run_id: String,
    pub contest_id: String,
    pub division: u8,
    pub n: usize,
    pub optimal_rank: usize,
    pub optimal_rating: f64,
    pub worst_rank: usize,
    pub worst_rating: f64,
    pub delta: f64,
}

/// Values plotted as one box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub model: String,
    pub label: String,
    pub values: Vec<f64>,
    pub stats: Stats,
}

/// A per-model aggregate across groups: the division spread for rq2, the
/// spread of per-run mean ratings for rq3.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub model: String,
    pub label: String,
    /// Labels of the aggregated values, aligned with `values`.
    pub keys: Vec<String>,
    pub values: Vec<f64>,
    pub stats: Stats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub experiment: String,
    /// Parameters fixed by the experiment, such as `n` and `policy`.
    pub settings: BTreeMap<String, String>,
    pub observations: Vec<Observation>,
    pub deltas: Vec<DeltaRow>,
    pub groups: Vec<Group>,
    pub summaries: Vec<Summary>,
    pub warnings: Vec<String>,
}

fn group(model: &str, label: String, mut values: Vec<f64>) -> Option<Group> {
    values.sort_by(f64::total_cmp);
    Stats::of(&values).map(|stats| Group {
        model: model.to_owned(),
        label,
        values,
        stats,
    })
}

fn validate_runs(runs: &[EvaluationRun], contests: &Contests) -> Result<(), ExperimentError> {
    if runs.is_empty() {
        return Err(ExperimentError::NoRuns);
    }
    let mut seen = BTreeSet::new();
    for r in runs {
        context(contests, r)?;
        if !seen.insert((&r.model_label, &r.run_id, &r.contest_id)) {
            return Err(ExperimentError::MismatchedRuns(format!(
                "run {} of {} on contest {} appears twice",
                r.run_id, r.model_label, r.contest_id
            )));
        }
    }
    Ok(())
}

/// Rating gap between optimal and worst order for one run.
pub fn rq1_ordering_delta(
    run: &EvaluationRun,
    ctx: &ContestContext,
    n: usize,
    rules: &ScoringRules,
) -> Result<DeltaRow, ExperimentError> {
    let opt = score_run(run, ctx, OrderingPolicy::Optimal, n, rules)?;
    let worst = score_run(run, ctx, OrderingPolicy::Worst, n, rules)?;
    Ok(DeltaRow {
        model: run.model_label.clone(),
        run_id: run.run_id.clone(),
        contest_id: run.contest_id.clone(),
        division: ctx.division,
        n,
        optimal_rank: opt.rank,
        optimal_rating: opt.elo.rating,
        worst_rank: worst.rank,
        worst_rating: worst.elo.rating,
        delta: opt.elo.rating - worst.elo.rating,
    })
}

/// rq1 over every run and every `n`. Groups hold the deltas per (model, n).
pub fn rq1_report(
    runs: &[EvaluationRun],
    contests: &Contests,
    ns: &[usize],
    rules: &ScoringRules,
) -> Result<SensitivityReport, ExperimentError> {
    validate_runs(runs, contests)?;
    if ns.is_empty() || ns.contains(&0) {
        return Err(ExperimentError::ZeroCandidates);
    }
    let ns: Vec<usize> = ns.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let jobs: Vec<(&EvaluationRun, usize)> = runs.iter().flat_map(|r| ns.iter().map(move |&n| (r, n))).collect();
    let mut deltas = jobs
        .par_iter()
        .map(|&(r, n)| rq1_ordering_delta(r, &contests[&r.contest_id], n, rules))
        .collect::<Result<Vec<_>, _>>()?;
    deltas.sort_by(|a, b| (&a.model, &a.contest_id, a.n, &a.run_id).cmp(&(&b.model, &b.contest_id, b.n, &b.run_id)));

    let mut observations = Vec::new();
    for d in &deltas {
        for (policy, rank, rating) in [
            ("optimal", d.optimal_rank, d.optimal_rating),
            ("worst", d.worst_rank, d.worst_rating),
        ] {
            observations.push(Observation {
                model: d.model.clone(),
                run_id: d.run_id.clone(),
                contest_id: d.contest_id.clone(),
                division: d.division,
                condition: format!("{policy} n={}", d.n),
                rank,
                rating,
            });
        }
    }
    let mut by_group: BTreeMap<(String, usize), Vec<f64>> = BTreeMap::new();
    for d in &deltas {
        by_group.entry((d.model.clone(), d.n)).or_default().push(d.delta);
    }
    let groups = by_group
        .into_iter()
        .filter_map(|((m, n), v)| group(&m, format!("n={n}"), v))
        .collect();

    let mut settings = BTreeMap::new();
    settings.insert(
        "n".into(),
        ns.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
    );
    settings.insert("policy".into(), "optimal,worst".into());
    settings.insert("std".into(), "population".into());
    Ok(SensitivityReport {
        experiment: "rq1".into(),
        settings,
        observations,
        deltas,
        groups,
        summaries: Vec::new(),
        warnings: Vec::new(),
    })
}

fn observe(
    runs: &[EvaluationRun],
    contests: &Contests,
    policy_for: impl Fn(&EvaluationRun) -> (OrderingPolicy, usize) + Sync,
    rules: &ScoringRules,
) -> Result<Vec<Observation>, ExperimentError> {
    let mut obs = runs
        .par_iter()
        .map(|r| {
            let ctx = &contests[&r.contest_id];
            let (policy, n) = policy_for(r);
            let s = score_run(r, ctx, policy, n, rules)?;
            Ok(Observation {
                model: r.model_label.clone(),
                run_id: r.run_id.clone(),
                contest_id: r.contest_id.clone(),
                division: ctx.division,
                condition: format!("{policy} n={n}"),
                rank: s.rank,
                rating: s.elo.rating,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    obs.sort_by(|a, b| (&a.model, &a.contest_id, &a.run_id).cmp(&(&b.model, &b.contest_id, &b.run_id)));
    Ok(obs)
}

/// Per-division rating distributions with `n = 3` and worst order.
///
/// Each model gets one group per division it has runs in, and a summary
/// whose range is the spread between its best and worst division mean.
pub fn rq2_division_profile(
    runs: &[EvaluationRun],
    contests: &Contests,
    rules: &ScoringRules,
) -> Result<SensitivityReport, ExperimentError> {
    validate_runs(runs, contests)?;
    let observations = observe(runs, contests, |_| (OrderingPolicy::Worst, FIXED_N), rules)?;

    let divisions: BTreeSet<u8> = contests.values().map(|c| c.division).collect();
    let models: BTreeSet<&String> = observations.iter().map(|o| &o.model).collect();
    let mut groups = Vec::new();
    let mut summaries = Vec::new();
    let mut warnings = Vec::new();
    for model in models {
        let mut keys = Vec::new();
        let mut means = Vec::new();
        for &d in &divisions {
            let values: Vec<f64> = observations
                .iter()
                .filter(|o| &o.model == model && o.division == d)
                .map(|o| o.rating)
                .collect();
            match group(model, format!("Div. {d}"), values) {
                Some(g) => {
                    keys.push(g.label.clone());
                    means.push(g.stats.mean);
                    groups.push(g);
                }
                None => warnings.push(format!("{model}: no runs in Div. {d}, group omitted")),
            }
        }
        if let Some(stats) = Stats::of(&means) {
            summaries.push(Summary {
                model: model.clone(),
                label: "division means".into(),
                keys,
                values: means,
                stats,
            });
        }
    }

    let mut settings = BTreeMap::new();
    settings.insert("n".into(), FIXED_N.to_string());
    settings.insert("policy".into(), OrderingPolicy::Worst.to_string());
    settings.insert("std".into(), "population".into());
    Ok(SensitivityReport {
        experiment: "rq2".into(),
        settings,
        observations,
        deltas: Vec::new(),
        groups,
        summaries,
        warnings,
    })
}

/// Variation across repeated runs of each model.
///
/// All runs of a model must cover the same contests, and all runs must share
/// `n_candidates` and `policy`. Groups hold per-contest ratings for each run;
/// the summary aggregates the per-run mean ratings.
pub fn rq3_run_variance(
    runs: &[EvaluationRun],
    contests: &Contests,
    rules: &ScoringRules,
) -> Result<SensitivityReport, ExperimentError> {
    validate_runs(runs, contests)?;
    let first = &runs[0];
    if let Some(r) = runs
        .iter()
        .find(|r| r.n_candidates != first.n_candidates || r.policy != first.policy)
    {
        return Err(ExperimentError::MismatchedRuns(format!(
            "run {} uses n={} {}, run {} uses n={} {}",
            first.run_id, first.n_candidates, first.policy, r.run_id, r.n_candidates, r.policy
        )));
    }
    let mut by_model: BTreeMap<&String, BTreeMap<&String, BTreeSet<&String>>> = BTreeMap::new();
    for r in runs {
        by_model
            .entry(&r.model_label)
            .or_default()
            .entry(&r.run_id)
            .or_default()
            .insert(&r.contest_id);
    }
    for (model, per_run) in &by_model {
        if per_run.len() < 2 {
            return Err(ExperimentError::MismatchedRuns(format!("{model} has a single run")));
        }
        let mut it = per_run.iter();
        let (id0, set0) = it.next().expect("non-empty");
        for (id, set) in it {
            if set != set0 {
                return Err(ExperimentError::MismatchedRuns(format!(
                    "{model}: run {id} covers {:?} but run {id0} covers {:?}",
                    set, set0
                )));
            }
        }
    }

    let observations = observe(runs, contests, |r| (r.policy, r.n_candidates), rules)?;
    let mut groups = Vec::new();
    let mut summaries = Vec::new();
    for (model, per_run) in &by_model {
        let mut keys = Vec::new();
        let mut means = Vec::new();
        for run_id in per_run.keys() {
            let values: Vec<f64> = observations
                .iter()
                .filter(|o| &&o.model == model && &&o.run_id == run_id)
                .map(|o| o.rating)
                .collect();
            if let Some(g) = group(model, format!("run {run_id}"), values) {
                keys.push((*run_id).clone());
                means.push(g.stats.mean);
                groups.push(g);
            }
        }
        if let Some(stats) = Stats::of(&means) {
            summaries.push(Summary {
                model: (*model).clone(),
                label: "run means".into(),
                keys,
                values: means,
                stats,
            });
        }
        let contests_of_model: BTreeSet<&String> = per_run.values().next().expect("non-empty").clone();
        for c in contests_of_model {
            let values: Vec<f64> = observations
                .iter()
                .filter(|o| &&o.model == model && &o.contest_id == c)
                .map(|o| o.rating)
                .collect();
            if let Some(stats) = Stats::of(&values) {
                summaries.push(Summary {
                    model: (*model).clone(),
                    label: format!("contest {c}"),
                    keys: observations
                        .iter()
                        .filter(|o| &&o.model == model && &o.contest_id == c)
                        .map(|o| o.run_id.clone())
                        .collect(),
                    values,
                    stats,
                });
            }
        }
    }

    let mut settings = BTreeMap::new();
    settings.insert("n".into(), first.n_candidates.to_string());
    settings.insert("policy".into(), first.policy.to_string());
    settings.insert("std".into(), "population".into());
    Ok(SensitivityReport {
        experiment: "rq3".into(),
        settings,
        observations,
        deltas: Vec::new(),
        groups,
        summaries,
        warnings: Vec::new(),
    })
}

fn fmt(x: f64) -> String {
    format!("{x:.4}")
}

impl SensitivityReport {
    /// CSV with `#`-prefixed header lines for `header` and the experiment
    /// settings. rq1 emits one row per run and `n`; the others one row per
    /// observation.
    pub fn to_csv(&self, header: &[(String, String)]) -> Result<String, csv::Error> {
        let mut out = String::new();
        out.push_str(&format!("# experiment={}\n", self.experiment));
        for (k, v) in header {
            out.push_str(&format!("# {k}={v}\n"));
        }
        for (k, v) in &self.settings {
            out.push_str(&format!("# {k}={v}\n"));
        }
        for w in &self.warnings {
            out.push_str(&format!("# warning={w}\n"));
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        if self.experiment == "rq1" {
            w.write_record([
                "model",
                "contest_id",
                "division",
                "n",
                "run_id",
                "optimal_rank",
                "optimal_rating",
                "worst_rank",
                "worst_rating",
                "delta",
            ])?;
            for d in &self.deltas {
                w.write_record([
                    d.model.clone(),
                    d.contest_id.clone(),
                    d.division.to_string(),
                    d.n.to_string(),
                    d.run_id.clone(),
                    d.optimal_rank.to_string(),
                    fmt(d.optimal_rating),
                    d.worst_rank.to_string(),
                    fmt(d.worst_rating),
                    fmt(d.delta),
                ])?;
            }
        } else {
            w.write_record([
                "model",
                "contest_id",
                "division",
                "condition",
                "run_id",
                "rank",
                "rating",
            ])?;
            for o in &self.observations {
                w.write_record([
                    o.model.clone(),
                    o.contest_id.clone(),
                    o.division.to_string(),
                    o.condition.clone(),
                    o.run_id.clone(),
                    o.rank.to_string(),
                    fmt(o.rating),
                ])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        out.push_str(&String::from_utf8(bytes).expect("csv of utf-8 fields"));
        Ok(out)
    }

    /// Box-plot data: one entry per group with its values and statistics.
    pub fn boxplot_json(&self, header: &[(String, String)]) -> String {
        let groups: Vec<_> = self
            .groups
            .iter()
            .map(|g| {
                serde_json::json!({
                    "model": g.model,
                    "label": g.label,
                    "values": g.values,
                    "mean": g.stats.mean,
                    "median": g.stats.median,
                    "q1": g.stats.q1,
                    "q3": g.stats.q3,
                    "min": g.stats.min,
                    "max": g.stats.max,
                })
            })
            .collect();
        let header: BTreeMap<&str, &str> = header.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        canonical_json(&serde_json::json!({
            "experiment": self.experiment,
            "header": header,
            "settings": self.settings,
            "groups": groups,
            "summaries": self.summaries,
        }))
    }
}
