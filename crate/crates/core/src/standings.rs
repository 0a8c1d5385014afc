//! Penalty scoreboards and placing a virtual participant among humans.
//!
//! A row is ordered by solved count (more is better), then by penalty
//! minutes (less is better). Penalty is the sum, over solved problems only,
//! of the solve minute plus a fixed cost for every rejected submission that
//! came before the first accepted one.
//!
//! A model submits several candidates per problem, and the order in which
//! they are assumed to reach the judge decides how many count as "before
//! the first accepted one". [`OrderingPolicy`] fixes that order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::judge::VerdictKind;
use crate::rating::{seek_rating, EloResult, Rating, RatingError, RatingPool, SearchParams};

/// Minutes charged per rejected submission before acceptance.
pub const DEFAULT_WRONG_COST: u32 = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StandingsError {
    #[error("verdict sequence is empty")]
    EmptySequence,
    #[error("candidate count must be at least 1")]
    ZeroCandidates,
    #[error("no human participants to rate against")]
    NoHumans,
    #[error(transparent)]
    Rating(#[from] RatingError),
}

/// Final state of one participant on one problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawResult", into = "RawResult")]
pub struct ProblemResult {
    solve_minute: Option<u32>,
    wrong_before_ac: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawResult {
    solved: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    minute: Option<u32>,
    #[serde(default)]
    wrong: u32,
}

impl TryFrom<RawResult> for ProblemResult {
    type Error = String;

    fn try_from(raw: RawResult) -> Result<Self, Self::Error> {
        match (raw.solved, raw.minute) {
            (true, Some(m)) => Ok(Self::solved(m, raw.wrong)),
            (false, None) => Ok(Self::unsolved(raw.wrong)),
            (true, None) => Err("solved result is missing its minute".into()),
            (false, Some(_)) => Err("unsolved result must not carry a minute".into()),
        }
    }
}

impl From<ProblemResult> for RawResult {
    fn from(r: ProblemResult) -> Self {
        RawResult {
            solved: r.is_solved(),
            minute: r.solve_minute,
            wrong: r.wrong_before_ac,
        }
    }
}

impl ProblemResult {
    pub fn solved(minute: u32, wrong_before_ac: u32) -> Self {
        Self {
            solve_minute: Some(minute),
            wrong_before_ac,
        }
    }

    pub fn unsolved(wrong_attempts: u32) -> Self {
        Self {
            solve_minute: None,
            wrong_before_ac: wrong_attempts,
        }
    }

    pub fn is_solved(&self) -> bool {
        self.solve_minute.is_some()
    }

    pub fn solve_minute(&self) -> Option<u32> {
        self.solve_minute
    }

    pub fn wrong_before_ac(&self) -> u32 {
        self.wrong_before_ac
    }

    /// Penalty contributed by this problem. Unsolved problems cost nothing.
    pub fn penalty(&self, wrong_cost: u32) -> u64 {
        match self.solve_minute {
            Some(m) => u64::from(m) + u64::from(wrong_cost) * u64::from(self.wrong_before_ac),
            None => 0,
        }
    }
}

pub fn row_penalty(results: &[ProblemResult], wrong_cost: u32) -> u64 {
    results.iter().map(|r| r.penalty(wrong_cost)).sum()
}

/// One line of a scoreboard.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub participant_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<Rating>,
    pub solved: u32,
    pub penalty: u64,
}

impl ScoreRow {
    pub fn from_results(
        id: impl Into<String>,
        rating: Option<Rating>,
        results: &[ProblemResult],
        wrong_cost: u32,
    ) -> Self {
        Self {
            participant_id: id.into(),
            rating,
            solved: results.iter().filter(|r| r.is_solved()).count() as u32,
            penalty: row_penalty(results, wrong_cost),
        }
    }

    /// True when `self` places strictly ahead of `other`.
    pub fn beats(&self, other: &ScoreRow) -> bool {
        self.key() < other.key()
    }

    pub fn ties(&self, other: &ScoreRow) -> bool {
        self.key() == other.key()
    }

    fn key(&self) -> (std::cmp::Reverse<u32>, u64) {
        (std::cmp::Reverse(self.solved), self.penalty)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingPolicy {
    /// An accepted candidate is submitted first.
    Optimal,
    /// Every failing candidate is submitted before the first accepted one.
    #[default]
    Worst,
    /// Candidates are submitted in generation order.
    AsGiven,
}

impl OrderingPolicy {
    pub fn name(self) -> &'static str {
        match self {
            OrderingPolicy::Optimal => "optimal",
            OrderingPolicy::Worst => "worst",
            OrderingPolicy::AsGiven => "as_given",
        }
    }
}

impl std::fmt::Display for OrderingPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for OrderingPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "optimal" => Ok(OrderingPolicy::Optimal),
            "worst" => Ok(OrderingPolicy::Worst),
            "as_given" | "as-given" => Ok(OrderingPolicy::AsGiven),
            other => Err(format!("unknown ordering policy `{other}`")),
        }
    }
}

/// How the virtual participant is placed among humans with an identical row.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieMode {
    /// The model finishes behind every human it ties with.
    #[default]
    Pessimistic,
    /// The model finishes ahead of every human it ties with.
    Optimistic,
}

impl std::str::FromStr for TieMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pessimistic" => Ok(TieMode::Pessimistic),
            "optimistic" => Ok(TieMode::Optimistic),
            other => Err(format!("unknown tie mode `{other}`")),
        }
    }
}

/// Whether a problem ends up solved and how many rejections precede the
/// accepted submission.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arranged {
    pub solved: bool,
    pub wrong_before_ac: u32,
}

/// Applies a submission order to the candidates' verdicts.
///
/// `SKIP` entries were never executed and are ignored. When nothing is
/// accepted every failure is still counted, though it carries no penalty.
pub fn arrange_submissions(seq: &[VerdictKind], policy: OrderingPolicy) -> Result<Arranged, StandingsError> {
    if seq.is_empty() {
        return Err(StandingsError::EmptySequence);
    }
    let failures = seq.iter().filter(|v| v.is_failure()).count() as u32;
    let Some(first_ac) = seq.iter().position(|v| v.is_accepted()) else {
        return Ok(Arranged {
            solved: false,
            wrong_before_ac: failures,
        });
    };
    let wrong_before_ac = match policy {
        OrderingPolicy::Optimal => 0,
        OrderingPolicy::Worst => failures,
        OrderingPolicy::AsGiven => seq[..first_ac].iter().filter(|v| v.is_failure()).count() as u32,
    };
    Ok(Arranged {
        solved: true,
        wrong_before_ac,
    })
}

/// The first `n` candidates in generation order.
pub fn truncate_candidates(seq: &[VerdictKind], n: usize) -> Result<Vec<VerdictKind>, StandingsError> {
    if n == 0 {
        return Err(StandingsError::ZeroCandidates);
    }
    Ok(seq[..n.min(seq.len())].to_vec())
}

/// Rank of `virtual_row` once inserted among `humans`, starting from 1.
pub fn rank_virtual(virtual_row: &ScoreRow, humans: &[ScoreRow], ties: TieMode) -> usize {
    let better = humans.iter().filter(|h| h.beats(virtual_row)).count();
    let tied = match ties {
        TieMode::Pessimistic => humans.iter().filter(|h| h.ties(virtual_row)).count(),
        TieMode::Optimistic => 0,
    };
    1 + better + tied
}

/// A human contestant as recorded in final standings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Participant {
    pub id: String,
    pub rating: Rating,
    #[serde(default)]
    pub results: BTreeMap<String, ProblemResult>,
}

impl Participant {
    /// Scoreboard row restricted to `problems`.
    pub fn row(&self, problems: &[String], wrong_cost: u32) -> ScoreRow {
        let results: Vec<ProblemResult> = problems.iter().filter_map(|p| self.results.get(p).copied()).collect();
        ScoreRow::from_results(self.id.clone(), Some(self.rating), &results, wrong_cost)
    }
}

/// Everything that turns a model's verdicts into a rating besides the verdicts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoringRules {
    pub wrong_cost: u32,
    /// Solve minute assigned to every accepted model submission.
    pub submission_minute: u32,
    /// Per-problem overrides of `submission_minute`.
    #[serde(default)]
    pub submission_offsets: BTreeMap<String, u32>,
    pub tie_mode: TieMode,
    pub search: SearchParams,
}

impl Default for ScoringRules {
    fn default() -> Self {
        Self {
            wrong_cost: DEFAULT_WRONG_COST,
            submission_minute: 0,
            submission_offsets: BTreeMap::new(),
            tie_mode: TieMode::Pessimistic,
            search: SearchParams::default(),
        }
    }
}

impl ScoringRules {
    pub fn minute_for(&self, problem: &str) -> u32 {
        self.submission_offsets
            .get(problem)
            .copied()
            .unwrap_or(self.submission_minute)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContestScore {
    pub row: ScoreRow,
    pub rank: usize,
    pub humans: usize,
    pub problems: BTreeMap<String, Arranged>,
    pub elo: EloResult,
}

/// Scores a model on one contest and converts its rank into a rating.
///
/// `problems` lists the problems that count; humans are re-scored on the
/// same subset. A problem the model never attempted (missing or empty
/// sequence) is unsolved.
pub fn score_model_contest(
    verdicts: &BTreeMap<String, Vec<VerdictKind>>,
    problems: &[String],
    policy: OrderingPolicy,
    rules: &ScoringRules,
    humans: &[Participant],
) -> Result<ContestScore, StandingsError> {
    if humans.is_empty() {
        return Err(StandingsError::NoHumans);
    }
    let mut arranged = BTreeMap::new();
    let mut results = Vec::with_capacity(problems.len());
    for p in problems {
        let a = match verdicts.get(p) {
            Some(seq) if !seq.is_empty() => arrange_submissions(seq, policy)?,
            _ => Arranged {
                solved: false,
                wrong_before_ac: 0,
            },
        };
        results.push(if a.solved {
            ProblemResult::solved(rules.minute_for(p), a.wrong_before_ac)
        } else {
            ProblemResult::unsolved(a.wrong_before_ac)
        });
        arranged.insert(p.clone(), a);
    }
    let row = ScoreRow::from_results("model", None, &results, rules.wrong_cost);
    let human_rows: Vec<ScoreRow> = humans.iter().map(|h| h.row(problems, rules.wrong_cost)).collect();
    let rank = rank_virtual(&row, &human_rows, rules.tie_mode);
    let pool = RatingPool::new(humans.iter().map(|h| h.rating))?;
    let elo = seek_rating(rank as f64, &pool, &rules.search)?;
    Ok(ContestScore {
        row,
        rank,
        humans: humans.len(),
        problems: arranged,
        elo,
    })
}
