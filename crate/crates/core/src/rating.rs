//! Elo mathematics for a single virtual participant.
//!
//! Ratings live on the usual logistic Elo scale: a difference of 400 points
//! means the stronger side wins ten times as often as it loses. Given the
//! ratings of everybody who took part in a contest, [`expected_rank`] tells
//! where a participant of some rating should finish on average, and
//! [`seek_rating`] runs that relationship backwards: from the rank a model
//! actually achieved to the rating that would have predicted it.
//!
//! ```
//! use cfelo::rating::{expected_rank, seek_rating, Rating, RatingPool, SearchParams};
//!
//! let pool = RatingPool::from_values(&[1100.0, 1900.0]).unwrap();
//! let m = expected_rank(Rating::new(1500.0).unwrap(), &pool);
//! assert!((m - 2.0).abs() < 1e-12);
//!
//! let found = seek_rating(2.0, &pool, &SearchParams::default()).unwrap();
//! assert!((found.rating - 1500.0).abs() < 1e-6);
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rating difference that corresponds to 10:1 odds.
pub const ELO_SCALE: f64 = 400.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RatingError {
    #[error("rating must be a finite number, got {0}")]
    NonFinite(f64),
    #[error("rating pool is empty")]
    EmptyPool,
    #[error("invalid search bracket [{lo}, {hi}]: need finite lo < hi")]
    InvalidBracket { lo: f64, hi: f64 },
    #[error("search tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("iteration cap must be at least 1")]
    InvalidIterationCap,
    #[error("target rank must be a finite number, got {0}")]
    InvalidTarget(f64),
}

/// A finite Elo rating.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Rating(f64);

impl Rating {
    pub fn new(value: f64) -> Result<Self, RatingError> {
        if value.is_finite() {
            Ok(Self(value))
        } else {
            Err(RatingError::NonFinite(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Rating {
    type Error = RatingError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<Rating> for f64 {
    fn from(r: Rating) -> f64 {
        r.0
    }
}

/// The ratings of every human who took part in a contest.
///
/// Always non-empty. Order carries no meaning.
#[derive(Clone, Debug, PartialEq)]
pub struct RatingPool {
    ratings: Vec<f64>,
}

impl RatingPool {
    pub fn new(ratings: impl IntoIterator<Item = Rating>) -> Result<Self, RatingError> {
        let ratings: Vec<f64> = ratings.into_iter().map(Rating::value).collect();
        if ratings.is_empty() {
            return Err(RatingError::EmptyPool);
        }
        Ok(Self { ratings })
    }

    pub fn from_values(values: &[f64]) -> Result<Self, RatingError> {
        let ratings = values.iter().map(|&v| Rating::new(v)).collect::<Result<Vec<_>, _>>()?;
        Self::new(ratings)
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.ratings
    }

    /// The same pool with every rating moved by `delta`.
    pub fn shifted(&self, delta: f64) -> Result<Self, RatingError> {
        let moved: Vec<f64> = self.ratings.iter().map(|r| r + delta).collect();
        Self::from_values(&moved)
    }
}

/// Probability that a participant rated `a` finishes ahead of one rated `b`.
pub fn win_probability(a: Rating, b: Rating) -> f64 {
    logistic(b.value() - a.value())
}

/// Checked variant of [`win_probability`] for raw numbers.
pub fn win_probability_raw(a: f64, b: f64) -> Result<f64, RatingError> {
    Ok(win_probability(Rating::new(a)?, Rating::new(b)?))
}

// 1 / (1 + 10^(gap/400)); saturates cleanly to 0 or 1 for huge gaps.
#[inline]
fn logistic(gap: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf(gap / ELO_SCALE))
}

/// Expected finishing position of a participant rated `r` against `pool`.
///
/// Each opponent contributes the probability that it beats `r`, and the
/// participant itself occupies position one when nobody beats it, so the
/// result is `1 + Σ P(opponent beats r)`, strictly inside `(1, n + 1)`.
pub fn expected_rank(r: Rating, pool: &RatingPool) -> f64 {
    expected_rank_at(r.value(), pool)
}

fn expected_rank_at(r: f64, pool: &RatingPool) -> f64 {
    1.0 + pool.ratings.iter().map(|&ri| logistic(r - ri)).sum::<f64>()
}

/// Bracket, tolerance and iteration cap for [`seek_rating`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchParams {
    pub lo: f64,
    pub hi: f64,
    pub tolerance: f64,
    pub max_iterations: u32,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: 5000.0,
            tolerance: 1e-6,
            max_iterations: 200,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<(), RatingError> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(RatingError::InvalidBracket {
                lo: self.lo,
                hi: self.hi,
            });
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(RatingError::InvalidTolerance(self.tolerance));
        }
        if self.max_iterations == 0 {
            return Err(RatingError::InvalidIterationCap);
        }
        Ok(())
    }
}

/// Which end of the bracket a target rank fell beyond.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Saturation {
    /// The rank is worse than anything reachable inside the bracket.
    Low,
    /// The rank is better than anything reachable inside the bracket.
    High,
}

/// Outcome of inverting an achieved rank into a rating.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EloResult {
    pub rating: f64,
    pub target_rank: f64,
    /// `expected_rank(rating)`; differs from the target by at most the
    /// slope of the curve times the final bracket width.
    pub achieved_rank: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub iterations: u32,
    pub saturation: Option<Saturation>,
}

impl EloResult {
    pub fn converged(&self, tolerance: f64) -> bool {
        self.saturation.is_none() && self.bracket_hi - self.bracket_lo <= tolerance
    }
}

/// Bisects the decreasing expected-rank curve for the rating whose expected
/// rank equals `target_rank`.
///
/// Targets outside what the bracket can reach are clamped to the nearer end
/// and flagged through [`EloResult::saturation`] rather than reported as
/// errors; this is the normal outcome for first and last place.
pub fn seek_rating(target_rank: f64, pool: &RatingPool, params: &SearchParams) -> Result<EloResult, RatingError> {
    params.validate()?;
    if !target_rank.is_finite() {
        return Err(RatingError::InvalidTarget(target_rank));
    }

    let clamped = |at: f64, saturation| EloResult {
        rating: at,
        target_rank,
        achieved_rank: expected_rank_at(at, pool),
        bracket_lo: at,
        bracket_hi: at,
        iterations: 0,
        saturation,
    };

    let rank_at_lo = expected_rank_at(params.lo, pool);
    if target_rank > rank_at_lo {
        return Ok(clamped(params.lo, Some(Saturation::Low)));
    }
    if target_rank == rank_at_lo {
        return Ok(clamped(params.lo, None));
    }
    let rank_at_hi = expected_rank_at(params.hi, pool);
    if target_rank < rank_at_hi {
        return Ok(clamped(params.hi, Some(Saturation::High)));
    }
    if target_rank == rank_at_hi {
        return Ok(clamped(params.hi, None));
    }

    let (mut lo, mut hi) = (params.lo, params.hi);
    let mut iterations = 0;
    while hi - lo > params.tolerance && iterations < params.max_iterations {
        let mid = lo + (hi - lo) / 2.0;
        if expected_rank_at(mid, pool) > target_rank {
            // still ranked too low: the rating must be higher
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let rating = lo + (hi - lo) / 2.0;
    Ok(EloResult {
        rating,
        target_rank,
        achieved_rank: expected_rank_at(rating, pool),
        bracket_lo: lo,
        bracket_hi: hi,
        iterations,
        saturation: None,
    })
}
