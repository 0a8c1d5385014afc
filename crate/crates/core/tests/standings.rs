mod common;

use std::collections::BTreeMap;

use cfelo::dataset::load_bundle;
use cfelo::judge::VerdictKind::{self, *};
use cfelo::rating::Rating;
use cfelo::standings::{score_model_contest, OrderingPolicy, Participant, ProblemResult, ScoringRules, TieMode};
use common::fixtures;

fn verdicts(pairs: &[(&str, &[VerdictKind])]) -> BTreeMap<String, Vec<VerdictKind>> {
    pairs.iter().map(|(p, s)| (p.to_string(), s.to_vec())).collect()
}

fn fixture_humans() -> (Vec<String>, Vec<Participant>) {
    let b = load_bundle(&fixtures().join("c1")).unwrap();
    (b.problem_ids(), b.standings.participants)
}

#[test]
fn fixture_contest_ranks_by_hand() {
    let (problems, humans) = fixture_humans();
    let rules = ScoringRules::default();
    let seq = verdicts(&[
        ("A", &[Accepted]),
        ("B", &[WrongAnswer, Accepted]),
        ("C", &[WrongAnswer, WrongAnswer, RuntimeError]),
    ]);
    // Two solved; worst order costs one rejection on B, so the row is (2, 10).
    // h01, h02 solve three; h04 (2, 8) is ahead; h03 (2, 13) is behind.
    let worst = score_model_contest(&seq, &problems, OrderingPolicy::Worst, &rules, &humans).unwrap();
    assert_eq!((worst.row.solved, worst.row.penalty, worst.rank), (2, 10, 4));
    let optimal = score_model_contest(&seq, &problems, OrderingPolicy::Optimal, &rules, &humans).unwrap();
    assert_eq!((optimal.row.solved, optimal.row.penalty, optimal.rank), (2, 0, 3));
    assert!(optimal.elo.rating > worst.elo.rating);
}

#[test]
fn optimistic_ties_only_move_tied_rows() {
    let (problems, humans) = fixture_humans();
    // h03 has (2, 13); solving A at minute 4 and B at minute 9 ties it.
    let mut rules = ScoringRules::default();
    rules.submission_offsets.insert("A".into(), 4);
    rules.submission_offsets.insert("B".into(), 9);
    let seq = verdicts(&[("A", &[Accepted]), ("B", &[Accepted]), ("C", &[WrongAnswer])]);
    let pess = score_model_contest(&seq, &problems, OrderingPolicy::Worst, &rules, &humans).unwrap();
    rules.tie_mode = TieMode::Optimistic;
    let opt = score_model_contest(&seq, &problems, OrderingPolicy::Worst, &rules, &humans).unwrap();
    assert_eq!(pess.row.penalty, 13);
    assert_eq!(pess.rank, opt.rank + 1);
}

/// Failures on a solved problem do not always move the rating: when no
/// human row lies between the optimal and the worst penalty, both orders
/// produce the same rank.
#[test]
fn failures_without_a_row_in_between_leave_the_rating_unchanged() {
    let humans = vec![
        Participant {
            id: "a".into(),
            rating: Rating::new(1500.0).unwrap(),
            results: [("A".to_string(), ProblemResult::solved(100, 0))].into(),
        },
        Participant {
            id: "b".into(),
            rating: Rating::new(1400.0).unwrap(),
            results: BTreeMap::new(),
        },
    ];
    let problems = vec!["A".to_string()];
    let seq = verdicts(&[("A", &[WrongAnswer, WrongAnswer, Accepted])]);
    let rules = ScoringRules::default();
    let opt = score_model_contest(&seq, &problems, OrderingPolicy::Optimal, &rules, &humans).unwrap();
    let worst = score_model_contest(&seq, &problems, OrderingPolicy::Worst, &rules, &humans).unwrap();
    assert_eq!((opt.row.penalty, worst.row.penalty), (0, 20));
    assert_eq!(opt.rank, worst.rank);
    assert_eq!(opt.elo.rating, worst.elo.rating);
}

#[test]
fn skipped_candidates_do_not_count() {
    let (problems, humans) = fixture_humans();
    let rules = ScoringRules::default();
    let with_skip = verdicts(&[("A", &[Skipped, Accepted]), ("B", &[Skipped]), ("C", &[Skipped])]);
    let plain = verdicts(&[("A", &[Accepted]), ("B", &[]), ("C", &[])]);
    let a = score_model_contest(&with_skip, &problems, OrderingPolicy::Worst, &rules, &humans).unwrap();
    let b = score_model_contest(&plain, &problems, OrderingPolicy::Worst, &rules, &humans).unwrap();
    assert_eq!((a.row.clone(), a.rank), (b.row.clone(), b.rank));
}

#[test]
fn excluded_problems_are_removed_from_human_rows_too() {
    let (_, humans) = fixture_humans();
    let rules = ScoringRules::default();
    let seq = verdicts(&[("A", &[Accepted]), ("B", &[Accepted])]);
    let only_ab = vec!["A".to_string(), "B".to_string()];
    let s = score_model_contest(&seq, &only_ab, OrderingPolicy::Worst, &rules, &humans).unwrap();
    // Without C, h01 and h02 drop to two solves and the model's zero
    // penalty puts it first.
    assert_eq!(s.rank, 1);
}
