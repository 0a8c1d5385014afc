use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::bundle::ContestBundle;
use crate::judge::Origin;

/// Corpus-wide counts. Tests are only counted for problems that are kept.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub contests: usize,
    pub problems: usize,
    pub excluded_problems: usize,
    pub sample_tests: usize,
    pub generated_tests: usize,
    pub total_tests: usize,
    /// Contest count per division.
    pub divisions: BTreeMap<u8, usize>,
}

pub fn corpus_stats<'a>(bundles: impl IntoIterator<Item = &'a ContestBundle>) -> CorpusStats {
    let mut s = CorpusStats::default();
    for b in bundles {
        s.contests += 1;
        *s.divisions.entry(b.division()).or_default() += 1;
        for p in &b.manifest.problems {
            if !p.scorable() {
                s.excluded_problems += 1;
                continue;
            }
            s.problems += 1;
            for t in b.tests_for(&p.id) {
                match t.origin {
                    Origin::Sample => s.sample_tests += 1,
                    Origin::Generated => s.generated_tests += 1,
                }
            }
        }
    }
    s.total_tests = s.sample_tests + s.generated_tests;
    s
}
