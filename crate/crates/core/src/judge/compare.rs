//! Token-exact output comparison.
//!
//! Outputs are split on runs of whitespace and the token sequences must
//! match exactly. `1.0` and `1` are different answers; problems that accept
//! approximate values need a verifier.

/// Why two outputs were judged different.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mismatch {
    NotUtf8,
    Token {
        index: usize,
        expected: String,
        found: String,
    },
    Length {
        expected: usize,
        found: usize,
    },
}

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mismatch::NotUtf8 => write!(f, "output is not valid UTF-8"),
            Mismatch::Token { index, expected, found } => write!(
                f,
                "token {}: expected `{}`, found `{}`",
                index + 1,
                clip(expected),
                clip(found)
            ),
            Mismatch::Length { expected, found } => {
                write!(f, "expected {expected} tokens, found {found}")
            }
        }
    }
}

fn clip(s: &str) -> String {
    if s.chars().count() <= 32 {
        s.to_owned()
    } else {
        let head: String = s.chars().take(32).collect();
        format!("{head}...")
    }
}

pub fn tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
}

/// Detailed comparison of a candidate output against the reference.
pub fn check_output(candidate: &[u8], reference: &[u8]) -> Result<(), Mismatch> {
    let candidate = std::str::from_utf8(candidate).map_err(|_| Mismatch::NotUtf8)?;
    let reference = std::str::from_utf8(reference).map_err(|_| Mismatch::NotUtf8)?;
    let mut want = tokens(reference);
    let mut got = tokens(candidate);
    let mut index = 0;
    loop {
        match (want.next(), got.next()) {
            (None, None) => return Ok(()),
            (Some(e), Some(f)) if e == f => index += 1,
            (Some(e), Some(f)) => {
                return Err(Mismatch::Token {
                    index,
                    expected: e.to_owned(),
                    found: f.to_owned(),
                })
            }
            (e, f) => {
                let expected = index + usize::from(e.is_some()) + want.count();
                let found = index + usize::from(f.is_some()) + got.count();
                return Err(Mismatch::Length { expected, found });
            }
        }
    }
}

pub fn compare_outputs(candidate: &[u8], reference: &[u8]) -> bool {
    check_output(candidate, reference).is_ok()
}
