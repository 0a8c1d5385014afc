//! The test-generation prompt and parsing of the model's reply.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::ParsedStatement;

/// Bump when the template text changes; stored with every record.
pub const TEMPLATE_VERSION: &str = "testgen_prompt_v1";
pub const TEMPLATE: &str = include_str!("../../resources/testgen_prompt_v1.txt");
/// Inputs requested per problem when nothing else is configured.
pub const DEFAULT_TEST_COUNT: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("test count must be at least 1")]
pub struct ZeroCount;

/// Renders a statement the way it reads on the page, skipping empty sections.
pub fn render_problem(doc: &ParsedStatement) -> String {
    let mut parts: Vec<String> = Vec::new();
    if !doc.title.is_empty() {
        parts.push(doc.title.trim_end().to_owned());
    }
    parts.push(doc.description.trim_end().to_owned());
    for (head, body) in [
        ("Input", &doc.input_format),
        ("Output", &doc.output_format),
        ("Examples", &doc.examples),
        ("Note", &doc.notes),
    ] {
        if !body.trim().is_empty() {
            parts.push(format!("{head}\n{}", body.trim_end()));
        }
    }
    parts.join("\n\n")
}

pub fn build_testgen_prompt(doc: &ParsedStatement, k: usize) -> Result<String, ZeroCount> {
    if k == 0 {
        return Err(ZeroCount);
    }
    Ok(TEMPLATE
        .replace("{idea_test_count}", &k.to_string())
        .replace("{problem}", &render_problem(doc)))
}

/// Why a whole reply was thrown away.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Error)]
#[serde(rename_all = "snake_case", tag = "kind", content = "detail")]
pub enum GenerationRejection {
    #[error("missing fenced block")]
    MissingFence,
    #[error("invalid JSON: {0}")]
    InvalidJson(String),
    #[error("not an array")]
    NotArray,
    #[error("element {0} is not a string")]
    NonString(usize),
}

fn first_json_fence(text: &str) -> Option<&str> {
    let mut rest = text;
    loop {
        let open = rest.find("```")?;
        let after = &rest[open + 3..];
        let line_end = after.find('\n')?;
        let lang = after[..line_end].trim();
        let body = &after[line_end + 1..];
        let close = body.find("```")?;
        if lang.eq_ignore_ascii_case("json") {
            return Some(&body[..close]);
        }
        rest = &body[close + 3..];
    }
}

/// Extracts the inputs from the first ```json block of a reply.
pub fn parse_generation(response: &str) -> Result<Vec<String>, GenerationRejection> {
    let body = first_json_fence(response).ok_or(GenerationRejection::MissingFence)?;
    let value: serde_json::Value =
        serde_json::from_str(body).map_err(|e| GenerationRejection::InvalidJson(e.to_string()))?;
    let items = value.as_array().ok_or(GenerationRejection::NotArray)?;
    items
        .iter()
        .enumerate()
        .map(|(i, v)| v.as_str().map(str::to_owned).ok_or(GenerationRejection::NonString(i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc() -> ParsedStatement {
        ParsedStatement {
            title: "A. Sum".into(),
            description: "Add two numbers.".into(),
            input_format: "Two integers a and b.".into(),
            output_format: "Their sum.".into(),
            examples: "Input\n1 2\nOutput\n3".into(),
            ..ParsedStatement::default()
        }
    }

    #[test]
    fn prompt_starts_with_count() {
        let p = build_testgen_prompt(&doc(), 5).unwrap();
        assert!(p.starts_with("Generate 5 difficult inputs"));
        assert!(build_testgen_prompt(&doc(), 1)
            .unwrap()
            .starts_with("Generate 1 difficult inputs"));
        assert_eq!(build_testgen_prompt(&doc(), 0), Err(ZeroCount));
    }

    #[test]
    fn prompt_contains_examples_and_no_placeholders() {
        let p = build_testgen_prompt(&doc(), 3).unwrap();
        assert!(p.contains("Examples\nInput\n1 2\nOutput\n3"));
        assert!(p.ends_with("Problem:\nA. Sum\n\nAdd two numbers.\n\nInput\nTwo integers a and b.\n\nOutput\nTheir sum.\n\nExamples\nInput\n1 2\nOutput\n3\n"));
        assert!(!p.contains("{problem}") && !p.contains("{idea_test_count}"));
        assert!(!p.contains("Note\n"));
    }

    #[test]
    fn parses_first_json_fence() {
        assert_eq!(
            parse_generation("```json\n[\"1 2\",\"3 4\"]\n```").unwrap(),
            vec!["1 2", "3 4"]
        );
        let chatty = "Sure.\n```python\nprint(1)\n```\nHere:\n```json\n[\"5\\n\"]\n```\n```json\n[\"x\"]\n```";
        assert_eq!(parse_generation(chatty).unwrap(), vec!["5\n"]);
    }

    #[test]
    fn rejections_carry_reasons() {
        assert_eq!(
            parse_generation("no fence here"),
            Err(GenerationRejection::MissingFence)
        );
        assert_eq!(
            parse_generation("```json\n{\"a\":1}\n```"),
            Err(GenerationRejection::NotArray)
        );
        assert_eq!(
            parse_generation("```json\n[\"a\", 2]\n```"),
            Err(GenerationRejection::NonString(1))
        );
        assert!(matches!(
            parse_generation("```json\n[\"a\",\n```"),
            Err(GenerationRejection::InvalidJson(_))
        ));
        assert_eq!(GenerationRejection::MissingFence.to_string(), "missing fenced block");
        assert_eq!(GenerationRejection::NotArray.to_string(), "not an array");
    }
}
