//! Problem-page snapshot parsing.
//!
//! Works on saved Codeforces problem pages. The statement lives under
//! `div.problem-statement`: a header with title and limits, an unclassed
//! `div` with the legend, then `input-specification`, `output-specification`,
//! `sample-tests` and `note` blocks. Tags sit elsewhere on the page in
//! `span.tag-box` elements. Markup that is not recognised is flattened to
//! text.

use scraper::{ElementRef, Html, Node, Selector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("problem page has no {0} section")]
    MissingSection(&'static str),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub input: String,
    pub output: String,
}

/// Structured content of one statement page.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedStatement {
    #[serde(default)]
    pub title: String,
    pub description: String,
    pub input_format: String,
    #[serde(default)]
    pub output_format: String,
    /// Samples rendered as text, the way they read on the page.
    #[serde(default)]
    pub examples: String,
    #[serde(default)]
    pub notes: String,
    #[serde(default)]
    pub samples: Vec<Sample>,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_limit_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory_limit_mb: Option<u64>,
}

fn sel(css: &str) -> Selector {
    Selector::parse(css).expect("static selector")
}

fn has_class(el: &ElementRef<'_>, class: &str) -> bool {
    el.value().classes().any(|c| c == class)
}

/// Lossy entry point for arbitrary bytes.
pub fn parse_problem_bytes(bytes: &[u8]) -> Result<ParsedStatement, ParseError> {
    parse_problem_html(&String::from_utf8_lossy(bytes))
}

pub fn parse_problem_html(html: &str) -> Result<ParsedStatement, ParseError> {
    let doc = Html::parse_document(html);
    let root = doc
        .select(&sel("div.problem-statement"))
        .next()
        .unwrap_or_else(|| doc.root_element());

    let mut out = ParsedStatement::default();

    if let Some(header) = root.select(&sel("div.header")).next() {
        if let Some(t) = header.select(&sel(".title")).next() {
            out.title = render_text(t);
        }
        out.time_limit_ms = header
            .select(&sel(".time-limit"))
            .next()
            .and_then(|e| parse_seconds(&render_text(e)));
        out.memory_limit_mb = header
            .select(&sel(".memory-limit"))
            .next()
            .and_then(|e| parse_megabytes(&render_text(e)));
    }

    // the legend is the first unclassed block after the header
    out.description = root
        .children()
        .filter_map(ElementRef::wrap)
        .find(|e| e.value().name() == "div" && e.value().attr("class").is_none_or(|c| c.trim().is_empty()))
        .map(render_text)
        .unwrap_or_default();

    let section = |class: &str| {
        root.select(&sel(&format!("div.{class}")))
            .next()
            .map(render_text)
            .unwrap_or_default()
    };
    out.input_format = section("input-specification");
    out.output_format = section("output-specification");
    out.notes = section("note");

    for block in root.select(&sel("div.sample-test")) {
        let inputs: Vec<String> = block.select(&sel("div.input pre")).map(render_pre).collect();
        let outputs: Vec<String> = block.select(&sel("div.output pre")).map(render_pre).collect();
        for (input, output) in inputs.into_iter().zip(outputs) {
            out.samples.push(Sample { input, output });
        }
    }
    out.examples = out
        .samples
        .iter()
        .map(|s| format!("Input\n{}Output\n{}", s.input, s.output))
        .collect::<Vec<_>>()
        .join("\n");

    let mut tags: Vec<String> = doc
        .select(&sel("span.tag-box"))
        .map(|e| e.text().collect::<String>().trim().to_owned())
        .filter(|t| !t.is_empty())
        .collect();
    tags.dedup();
    out.tags = tags;

    if out.description.trim().is_empty() {
        return Err(ParseError::MissingSection("description"));
    }
    if out.input_format.trim().is_empty() {
        return Err(ParseError::MissingSection("input_format"));
    }
    Ok(out)
}

fn parse_seconds(text: &str) -> Option<u64> {
    let number = text.split_whitespace().find_map(|w| w.parse::<f64>().ok())?;
    (number.is_finite() && number > 0.0).then(|| (number * 1000.0).round() as u64)
}

fn parse_megabytes(text: &str) -> Option<u64> {
    text.split_whitespace()
        .find_map(|w| w.parse::<u64>().ok())
        .filter(|&m| m > 0)
}

const BLOCKS: &[&str] = &[
    "p",
    "div",
    "li",
    "ul",
    "ol",
    "pre",
    "center",
    "table",
    "tr",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "blockquote",
];

/// Flattens an element to text: blocks become lines, inline whitespace is
/// collapsed, section titles are dropped.
fn render_text(el: ElementRef<'_>) -> String {
    let mut buf = String::new();
    walk(el, &mut buf, false);
    tidy(&buf)
}

fn walk(el: ElementRef<'_>, buf: &mut String, in_pre: bool) {
    for child in el.children() {
        match child.value() {
            Node::Text(t) => {
                if in_pre {
                    buf.push_str(t);
                } else {
                    let mut last_space = buf.ends_with([' ', '\n']);
                    for ch in t.chars() {
                        if ch.is_whitespace() {
                            if !last_space {
                                buf.push(' ');
                                last_space = true;
                            }
                        } else {
                            buf.push(ch);
                            last_space = false;
                        }
                    }
                }
            }
            Node::Element(e) => {
                let Some(child_el) = ElementRef::wrap(child) else {
                    continue;
                };
                let name = e.name();
                if matches!(name, "script" | "style")
                    || has_class(&child_el, "section-title")
                    || has_class(&child_el, "property-title")
                {
                    continue;
                }
                if name == "br" {
                    buf.push('\n');
                    continue;
                }
                let block = BLOCKS.contains(&name);
                if block {
                    buf.push('\n');
                }
                walk(child_el, buf, in_pre || name == "pre");
                if block {
                    buf.push('\n');
                }
            }
            _ => {}
        }
    }
}

fn tidy(raw: &str) -> String {
    let mut lines: Vec<&str> = Vec::new();
    for line in raw.lines().map(str::trim) {
        if line.is_empty() && lines.last().is_none_or(|l| l.is_empty()) {
            continue;
        }
        lines.push(line);
    }
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines.join("\n")
}

/// Sample blocks keep their line structure. Newer pages wrap each line in
/// a `div.test-example-line`.
fn render_pre(pre: ElementRef<'_>) -> String {
    let line_divs: Vec<ElementRef<'_>> = pre
        .children()
        .filter_map(ElementRef::wrap)
        .filter(|e| e.value().name() == "div")
        .collect();
    let mut text = if line_divs.is_empty() {
        let mut buf = String::new();
        walk(pre, &mut buf, true);
        buf
    } else {
        line_divs
            .iter()
            .map(|d| d.text().collect::<String>())
            .collect::<Vec<_>>()
            .join("\n")
    };
    text = text.replace("\r\n", "\n");
    let trimmed = text.trim_start_matches('\n').trim_end();
    format!("{trimmed}\n")
}
