use std::sync::LazyLock;

use regex::Regex;

use super::{ParseError, DEFAULT_VERBS};

static ENUMERATED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*(?:step\s*)?\d+\s*[.):]\s*(.+?)\s*$").expect("valid regex"));

/// Keeps the enumerated steps of a reasoning transcript ("1. …", "Step 2: …",
/// "3) …"), each cut to its first sentence without the final period. A text
/// with no enumeration is taken line by line, keeping lines that start with
/// a known action verb.
pub fn filter_steps(raw: &str) -> Result<Vec<String>, ParseError> {
    let mut steps: Vec<String> = raw
        .lines()
        .filter_map(|l| ENUMERATED.captures(l))
        .map(|c| first_sentence(&c[1]))
        .filter(|s| !s.is_empty())
        .collect();
    if steps.is_empty() {
        steps = raw
            .lines()
            .map(str::trim)
            .filter(|l| {
                l.split_whitespace()
                    .next()
                    .is_some_and(|w| DEFAULT_VERBS.contains(&w.to_lowercase().as_str()))
            })
            .map(first_sentence)
            .collect();
    }
    if steps.is_empty() {
        return Err(ParseError::NoSteps);
    }
    Ok(steps)
}

fn first_sentence(s: &str) -> String {
    let mut end = s.len();
    let bytes = s.as_bytes();
    for (i, c) in s.char_indices() {
        if matches!(c, '.' | '!' | '?') && bytes.get(i + 1).is_none_or(|b| b.is_ascii_whitespace()) {
            end = i;
            break;
        }
    }
    s[..end].trim().to_string()
}
