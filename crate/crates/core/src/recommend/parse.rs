use std::collections::HashSet;

use super::SUGGESTION_COUNT;

/// Strips a list marker (`1.`, `2)`, `-`, `*`, `•`) and returns the rest.
fn strip_marker(line: &str) -> Option<&str> {
    let line = line.trim_start();
    if let Some(rest) = line.strip_prefix(['-', '*', '•']) {
        return rest.starts_with(char::is_whitespace).then_some(rest);
    }
    let digits = line.len() - line.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits == 0 {
        return None;
    }
    let rest = line[digits..].strip_prefix(['.', ')'])?;
    (rest.is_empty() || rest.starts_with(char::is_whitespace)).then_some(rest)
}

fn clean(item: &str) -> &str {
    let item = item.trim();
    let item = item
        .strip_prefix("**")
        .and_then(|s| s.strip_suffix("**"))
        .unwrap_or(item);
    item.trim_matches(|c: char| c == '"' || c == '\u{201c}' || c == '\u{201d}')
        .trim()
}

/// Pulls up to five distinct candidates out of a list-shaped completion.
/// Lines without a list marker are ignored; duplicates are detected
/// case-insensitively after trimming.
pub fn parse_candidates(text: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    text.lines()
        .filter_map(strip_marker)
        .map(clean)
        .filter(|c| !c.is_empty())
        .filter(|c| seen.insert(c.to_lowercase()))
        .take(SUGGESTION_COUNT)
        .map(str::to_string)
        .collect()
}
