//! Extraction of programs, subordinate plans and mission-control tokens
//! from assistant replies.

use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

pub const COMPLETE_TOKEN: &str = "MISSION COMPLETE";
pub const FAILED_TOKEN: &str = "MISSION FAILED";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeBlock {
    pub language_tag: String,
    pub source: String,
    /// Position among all fenced blocks of the message.
    pub ordinal: usize,
}

/// A research plan written by a Main agent for a subordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AiRp {
    pub body: String,
    pub ordinal: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sentinel {
    Complete,
    Failed,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("AI RP opened on line {line} is never closed")]
    UnbalancedDelimiters { line: usize },
}

/// One line of `text` with its byte span, excluding the line terminator.
struct Line<'a> {
    start: usize,
    /// Offset just past the terminator (or end of text).
    next: usize,
    text: &'a str,
}

fn lines_with_offsets(text: &str) -> Vec<Line<'_>> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < text.len() {
        let end = text[start..].find('\n').map_or(text.len(), |i| start + i);
        let next = (end + 1).min(text.len());
        let raw = &text[start..end];
        out.push(Line {
            start,
            next: if end < text.len() { end + 1 } else { next },
            text: raw.strip_suffix('\r').unwrap_or(raw),
        });
        start = end + 1;
    }
    out
}

fn backtick_run(s: &str) -> usize {
    s.bytes().take_while(|&b| b == b'`').count()
}

/// A fenced region: opener info tag, byte range of content, and the line
/// range it spans.
struct Fence {
    tag: String,
    content: std::ops::Range<usize>,
    lines: std::ops::RangeInclusive<usize>,
}

fn find_fences(text: &str) -> Vec<Fence> {
    let lines = lines_with_offsets(text);
    let mut fences = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let opener = lines[i].text.trim_start();
        let ticks = backtick_run(opener);
        if ticks < 3 {
            i += 1;
            continue;
        }
        let info = opener[ticks..].trim();
        if info.contains('`') {
            i += 1;
            continue;
        }
        let tag = info.split_whitespace().next().unwrap_or("").to_string();
        let close = (i + 1..lines.len()).find(|&j| {
            let t = lines[j].text.trim();
            t.len() >= ticks && backtick_run(t) == t.len()
        });
        match close {
            Some(j) => {
                let begin = lines[i].next;
                // Content ends before the newline that precedes the closer.
                let end = if j == i + 1 {
                    begin
                } else {
                    let c = lines[j].start;
                    let before = &text[..c];
                    let trimmed = before.strip_suffix('\n').unwrap_or(before);
                    trimmed.strip_suffix('\r').unwrap_or(trimmed).len().max(begin)
                };
                fences.push(Fence {
                    tag,
                    content: begin..end,
                    lines: i..=j,
                });
                i = j + 1;
            }
            // Unterminated: not a fence at all.
            None => i += 1,
        }
    }
    fences
}

/// Returns every fenced block whose tag equals `wanted_tag`
/// (case-insensitively) or is empty, in order of appearance.
pub fn extract_code_blocks(text: &str, wanted_tag: &str) -> Vec<CodeBlock> {
    find_fences(text)
        .into_iter()
        .enumerate()
        .filter(|(_, f)| f.tag.is_empty() || f.tag.eq_ignore_ascii_case(wanted_tag))
        .map(|(ordinal, f)| CodeBlock {
            language_tag: f.tag,
            source: text[f.content].to_string(),
            ordinal,
        })
        .collect()
}

/// Every fenced block regardless of tag.
pub fn all_code_blocks(text: &str) -> Vec<CodeBlock> {
    find_fences(text)
        .into_iter()
        .enumerate()
        .map(|(ordinal, f)| CodeBlock {
            language_tag: f.tag,
            source: text[f.content].to_string(),
            ordinal,
        })
        .collect()
}

/// Canonical fencing; [`extract_code_blocks`] inverts it for any source that
/// contains no fence line.
pub fn fence(source: &str, tag: &str) -> String {
    format!("```{tag}\n{source}\n```")
}

static RP_OPEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*<\s*<\s*<\s*prompt\b").expect("valid regex"));
static RP_CLOSE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*end\s*>\s*>\s*>\s*$").expect("valid regex"));

/// Bodies between `< < < prompt` and `end > > >` delimiter lines. Internal
/// whitespace in the delimiters is optional.
pub fn extract_ai_rps(text: &str) -> Result<Vec<AiRp>, ParseError> {
    let lines = lines_with_offsets(text);
    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        if !RP_OPEN.is_match(lines[i].text) {
            i += 1;
            continue;
        }
        let close = (i + 1..lines.len())
            .find(|&j| RP_CLOSE.is_match(lines[j].text))
            .ok_or(ParseError::UnbalancedDelimiters { line: i + 1 })?;
        let body = lines[i + 1..close]
            .iter()
            .map(|l| l.text)
            .collect::<Vec<_>>()
            .join("\n");
        out.push(AiRp {
            body,
            ordinal: out.len(),
        });
        i = close + 1;
    }
    Ok(out)
}

/// `text` with every fenced region removed.
fn outside_fences(text: &str) -> String {
    let fences = find_fences(text);
    let lines = lines_with_offsets(text);
    lines
        .iter()
        .enumerate()
        .filter(|(i, _)| !fences.iter().any(|f| f.lines.contains(i)))
        .map(|(_, l)| l.text)
        .collect::<Vec<_>>()
        .join("\n")
}

/// Completion wins when both tokens appear; tokens inside code fences are
/// ignored.
pub fn detect_sentinel(text: &str) -> Option<Sentinel> {
    let plain = outside_fences(text);
    if plain.contains(COMPLETE_TOKEN) {
        Some(Sentinel::Complete)
    } else if plain.contains(FAILED_TOKEN) {
        Some(Sentinel::Failed)
    } else {
        None
    }
}
