//! Fixed harness messages. Headers are matched by [`super::trim_memory`] and
//! by scripted corpora, so they are part of the protocol.

use crate::parser::{COMPLETE_TOKEN, FAILED_TOKEN};
use crate::sandbox::ExecutionOutcome;

pub const ERROR_HEADER: &str = "EXECUTION FAILED";
pub const SUCCESS_HEADER: &str = "EXECUTION SUCCEEDED";
pub const REVIEW_HEADER: &str = "REVIEW REQUEST";
pub const PROGRESS_HEADER: &str = "PROGRESS CHECK";
pub const REPORT_HEADER: &str = "SUBORDINATE REPORTS";
pub const LOOP_HEADER: &str = "REPEATED PROGRAM";

/// Captured output shown to the model per stream.
const FEEDBACK_CAP: usize = 8 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreambleKind {
    Single,
    Main,
    Subordinate,
}

pub fn system_preamble(kind: PreambleKind, payload_tag: &str) -> String {
    let mut s = String::new();
    match kind {
        PreambleKind::Single => s.push_str(
            "You are an autonomous simulation agent. You carry out the research plan in the next message without human help.\n",
        ),
        PreambleKind::Main => s.push_str(
            "You are the coordinating agent for a research plan. Split the plan into sub-tasks and delegate each one. A delegated task is written as a standalone plan between a line `<<<prompt` and a line `end>>>`; every such plan is run by a separate agent that sees nothing but that plan, and its report comes back to you.\n",
        ),
        PreambleKind::Subordinate => s.push_str(
            "You are a task agent. You receive one self-contained task plan and carry it out alone.\n",
        ),
    }
    s.push_str(&format!(
        "Write at most one program per reply, inside a fenced block tagged `{payload_tag}`. The harness saves it in the working directory, runs it and sends you the output.\n"
    ));
    s.push_str(
        "Work on a remote host goes in a fenced block tagged `remote` with one directive per line: `dir <folder>`, `upload <files>`, `run <command>`, `download <pattern>`. Login details are held by the harness.\n",
    );
    s.push_str(&format!(
        "When every item of the plan is done, reply with `{COMPLETE_TOKEN}`. If the plan cannot be finished, reply with `{FAILED_TOKEN}` and the reason.\n"
    ));
    s
}

pub fn progress_check() -> String {
    format!(
        "{PROGRESS_HEADER}\nYour last reply had no program. Check the dialogues and files in the working directory, then continue with the next unfinished step of the plan."
    )
}

pub fn review_request(source: &str, payload_tag: &str) -> String {
    format!(
        "{REVIEW_HEADER}\nBefore it runs, check this program for errors and for compliance with the plan. Reply with a corrected `{payload_tag}` block if anything must change, otherwise confirm it is ready.\n```{payload_tag}\n{source}\n```"
    )
}

fn clip(text: &str) -> &str {
    if text.len() <= FEEDBACK_CAP {
        return text;
    }
    let mut start = text.len() - FEEDBACK_CAP;
    while !text.is_char_boundary(start) {
        start += 1;
    }
    &text[start..]
}

pub fn error_feedback(outcome: &ExecutionOutcome, attempt: u32, max_attempts: u32) -> String {
    let cause = if outcome.timed_out {
        "time limit exceeded".to_string()
    } else {
        format!("exit code {}", outcome.exit_code)
    };
    format!(
        "{ERROR_HEADER} ({cause}; debug attempt {attempt} of {max_attempts})\n--- stderr ---\n{}\n--- stdout ---\n{}\nFix the program and send the full corrected version.",
        clip(&outcome.stderr),
        clip(&outcome.stdout)
    )
}

pub fn success_feedback(outcome: &ExecutionOutcome) -> String {
    let files = if outcome.files_created.is_empty() {
        "none".to_string()
    } else {
        outcome
            .files_created
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(", ")
    };
    format!(
        "{SUCCESS_HEADER} in {:.2} s\nfiles written: {files}\n--- stdout ---\n{}\nContinue with the plan.",
        outcome.duration,
        clip(&outcome.stdout)
    )
}

pub fn loop_nudge(previous_error: &str) -> String {
    format!(
        "{LOOP_HEADER}\nThis program is identical to the one that just failed. Take a different approach.\nLast error:\n{}",
        clip(previous_error)
    )
}

pub fn delegation_error(message: &str) -> String {
    format!("{REPORT_HEADER}\nNo task was started: {message}")
}
