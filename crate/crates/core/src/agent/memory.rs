use crate::mission::{DialogueHistory, Message, Role};
use crate::sandbox::digest_bytes;

use super::prompts::ERROR_HEADER;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DebugState {
    pub attempts: u32,
    /// Digests of the failed programs of the current debug chain, oldest first.
    pub last_source_digests: Vec<String>,
}

impl DebugState {
    pub fn record_failure(&mut self, source: &str) {
        self.attempts += 1;
        self.last_source_digests.push(digest_bytes(source.as_bytes()));
    }

    pub fn reset(&mut self) {
        self.attempts = 0;
        self.last_source_digests.clear();
    }
}

/// True when `new_source` is byte-identical to the last failed program.
pub fn detect_error_loop(state: &DebugState, new_source: &str) -> bool {
    state
        .last_source_digests
        .last()
        .is_some_and(|d| *d == digest_bytes(new_source.as_bytes()))
}

fn is_error_turn(m: &Message) -> bool {
    m.role == Role::User && m.content.starts_with(ERROR_HEADER)
}

/// Start indices of debug exchanges: an assistant turn answered by an error
/// report.
fn debug_exchanges(messages: &[Message]) -> Vec<usize> {
    messages
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].role == Role::Assistant && is_error_turn(&w[1]))
        .map(|(i, _)| i)
        .collect()
}

pub fn count_debug_exchanges(history: &DialogueHistory) -> usize {
    debug_exchanges(history.messages()).len()
}

/// Keeps the newest `threshold` debug exchanges and drops older ones. Every
/// other message, including the plan and the latest program and error, is
/// kept.
pub fn trim_memory(history: &DialogueHistory, threshold: u32) -> DialogueHistory {
    let messages = history.messages();
    let starts = debug_exchanges(messages);
    let keep = threshold.max(1) as usize;
    if starts.len() <= keep {
        return history.clone();
    }
    let mut drop = vec![false; messages.len()];
    for &i in &starts[..starts.len() - keep] {
        drop[i] = true;
        drop[i + 1] = true;
    }
    DialogueHistory::from_messages(
        messages
            .iter()
            .zip(drop)
            .filter(|(_, d)| !d)
            .map(|(m, _)| m.clone())
            .collect(),
    )
}
