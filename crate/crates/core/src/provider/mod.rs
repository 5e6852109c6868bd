//! Chat-model backends behind one interface: a live chat-completion HTTP
//! client and a scripted replay used for deterministic runs.

mod live;
mod scripted;

pub use live::{send_chat, ChatReply, LiveProvider, LiveSource, ProviderConfig};
pub use scripted::{
    scripted_next, ScriptEntry, ScriptedCorpus, ScriptedProvider, ScriptedSource,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mission::{DialogueHistory, Message};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("network error after {retries} retries: {message}")]
    NetworkError { retries: u32, message: String },
    #[error("authentication rejected (HTTP {status})")]
    AuthError { status: u16 },
    #[error("request rejected (HTTP {status}): {body}")]
    Rejected { status: u16, body: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("invalid provider configuration: {0}")]
    InvalidConfig(String),
    #[error("history is empty or already ends with an assistant message")]
    InvalidHistory,
    #[error("scripted corpus exhausted after {consumed} entries")]
    CorpusExhausted { consumed: usize },
    #[error("scripted entry {index} expects the last user message to match {pattern:?}")]
    MatchViolation { index: usize, pattern: String },
    #[error("no scripted corpus for mission {0:?}")]
    NoCorpus(String),
    #[error("corpus file error: {0}")]
    CorpusFile(String),
}

/// Sampling parameters recorded with each mission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderInfo {
    pub mode: String,
    pub model: String,
    pub temperature: Option<f64>,
}

/// One conversation's model handle.
pub trait ChatProvider: Send {
    fn complete(&mut self, history: &DialogueHistory) -> Result<Message, ProviderError>;

    fn info(&self) -> ProviderInfo;
}

/// Hands out an independent [`ChatProvider`] per mission. Mission labels are
/// `main` for a top-level mission and `sub<k>` for the k-th subordinate.
pub trait ProviderSource: Sync {
    fn open(&self, mission: &str) -> Result<Box<dyn ChatProvider>, ProviderError>;
}

pub(crate) fn check_history(history: &DialogueHistory) -> Result<(), ProviderError> {
    match history.last() {
        None => Err(ProviderError::InvalidHistory),
        Some(m) if m.role == crate::mission::Role::Assistant => Err(ProviderError::InvalidHistory),
        Some(_) => Ok(()),
    }
}
