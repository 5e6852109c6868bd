//! Research plans, dialogue transcripts and per-trial records.

use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MissionError {
    #[error("research plan not found: {0}")]
    FileNotFound(PathBuf),
    #[error("research plan is not valid UTF-8: {0}")]
    NotUtf8(PathBuf),
    #[error("research plan is empty: {0}")]
    EmptyPlan(PathBuf),
    #[error("invalid limits: {0}")]
    InvalidLimits(String),
    #[error("malformed transcript line {line}: {message}")]
    MalformedTranscript { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Execution bounds for one mission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Limits {
    pub max_debug_attempts: u32,
    pub max_turns: u32,
    /// Seconds.
    pub exec_timeout: f64,
    /// Debug exchanges kept in the model's context before older ones are cut.
    pub memory_trim_threshold: u32,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_debug_attempts: 6,
            max_turns: 40,
            exec_timeout: 300.0,
            memory_trim_threshold: 3,
        }
    }
}

impl Limits {
    pub fn validate(&self) -> Result<(), MissionError> {
        if self.max_debug_attempts == 0 || self.max_turns == 0 || self.memory_trim_threshold == 0 {
            return Err(MissionError::InvalidLimits(
                "max_debug_attempts, max_turns and memory_trim_threshold must be >= 1".into(),
            ));
        }
        if !(self.exec_timeout > 0.0 && self.exec_timeout.is_finite()) {
            return Err(MissionError::InvalidLimits(format!(
                "exec_timeout must be positive, got {}",
                self.exec_timeout
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResearchPlan {
    pub id: String,
    pub text: String,
    /// Absolute directory where the mission's programs run.
    pub workspace: PathBuf,
    /// Fence tag the model must use for executable programs.
    pub payload_language_tag: String,
    pub limits: Limits,
    pub trial_index: u32,
}

impl ResearchPlan {
    /// Plan built from in-memory text; `workspace` is taken as given.
    pub fn from_text(id: impl Into<String>, text: impl Into<String>, workspace: PathBuf) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            workspace,
            payload_language_tag: "python".into(),
            limits: Limits::default(),
            trial_index: 0,
        }
    }
}

/// Workspace directory name for trial `index`, the `-n i` convention.
pub fn trial_dir_name(index: u32) -> String {
    format!("trial_{index}")
}

/// Loads a plan file verbatim. The workspace is `<cwd>/trial_<index>`.
pub fn load_research_plan(path: &Path, trial_index: u32) -> Result<ResearchPlan, MissionError> {
    let cwd = std::env::current_dir()?;
    load_research_plan_in(path, trial_index, &cwd)
}

/// Same as [`load_research_plan`] with an explicit base directory.
pub fn load_research_plan_in(
    path: &Path,
    trial_index: u32,
    base: &Path,
) -> Result<ResearchPlan, MissionError> {
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => MissionError::FileNotFound(path.to_path_buf()),
        _ => MissionError::Io(e),
    })?;
    let text = String::from_utf8(bytes).map_err(|_| MissionError::NotUtf8(path.to_path_buf()))?;
    if text.trim().is_empty() {
        return Err(MissionError::EmptyPlan(path.to_path_buf()));
    }
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "rp".into());
    let base = if base.is_absolute() {
        base.to_path_buf()
    } else {
        std::env::current_dir()?.join(base)
    };
    Ok(ResearchPlan {
        id,
        text,
        workspace: base.join(trial_dir_name(trial_index)),
        payload_language_tag: "python".into(),
        limits: Limits::default(),
        trial_index,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
    pub timestamp: DateTime<Utc>,
}

impl Message {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self {
            role,
            content: content.into(),
            timestamp: Utc::now(),
        }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self::new(Role::System, content)
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self::new(Role::User, content)
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self::new(Role::Assistant, content)
    }
}

/// Ordered, role-tagged transcript. Appending is the only mutation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DialogueHistory {
    messages: Vec<Message>,
}

impl DialogueHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_messages(messages: Vec<Message>) -> Self {
        Self { messages }
    }

    pub fn push(&mut self, message: Message) {
        self.messages.push(message);
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn last(&self) -> Option<&Message> {
        self.messages.last()
    }

    pub fn last_user(&self) -> Option<&Message> {
        self.messages.iter().rev().find(|m| m.role == Role::User)
    }

    pub fn last_assistant(&self) -> Option<&Message> {
        self.messages.iter().rev().find(|m| m.role == Role::Assistant)
    }

    /// Checks the structural invariants: the first non-system message is from
    /// the user and only system messages may be empty.
    pub fn is_well_formed(&self) -> bool {
        let first_ok = self
            .messages
            .iter()
            .find(|m| m.role != Role::System)
            .is_none_or(|m| m.role == Role::User);
        first_ok
            && self
                .messages
                .iter()
                .all(|m| m.role == Role::System || !m.content.is_empty())
    }
}

/// Writes one JSON object per message (`role`, `content`, `timestamp`), LF
/// terminated.
pub fn persist_transcript(history: &DialogueHistory, path: &Path) -> Result<(), MissionError> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for m in history.messages() {
        serde_json::to_writer(&mut out, m).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_transcript(path: &Path) -> Result<DialogueHistory, MissionError> {
    let file = fs::File::open(path)?;
    let mut messages = Vec::new();
    for (i, line) in io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let m: Message = serde_json::from_str(&line).map_err(|e| MissionError::MalformedTranscript {
            line: i + 1,
            message: e.to_string(),
        })?;
        messages.push(m);
    }
    Ok(DialogueHistory::from_messages(messages))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", content = "reason")]
pub enum MissionState {
    Running,
    Complete,
    Failed(String),
}

impl MissionState {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, MissionState::Running)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissionStatus {
    pub state: MissionState,
    pub turns_used: u32,
    pub debug_attempts_current: u32,
}

impl MissionStatus {
    pub fn running() -> Self {
        Self {
            state: MissionState::Running,
            turns_used: 0,
            debug_attempts_current: 0,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.state == MissionState::Complete
    }

    /// Moves to `next`. Terminal states are absorbing: once Complete or
    /// Failed, further transitions are ignored and `false` is returned.
    pub fn transition(&mut self, next: MissionState) -> bool {
        if self.state.is_terminal() {
            return false;
        }
        self.state = next;
        true
    }

    /// Final output line of a mission.
    pub fn outcome_line(&self) -> &'static str {
        match self.state {
            MissionState::Complete => "mission complete",
            _ => "mission failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub agent_id: String,
    pub rp_id: String,
    pub trial_index: u32,
    pub criteria_met: Vec<bool>,
    pub artifacts_dir: PathBuf,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn load_sets_trial_workspace() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("rp1.txt");
        fs::write(&p, "Simulate a random walk.\n").unwrap();
        let rp = load_research_plan_in(&p, 0, dir.path()).unwrap();
        assert_eq!(rp.id, "rp1");
        assert_eq!(rp.text, "Simulate a random walk.\n");
        assert_eq!(rp.workspace, dir.path().join("trial_0"));
        assert!(rp.workspace.is_absolute());
        assert_eq!(rp.limits, Limits::default());

        let p1 = dir.path().join("p1.txt");
        fs::write(&p1, "RP 1").unwrap();
        let rp = load_research_plan_in(&p1, 7, dir.path()).unwrap();
        assert_eq!(rp.workspace.file_name().unwrap(), "trial_7");
        assert_eq!(rp.trial_index, 7);
    }

    #[test]
    fn load_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_research_plan_in(&dir.path().join("missing.txt"), 0, dir.path()),
            Err(MissionError::FileNotFound(_))
        ));
        let bad = dir.path().join("bad.txt");
        fs::write(&bad, [0xff, 0xfe, 0x00]).unwrap();
        assert!(matches!(
            load_research_plan_in(&bad, 0, dir.path()),
            Err(MissionError::NotUtf8(_))
        ));
    }

    #[test]
    fn default_limits() {
        let l = Limits::default();
        assert_eq!(
            (l.max_debug_attempts, l.max_turns, l.exec_timeout, l.memory_trim_threshold),
            (6, 40, 300.0, 3)
        );
        assert!(l.validate().is_ok());
        assert!(Limits { max_turns: 0, ..l }.validate().is_err());
        assert!(Limits { exec_timeout: 0.0, ..l }.validate().is_err());
    }

    #[test]
    fn terminal_states_absorb() {
        let mut s = MissionStatus::running();
        assert!(s.transition(MissionState::Complete));
        assert!(!s.transition(MissionState::Running));
        assert!(!s.transition(MissionState::Failed("x".into())));
        assert!(s.is_complete());
        assert_eq!(s.outcome_line(), "mission complete");

        let mut f = MissionStatus::running();
        f.transition(MissionState::Failed("mission failed".into()));
        assert!(!f.transition(MissionState::Complete));
        assert_eq!(f.outcome_line(), "mission failed");
    }

    #[test]
    fn transcript_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        persist_transcript(&DialogueHistory::new(), &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "");

        let mut h = DialogueHistory::new();
        h.push(Message::system("sys"));
        h.push(Message::user("line one\nline two"));
        h.push(Message::assistant("ok"));
        persist_transcript(&h, &path).unwrap();
        let raw = fs::read_to_string(&path).unwrap();
        assert_eq!(raw.lines().count(), 3);
        assert!(raw.ends_with('\n') && !raw.contains('\r'));
        assert_eq!(load_transcript(&path).unwrap(), h);
        assert!(h.is_well_formed());
    }

    #[test]
    fn well_formedness() {
        let h = DialogueHistory::from_messages(vec![Message::system(""), Message::assistant("hi")]);
        assert!(!h.is_well_formed());
        let h = DialogueHistory::from_messages(vec![Message::user("")]);
        assert!(!h.is_well_formed());
    }

    proptest! {
        #[test]
        fn transcript_round_trip(contents in proptest::collection::vec("\\PC*", 0..8)) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("t.jsonl");
            let roles = [Role::User, Role::Assistant, Role::System];
            let h = DialogueHistory::from_messages(
                contents.iter().enumerate()
                    .map(|(i, c)| Message::new(roles[i % 3], c.clone()))
                    .collect(),
            );
            persist_transcript(&h, &path).unwrap();
            let raw = fs::read_to_string(&path).unwrap();
            prop_assert_eq!(raw.lines().count(), h.len());
            prop_assert_eq!(load_transcript(&path).unwrap(), h);
        }
    }
}
