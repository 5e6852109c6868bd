use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{check_history, ChatProvider, ProviderError, ProviderInfo, ProviderSource};
use crate::mission::{DialogueHistory, Message, Role};

/// One canned reply. When `match` is set it is a regular expression that the
/// last user message must match at the moment the entry is consumed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptEntry {
    #[serde(rename = "match", default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    pub response: String,
}

impl ScriptEntry {
    pub fn reply(response: impl Into<String>) -> Self {
        Self {
            pattern: None,
            response: response.into(),
        }
    }

    pub fn when(pattern: impl Into<String>, response: impl Into<String>) -> Self {
        Self {
            pattern: Some(pattern.into()),
            response: response.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScriptedCorpus {
    pub entries: Vec<ScriptEntry>,
}

impl ScriptedCorpus {
    pub fn new(entries: Vec<ScriptEntry>) -> Self {
        Self { entries }
    }

    /// JSON-lines, one `{match, response}` object per line.
    pub fn parse_jsonl(text: &str) -> Result<Self, ProviderError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: ScriptEntry = serde_json::from_str(line)
                .map_err(|e| ProviderError::CorpusFile(format!("line {}: {e}", i + 1)))?;
            if let Some(p) = &entry.pattern {
                Regex::new(p)
                    .map_err(|e| ProviderError::CorpusFile(format!("line {}: {e}", i + 1)))?;
            }
            entries.push(entry);
        }
        Ok(Self { entries })
    }

    pub fn to_jsonl(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("entry serializes") + "\n")
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ProviderError::CorpusFile(format!("{}: {e}", path.display())))?;
        Self::parse_jsonl(&text)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        fs::write(path, self.to_jsonl())
    }

    /// Replays the assistant side of a recorded transcript.
    pub fn from_transcript(history: &DialogueHistory) -> Self {
        Self {
            entries: history
                .messages()
                .iter()
                .filter(|m| m.role == Role::Assistant)
                .map(|m| ScriptEntry::reply(m.content.clone()))
                .collect(),
        }
    }
}

/// Ordered replay of a corpus with a private cursor.
#[derive(Debug, Clone)]
pub struct ScriptedProvider {
    corpus: ScriptedCorpus,
    cursor: usize,
}

impl ScriptedProvider {
    pub fn new(corpus: ScriptedCorpus) -> Self {
        Self { corpus, cursor: 0 }
    }

    pub fn consumed(&self) -> usize {
        self.cursor
    }

    pub fn remaining(&self) -> usize {
        self.corpus.entries.len() - self.cursor
    }

    pub fn next_reply(&mut self, history: &DialogueHistory) -> Result<Message, ProviderError> {
        let entry = self
            .corpus
            .entries
            .get(self.cursor)
            .ok_or(ProviderError::CorpusExhausted {
                consumed: self.cursor,
            })?;
        if let Some(pattern) = &entry.pattern {
            let re = Regex::new(pattern)
                .map_err(|e| ProviderError::CorpusFile(e.to_string()))?;
            let last_user = history.last_user().map(|m| m.content.as_str()).unwrap_or("");
            if !re.is_match(last_user) {
                return Err(ProviderError::MatchViolation {
                    index: self.cursor,
                    pattern: pattern.clone(),
                });
            }
        }
        self.cursor += 1;
        Ok(Message::assistant(entry.response.clone()))
    }
}

/// Returns the next corpus entry as an assistant message and advances the
/// cursor. A failed match is an error; entries are never skipped.
pub fn scripted_next(
    provider: &mut ScriptedProvider,
    history: &DialogueHistory,
) -> Result<Message, ProviderError> {
    provider.next_reply(history)
}

impl ChatProvider for ScriptedProvider {
    fn complete(&mut self, history: &DialogueHistory) -> Result<Message, ProviderError> {
        check_history(history)?;
        self.next_reply(history)
    }

    fn info(&self) -> ProviderInfo {
        ProviderInfo {
            mode: "scripted".into(),
            model: "scripted".into(),
            temperature: None,
        }
    }
}

/// Corpora keyed by mission label. File-backed sources look for
/// subordinate corpora next to the main file: `plan.jsonl` serves `main`,
/// `plan.sub0.jsonl` serves `sub0`, and so on.
#[derive(Debug, Clone, Default)]
pub struct ScriptedSource {
    corpora: HashMap<String, ScriptedCorpus>,
    base: Option<PathBuf>,
}

impl ScriptedSource {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(corpus: ScriptedCorpus) -> Self {
        Self::new().with("main", corpus)
    }

    pub fn with(mut self, mission: impl Into<String>, corpus: ScriptedCorpus) -> Self {
        self.corpora.insert(mission.into(), corpus);
        self
    }

    /// Loads `path` eagerly as the main corpus; sibling corpora are read on
    /// demand.
    pub fn from_path(path: &Path) -> Result<Self, ProviderError> {
        let main = ScriptedCorpus::load(path)?;
        Ok(Self {
            corpora: HashMap::from([("main".to_string(), main)]),
            base: Some(path.to_path_buf()),
        })
    }

    pub fn corpus(&self, mission: &str) -> Option<&ScriptedCorpus> {
        self.corpora.get(mission)
    }

    fn sibling(&self, mission: &str) -> Option<PathBuf> {
        let base = self.base.as_ref()?;
        let stem = base.file_stem()?.to_string_lossy();
        let ext = base
            .extension()
            .map(|e| format!(".{}", e.to_string_lossy()))
            .unwrap_or_default();
        Some(base.with_file_name(format!("{stem}.{mission}{ext}")))
    }
}

impl ProviderSource for ScriptedSource {
    fn open(&self, mission: &str) -> Result<Box<dyn ChatProvider>, ProviderError> {
        if let Some(c) = self.corpora.get(mission) {
            return Ok(Box::new(ScriptedProvider::new(c.clone())));
        }
        match self.sibling(mission) {
            Some(p) if p.exists() => Ok(Box::new(ScriptedProvider::new(ScriptedCorpus::load(&p)?))),
            _ => Err(ProviderError::NoCorpus(mission.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn history_with_user(text: &str) -> DialogueHistory {
        DialogueHistory::from_messages(vec![Message::user(text)])
    }

    #[test]
    fn ordered_replay() {
        let mut p = ScriptedProvider::new(ScriptedCorpus::new(vec![
            ScriptEntry::reply("A"),
            ScriptEntry::reply("B"),
        ]));
        let h = history_with_user("go");
        assert_eq!(scripted_next(&mut p, &h).unwrap().content, "A");
        assert_eq!(scripted_next(&mut p, &h).unwrap().content, "B");
        assert_eq!(
            scripted_next(&mut p, &h),
            Err(ProviderError::CorpusExhausted { consumed: 2 })
        );
    }

    #[test]
    fn match_violation_does_not_advance() {
        let mut p = ScriptedProvider::new(ScriptedCorpus::new(vec![ScriptEntry::when(
            "error", "fixed",
        )]));
        let err = scripted_next(&mut p, &history_with_user("all good")).unwrap_err();
        assert!(matches!(err, ProviderError::MatchViolation { index: 0, .. }));
        assert_eq!(p.consumed(), 0);
        assert_eq!(
            scripted_next(&mut p, &history_with_user("an error occurred")).unwrap().content,
            "fixed"
        );
    }

    #[test]
    fn empty_corpus_is_exhausted() {
        let mut p = ScriptedProvider::new(ScriptedCorpus::default());
        assert!(matches!(
            scripted_next(&mut p, &history_with_user("x")),
            Err(ProviderError::CorpusExhausted { consumed: 0 })
        ));
    }

    #[test]
    fn jsonl_round_trip_and_siblings() {
        let c = ScriptedCorpus::new(vec![
            ScriptEntry::reply("line1\nline2"),
            ScriptEntry::when("EXECUTION", "MISSION COMPLETE"),
        ]);
        let text = c.to_jsonl();
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains("\"match\""));
        assert_eq!(ScriptedCorpus::parse_jsonl(&text).unwrap(), c);
        assert!(ScriptedCorpus::parse_jsonl("{\"match\":\"(\",\"response\":\"x\"}").is_err());

        let dir = tempfile::tempdir().unwrap();
        let main = dir.path().join("plan.jsonl");
        c.save(&main).unwrap();
        ScriptedCorpus::new(vec![ScriptEntry::reply("sub")])
            .save(&dir.path().join("plan.sub0.jsonl"))
            .unwrap();
        let src = ScriptedSource::from_path(&main).unwrap();
        assert!(src.open("main").is_ok());
        let mut sub = src.open("sub0").unwrap();
        assert_eq!(sub.complete(&history_with_user("q")).unwrap().content, "sub");
        assert!(matches!(src.open("sub1"), Err(ProviderError::NoCorpus(_))));
    }

    #[test]
    fn rejects_history_ending_with_assistant() {
        let mut p = ScriptedProvider::new(ScriptedCorpus::new(vec![ScriptEntry::reply("A")]));
        let h = DialogueHistory::from_messages(vec![Message::user("q"), Message::assistant("a")]);
        assert_eq!(p.complete(&h), Err(ProviderError::InvalidHistory));
        assert_eq!(p.complete(&DialogueHistory::new()), Err(ProviderError::InvalidHistory));
    }
}
