//! The dialogue / extract / execute / debug state machine and its two-tier
//! and nested variants.

mod directives;
mod memory;
mod nested;
pub mod prompts;
mod run;

pub use directives::{execute_remote_block, parse_directives, Directive, REMOTE_TAG};
pub use memory::{count_debug_exchanges, detect_error_loop, trim_memory, DebugState};
pub use nested::{run_nested, scan_trial_dirs, NestedSummary, NestedTrial, NESTED_SUMMARY_FILE};
pub use prompts::PreambleKind;
pub use run::{run_main_sub, run_mission, run_with_setup, MissionSetup};

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mission::{MissionState, MissionStatus, ResearchPlan};
use crate::provider::{ProviderError, ProviderInfo};

pub const REPORT_FILE: &str = "mission_report.json";

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("workspace error at {path}: {message}")]
    Workspace { path: PathBuf, message: String },
    #[error("invalid research plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Provider(ProviderError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubordinateSummary {
    pub label: String,
    pub status: MissionStatus,
    pub programs_written: u32,
    pub programs_failed: u32,
    pub transcript_path: Option<PathBuf>,
    pub final_message: Option<String>,
}

impl SubordinateSummary {
    pub fn from_report(label: &str, r: &MissionReport) -> Self {
        Self {
            label: label.into(),
            status: r.status.clone(),
            programs_written: r.programs_written,
            programs_failed: r.programs_failed,
            transcript_path: Some(r.transcript_path.clone()),
            final_message: r.final_message.clone(),
        }
    }

    pub fn not_started(label: &str, reason: &str) -> Self {
        let mut status = MissionStatus::running();
        status.transition(MissionState::Failed(format!("not started: {reason}")));
        Self {
            label: label.into(),
            status,
            programs_written: 0,
            programs_failed: 0,
            transcript_path: None,
            final_message: None,
        }
    }

    pub fn outcome_text(&self) -> String {
        match &self.status.state {
            MissionState::Complete => "mission complete".into(),
            MissionState::Failed(reason) => format!("mission failed ({reason})"),
            MissionState::Running => "running".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionReport {
    pub label: String,
    pub rp_id: String,
    pub trial_index: u32,
    pub status: MissionStatus,
    pub turns: u32,
    pub programs_written: u32,
    pub programs_failed: u32,
    /// Files created by executions, relative to the workspace.
    pub artifacts: Vec<PathBuf>,
    pub transcript_path: PathBuf,
    pub memory_trims: u32,
    pub error_loops: u32,
    pub subordinates: Vec<SubordinateSummary>,
    pub provider: ProviderInfo,
    pub detail: Option<String>,
    pub final_message: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nested: Option<NestedSummary>,
}

impl MissionReport {
    fn new(rp: &ResearchPlan, setup: &MissionSetup, provider: ProviderInfo, transcript_path: PathBuf) -> Self {
        Self {
            label: setup.label.clone(),
            rp_id: rp.id.clone(),
            trial_index: rp.trial_index,
            status: MissionStatus::running(),
            turns: 0,
            programs_written: 0,
            programs_failed: 0,
            artifacts: Vec::new(),
            transcript_path,
            memory_trims: 0,
            error_loops: 0,
            subordinates: Vec::new(),
            provider,
            detail: None,
            final_message: None,
            nested: None,
        }
    }

    pub fn outcome_line(&self) -> &'static str {
        self.status.outcome_line()
    }

    pub fn write(&self, path: &Path) -> Result<(), AgentError> {
        let json = serde_json::to_string_pretty(self).expect("report serializes");
        fs::write(path, json + "\n").map_err(|e| AgentError::Workspace {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Option<Self> {
        serde_json::from_str(&fs::read_to_string(path).ok()?).ok()
    }
}
