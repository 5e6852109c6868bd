use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;

use crate::mission::{
    persist_transcript, trial_dir_name, DialogueHistory, Message, MissionState, MissionStatus,
    ResearchPlan,
};
use crate::parser::{detect_sentinel, extract_ai_rps, extract_code_blocks, AiRp, Sentinel};
use crate::provider::{ChatProvider, ProviderSource};
use crate::remote::RemoteSession;
use crate::sandbox::{extension_for_tag, ExecutionOutcome, Sandbox, STATE_DIR};
use crate::secret::Secret;

use super::directives::{execute_remote_block, REMOTE_TAG};
use super::memory::{count_debug_exchanges, detect_error_loop, trim_memory, DebugState};
use super::prompts::{self, PreambleKind};
use super::{AgentError, MissionReport, SubordinateSummary};

/// Where a mission keeps its state and how it names its programs.
#[derive(Debug, Clone)]
pub struct MissionSetup {
    pub label: String,
    /// Relative to the workspace.
    pub state_dir: PathBuf,
    pub program_prefix: String,
    pub preamble: PreambleKind,
}

impl MissionSetup {
    pub fn single() -> Self {
        Self {
            label: "main".into(),
            state_dir: PathBuf::from(STATE_DIR),
            program_prefix: String::new(),
            preamble: PreambleKind::Single,
        }
    }

    pub fn main() -> Self {
        Self {
            preamble: PreambleKind::Main,
            ..Self::single()
        }
    }

    pub fn subordinate(k: usize) -> Self {
        let label = format!("sub{k}");
        Self {
            state_dir: Path::new(STATE_DIR).join(&label),
            program_prefix: format!("{label}_"),
            preamble: PreambleKind::Subordinate,
            label,
        }
    }
}

enum Tier<'a> {
    Single,
    Main { source: &'a dyn ProviderSource },
}

#[derive(Serialize)]
struct ExecutionRecord<'a> {
    mission: &'a str,
    program: &'a str,
    exit_ok: bool,
    exit_code: i32,
    timed_out: bool,
    duration: f64,
    files_created: &'a [PathBuf],
}

struct Conversation {
    /// Append-only record, persisted.
    transcript: DialogueHistory,
    /// What the provider sees; may be trimmed.
    context: DialogueHistory,
    secrets: Vec<Secret>,
}

impl Conversation {
    fn redact(&self, text: &str) -> String {
        self.secrets.iter().fold(text.to_string(), |t, s| s.redact(&t))
    }

    fn push(&mut self, message: Message) {
        let message = Message {
            content: self.redact(&message.content),
            ..message
        };
        self.transcript.push(message.clone());
        self.context.push(message);
    }
}

/// Runs one mission to a terminal state. The workspace is created if needed;
/// `executor` supplies the interpreter, the loop applies the plan's time limit
/// and trial index.
pub fn run_mission(
    rp: &ResearchPlan,
    provider: &mut dyn ChatProvider,
    executor: &Sandbox,
    remote: Option<&mut RemoteSession>,
) -> Result<MissionReport, AgentError> {
    run_with_setup(rp, provider, executor, remote, &MissionSetup::single())
}

pub fn run_with_setup(
    rp: &ResearchPlan,
    provider: &mut dyn ChatProvider,
    executor: &Sandbox,
    mut remote: Option<&mut RemoteSession>,
    setup: &MissionSetup,
) -> Result<MissionReport, AgentError> {
    drive(rp, provider, executor, &mut remote, setup, Tier::Single, &rp.text)
}

/// Main/subordinate mission: AI-RPs found in the Main's replies start fresh
/// subordinate missions, run one after another in the shared workspace.
pub fn run_main_sub(
    rp: &ResearchPlan,
    source: &dyn ProviderSource,
    executor: &Sandbox,
    mut remote: Option<&mut RemoteSession>,
) -> Result<MissionReport, AgentError> {
    let mut provider = source.open("main").map_err(AgentError::Provider)?;
    drive(
        rp,
        provider.as_mut(),
        executor,
        &mut remote,
        &MissionSetup::main(),
        Tier::Main { source },
        &rp.text,
    )
}

fn prepare_state_dir(rp: &ResearchPlan, setup: &MissionSetup) -> Result<PathBuf, AgentError> {
    let ws_err = |path: &Path, e: std::io::Error| AgentError::Workspace {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    fs::create_dir_all(&rp.workspace).map_err(|e| ws_err(&rp.workspace, e))?;
    if !rp.workspace.is_dir() {
        return Err(AgentError::Workspace {
            path: rp.workspace.clone(),
            message: "not a directory".into(),
        });
    }
    let state = rp.workspace.join(&setup.state_dir);
    fs::create_dir_all(&state).map_err(|e| ws_err(&state, e))?;
    Ok(state)
}

#[allow(clippy::too_many_arguments)]
fn drive(
    rp: &ResearchPlan,
    provider: &mut dyn ChatProvider,
    executor: &Sandbox,
    remote: &mut Option<&mut RemoteSession>,
    setup: &MissionSetup,
    tier: Tier<'_>,
    plan_text: &str,
) -> Result<MissionReport, AgentError> {
    rp.limits
        .validate()
        .map_err(|e| AgentError::InvalidPlan(e.to_string()))?;
    let state_dir = prepare_state_dir(rp, setup)?;
    let transcript_path = state_dir.join("transcript.jsonl");
    let executions_path = state_dir.join("executions.jsonl");
    let mut executions_log = OpenOptions::new()
        .create(true)
        .truncate(true)
        .write(true)
        .open(&executions_path)
        .map_err(|e| AgentError::Workspace {
            path: executions_path.clone(),
            message: e.to_string(),
        })?;

    let sandbox = Sandbox {
        timeout: Duration::from_secs_f64(rp.limits.exec_timeout),
        ..executor.clone()
    }
    .with_trial_index(rp.trial_index);
    let ext = extension_for_tag(&rp.payload_language_tag);
    let remote_default_dir = trial_dir_name(rp.trial_index);

    let mut convo = Conversation {
        transcript: DialogueHistory::new(),
        context: DialogueHistory::new(),
        secrets: remote
            .as_ref()
            .and_then(|s| s.target().password().cloned())
            .into_iter()
            .collect(),
    };
    convo.push(Message::system(prompts::system_preamble(
        setup.preamble,
        &rp.payload_language_tag,
    )));
    convo.push(Message::user(plan_text));

    let mut status = MissionStatus::running();
    let mut debug = DebugState::default();
    let mut awaiting_review: Option<String> = None;
    let mut last_error = String::new();
    let mut consecutive_repeats = 0u32;
    let mut report = MissionReport::new(rp, setup, provider.info(), transcript_path.clone());
    let mut artifacts = Vec::new();

    loop {
        if status.turns_used >= rp.limits.max_turns {
            status.transition(MissionState::Failed("turn limit".into()));
            break;
        }
        let reply = match provider.complete(&convo.context) {
            Ok(m) => m,
            Err(e) => {
                report.detail = Some(convo.redact(&e.to_string()));
                status.transition(MissionState::Failed("provider".into()));
                break;
            }
        };
        status.turns_used += 1;
        let content = convo.redact(&reply.content);
        convo.push(Message::assistant(content.clone()));

        if let Tier::Main { source } = tier {
            match extract_ai_rps(&content) {
                Ok(rps) if !rps.is_empty() => {
                    let text = run_subordinates(rp, source, &sandbox, remote, &rps, &mut report);
                    convo.push(Message::user(text));
                    continue;
                }
                Ok(_) => {}
                Err(e) => {
                    convo.push(Message::user(prompts::delegation_error(&e.to_string())));
                    continue;
                }
            }
        }

        match detect_sentinel(&content) {
            Some(Sentinel::Complete) => {
                status.transition(MissionState::Complete);
                break;
            }
            Some(Sentinel::Failed) => {
                status.transition(MissionState::Failed("agent reported failure".into()));
                break;
            }
            None => {}
        }

        let payload = extract_code_blocks(&content, &rp.payload_language_tag)
            .into_iter()
            .next();
        let remote_block = extract_code_blocks(&content, REMOTE_TAG).into_iter().next();

        let reviewed = awaiting_review.take();
        let just_reviewed = reviewed.is_some();
        let program = match (payload, reviewed) {
            (Some(block), _) => Some((block.source, false)),
            (None, Some(source)) => Some((source, false)),
            (None, None) => remote_block.map(|b| (b.source, true)),
        };
        let Some((source, is_remote)) = program else {
            convo.push(Message::user(prompts::progress_check()));
            continue;
        };

        if detect_error_loop(&debug, &source) {
            report.error_loops += 1;
            consecutive_repeats += 1;
            if consecutive_repeats >= 2 {
                status.transition(MissionState::Failed("error loop".into()));
                break;
            }
            convo.context = trim_memory(&convo.context, 1);
            report.memory_trims += 1;
            convo.push(Message::user(prompts::loop_nudge(&last_error)));
            continue;
        }
        consecutive_repeats = 0;

        // A program that is not a fix gets one review round before it runs.
        let is_fresh = debug.attempts == 0;
        if !is_remote && is_fresh && !just_reviewed {
            convo.push(Message::user(prompts::review_request(
                &source,
                &rp.payload_language_tag,
            )));
            awaiting_review = Some(source);
            continue;
        }

        let file_name = if is_remote {
            format!("{}remote_{}_{}", setup.program_prefix, status.turns_used, debug.attempts)
        } else {
            format!(
                "{}prog_{}_{}.{ext}",
                setup.program_prefix, status.turns_used, debug.attempts
            )
        };
        let mut outcome = if is_remote {
            execute_remote_block(&source, &rp.workspace, &remote_default_dir, remote.as_deref_mut())
        } else {
            sandbox
                .execute(&source, &rp.workspace, &file_name)
                .unwrap_or_else(|e| ExecutionOutcome::failure(e.to_string()))
        };
        outcome.stdout = convo.redact(&outcome.stdout);
        outcome.stderr = convo.redact(&outcome.stderr);
        report.programs_written += 1;
        artifacts.extend(outcome.files_created.iter().cloned());

        let record = ExecutionRecord {
            mission: &setup.label,
            program: &file_name,
            exit_ok: outcome.exit_ok,
            exit_code: outcome.exit_code,
            timed_out: outcome.timed_out,
            duration: outcome.duration,
            files_created: &outcome.files_created,
        };
        let line = serde_json::to_string(&record).expect("record serializes");
        writeln!(executions_log, "{line}").map_err(|e| AgentError::Workspace {
            path: executions_path.clone(),
            message: e.to_string(),
        })?;

        if outcome.exit_ok {
            debug.reset();
            convo.push(Message::user(prompts::success_feedback(&outcome)));
            continue;
        }

        report.programs_failed += 1;
        debug.record_failure(&source);
        if debug.attempts >= rp.limits.max_debug_attempts {
            status.transition(MissionState::Failed("mission failed".into()));
            break;
        }
        let feedback = prompts::error_feedback(&outcome, debug.attempts, rp.limits.max_debug_attempts);
        last_error = outcome.stderr.clone();
        convo.push(Message::user(feedback));
        if count_debug_exchanges(&convo.context) > rp.limits.memory_trim_threshold as usize {
            convo.context = trim_memory(&convo.context, rp.limits.memory_trim_threshold);
            report.memory_trims += 1;
        }
    }

    artifacts.sort();
    artifacts.dedup();
    report.artifacts = artifacts;
    report.turns = status.turns_used;
    report.status = status;
    report.final_message = convo.transcript.last_assistant().map(|m| m.content.clone());
    persist_transcript(&convo.transcript, &transcript_path).map_err(|e| AgentError::Workspace {
        path: transcript_path.clone(),
        message: e.to_string(),
    })?;
    report.write(&state_dir.join("mission_report.json"))?;
    Ok(report)
}

fn run_subordinates(
    rp: &ResearchPlan,
    source: &dyn ProviderSource,
    sandbox: &Sandbox,
    remote: &mut Option<&mut RemoteSession>,
    rps: &[AiRp],
    report: &mut MissionReport,
) -> String {
    let mut text = String::from(prompts::REPORT_HEADER);
    for ai_rp in rps {
        let k = report.subordinates.len();
        let setup = MissionSetup::subordinate(k);
        let summary = match source.open(&setup.label) {
            Ok(mut provider) => match drive(
                rp,
                provider.as_mut(),
                sandbox,
                remote,
                &setup,
                Tier::Single,
                &ai_rp.body,
            ) {
                Ok(sub) => SubordinateSummary::from_report(&setup.label, &sub),
                Err(e) => SubordinateSummary::not_started(&setup.label, &e.to_string()),
            },
            Err(e) => SubordinateSummary::not_started(&setup.label, &e.to_string()),
        };
        text.push_str(&format!(
            "\n\n[{}] {}\n{}",
            summary.label,
            summary.outcome_text(),
            summary.final_message.as_deref().unwrap_or("(no report)")
        ));
        report.subordinates.push(summary);
    }
    text
}
