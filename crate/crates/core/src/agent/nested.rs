use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::collect::{collect_artifacts, CollectIndex};
use crate::mission::{MissionState, ResearchPlan};
use crate::provider::ChatProvider;
use crate::remote::RemoteSession;
use crate::sandbox::{Sandbox, STATE_DIR};

use super::{run_mission, AgentError, MissionReport, REPORT_FILE};

pub const NESTED_SUMMARY_FILE: &str = "nested_summary.json";
pub const RESULTS_DIR: &str = "results";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedTrial {
    pub index: u32,
    pub dir: PathBuf,
    /// `complete`, `failed` or `no report`.
    pub status: String,
    pub programs_written: u32,
    pub programs_failed: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedSummary {
    pub trials: Vec<NestedTrial>,
    pub completed: usize,
    pub failed: usize,
    pub results_dir: PathBuf,
    pub index: CollectIndex,
}

fn parse_trial_index(name: &str) -> Option<u32> {
    name.strip_prefix("trial_")?.parse().ok()
}

/// `trial_<i>` directories directly below `root`, sorted by index. Entries
/// resolving outside `root` are skipped.
pub fn scan_trial_dirs(root: &Path) -> Vec<(u32, PathBuf)> {
    let Ok(canonical_root) = root.canonicalize() else {
        return Vec::new();
    };
    let Ok(rd) = fs::read_dir(root) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for entry in rd.flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(i) = parse_trial_index(&name) else {
            continue;
        };
        let path = entry.path();
        match path.canonicalize() {
            Ok(c) if c.starts_with(&canonical_root) && c.is_dir() => out.push((i, path)),
            Ok(c) if !c.starts_with(&canonical_root) => {
                log::warn!("skipping {}: resolves outside {}", path.display(), root.display())
            }
            _ => {}
        }
    }
    out.sort();
    out
}

/// Runs the Primary mission, whose payloads start nested missions in
/// `trial_<i>` folders of its workspace, then gathers those trials into
/// `results/` and writes a summary.
pub fn run_nested(
    rp: &ResearchPlan,
    provider: &mut dyn ChatProvider,
    executor: &Sandbox,
    remote: Option<&mut RemoteSession>,
) -> Result<MissionReport, AgentError> {
    let mut report = run_mission(rp, provider, executor, remote)?;
    let trials: Vec<NestedTrial> = scan_trial_dirs(&rp.workspace)
        .into_iter()
        .map(|(index, dir)| {
            let sub = MissionReport::load(&dir.join(STATE_DIR).join(REPORT_FILE));
            let status = match &sub {
                Some(r) if r.status.state == MissionState::Complete => "complete",
                Some(_) => "failed",
                None => "no report",
            };
            NestedTrial {
                index,
                dir: dir.strip_prefix(&rp.workspace).unwrap_or(&dir).to_path_buf(),
                status: status.into(),
                programs_written: sub.as_ref().map_or(0, |r| r.programs_written),
                programs_failed: sub.as_ref().map_or(0, |r| r.programs_failed),
            }
        })
        .collect();
    let dirs: Vec<PathBuf> = trials.iter().map(|t| rp.workspace.join(&t.dir)).collect();
    let results_dir = rp.workspace.join(RESULTS_DIR);
    let index = collect_artifacts(&dirs, &results_dir);
    let completed = trials.iter().filter(|t| t.status == "complete").count();
    let summary = NestedSummary {
        failed: trials.len() - completed,
        completed,
        trials,
        results_dir: PathBuf::from(RESULTS_DIR),
        index,
    };
    let path = rp.workspace.join(NESTED_SUMMARY_FILE);
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&path, json + "\n").map_err(|e| AgentError::Workspace {
        path: path.clone(),
        message: e.to_string(),
    })?;
    report.nested = Some(summary);
    report.write(&rp.workspace.join(STATE_DIR).join(REPORT_FILE))?;
    Ok(report)
}
