//! Gathers trial outputs into one tree: `<dest>/<trial>/{plots,data,reports}`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::agent::MissionReport;
use crate::sandbox::STATE_DIR;

pub const INDEX_FILE: &str = "index.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArtifactKind {
    Plot,
    Data,
    Report,
}

impl ArtifactKind {
    pub fn folder(self) -> &'static str {
        match self {
            ArtifactKind::Plot => "plots",
            ArtifactKind::Data => "data",
            ArtifactKind::Report => "reports",
        }
    }

    pub fn classify(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "svg" | "png" | "jpg" | "jpeg" | "pdf" | "gif" => Some(ArtifactKind::Plot),
            "csv" | "dat" | "npy" | "npz" | "json" | "txt" | "tsv" => Some(ArtifactKind::Data),
            "md" | "docx" | "rtf" | "html" | "tex" => Some(ArtifactKind::Report),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialIndex {
    pub trial: String,
    pub programs: u32,
    pub images: u32,
    pub data: u32,
    pub reports: u32,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectIndex {
    pub trials: Vec<TrialIndex>,
    pub programs: u32,
    pub images: u32,
    pub data: u32,
    pub reports: u32,
}

fn count_programs(dir: &Path) -> u32 {
    if let Some(r) = MissionReport::load(&dir.join(STATE_DIR).join(crate::agent::REPORT_FILE)) {
        return r.programs_written;
    }
    fs::read_dir(dir)
        .map(|rd| {
            rd.flatten()
                .filter(|e| e.file_name().to_string_lossy().starts_with("prog_"))
                .count() as u32
        })
        .unwrap_or(0)
}

fn collect_one(dir: &Path, dest: &Path) -> TrialIndex {
    let trial = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trial".into());
    let mut idx = TrialIndex {
        trial: trial.clone(),
        programs: count_programs(dir),
        ..Default::default()
    };
    let out_root = dest.join(&trial);
    for kind in [ArtifactKind::Plot, ArtifactKind::Data, ArtifactKind::Report] {
        if let Err(e) = fs::create_dir_all(out_root.join(kind.folder())) {
            idx.errors.push(format!("{}: {e}", out_root.display()));
        }
    }
    let walker = WalkDir::new(dir).sort_by_file_name().into_iter().filter_entry(|e| {
        e.depth() == 0 || {
            let n = e.file_name().to_string_lossy();
            n != STATE_DIR && n != "results"
        }
    });
    for entry in walker {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                idx.errors.push(e.to_string());
                continue;
            }
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(dir).unwrap_or(entry.path());
        let Some(kind) = ArtifactKind::classify(rel) else {
            continue;
        };
        let target: PathBuf = out_root.join(kind.folder()).join(rel);
        let copied = target
            .parent()
            .map_or(Ok(()), fs::create_dir_all)
            .and_then(|_| fs::copy(entry.path(), &target));
        match copied {
            Ok(_) => match kind {
                ArtifactKind::Plot => idx.images += 1,
                ArtifactKind::Data => idx.data += 1,
                ArtifactKind::Report => idx.reports += 1,
            },
            Err(e) => {
                log::warn!("could not copy {}: {e}", entry.path().display());
                idx.errors.push(format!("{}: {e}", entry.path().display()));
            }
        }
    }
    idx
}

/// Copies images, data and reports of every trial directory and writes
/// `index.json` into `dest`. Per-file failures are recorded and skipped.
pub fn collect_artifacts(trial_dirs: &[PathBuf], dest: &Path) -> CollectIndex {
    let mut index = CollectIndex::default();
    for dir in trial_dirs {
        let t = collect_one(dir, dest);
        index.programs += t.programs;
        index.images += t.images;
        index.data += t.data;
        index.reports += t.reports;
        index.trials.push(t);
    }
    let json = serde_json::to_string_pretty(&index).expect("index serializes");
    if let Err(e) = fs::create_dir_all(dest).and_then(|_| fs::write(dest.join(INDEX_FILE), json + "\n")) {
        log::error!("could not write {}: {e}", dest.join(INDEX_FILE).display());
    }
    index
}
