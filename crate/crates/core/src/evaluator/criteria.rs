use std::fs;
use std::path::{Path, PathBuf};

use globset::{Glob, GlobMatcher};
use regex::Regex;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use asa_physics::ChainModel;

use super::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CriterionKind {
    FileExists { glob: String },
    PatternInFile { glob: String, pattern: String },
    /// First capture group of `pattern` parsed as a number in `[low, high]`.
    NumericInBand { glob: String, pattern: String, low: f64, high: f64 },
    /// Every section title appears as a heading line.
    ReportSections { glob: String, sections: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub id: String,
    #[serde(flatten)]
    pub kind: CriterionKind,
}

pub const NU_PATTERN: &str = r"(?i)\bnu\s*[=:]\s*([-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)";

impl Criterion {
    pub fn new(id: impl Into<String>, kind: CriterionKind) -> Self {
        Self { id: id.into(), kind }
    }

    /// `nu = <value>` in a file matching `glob` lies in the model's band.
    pub fn exponent_in_band(id: impl Into<String>, glob: impl Into<String>, model: ChainModel) -> Self {
        let (low, high) = model.exponent_band();
        Self::new(
            id,
            CriterionKind::NumericInBand {
                glob: glob.into(),
                pattern: NU_PATTERN.into(),
                low,
                high,
            },
        )
    }

    pub fn glob(&self) -> &str {
        match &self.kind {
            CriterionKind::FileExists { glob }
            | CriterionKind::PatternInFile { glob, .. }
            | CriterionKind::NumericInBand { glob, .. }
            | CriterionKind::ReportSections { glob, .. } => glob,
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        Glob::new(self.glob()).map_err(|e| EvalError::BadCriterion {
            id: self.id.clone(),
            message: e.to_string(),
        })?;
        let pattern = match &self.kind {
            CriterionKind::PatternInFile { pattern, .. } => Some(pattern),
            CriterionKind::NumericInBand { pattern, low, high, .. } => {
                if !(low <= high) {
                    return Err(EvalError::BadCriterion {
                        id: self.id.clone(),
                        message: format!("empty band [{low}, {high}]"),
                    });
                }
                Some(pattern)
            }
            _ => None,
        };
        if let Some(p) = pattern {
            Regex::new(p).map_err(|e| EvalError::BadCriterion {
                id: self.id.clone(),
                message: e.to_string(),
            })?;
        }
        Ok(())
    }
}

/// The seven default checks for a random-walk research plan.
pub fn default_criteria() -> Vec<Criterion> {
    use CriterionKind::*;
    vec![
        Criterion::new(
            "program_ran",
            PatternInFile {
                glob: ".asa/executions.jsonl".into(),
                pattern: r#""exit_ok":true"#.into(),
            },
        ),
        Criterion::new(
            "conformation_plot",
            FileExists {
                glob: "*conformation*.{svg,png}".into(),
            },
        ),
        Criterion::new(
            "fit_plot",
            FileExists {
                glob: "*fit*.{svg,png,pdf,jpg}".into(),
            },
        ),
        Criterion::new(
            "data_file",
            FileExists {
                glob: "*.{csv,dat,npy,npz}".into(),
            },
        ),
        Criterion::exponent_in_band("exponent_in_band", "*report*", ChainModel::RandomWalk),
        Criterion::new(
            "report_exists",
            FileExists {
                glob: "*report*.{md,txt,docx,pdf,html}".into(),
            },
        ),
        Criterion::new(
            "report_sections",
            ReportSections {
                glob: "*report*.{md,txt,html}".into(),
                sections: ["Introduction", "Methods", "Results", "Conclusion"]
                    .map(String::from)
                    .to_vec(),
            },
        ),
    ]
}

pub fn load_criteria(path: &Path) -> Result<Vec<Criterion>, EvalError> {
    let text = fs::read_to_string(path).map_err(|e| EvalError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let criteria: Vec<Criterion> =
        serde_json::from_str(&text).map_err(|e| EvalError::Parse(e.to_string()))?;
    for c in &criteria {
        c.validate()?;
    }
    Ok(criteria)
}

/// Workspace files relative to `workspace`, sorted. Generated result trees
/// are not part of a trial's own output.
fn workspace_files(workspace: &Path) -> Vec<PathBuf> {
    WalkDir::new(workspace)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| e.depth() != 1 || e.file_name() != "results")
        .flatten()
        .filter(|e| e.file_type().is_file())
        .filter_map(|e| e.path().strip_prefix(workspace).ok().map(Path::to_path_buf))
        .collect()
}

fn matching<'a>(files: &'a [PathBuf], m: &'a GlobMatcher) -> impl Iterator<Item = &'a PathBuf> + 'a {
    files.iter().filter(move |f| m.is_match(f))
}

fn heading_text(line: &str) -> String {
    let t = line.trim().trim_start_matches('#').trim();
    let t = t.trim_start_matches(|c: char| c.is_ascii_digit() || c == '.' || c == ')').trim();
    t.trim_end_matches(':').trim().to_ascii_lowercase()
}

fn has_sections(text: &str, sections: &[String]) -> bool {
    let headings: Vec<String> = text.lines().map(heading_text).collect();
    sections
        .iter()
        .all(|s| headings.iter().any(|h| *h == s.to_ascii_lowercase()))
}

/// Whether `workspace` satisfies `criterion`. Unreadable files count as not
/// matching.
pub fn check_criterion(criterion: &Criterion, workspace: &Path) -> bool {
    let files = workspace_files(workspace);
    check_in(criterion, workspace, &files)
}

fn check_in(criterion: &Criterion, workspace: &Path, files: &[PathBuf]) -> bool {
    let Ok(glob) = Glob::new(criterion.glob()) else {
        return false;
    };
    let m = glob.compile_matcher();
    let read = |f: &PathBuf| fs::read(workspace.join(f)).ok().map(|b| String::from_utf8_lossy(&b).into_owned());
    match &criterion.kind {
        CriterionKind::FileExists { .. } => matching(files, &m).next().is_some(),
        CriterionKind::PatternInFile { pattern, .. } => {
            let Ok(re) = Regex::new(pattern) else { return false };
            matching(files, &m).filter_map(read).any(|t| re.is_match(&t))
        }
        CriterionKind::NumericInBand { pattern, low, high, .. } => {
            let Ok(re) = Regex::new(pattern) else { return false };
            matching(files, &m).filter_map(read).any(|t| {
                re.captures(&t)
                    .and_then(|c| c.get(1))
                    .and_then(|v| v.as_str().parse::<f64>().ok())
                    .is_some_and(|v| v >= *low && v <= *high)
            })
        }
        CriterionKind::ReportSections { sections, .. } => {
            matching(files, &m).filter_map(read).any(|t| has_sections(&t, sections))
        }
    }
}

/// One pass over the workspace for all criteria.
pub fn evaluate_workspace(criteria: &[Criterion], workspace: &Path) -> Vec<bool> {
    let files = workspace_files(workspace);
    criteria.iter().map(|c| check_in(c, workspace, &files)).collect()
}
