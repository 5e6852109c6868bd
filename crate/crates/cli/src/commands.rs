use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use clap::ValueEnum;
use serde::Serialize;

use asa_core::agent::{run_main_sub, run_mission, run_nested, AgentError, MissionReport};
use asa_core::collect::collect_artifacts;
use asa_core::evaluator::{evaluate_workspace, score_matrix, score_table, scores_csv, FulfillmentMatrix};
use asa_core::mission::{load_research_plan_in, trial_dir_name, MissionState, ResearchPlan};
use asa_core::remote::TargetSpec;
use asa_core::sandbox::Sandbox;

use crate::config::{ConfigError, HarnessConfig};

pub const EXIT_COMPLETE: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Tier {
    Single,
    MainSub,
    Nested,
}

/// Everything a mission needs besides the plan.
pub struct Harness {
    pub config: HarnessConfig,
    pub env: HashMap<String, String>,
    pub tier: Tier,
}

impl Harness {
    fn sandbox(&self) -> Sandbox {
        Sandbox::new(
            self.config.interpreter_command.clone(),
            Duration::from_secs_f64(self.config.limits.exec_timeout),
        )
    }

    fn plan(&self, rp_path: &Path, index: u32, base: &Path) -> Result<ResearchPlan, ConfigError> {
        let mut rp = load_research_plan_in(rp_path, index, base).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        rp.limits = self.config.limits;
        rp.payload_language_tag = self.config.payload_language_tag.clone();
        Ok(rp)
    }
}

fn execute(
    harness: &Harness,
    rp: &ResearchPlan,
    source: &dyn asa_core::ProviderSource,
    target: Option<&TargetSpec>,
) -> Result<MissionReport, AgentError> {
    let sandbox = harness.sandbox();
    let mut session = target.map(TargetSpec::open_session);
    match harness.tier {
        Tier::MainSub => run_main_sub(rp, source, &sandbox, session.as_mut()),
        Tier::Single | Tier::Nested => {
            let mut provider = source.open("main").map_err(AgentError::Provider)?;
            if harness.tier == Tier::Nested {
                run_nested(rp, provider.as_mut(), &sandbox, session.as_mut())
            } else {
                run_mission(rp, provider.as_mut(), &sandbox, session.as_mut())
            }
        }
    }
}

/// One mission in `<base>/trial_<index>`. Returns the exit code.
pub fn cmd_run(harness: &Harness, rp_path: &Path, index: u32, base: &Path) -> i32 {
    let prepared = (|| {
        let rp = harness.plan(rp_path, index, base)?;
        let source = harness.config.provider_source()?;
        let target = harness.config.remote_target(&harness.env)?;
        Ok::<_, ConfigError>((rp, source, target))
    })();
    let (rp, source, target) = match prepared {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match execute(harness, &rp, source.as_ref(), target.as_ref()) {
        Ok(report) => {
            println!(
                "turns {} | programs {} ({} failed) | artifacts {}",
                report.turns,
                report.programs_written,
                report.programs_failed,
                report.artifacts.len()
            );
            if let MissionState::Failed(reason) = &report.status.state {
                println!("reason: {reason}");
            }
            println!("{}", report.outcome_line());
            if report.status.is_complete() {
                EXIT_COMPLETE
            } else {
                EXIT_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            println!("mission failed");
            EXIT_FAILED
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchTrial {
    pub index: u32,
    pub status: String,
    pub reason: Option<String>,
    pub turns: u32,
    pub programs_written: u32,
    pub programs_failed: u32,
    pub criteria_met: Vec<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchSummary {
    pub rp: String,
    pub agent: String,
    pub criteria: Vec<String>,
    pub trials: Vec<BatchTrial>,
    pub completed: usize,
    pub failed: usize,
}

pub const BATCH_SUMMARY_FILE: &str = "batch_summary.json";
pub const FULFILLMENT_FILE: &str = "fulfillment.csv";

/// `trials` isolated missions, at most `parallelism` at a time.
pub fn cmd_batch(
    harness: &Harness,
    rp_path: &Path,
    trials: u32,
    parallelism: u32,
    base: &Path,
    agent: Option<String>,
) -> i32 {
    if trials == 0 || parallelism == 0 {
        eprintln!("error: --trials and --parallelism must be at least 1");
        return EXIT_USAGE;
    }
    let prepared = (|| {
        let plans = (0..trials)
            .map(|i| harness.plan(rp_path, i, base))
            .collect::<Result<Vec<_>, _>>()?;
        let source = harness.config.provider_source()?;
        let target = harness.config.remote_target(&harness.env)?;
        let criteria = harness.config.criteria()?;
        Ok::<_, ConfigError>((plans, source, target, criteria))
    })();
    let (plans, source, target, criteria) = match prepared {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };

    let next = AtomicU32::new(0);
    let results: Mutex<Vec<BatchTrial>> = Mutex::new(Vec::new());
    std::thread::scope(|s| {
        for _ in 0..parallelism.min(trials) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= trials {
                    break;
                }
                let rp = &plans[i as usize];
                let trial = match execute(harness, rp, source.as_ref(), target.as_ref()) {
                    Ok(r) => BatchTrial {
                        index: i,
                        status: r.outcome_line().into(),
                        reason: match &r.status.state {
                            MissionState::Failed(why) => Some(why.clone()),
                            _ => None,
                        },
                        turns: r.turns,
                        programs_written: r.programs_written,
                        programs_failed: r.programs_failed,
                        criteria_met: evaluate_workspace(&criteria, &rp.workspace),
                    },
                    Err(e) => BatchTrial {
                        index: i,
                        status: "mission failed".into(),
                        reason: Some(e.to_string()),
                        turns: 0,
                        programs_written: 0,
                        programs_failed: 0,
                        criteria_met: vec![false; criteria.len()],
                    },
                };
                println!("trial {i}: {}", trial.status);
                results.lock().expect("results lock").push(trial);
            });
        }
    });
    let mut trials_out = results.into_inner().expect("results lock");
    trials_out.sort_by_key(|t| t.index);

    let agent = agent.unwrap_or_else(|| harness.config.agent_name());
    let ids: Vec<String> = criteria.iter().map(|c| c.id.clone()).collect();
    let mut matrix = FulfillmentMatrix::new(ids.clone());
    let met: Vec<Vec<bool>> = trials_out.iter().map(|t| t.criteria_met.clone()).collect();
    matrix.push_trials(&agent, &met).expect("criteria count matches");
    let completed = trials_out.iter().filter(|t| t.status == "mission complete").count();
    let summary = BatchSummary {
        rp: rp_path.display().to_string(),
        agent,
        criteria: ids,
        failed: trials_out.len() - completed,
        completed,
        trials: trials_out,
    };
    let written = fs::create_dir_all(base)
        .and_then(|_| matrix.save(&base.join(FULFILLMENT_FILE)))
        .and_then(|_| {
            fs::write(
                base.join(BATCH_SUMMARY_FILE),
                serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
            )
        });
    if let Err(e) = written {
        eprintln!("error: cannot write batch outputs in {}: {e}", base.display());
        return EXIT_FAILED;
    }
    println!("batch: {} complete, {} failed", summary.completed, summary.failed);
    EXIT_COMPLETE
}

pub const SCORES_FILE: &str = "scores.csv";

pub fn cmd_eval(inputs: &[PathBuf], out_dir: &Path) -> i32 {
    let parts = match inputs.iter().map(|p| FulfillmentMatrix::load(p)).collect::<Result<Vec<_>, _>>() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let matrix = match FulfillmentMatrix::merge(parts) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let bundle = match score_matrix(&matrix.values) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Err(e) = fs::create_dir_all(out_dir).and_then(|_| fs::write(out_dir.join(SCORES_FILE), scores_csv(&matrix, &bundle))) {
        eprintln!("error: cannot write {}: {e}", out_dir.join(SCORES_FILE).display());
        return EXIT_FAILED;
    }
    print!("{}", score_table(&matrix, &bundle));
    EXIT_COMPLETE
}

pub fn cmd_collect(trial_dirs: &[PathBuf], dest: &Path) -> i32 {
    let missing: Vec<_> = trial_dirs.iter().filter(|d| !d.is_dir()).collect();
    if !missing.is_empty() {
        for d in missing {
            eprintln!("error: not a directory: {}", d.display());
        }
        return EXIT_USAGE;
    }
    let index = collect_artifacts(trial_dirs, dest);
    for t in &index.trials {
        println!(
            "{}: {} programs, {} images, {} data files, {} reports",
            t.trial, t.programs, t.images, t.data, t.reports
        );
    }
    println!(
        "total: {} programs, {} images, {} data files, {} reports",
        index.programs, index.images, index.data, index.reports
    );
    if index.trials.iter().any(|t| !t.errors.is_empty()) {
        EXIT_FAILED
    } else {
        EXIT_COMPLETE
    }
}

/// Writes the scenario's corpus files as `<out>/<name>.jsonl` plus
/// `<name>.<label>.jsonl` for subordinate corpora.
pub fn cmd_scenario(name: &str, out_dir: &Path) -> i32 {
    let scenario = match name.parse::<asa_core::scenarios::Scenario>() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Err(e) = fs::create_dir_all(out_dir) {
        eprintln!("error: {e}");
        return EXIT_FAILED;
    }
    for (label, corpus) in asa_core::scenarios::corpus_bundle(scenario) {
        let file = if label == "main" {
            format!("{name}.jsonl")
        } else {
            format!("{name}.{label}.jsonl")
        };
        let path = out_dir.join(file);
        if let Err(e) = corpus.save(&path) {
            eprintln!("error: {}: {e}", path.display());
            return EXIT_FAILED;
        }
        println!("{}", path.display());
    }
    EXIT_COMPLETE
}

pub fn trial_dirs_under(base: &Path, count: u32) -> Vec<PathBuf> {
    (0..count).map(|i| base.join(trial_dir_name(i))).collect()
}
