use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use asa_core::agent::{
    prompts, run_main_sub, run_mission, trim_memory, AgentError, MissionReport,
};
use asa_core::evaluator::{default_criteria, evaluate_workspace, FulfillmentMatrix};
use asa_core::mission::{load_transcript, DialogueHistory, Message, MissionState, ResearchPlan, Role};
use asa_core::provider::{ScriptEntry, ScriptedCorpus, ScriptedProvider};
use asa_core::remote::{Auth, LoopbackTransport, RemoteSession, RemoteTarget};
use asa_core::sandbox::Sandbox;
use asa_core::scenarios;
use asa_core::Secret;

fn plan(ws: &Path) -> ResearchPlan {
    ResearchPlan::from_text("rp1", scenarios::RW_PLAN, ws.to_path_buf())
}

fn sandbox() -> Sandbox {
    Sandbox::new("python3", Duration::from_secs(60))
}

fn run(corpus: ScriptedCorpus, rp: &ResearchPlan) -> MissionReport {
    let mut p = ScriptedProvider::new(corpus);
    run_mission(rp, &mut p, &sandbox(), None).unwrap()
}

fn executions(ws: &Path) -> usize {
    fs::read_to_string(ws.join(".asa/executions.jsonl"))
        .unwrap()
        .lines()
        .count()
}

#[test]
fn happy_path_meets_all_default_criteria() {
    let tmp = tempfile::tempdir().unwrap();
    let ws = tmp.path().join("trial_0");
    let r = run(scenarios::happy_rw(), &plan(&ws));
    assert_eq!(r.status.state, MissionState::Complete, "{r:?}");
    assert_eq!(r.outcome_line(), "mission complete");
    assert_eq!((r.programs_written, r.programs_failed), (1, 0));
    assert_eq!(r.turns, 3);
    assert_eq!(evaluate_workspace(&default_criteria(), &ws), vec![true; 7]);
    for f in ["data.csv", "conformation.svg", "fit.svg", "report.md"] {
        assert!(r.artifacts.contains(&PathBuf::from(f)), "{f} missing from {:?}", r.artifacts);
    }
    let report = MissionReport::load(&ws.join(".asa/mission_report.json")).unwrap();
    assert_eq!(report, r);
    let t = load_transcript(&ws.join(".asa/transcript.jsonl")).unwrap();
    assert!(t.is_well_formed());
    assert!(t.messages()[3].content.starts_with(prompts::REVIEW_HEADER));
}

#[test]
fn fulfillment_csv_is_byte_stable() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = |name: &str| {
        let mut m = FulfillmentMatrix::new(default_criteria().into_iter().map(|c| c.id).collect());
        let mut trials = Vec::new();
        for i in 0..2 {
            let ws = tmp.path().join(name).join(format!("trial_{i}"));
            let mut rp = plan(&ws);
            rp.trial_index = i;
            run(scenarios::happy_rw(), &rp);
            trials.push(evaluate_workspace(&default_criteria(), &ws));
        }
        m.push_trials("scripted", &trials).unwrap();
        m.to_csv()
    };
    let a = csv("a");
    assert_eq!(a, csv("b"));
    assert!(a.ends_with("scripted,2,2,2,2,2,2,2\n"), "{a}");
    // Same seed per trial index, same numbers.
    assert_eq!(
        fs::read(tmp.path().join("a/trial_1/data.csv")).unwrap(),
        fs::read(tmp.path().join("b/trial_1/data.csv")).unwrap()
    );
}

#[test]
fn broken_then_fixed_completes() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run(scenarios::broken_then_fixed(), &plan(tmp.path()));
    assert_eq!(r.status.state, MissionState::Complete);
    assert_eq!((r.programs_written, r.programs_failed), (2, 1));
}

#[test]
fn infinite_bug_stops_at_the_debug_limit() {
    for max in [1, 3, 6] {
        let tmp = tempfile::tempdir().unwrap();
        let mut rp = plan(tmp.path());
        rp.limits.max_debug_attempts = max;
        let r = run(scenarios::infinite_bug(40), &rp);
        assert_eq!(r.status.state, MissionState::Failed("mission failed".into()));
        assert_eq!(r.outcome_line(), "mission failed");
        assert_eq!(executions(tmp.path()), max as usize);
        assert_eq!(r.programs_failed, max);
        assert_eq!(r.programs_written, max);
    }
}

#[test]
fn long_debug_chains_trim_the_context() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rp = plan(tmp.path());
    rp.limits.max_debug_attempts = 6;
    rp.limits.memory_trim_threshold = 2;
    let r = run(scenarios::infinite_bug(40), &rp);
    assert!(r.memory_trims >= 1);
    let t = load_transcript(&r.transcript_path).unwrap();
    let errors = t
        .messages()
        .iter()
        .filter(|m| m.content.starts_with(prompts::ERROR_HEADER))
        .count();
    assert_eq!(errors, 5, "persisted transcript keeps every exchange");
}

#[test]
fn error_loop_trims_then_fails_fast() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run(scenarios::error_loop(), &plan(tmp.path()));
    assert_eq!(r.status.state, MissionState::Failed("error loop".into()));
    assert_eq!(r.error_loops, 2);
    assert!(r.memory_trims >= 1);
    assert_eq!(executions(tmp.path()), 2);
    assert!(r.programs_failed < r.status.turns_used);
    let t = load_transcript(&r.transcript_path).unwrap();
    assert!(t.messages().iter().any(|m| m.content.starts_with(prompts::LOOP_HEADER)));
}

#[test]
fn instant_completion_writes_no_program() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run(scenarios::instant_complete(), &plan(tmp.path()));
    assert_eq!(r.status.state, MissionState::Complete);
    assert_eq!(r.programs_written, 0);
    assert_eq!(r.turns, 1);
}

#[test]
fn reported_failure_and_turn_limit() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run(ScriptedCorpus::new(vec![ScriptEntry::reply("MISSION FAILED: no data")]), &plan(tmp.path()));
    assert_eq!(r.status.state, MissionState::Failed("agent reported failure".into()));

    let tmp = tempfile::tempdir().unwrap();
    let mut rp = plan(tmp.path());
    rp.limits.max_turns = 4;
    let chatter = ScriptedCorpus::new((0..10).map(|i| ScriptEntry::reply(format!("thinking {i}"))).collect());
    let r = run(chatter, &rp);
    assert_eq!(r.status.state, MissionState::Failed("turn limit".into()));
    assert_eq!(r.turns, 4);
    let t = load_transcript(&r.transcript_path).unwrap();
    let checks: Vec<_> = t
        .messages()
        .iter()
        .filter(|m| m.content.starts_with(prompts::PROGRESS_HEADER))
        .collect();
    assert_eq!(checks.len(), 4);
    assert!(checks[0]
        .content
        .to_lowercase()
        .contains("check the dialogues and files in the working directory"));
}

#[test]
fn sentinel_inside_code_is_not_completion() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = ScriptedCorpus::new(vec![
        ScriptEntry::reply("```python\nprint('MISSION COMPLETE')\n```"),
        ScriptEntry::when(prompts::REVIEW_HEADER, "ok"),
        ScriptEntry::when(prompts::SUCCESS_HEADER, "MISSION COMPLETE"),
    ]);
    let r = run(corpus, &plan(tmp.path()));
    assert_eq!(r.status.state, MissionState::Complete);
    assert_eq!(r.programs_written, 1);
}

#[test]
fn provider_failure_ends_the_mission() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run(ScriptedCorpus::new(vec![ScriptEntry::reply("thinking")]), &plan(tmp.path()));
    assert_eq!(r.status.state, MissionState::Failed("provider".into()));
    assert!(r.detail.unwrap().contains("exhausted"));
}

#[test]
fn unusable_workspace_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let ws = tmp.path().join("trial_3");
    fs::write(&ws, "not a directory").unwrap();
    let mut p = ScriptedProvider::new(scenarios::happy_rw());
    assert!(matches!(
        run_mission(&plan(&ws), &mut p, &sandbox(), None),
        Err(AgentError::Workspace { .. })
    ));
}

fn debug_fixture(exchanges: usize) -> DialogueHistory {
    let mut h = DialogueHistory::from_messages(vec![Message::system("pre"), Message::user("the plan")]);
    h.push(Message::assistant("```python\nprint(0)\n```"));
    h.push(Message::user(format!("{}\nok", prompts::REVIEW_HEADER)));
    for i in 0..exchanges {
        h.push(Message::assistant(format!("```python\nprogram {i}\n```")));
        h.push(Message::user(format!("{} error {i}", prompts::ERROR_HEADER)));
    }
    h
}

#[test]
fn trim_memory_fixtures() {
    let h = debug_fixture(5);
    let t = trim_memory(&h, 3);
    assert_eq!(t.len(), h.len() - 4);
    let contents: Vec<&str> = t.messages().iter().map(|m| m.content.as_str()).collect();
    assert_eq!(contents[1], "the plan");
    assert!(contents[2].contains("print(0)"), "non-debug turns stay");
    assert!(!contents.iter().any(|c| c.contains("program 0") || c.contains("error 1")));
    assert!(contents.iter().any(|c| c.contains("program 2")));
    assert_eq!(*contents.last().unwrap(), format!("{} error 4", prompts::ERROR_HEADER));
    assert!(t.is_well_formed());

    let exact = debug_fixture(3);
    assert_eq!(trim_memory(&exact, 3), exact);
    let none = debug_fixture(0);
    assert_eq!(trim_memory(&none, 1), none);
    let one = trim_memory(&h, 1);
    assert_eq!(one.len(), 6);
    assert_eq!(one.messages()[4].content, "```python\nprogram 4\n```");
    assert_eq!(one.messages()[4].role, Role::Assistant);
}

fn inputs(t: &DialogueHistory) -> Vec<&str> {
    t.messages()
        .iter()
        .filter(|m| m.role != Role::Assistant)
        .map(|m| m.content.as_str())
        .collect()
}

#[test]
fn subordinates_are_isolated() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run_main_sub(&plan(tmp.path()), &scenarios::main_sub(), &sandbox(), None).unwrap();
    assert_eq!(r.status.state, MissionState::Complete);
    assert_eq!(r.subordinates.len(), 2);
    assert!(r.subordinates.iter().all(|s| s.status.state == MissionState::Complete));
    assert_eq!(fs::read_to_string(tmp.path().join("part_a.txt")).unwrap(), "alpha ready\n");
    assert_eq!(fs::read_to_string(tmp.path().join("part_b.txt")).unwrap(), "beta ready\n");
    assert!(tmp.path().join("sub1_prog_2_0.py").exists());

    let main = load_transcript(&r.transcript_path).unwrap();
    let report_turn = main
        .messages()
        .iter()
        .find(|m| m.content.starts_with(prompts::REPORT_HEADER))
        .unwrap();
    assert!(report_turn.content.contains("part_a.txt is written."));
    assert!(report_turn.content.contains("part_b.txt is written."));

    for (k, body) in [(0, scenarios::SUB_TASK_A), (1, scenarios::SUB_TASK_B)] {
        let sub = load_transcript(&tmp.path().join(format!(".asa/sub{k}/transcript.jsonl"))).unwrap();
        assert_eq!(sub.messages()[0].role, Role::System);
        assert_eq!(sub.messages()[1].content, body);
        for m in main.messages() {
            if m.content == body {
                continue;
            }
            for input in inputs(&sub) {
                assert!(!input.contains(m.content.as_str()), "main content leaked into sub{k}");
            }
        }
        // No sibling content either.
        let other = if k == 0 { scenarios::SUB_TASK_B } else { scenarios::SUB_TASK_A };
        assert!(inputs(&sub).iter().all(|i| !i.contains(other)));
    }
}

#[test]
fn missing_credentials_are_relayed_to_main() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run_main_sub(
        &plan(tmp.path()),
        &scenarios::main_sub_missing_credentials(),
        &sandbox(),
        None,
    )
    .unwrap();
    assert_eq!(r.subordinates.len(), 1);
    assert_eq!(
        r.subordinates[0].status.state,
        MissionState::Failed("agent reported failure".into())
    );
    let main = load_transcript(&r.transcript_path).unwrap();
    assert!(main.messages().iter().any(|m| m.content.contains("mission failed")
        && m.content.contains("No login details")));
    assert_eq!(r.status.state, MissionState::Failed("agent reported failure".into()));
}

#[test]
fn zero_delegations() {
    let tmp = tempfile::tempdir().unwrap();
    let src = asa_core::provider::ScriptedSource::single(scenarios::instant_complete());
    let r = run_main_sub(&plan(tmp.path()), &src, &sandbox(), None).unwrap();
    assert_eq!(r.status.state, MissionState::Complete);
    assert!(r.subordinates.is_empty());
}

const PASSWORD: &str = "Loopback-Secret-99";

fn all_bytes_under(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    walkdir::WalkDir::new(root)
        .into_iter()
        .flatten()
        .filter(|e| e.file_type().is_file())
        .map(|e| (e.path().to_path_buf(), fs::read(e.path()).unwrap()))
        .collect()
}

#[test]
fn remote_mission_keeps_credentials_out_of_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let ws = tmp.path().join("trial_0");
    let remote_root = tmp.path().join("remote");
    let target = RemoteTarget {
        host: "cluster".into(),
        port: 22,
        username: "sim".into(),
        auth: Auth::Password(Secret::new(PASSWORD)),
        remote_dir: "/scratch/sim".into(),
    };
    fs::create_dir_all(remote_root.join("scratch/sim")).unwrap();
    let mut session = RemoteSession::new(
        target.clone(),
        Box::new(LoopbackTransport::accepting(remote_root.clone(), &target)),
    );
    let mut corpus = scenarios::remote_rw();
    // A model that echoes the secret back must not get it persisted.
    corpus.entries.insert(
        0,
        ScriptEntry::reply(format!("Is the password {PASSWORD}? Let me write the program next.")),
    );
    let mut p = ScriptedProvider::new(corpus);
    let r = run_mission(&plan(&ws), &mut p, &sandbox(), Some(&mut session)).unwrap();
    assert_eq!(r.status.state, MissionState::Complete, "{r:?}");
    assert!(remote_root.join("scratch/sim/trial_0/data.csv").exists());
    assert!(ws.join("report.md").exists());
    assert!(r.artifacts.contains(&PathBuf::from("fit.svg")));
    for (path, bytes) in all_bytes_under(tmp.path()) {
        let text = String::from_utf8_lossy(&bytes);
        assert!(!text.contains(PASSWORD), "{} contains the password", path.display());
    }
    let t = load_transcript(&r.transcript_path).unwrap();
    assert!(t.messages()[2].content.contains("[REDACTED]"));
}
