mod common;

use std::fs;

use asa_core::agent::NESTED_SUMMARY_FILE;
use asa_core::scenarios;
use common::*;

#[test]
fn run_happy_path_and_trial_index() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = save(&scenarios::happy_rw(), &tmp.path().join("happy.jsonl"));
    write_plan(tmp.path(), "rp1.txt");
    let o = asa(tmp.path(), &["run", "-s", "rp1.txt", "--corpus", corpus.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(last_line(&o), "mission complete");
    for f in ["report.md", "conformation.svg", "fit.svg", "data.csv", ".asa/transcript.jsonl"] {
        assert!(tmp.path().join("trial_0").join(f).exists(), "{f}");
    }
    let o = asa(tmp.path(), &["run", "-s", "rp1.txt", "-n", "7", "--corpus", "happy.jsonl"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(tmp.path().join("trial_7/report.md").exists());
}

#[test]
fn config_errors_exit_2_and_write_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    write_plan(tmp.path(), "rp1.txt");
    let o = asa(tmp.path(), &["run", "-s", "rp1.txt", "--corpus", "missing.jsonl"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!tmp.path().join("trial_0").exists());

    let o = asa(tmp.path(), &["run", "-s", "rp1.txt"]);
    assert_eq!(o.status.code(), Some(2), "no provider configured");

    save(&scenarios::happy_rw(), &tmp.path().join("c.jsonl"));
    let o = asa(tmp.path(), &["run", "-s", "absent.txt", "--corpus", "c.jsonl"]);
    assert_eq!(o.status.code(), Some(2));

    let o = asa(tmp.path(), &["run"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!tmp.path().join("trial_0").exists());
}

#[test]
fn failing_mission_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    save(&scenarios::infinite_bug(40), &tmp.path().join("bug.jsonl"));
    write_plan(tmp.path(), "rp1.txt");
    fs::write(tmp.path().join("asa.conf"), "corpus = bug.jsonl\nmax_debug_attempts = 3\n").unwrap();
    let o = asa(tmp.path(), &["run", "-s", "rp1.txt"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(last_line(&o), "mission failed");
    let lines = fs::read_to_string(tmp.path().join("trial_0/.asa/executions.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 3);
}

#[test]
fn batch_with_a_broken_workspace() {
    let tmp = tempfile::tempdir().unwrap();
    save(&scenarios::happy_rw(), &tmp.path().join("happy.jsonl"));
    write_plan(tmp.path(), "rp1.txt");
    fs::write(tmp.path().join("trial_3"), "in the way").unwrap();
    let o = asa(
        tmp.path(),
        &["batch", "-s", "rp1.txt", "--trials", "6", "--parallelism", "3", "--corpus", "happy.jsonl"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(last_line(&o), "batch: 5 complete, 1 failed");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("batch_summary.json")).unwrap()).unwrap();
    let trials = summary["trials"].as_array().unwrap();
    assert_eq!(trials.len(), 6);
    for t in trials {
        let expect = if t["index"] == 3 { "mission failed" } else { "mission complete" };
        assert_eq!(t["status"], expect);
    }
    assert_eq!(
        fs::read_to_string(tmp.path().join("fulfillment.csv")).unwrap(),
        "agent,program_ran,conformation_plot,fit_plot,data_file,exponent_in_band,report_exists,report_sections\nhappy,5,5,5,5,5,5,5\n"
    );
}

#[test]
fn batch_of_twenty_is_uniform() {
    let tmp = tempfile::tempdir().unwrap();
    save(&scenarios::happy_rw(), &tmp.path().join("happy.jsonl"));
    write_plan(tmp.path(), "rp1.txt");
    let o = asa(
        tmp.path(),
        &["batch", "-s", "rp1.txt", "--trials", "20", "--parallelism", "8", "--corpus", "happy.jsonl", "--agent", "sim"],
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(tmp.path().join("fulfillment.csv")).unwrap();
    assert!(csv.ends_with("sim,20,20,20,20,20,20,20\n"), "{csv}");
}

#[test]
fn eval_scores_and_errors() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("a.csv"), "agent,c1,c2\nstrong,20,15\n").unwrap();
    fs::write(tmp.path().join("b.csv"), "agent,c1,c2\nweak,3,1\n").unwrap();
    let o = asa(tmp.path(), &["eval", "a.csv", "b.csv", "--out", "scores"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        fs::read_to_string(tmp.path().join("scores/scores.csv")).unwrap(),
        "rank,agent,score\n1,strong,1.000000\n2,weak,0.000000\n"
    );
    assert!(stdout(&o).contains("strong"));
    let o = asa(tmp.path(), &["eval", "a.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn collect_trials() {
    let tmp = tempfile::tempdir().unwrap();
    for i in 0..3 {
        let d = tmp.path().join(format!("trial_{i}"));
        fs::create_dir_all(&d).unwrap();
        fs::write(d.join("conformation.svg"), "<svg/>").unwrap();
        fs::write(d.join("fit.svg"), "<svg/>").unwrap();
        fs::write(d.join("report.md"), "# Results").unwrap();
    }
    let o = asa(tmp.path(), &["collect", "trial_0", "trial_1", "trial_2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(last_line(&o), "total: 0 programs, 6 images, 0 data files, 3 reports");
    assert!(tmp.path().join("results/trial_1/plots/fit.svg").exists());
    assert!(tmp.path().join("results/index.json").exists());
    assert_eq!(asa(tmp.path(), &["collect", "nope"]).status.code(), Some(2));
}

#[test]
fn main_sub_tier_from_scenario_files() {
    let tmp = tempfile::tempdir().unwrap();
    let o = asa(tmp.path(), &["scenario", "main_sub", "--out", "corp"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(tmp.path().join("corp/main_sub.sub1.jsonl").exists());
    write_plan(tmp.path(), "rp3.txt");
    let o = asa(tmp.path(), &["run", "-s", "rp3.txt", "--tier", "main-sub", "--corpus", "corp/main_sub.jsonl"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(tmp.path().join("trial_0/part_b.txt").exists());
    assert!(tmp.path().join("trial_0/.asa/sub1/transcript.jsonl").exists());
    assert_eq!(asa(tmp.path(), &["scenario", "bogus"]).status.code(), Some(2));
}

fn nested_setup(trials: u32) -> (tempfile::TempDir, String) {
    let tmp = tempfile::tempdir().unwrap();
    let child = save(&scenarios::happy_rw(), &tmp.path().join("child.jsonl"));
    let primary = scenarios::nested(trials, &["asa".to_string()], child.to_str().unwrap());
    save(&primary, &tmp.path().join("primary.jsonl"));
    fs::write(tmp.path().join("p4.txt"), "Run the random-walk plan as independent trials and organize the files.").unwrap();
    (tmp, "primary.jsonl".into())
}

#[test]
fn nested_trials_are_collected() {
    let (tmp, corpus) = nested_setup(3);
    // Trial 1 cannot create its state folder.
    fs::create_dir_all(tmp.path().join("trial_0/trial_1")).unwrap();
    fs::write(tmp.path().join("trial_0/trial_1/.asa"), "blocked").unwrap();
    let o = asa(tmp.path(), &["run", "-s", "p4.txt", "--tier", "nested", "--corpus", &corpus]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let ws = tmp.path().join("trial_0");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(ws.join(NESTED_SUMMARY_FILE)).unwrap()).unwrap();
    assert_eq!(summary["completed"], 2);
    assert_eq!(summary["failed"], 1);
    let trials = summary["trials"].as_array().unwrap();
    assert_eq!(trials.len(), 3);
    assert_eq!(trials[1]["status"], "no report");
    assert_eq!(trials[2]["status"], "complete");
    assert!(ws.join("results/trial_2/reports/report.md").exists());
    assert!(ws.join("results/trial_0/plots/fit.svg").exists());
    assert!(ws.join("trial_0/.asa/mission_report.json").exists());
    assert_eq!(summary["index"]["trials"][1]["images"], 0);
}

#[test]
fn zero_nested_trials() {
    let (tmp, corpus) = nested_setup(0);
    let o = asa(tmp.path(), &["run", "-s", "p4.txt", "--tier", "nested", "--corpus", &corpus]);
    assert_eq!(o.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("trial_0").join(NESTED_SUMMARY_FILE)).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["trials"].as_array().unwrap().len(), 0);
}

#[test]
fn remote_run_through_target_file() {
    let tmp = tempfile::tempdir().unwrap();
    let password = "cli-Remote-Pass-42";
    fs::create_dir_all(tmp.path().join("remote/data/runs")).unwrap();
    fs::write(
        tmp.path().join("target.conf"),
        "host = hpc.example\nusername = sim\nauth = password\nremote_dir = /data/runs\ntransport = loopback\nloopback_root = remote\n",
    )
    .unwrap();
    save(&scenarios::remote_rw(), &tmp.path().join("remote.jsonl"));
    write_plan(tmp.path(), "rp2.txt");
    fs::write(tmp.path().join("asa.conf"), "corpus = remote.jsonl\nremote_target = target.conf\n").unwrap();
    let o = asa_env(tmp.path(), &["run", "-s", "rp2.txt"], &[("ASA_REMOTE_PASSWORD", password)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(tmp.path().join("remote/data/runs/trial_0/report.md").exists());
    assert!(tmp.path().join("trial_0/report.md").exists());
    assert!(files_containing(tmp.path(), password).is_empty());

    let o = asa(tmp.path(), &["run", "-s", "rp2.txt"]);
    assert_eq!(o.status.code(), Some(2), "password missing from the environment");
    fs::write(tmp.path().join("target.conf"), format!("host=h\nusername=u\nremote_dir=/r\npassword={password}\n")).unwrap();
    let o = asa_env(tmp.path(), &["run", "-s", "rp2.txt"], &[("ASA_REMOTE_PASSWORD", password)]);
    assert_eq!(o.status.code(), Some(2), "password on disk is refused");
}
