use std::path::PathBuf;
use std::thread;
use std::time::{Duration, Instant};

use asa_core::sandbox::{execute_program, snapshot_workspace, Sandbox};

#[test]
fn hello_world() {
    let ws = tempfile::tempdir().unwrap();
    let o = execute_program("print('hello')", ws.path(), "python3", Duration::from_secs(10)).unwrap();
    assert!(o.exit_ok);
    assert_eq!(o.exit_code, 0);
    assert_eq!(o.stdout, "hello\n");
    assert!(o.files_created.is_empty());
}

#[test]
fn exception_is_captured() {
    let ws = tempfile::tempdir().unwrap();
    let o = execute_program("raise ValueError('boom')", ws.path(), "python3", Duration::from_secs(10)).unwrap();
    assert!(!o.exit_ok);
    assert_eq!(o.exit_code, 1);
    assert!(o.stderr.contains("ValueError: boom"));
}

#[test]
fn timeout_kills_and_keeps_partial_files() {
    let ws = tempfile::tempdir().unwrap();
    let src = "import time\nopen('data.csv','w').write('N\\n')\nprint('started', flush=True)\ntime.sleep(60)\n";
    let t = Instant::now();
    let o = execute_program(src, ws.path(), "python3", Duration::from_millis(700)).unwrap();
    assert!(t.elapsed() < Duration::from_secs(10));
    assert!(o.timed_out);
    assert!(!o.exit_ok);
    assert!(o.stdout.contains("started"));
    assert_eq!(o.files_created, vec![PathBuf::from("data.csv")]);
}

#[test]
fn child_processes_are_killed_on_timeout() {
    let ws = tempfile::tempdir().unwrap();
    let src = "import subprocess, time\nsubprocess.Popen(['sleep', '30'])\ntime.sleep(30)\n";
    let t = Instant::now();
    let o = execute_program(src, ws.path(), "python3", Duration::from_millis(500)).unwrap();
    assert!(o.timed_out);
    assert!(t.elapsed() < Duration::from_secs(5));
}

#[test]
fn missing_interpreter() {
    let ws = tempfile::tempdir().unwrap();
    let sb = Sandbox::new("no-such-interpreter-xyz", Duration::from_secs(1));
    assert!(sb.execute("x", ws.path(), "p.py").is_err());
}

#[test]
fn trial_index_in_environment_and_artifacts_listed() {
    let ws = tempfile::tempdir().unwrap();
    let sb = Sandbox::new("python3", Duration::from_secs(10)).with_trial_index(7);
    let o = sb
        .execute(
            "import os\nos.makedirs('out', exist_ok=True)\nopen('out/t.txt','w').write(os.environ['TRIAL_INDEX'])\n",
            ws.path(),
            "prog_1_0.py",
        )
        .unwrap();
    assert!(o.exit_ok, "{}", o.stderr);
    assert_eq!(o.files_created, vec![PathBuf::from("out/t.txt")]);
    assert_eq!(std::fs::read_to_string(ws.path().join("out/t.txt")).unwrap(), "7");
    assert!(snapshot_workspace(ws.path()).unwrap().entries.contains_key(&PathBuf::from("prog_1_0.py")));
}

#[test]
fn concurrent_workspaces_are_isolated() {
    let dirs: Vec<_> = (0..4).map(|_| tempfile::tempdir().unwrap()).collect();
    let handles: Vec<_> = dirs
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let p = d.path().to_path_buf();
            thread::spawn(move || {
                let src = format!("open('mine.txt','w').write('{i}')\n");
                execute_program(&src, &p, "python3", Duration::from_secs(10)).unwrap()
            })
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap().files_created, vec![PathBuf::from("mine.txt")]);
    }
    for (i, d) in dirs.iter().enumerate() {
        assert_eq!(std::fs::read_to_string(d.path().join("mine.txt")).unwrap(), i.to_string());
    }
}

#[test]
fn output_is_capped() {
    let ws = tempfile::tempdir().unwrap();
    let mut sb = Sandbox::new("python3", Duration::from_secs(10));
    sb.output_cap = 1024;
    let o = sb.execute("print('x' * 100000)\nprint('tail-marker')", ws.path(), "p.py").unwrap();
    assert!(o.stdout.len() < 4096);
    assert!(o.stdout.contains("tail-marker"));
}
