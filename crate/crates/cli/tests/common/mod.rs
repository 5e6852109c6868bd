#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use asa_core::provider::ScriptedCorpus;

pub fn asa_bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_asa"))
}

/// `asa` in `dir` with a clean harness environment.
pub fn asa(dir: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(asa_bin());
    cmd.args(args).current_dir(dir);
    for (k, _) in std::env::vars() {
        if k.starts_with("ASA_") {
            cmd.env_remove(k);
        }
    }
    cmd.output().expect("asa runs")
}

pub fn asa_env(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(asa_bin());
    cmd.args(args).current_dir(dir);
    for (k, _) in std::env::vars() {
        if k.starts_with("ASA_") {
            cmd.env_remove(k);
        }
    }
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("asa runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn last_line(o: &Output) -> String {
    stdout(o).lines().last().unwrap_or_default().to_string()
}

pub fn save(corpus: &ScriptedCorpus, path: &Path) -> PathBuf {
    corpus.save(path).unwrap();
    path.to_path_buf()
}

pub fn write_plan(dir: &Path, name: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, asa_core::scenarios::RW_PLAN).unwrap();
    p
}

/// Paths of files under `root` whose bytes contain `needle`.
pub fn files_containing(root: &Path, needle: &str) -> Vec<PathBuf> {
    walkdir::WalkDir::new(root)
        .into_iter()
        .flatten()
        .filter(|e| e.file_type().is_file())
        .filter(|e| {
            fs::read(e.path())
                .map(|b| b.windows(needle.len()).any(|w| w == needle.as_bytes()))
                .unwrap_or(false)
        })
        .map(|e| e.path().to_path_buf())
        .collect()
}
