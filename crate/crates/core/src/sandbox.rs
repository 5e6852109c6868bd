//! Runs payload programs in a per-trial directory and reports what they did.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read};
use std::path::{Component, Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Directory holding harness bookkeeping inside a workspace; never part of a
/// manifest.
pub const STATE_DIR: &str = ".asa";

/// Per-stream cap on captured output, bytes.
pub const OUTPUT_CAP: usize = 32 * 1024;

#[derive(Debug, Error)]
pub enum SandboxError {
    #[error("interpreter not found: {0}")]
    InterpreterNotFound(String),
    #[error("workspace not writable: {path}: {source}")]
    WorkspaceUnwritable { path: PathBuf, source: io::Error },
    #[error("empty interpreter command")]
    EmptyInterpreter,
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionOutcome {
    pub exit_ok: bool,
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
    /// Seconds.
    pub duration: f64,
    /// Relative to the workspace, sorted.
    pub files_created: Vec<PathBuf>,
    pub timed_out: bool,
}

impl ExecutionOutcome {
    /// Failed outcome that never reached a process, e.g. a rejected remote
    /// directive.
    pub fn failure(message: impl Into<String>) -> Self {
        Self {
            exit_ok: false,
            exit_code: -1,
            stdout: String::new(),
            stderr: message.into(),
            duration: 0.0,
            files_created: Vec::new(),
            timed_out: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub size: u64,
    /// Hex SHA-256 of the content.
    pub digest: String,
}

/// Relative path → size and content digest.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FileManifest {
    pub entries: BTreeMap<PathBuf, FileEntry>,
}

impl FileManifest {
    /// Paths added or modified in `after` relative to `self`.
    pub fn changed_in(&self, after: &FileManifest) -> Vec<PathBuf> {
        after
            .entries
            .iter()
            .filter(|(p, e)| self.entries.get(*p) != Some(e))
            .map(|(p, _)| p.clone())
            .collect()
    }
}

pub fn digest_bytes(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

fn is_state_path(rel: &Path) -> bool {
    rel.components()
        .any(|c| matches!(c, Component::Normal(n) if n == STATE_DIR))
}

/// Deterministic manifest of all regular files below `workspace`, skipping
/// harness state directories. Symlinks are not followed.
pub fn snapshot_workspace(workspace: &Path) -> io::Result<FileManifest> {
    let mut entries = BTreeMap::new();
    for entry in walkdir::WalkDir::new(workspace)
        .follow_links(false)
        .sort_by_file_name()
    {
        let entry = entry.map_err(io::Error::other)?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(workspace)
            .map_err(io::Error::other)?
            .to_path_buf();
        if is_state_path(&rel) {
            continue;
        }
        let data = fs::read(entry.path())?;
        entries.insert(
            rel,
            FileEntry {
                size: data.len() as u64,
                digest: digest_bytes(&data),
            },
        );
    }
    Ok(FileManifest { entries })
}

/// File extension used for a payload tag.
pub fn extension_for_tag(tag: &str) -> String {
    match tag.to_ascii_lowercase().as_str() {
        "python" | "py" | "python3" => "py".into(),
        "bash" | "sh" | "shell" => "sh".into(),
        "javascript" | "js" | "node" => "js".into(),
        other => other.into(),
    }
}

/// Default interpreter command for a payload tag.
pub fn interpreter_for_tag(tag: &str) -> String {
    match tag.to_ascii_lowercase().as_str() {
        "python" | "py" | "python3" => "python3".into(),
        "bash" => "bash".into(),
        "sh" | "shell" => "sh".into(),
        "javascript" | "js" | "node" => "node".into(),
        other => other.into(),
    }
}

/// Keeps the first and last halves of a stream once it exceeds the cap.
struct CappedBuffer {
    cap: usize,
    head: Vec<u8>,
    tail: std::collections::VecDeque<u8>,
    dropped: usize,
}

impl CappedBuffer {
    fn new(cap: usize) -> Self {
        Self {
            cap,
            head: Vec::new(),
            tail: std::collections::VecDeque::new(),
            dropped: 0,
        }
    }

    fn extend(&mut self, mut data: &[u8]) {
        let head_cap = self.cap / 2;
        if self.head.len() < head_cap {
            let take = (head_cap - self.head.len()).min(data.len());
            self.head.extend_from_slice(&data[..take]);
            data = &data[take..];
        }
        let tail_cap = self.cap - head_cap;
        for &b in data {
            if self.tail.len() == tail_cap {
                self.tail.pop_front();
                self.dropped += 1;
            }
            self.tail.push_back(b);
        }
    }

    fn into_string(self) -> String {
        let mut s = String::from_utf8_lossy(&self.head).into_owned();
        if self.dropped > 0 {
            s.push_str(&format!("\n[... {} bytes truncated ...]\n", self.dropped));
        }
        let tail: Vec<u8> = self.tail.into_iter().collect();
        s.push_str(&String::from_utf8_lossy(&tail));
        s
    }
}

fn spawn_reader<R: Read + Send + 'static>(mut stream: R, cap: usize) -> mpsc::Receiver<String> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut buf = CappedBuffer::new(cap);
        let mut chunk = [0u8; 8192];
        loop {
            match stream.read(&mut chunk) {
                Ok(0) | Err(_) => break,
                Ok(n) => buf.extend(&chunk[..n]),
            }
        }
        let _ = tx.send(buf.into_string());
    });
    rx
}

#[cfg(unix)]
fn kill_tree(child: &mut std::process::Child) {
    // The child leads its own process group; signal the whole group.
    unsafe {
        libc::kill(-(child.id() as i32), libc::SIGKILL);
    }
    let _ = child.kill();
}

#[cfg(not(unix))]
fn kill_tree(child: &mut std::process::Child) {
    let _ = child.kill();
}

/// Executes payload programs with a fixed interpreter and time limit.
#[derive(Debug, Clone)]
pub struct Sandbox {
    pub interpreter_command: String,
    pub timeout: Duration,
    pub output_cap: usize,
    pub trial_index: u32,
}

impl Sandbox {
    pub fn new(interpreter_command: impl Into<String>, timeout: Duration) -> Self {
        Self {
            interpreter_command: interpreter_command.into(),
            timeout,
            output_cap: OUTPUT_CAP,
            trial_index: 0,
        }
    }

    pub fn with_trial_index(mut self, index: u32) -> Self {
        self.trial_index = index;
        self
    }

    /// Writes `source` to `<workspace>/<file_name>`, runs the interpreter on
    /// it from the workspace and diffs the workspace around the run.
    pub fn execute(
        &self,
        source: &str,
        workspace: &Path,
        file_name: &str,
    ) -> Result<ExecutionOutcome, SandboxError> {
        let argv = shlex::split(&self.interpreter_command)
            .filter(|v| !v.is_empty())
            .ok_or(SandboxError::EmptyInterpreter)?;

        let source_path = workspace.join(file_name);
        fs::write(&source_path, source).map_err(|e| SandboxError::WorkspaceUnwritable {
            path: source_path.clone(),
            source: e,
        })?;
        let before = snapshot_workspace(workspace)?;

        let mut cmd = Command::new(&argv[0]);
        cmd.args(&argv[1..])
            .arg(file_name)
            .current_dir(workspace)
            .env("TRIAL_INDEX", self.trial_index.to_string())
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());
        #[cfg(unix)]
        {
            use std::os::unix::process::CommandExt;
            cmd.process_group(0);
        }

        let started = Instant::now();
        let mut child = cmd.spawn().map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => SandboxError::InterpreterNotFound(argv[0].clone()),
            _ => SandboxError::Io(e),
        })?;
        let out_rx = spawn_reader(child.stdout.take().expect("piped stdout"), self.output_cap);
        let err_rx = spawn_reader(child.stderr.take().expect("piped stderr"), self.output_cap);

        let deadline = started + self.timeout;
        let mut timed_out = false;
        let status = loop {
            if let Some(status) = child.try_wait()? {
                break Some(status);
            }
            if Instant::now() >= deadline {
                timed_out = true;
                kill_tree(&mut child);
                break child.wait().ok();
            }
            thread::sleep(Duration::from_millis(5));
        };
        let duration = started.elapsed().as_secs_f64();

        // Grandchildren that escaped the group may hold the pipes open.
        let grace = Duration::from_secs(2);
        let stdout = out_rx.recv_timeout(grace).unwrap_or_default();
        let mut stderr = err_rx.recv_timeout(grace).unwrap_or_default();
        if timed_out {
            stderr.push_str(&format!(
                "\n[killed after exceeding the {:.1} s time limit]\n",
                self.timeout.as_secs_f64()
            ));
        }

        let exit_code = status.and_then(|s| s.code()).unwrap_or(-1);
        let exit_ok = !timed_out && status.is_some_and(|s| s.success());

        let after = snapshot_workspace(workspace)?;
        let source_rel = PathBuf::from(file_name);
        let files_created = before
            .changed_in(&after)
            .into_iter()
            .filter(|p| *p != source_rel)
            .collect();

        Ok(ExecutionOutcome {
            exit_ok,
            exit_code,
            stdout,
            stderr,
            duration,
            files_created,
            timed_out,
        })
    }
}

/// One-shot execution with the default payload file name.
pub fn execute_program(
    source: &str,
    workspace: &Path,
    interpreter_command: &str,
    timeout: Duration,
) -> Result<ExecutionOutcome, SandboxError> {
    let ext = interpreter_command
        .split_whitespace()
        .next()
        .map(|i| if i.starts_with("python") { "py" } else { "sh" })
        .unwrap_or("txt");
    Sandbox::new(interpreter_command, timeout).execute(source, workspace, &format!("prog_0_0.{ext}"))
}
