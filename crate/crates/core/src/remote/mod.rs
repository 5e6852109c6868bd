//! File transfer and command execution on a remote host.
//!
//! [`RemoteSession`] implements the upload / run / download operations on
//! top of a [`Transport`]. Two transports exist: [`SshTransport`] speaks the
//! secure-shell protocol, [`LoopbackTransport`] maps the "remote" filesystem
//! onto a local directory for tests and offline runs.

mod loopback;
mod ssh;

pub use loopback::LoopbackTransport;
pub use ssh::SshTransport;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::sandbox::ExecutionOutcome;
use crate::secret::Secret;

/// Environment variable holding the remote password.
pub const PASSWORD_ENV: &str = "ASA_REMOTE_PASSWORD";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RemoteError {
    #[error("could not connect to {0}")]
    ConnectFailed(String),
    #[error("authentication failed for {0}")]
    AuthFailed(String),
    #[error("transfer failed for {path}: {reason}")]
    TransferFailed { path: String, reason: String },
    #[error("remote execution failed: {0}")]
    RemoteExecFailed(String),
    #[error("connection dropped: {0}")]
    Disconnected(String),
    #[error("invalid remote target: {0}")]
    InvalidTarget(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Auth {
    Password(Secret),
    Key(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteTarget {
    pub host: String,
    pub port: u16,
    pub username: String,
    pub auth: Auth,
    /// Designated remote folder; all paths are resolved below it.
    pub remote_dir: String,
}

impl RemoteTarget {
    pub fn validate(&self) -> Result<(), RemoteError> {
        if self.port == 0 {
            return Err(RemoteError::InvalidTarget("port must be in [1, 65535]".into()));
        }
        if self.remote_dir.trim().is_empty() {
            return Err(RemoteError::InvalidTarget("remote_dir is empty".into()));
        }
        if self.host.trim().is_empty() {
            return Err(RemoteError::InvalidTarget("host is empty".into()));
        }
        Ok(())
    }

    pub fn password(&self) -> Option<&Secret> {
        match &self.auth {
            Auth::Password(s) => Some(s),
            Auth::Key(_) => None,
        }
    }

    pub fn address(&self) -> String {
        format!("{}@{}:{}", self.username, self.host, self.port)
    }

    /// `remote_dir/sub`, POSIX separators.
    pub fn resolve(&self, sub: &str) -> String {
        join_remote(&self.remote_dir, sub)
    }
}

pub(crate) fn join_remote(base: &str, sub: &str) -> String {
    let sub = sub.trim_matches('/');
    if sub.is_empty() || sub == "." {
        base.trim_end_matches('/').to_string()
    } else {
        format!("{}/{}", base.trim_end_matches('/'), sub)
    }
}

/// Which transport a target file asks for.
#[derive(Debug, Clone, PartialEq)]
pub enum TransportKind {
    Ssh,
    /// Local directory standing in for the remote root.
    Loopback(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub target: RemoteTarget,
    pub transport: TransportKind,
}

impl TargetSpec {
    pub fn open_session(&self) -> RemoteSession {
        let transport: Box<dyn Transport> = match &self.transport {
            TransportKind::Ssh => Box::new(SshTransport::new()),
            TransportKind::Loopback(root) => Box::new(LoopbackTransport::accepting(
                root.clone(),
                &self.target,
            )),
        };
        RemoteSession::new(self.target.clone(), transport)
    }
}

/// Parses a `key=value` target description. The password is taken from
/// `password` (normally the value of [`PASSWORD_ENV`]); a password written in
/// the file itself is rejected.
pub fn parse_target_file(
    text: &str,
    base_dir: &Path,
    password: Option<Secret>,
) -> Result<TargetSpec, RemoteError> {
    let mut kv = std::collections::HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            RemoteError::InvalidTarget(format!("line {}: expected key=value", i + 1))
        })?;
        kv.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
    }
    if kv.contains_key("password") {
        return Err(RemoteError::InvalidTarget(format!(
            "passwords are never read from disk; set {PASSWORD_ENV}"
        )));
    }
    let get = |k: &str| {
        kv.get(k)
            .cloned()
            .ok_or_else(|| RemoteError::InvalidTarget(format!("missing key {k:?}")))
    };
    let port = match kv.get("port") {
        Some(p) => p
            .parse::<u16>()
            .map_err(|_| RemoteError::InvalidTarget(format!("bad port {p:?}")))?,
        None => 22,
    };
    let resolve_path = |p: &str| {
        let p = PathBuf::from(p);
        if p.is_absolute() {
            p
        } else {
            base_dir.join(p)
        }
    };
    let auth = match kv.get("auth").map(|s| s.to_ascii_lowercase()).as_deref() {
        Some("key") => Auth::Key(resolve_path(&get("key_path")?)),
        Some("password") | None => Auth::Password(password.ok_or_else(|| {
            RemoteError::InvalidTarget(format!("password auth requires {PASSWORD_ENV}"))
        })?),
        Some(other) => {
            return Err(RemoteError::InvalidTarget(format!("unknown auth {other:?}")))
        }
    };
    let transport = match kv.get("transport").map(String::as_str) {
        None | Some("ssh") => TransportKind::Ssh,
        Some("loopback") => TransportKind::Loopback(resolve_path(&get("loopback_root")?)),
        Some(other) => {
            return Err(RemoteError::InvalidTarget(format!("unknown transport {other:?}")))
        }
    };
    let target = RemoteTarget {
        host: get("host")?,
        port,
        username: get("username")?,
        auth,
        remote_dir: get("remote_dir")?,
    };
    target.validate()?;
    Ok(TargetSpec { target, transport })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemoteOutput {
    pub exit_code: i32,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
}

/// Low-level remote operations. Paths are absolute remote paths.
pub trait Transport: Send {
    fn connect(&mut self, target: &RemoteTarget) -> Result<(), RemoteError>;
    fn is_connected(&self) -> bool;
    fn disconnect(&mut self);
    fn mkdir_all(&mut self, dir: &str) -> Result<(), RemoteError>;
    fn write_file(&mut self, path: &str, data: &[u8]) -> Result<(), RemoteError>;
    fn read_file(&mut self, path: &str) -> Result<Vec<u8>, RemoteError>;
    /// Names of regular files directly inside `dir`.
    fn list_files(&mut self, dir: &str) -> Result<Vec<String>, RemoteError>;
    fn exec(&mut self, working_dir: &str, command: &str) -> Result<RemoteOutput, RemoteError>;
}

/// Reconnect attempts after a dropped connection.
const RECONNECT_RETRIES: u32 = 2;

/// One connection per mission, opened lazily and re-established on drop.
pub struct RemoteSession {
    target: RemoteTarget,
    transport: Box<dyn Transport>,
}

impl RemoteSession {
    pub fn new(target: RemoteTarget, transport: Box<dyn Transport>) -> Self {
        Self { target, transport }
    }

    pub fn target(&self) -> &RemoteTarget {
        &self.target
    }

    fn with_connection<T>(
        &mut self,
        mut op: impl FnMut(&mut dyn Transport, &RemoteTarget) -> Result<T, RemoteError>,
    ) -> Result<T, RemoteError> {
        let mut reconnects = 0;
        loop {
            if !self.transport.is_connected() {
                self.transport.connect(&self.target)?;
            }
            match op(self.transport.as_mut(), &self.target) {
                Err(RemoteError::Disconnected(reason)) if reconnects < RECONNECT_RETRIES => {
                    log::warn!("remote connection dropped ({reason}); reconnecting");
                    self.transport.disconnect();
                    reconnects += 1;
                }
                other => return other,
            }
        }
    }

    /// Copies local files into `remote_dir/remote_subdir`, creating
    /// directories as needed. Returns the remote paths in input order.
    pub fn upload(
        &mut self,
        local_paths: &[PathBuf],
        remote_subdir: &str,
    ) -> Result<Vec<String>, RemoteError> {
        if local_paths.is_empty() {
            return Ok(Vec::new());
        }
        let mut payloads = Vec::with_capacity(local_paths.len());
        for p in local_paths {
            let name = p
                .file_name()
                .ok_or_else(|| RemoteError::TransferFailed {
                    path: p.display().to_string(),
                    reason: "no file name".into(),
                })?
                .to_string_lossy()
                .into_owned();
            let data = fs::read(p).map_err(|e| RemoteError::TransferFailed {
                path: p.display().to_string(),
                reason: e.to_string(),
            })?;
            payloads.push((name, data));
        }
        let dir = self.target.resolve(remote_subdir);
        self.with_connection(|t, _| {
            t.mkdir_all(&dir)?;
            let mut out = Vec::with_capacity(payloads.len());
            for (name, data) in &payloads {
                let path = join_remote(&dir, name);
                t.write_file(&path, data)?;
                out.push(path);
            }
            Ok(out)
        })
    }

    /// Runs `command` with working directory `remote_dir/working_subdir`.
    /// Remote creations are not diffed, so `files_created` stays empty.
    pub fn run_remote(
        &mut self,
        command: &str,
        working_subdir: &str,
    ) -> Result<ExecutionOutcome, RemoteError> {
        let dir = self.target.resolve(working_subdir);
        let started = Instant::now();
        let out = self.with_connection(|t, _| t.exec(&dir, command))?;
        Ok(ExecutionOutcome {
            exit_ok: out.exit_code == 0,
            exit_code: out.exit_code,
            stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
            stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
            duration: started.elapsed().as_secs_f64(),
            files_created: Vec::new(),
            timed_out: false,
        })
    }

    /// Copies every remote file matching `remote_glob` (relative to
    /// `remote_dir`; the pattern applies to the final path component) into
    /// `local_dir`. No match is an empty result.
    pub fn download(
        &mut self,
        remote_glob: &str,
        local_dir: &Path,
    ) -> Result<Vec<PathBuf>, RemoteError> {
        let (sub, pattern) = match remote_glob.rsplit_once('/') {
            Some((d, p)) => (d.to_string(), p.to_string()),
            None => (String::new(), remote_glob.to_string()),
        };
        let matcher = globset::Glob::new(&pattern)
            .map_err(|e| RemoteError::TransferFailed {
                path: remote_glob.into(),
                reason: e.to_string(),
            })?
            .compile_matcher();
        let dir = self.target.resolve(&sub);
        let files = self.with_connection(|t, _| {
            let mut names = t.list_files(&dir)?;
            names.retain(|n| matcher.is_match(n));
            names.sort();
            let mut files = Vec::with_capacity(names.len());
            for n in names {
                let data = t.read_file(&join_remote(&dir, &n))?;
                files.push((n, data));
            }
            Ok(files)
        })?;
        let mut out = Vec::with_capacity(files.len());
        for (name, data) in files {
            let local = local_dir.join(&name);
            fs::write(&local, &data).map_err(|e| RemoteError::TransferFailed {
                path: local.display().to_string(),
                reason: e.to_string(),
            })?;
            out.push(local);
        }
        Ok(out)
    }
}
