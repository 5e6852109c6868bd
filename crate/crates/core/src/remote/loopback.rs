use std::fs;
use std::path::{Component, Path, PathBuf};
use std::process::Command;

use super::{Auth, RemoteError, RemoteOutput, RemoteTarget, Transport};

/// In-process stand-in for a remote host: remote absolute paths are mapped
/// below `root`, commands run through `sh -c` in the mapped directory, and
/// credentials are checked against the expected ones.
#[derive(Debug)]
pub struct LoopbackTransport {
    root: PathBuf,
    expected_user: String,
    expected_auth: Auth,
    reachable: bool,
    connected: bool,
    /// Connection drops injected before the next operations.
    pending_drops: u32,
}

impl LoopbackTransport {
    pub fn new(root: PathBuf, expected_user: impl Into<String>, expected_auth: Auth) -> Self {
        Self {
            root,
            expected_user: expected_user.into(),
            expected_auth,
            reachable: true,
            connected: false,
            pending_drops: 0,
        }
    }

    /// Accepts exactly the credentials of `target`.
    pub fn accepting(root: PathBuf, target: &RemoteTarget) -> Self {
        Self::new(root, target.username.clone(), target.auth.clone())
    }

    pub fn unreachable(mut self) -> Self {
        self.reachable = false;
        self
    }

    /// The next `n` operations fail with a dropped connection.
    pub fn drop_connection(mut self, n: u32) -> Self {
        self.pending_drops = n;
        self
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn local(&self, remote: &str) -> Result<PathBuf, RemoteError> {
        let rel = Path::new(remote.trim_start_matches('/'));
        if rel
            .components()
            .any(|c| matches!(c, Component::ParentDir | Component::Prefix(_)))
        {
            return Err(RemoteError::TransferFailed {
                path: remote.into(),
                reason: "parent traversal is not allowed".into(),
            });
        }
        Ok(self.root.join(rel))
    }

    fn check(&mut self) -> Result<(), RemoteError> {
        if !self.connected {
            return Err(RemoteError::Disconnected("not connected".into()));
        }
        if self.pending_drops > 0 {
            self.pending_drops -= 1;
            self.connected = false;
            return Err(RemoteError::Disconnected("injected drop".into()));
        }
        Ok(())
    }
}

impl Transport for LoopbackTransport {
    fn connect(&mut self, target: &RemoteTarget) -> Result<(), RemoteError> {
        if !self.reachable {
            return Err(RemoteError::ConnectFailed(target.address()));
        }
        if target.username != self.expected_user || target.auth != self.expected_auth {
            return Err(RemoteError::AuthFailed(target.address()));
        }
        fs::create_dir_all(&self.root).map_err(|e| RemoteError::ConnectFailed(e.to_string()))?;
        self.connected = true;
        Ok(())
    }

    fn is_connected(&self) -> bool {
        self.connected
    }

    fn disconnect(&mut self) {
        self.connected = false;
    }

    fn mkdir_all(&mut self, dir: &str) -> Result<(), RemoteError> {
        self.check()?;
        let p = self.local(dir)?;
        fs::create_dir_all(&p).map_err(|e| RemoteError::TransferFailed {
            path: dir.into(),
            reason: e.to_string(),
        })
    }

    fn write_file(&mut self, path: &str, data: &[u8]) -> Result<(), RemoteError> {
        self.check()?;
        let p = self.local(path)?;
        fs::write(&p, data).map_err(|e| RemoteError::TransferFailed {
            path: path.into(),
            reason: e.to_string(),
        })
    }

    fn read_file(&mut self, path: &str) -> Result<Vec<u8>, RemoteError> {
        self.check()?;
        let p = self.local(path)?;
        fs::read(&p).map_err(|e| RemoteError::TransferFailed {
            path: path.into(),
            reason: e.to_string(),
        })
    }

    fn list_files(&mut self, dir: &str) -> Result<Vec<String>, RemoteError> {
        self.check()?;
        let p = self.local(dir)?;
        let rd = match fs::read_dir(&p) {
            Ok(rd) => rd,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => {
                return Err(RemoteError::TransferFailed {
                    path: dir.into(),
                    reason: e.to_string(),
                })
            }
        };
        let mut names = Vec::new();
        for entry in rd.flatten() {
            if entry.file_type().map(|t| t.is_file()).unwrap_or(false) {
                names.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
        Ok(names)
    }

    fn exec(&mut self, working_dir: &str, command: &str) -> Result<RemoteOutput, RemoteError> {
        self.check()?;
        let dir = self.local(working_dir)?;
        if !dir.is_dir() {
            return Err(RemoteError::RemoteExecFailed(format!(
                "working directory {working_dir} does not exist"
            )));
        }
        let out = Command::new("sh")
            .arg("-c")
            .arg(command)
            .current_dir(&dir)
            .output()
            .map_err(|e| RemoteError::RemoteExecFailed(e.to_string()))?;
        Ok(RemoteOutput {
            exit_code: out.status.code().unwrap_or(-1),
            stdout: out.stdout,
            stderr: out.stderr,
        })
    }
}
