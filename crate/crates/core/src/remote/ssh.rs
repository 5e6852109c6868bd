use std::io::{Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::path::Path;
use std::time::Duration;

use ssh2::{ErrorCode, Session};

use super::{Auth, RemoteError, RemoteOutput, RemoteTarget, Transport};

/// libssh2 error code for a closed socket.
const LIBSSH2_ERROR_SOCKET_DISCONNECT: i32 = -13;
const LIBSSH2_ERROR_SOCKET_SEND: i32 = -7;

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

fn classify(e: ssh2::Error, context: &str) -> RemoteError {
    match e.code() {
        ErrorCode::Session(LIBSSH2_ERROR_SOCKET_DISCONNECT)
        | ErrorCode::Session(LIBSSH2_ERROR_SOCKET_SEND) => {
            RemoteError::Disconnected(format!("{context}: {e}"))
        }
        _ => RemoteError::TransferFailed {
            path: context.into(),
            reason: e.to_string(),
        },
    }
}

/// Secure-shell transport: SFTP for files, an exec channel for commands.
pub struct SshTransport {
    session: Option<Session>,
    connect_timeout: Duration,
}

impl Default for SshTransport {
    fn default() -> Self {
        Self::new()
    }
}

impl SshTransport {
    pub fn new() -> Self {
        Self {
            session: None,
            connect_timeout: Duration::from_secs(10),
        }
    }

    pub fn with_connect_timeout(mut self, timeout: Duration) -> Self {
        self.connect_timeout = timeout;
        self
    }

    fn session(&self) -> Result<&Session, RemoteError> {
        self.session
            .as_ref()
            .ok_or_else(|| RemoteError::Disconnected("not connected".into()))
    }
}

impl Transport for SshTransport {
    fn connect(&mut self, target: &RemoteTarget) -> Result<(), RemoteError> {
        let addr = (target.host.as_str(), target.port)
            .to_socket_addrs()
            .map_err(|e| RemoteError::ConnectFailed(format!("{}: {e}", target.address())))?
            .next()
            .ok_or_else(|| RemoteError::ConnectFailed(target.address()))?;
        let tcp = TcpStream::connect_timeout(&addr, self.connect_timeout)
            .map_err(|e| RemoteError::ConnectFailed(format!("{}: {e}", target.address())))?;
        let mut session =
            Session::new().map_err(|e| RemoteError::ConnectFailed(e.to_string()))?;
        session.set_tcp_stream(tcp);
        session.set_timeout(self.connect_timeout.as_millis() as u32 * 6);
        session
            .handshake()
            .map_err(|e| RemoteError::ConnectFailed(format!("{}: {e}", target.address())))?;
        let auth = match &target.auth {
            Auth::Password(pw) => session.userauth_password(&target.username, pw.expose()),
            Auth::Key(path) => {
                session.userauth_pubkey_file(&target.username, None, Path::new(path), None)
            }
        };
        if auth.is_err() || !session.authenticated() {
            return Err(RemoteError::AuthFailed(target.address()));
        }
        self.session = Some(session);
        Ok(())
    }

    fn is_connected(&self) -> bool {
        self.session.is_some()
    }

    fn disconnect(&mut self) {
        if let Some(s) = self.session.take() {
            let _ = s.disconnect(None, "bye", None);
        }
    }

    fn mkdir_all(&mut self, dir: &str) -> Result<(), RemoteError> {
        let sftp = self.session()?.sftp().map_err(|e| classify(e, dir))?;
        let mut cur = String::new();
        for part in dir.split('/').filter(|p| !p.is_empty()) {
            cur = if cur.is_empty() && dir.starts_with('/') {
                format!("/{part}")
            } else if cur.is_empty() {
                part.to_string()
            } else {
                format!("{cur}/{part}")
            };
            if sftp.stat(Path::new(&cur)).is_err() {
                sftp.mkdir(Path::new(&cur), 0o755).map_err(|e| classify(e, &cur))?;
            }
        }
        Ok(())
    }

    fn write_file(&mut self, path: &str, data: &[u8]) -> Result<(), RemoteError> {
        let sftp = self.session()?.sftp().map_err(|e| classify(e, path))?;
        let mut f = sftp.create(Path::new(path)).map_err(|e| classify(e, path))?;
        f.write_all(data).map_err(|e| RemoteError::TransferFailed {
            path: path.into(),
            reason: e.to_string(),
        })
    }

    fn read_file(&mut self, path: &str) -> Result<Vec<u8>, RemoteError> {
        let sftp = self.session()?.sftp().map_err(|e| classify(e, path))?;
        let mut f = sftp.open(Path::new(path)).map_err(|e| classify(e, path))?;
        let mut buf = Vec::new();
        f.read_to_end(&mut buf).map_err(|e| RemoteError::TransferFailed {
            path: path.into(),
            reason: e.to_string(),
        })?;
        Ok(buf)
    }

    fn list_files(&mut self, dir: &str) -> Result<Vec<String>, RemoteError> {
        let sftp = self.session()?.sftp().map_err(|e| classify(e, dir))?;
        let entries = match sftp.readdir(Path::new(dir)) {
            Ok(e) => e,
            // Missing directory: nothing to match.
            Err(e) if matches!(e.code(), ErrorCode::SFTP(2)) => return Ok(Vec::new()),
            Err(e) => return Err(classify(e, dir)),
        };
        Ok(entries
            .into_iter()
            .filter(|(_, stat)| stat.is_file())
            .filter_map(|(p, _)| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect())
    }

    fn exec(&mut self, working_dir: &str, command: &str) -> Result<RemoteOutput, RemoteError> {
        let mut channel = self
            .session()?
            .channel_session()
            .map_err(|e| classify(e, "channel"))?;
        let full = format!("cd {} && {}", shell_quote(working_dir), command);
        channel
            .exec(&full)
            .map_err(|e| RemoteError::RemoteExecFailed(e.to_string()))?;
        let mut stdout = Vec::new();
        let mut stderr = Vec::new();
        channel
            .read_to_end(&mut stdout)
            .map_err(|e| RemoteError::RemoteExecFailed(e.to_string()))?;
        channel
            .stderr()
            .read_to_end(&mut stderr)
            .map_err(|e| RemoteError::RemoteExecFailed(e.to_string()))?;
        channel
            .wait_close()
            .map_err(|e| RemoteError::RemoteExecFailed(e.to_string()))?;
        let exit_code = channel
            .exit_status()
            .map_err(|e| RemoteError::RemoteExecFailed(e.to_string()))?;
        Ok(RemoteOutput {
            exit_code,
            stdout,
            stderr,
        })
    }
}
