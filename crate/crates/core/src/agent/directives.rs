//! Harness-side execution of `remote` blocks.

use std::path::{Component, Path, PathBuf};

use crate::remote::{RemoteError, RemoteSession};
use crate::sandbox::ExecutionOutcome;

pub const REMOTE_TAG: &str = "remote";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Directive {
    Dir(String),
    Upload(Vec<String>),
    Run(String),
    Download(String),
}

pub fn parse_directives(source: &str) -> Result<Vec<Directive>, String> {
    let mut out = Vec::new();
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (verb, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        if rest.is_empty() {
            return Err(format!("line {}: `{verb}` needs an argument", i + 1));
        }
        out.push(match verb {
            "dir" => Directive::Dir(rest.to_string()),
            "upload" => Directive::Upload(
                shlex::split(rest).ok_or_else(|| format!("line {}: bad quoting", i + 1))?,
            ),
            "run" => Directive::Run(rest.to_string()),
            "download" => Directive::Download(rest.to_string()),
            other => return Err(format!("line {}: unknown directive `{other}`", i + 1)),
        });
    }
    if out.is_empty() {
        return Err("remote block has no directives".into());
    }
    Ok(out)
}

fn contained(workspace: &Path, rel: &str) -> Result<PathBuf, String> {
    let p = Path::new(rel);
    if p.is_absolute() || p.components().any(|c| matches!(c, Component::ParentDir)) {
        return Err(format!("{rel}: only paths inside the working directory can be uploaded"));
    }
    Ok(workspace.join(p))
}

fn remote_err(e: RemoteError) -> String {
    format!("remote error: {e}")
}

/// Runs the directives in order, stopping at the first failure. Downloads land
/// in the workspace.
pub fn execute_remote_block(
    source: &str,
    workspace: &Path,
    default_dir: &str,
    session: Option<&mut RemoteSession>,
) -> ExecutionOutcome {
    let directives = match parse_directives(source) {
        Ok(d) => d,
        Err(e) => return ExecutionOutcome::failure(e),
    };
    let Some(session) = session else {
        return ExecutionOutcome::failure(
            "no remote target is configured for this mission (host, username and password are missing)",
        );
    };
    let started = std::time::Instant::now();
    let mut dir = default_dir.to_string();
    let mut stdout = String::new();
    let mut files_created = Vec::new();
    let fail = |stdout: &str, msg: String| {
        let mut o = ExecutionOutcome::failure(msg);
        o.stdout = stdout.to_string();
        o.duration = started.elapsed().as_secs_f64();
        o
    };
    for d in directives {
        match d {
            Directive::Dir(d) => dir = d,
            Directive::Upload(paths) => {
                let mut local = Vec::new();
                for p in &paths {
                    match contained(workspace, p) {
                        Ok(l) => local.push(l),
                        Err(e) => return fail(&stdout, e),
                    }
                }
                match session.upload(&local, &dir) {
                    Ok(done) => stdout.push_str(&format!("uploaded {} file(s) to {dir}\n", done.len())),
                    Err(e) => return fail(&stdout, remote_err(e)),
                }
            }
            Directive::Run(cmd) => match session.run_remote(&cmd, &dir) {
                Ok(o) => {
                    stdout.push_str(&o.stdout);
                    if !o.exit_ok {
                        let mut f = fail(&stdout, o.stderr);
                        f.exit_code = o.exit_code;
                        return f;
                    }
                    if !o.stderr.is_empty() {
                        stdout.push_str(&o.stderr);
                    }
                }
                Err(e) => return fail(&stdout, remote_err(e)),
            },
            Directive::Download(pattern) => {
                let glob = format!("{}/{}", dir.trim_end_matches('/'), pattern);
                match session.download(&glob, workspace) {
                    Ok(files) => {
                        stdout.push_str(&format!("downloaded {} file(s)\n", files.len()));
                        for f in files {
                            if let Ok(rel) = f.strip_prefix(workspace) {
                                files_created.push(rel.to_path_buf());
                            }
                        }
                    }
                    Err(e) => return fail(&stdout, remote_err(e)),
                }
            }
        }
    }
    files_created.sort();
    files_created.dedup();
    ExecutionOutcome {
        exit_ok: true,
        exit_code: 0,
        stdout,
        stderr: String::new(),
        duration: started.elapsed().as_secs_f64(),
        files_created,
        timed_out: false,
    }
}
