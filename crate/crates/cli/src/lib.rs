//! The `asa` command line: single missions, trial batches, evaluation and
//! artifact collection.

pub mod commands;
pub mod config;

use std::collections::HashMap;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::{Harness, Tier, EXIT_USAGE};
use config::{FlagOverrides, HarnessConfig};

#[derive(Debug, Parser)]
#[command(name = "asa", version, about = "Run autonomous simulation agent missions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct HarnessArgs {
    /// key=value configuration file (default: ./asa.conf if present).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Scripted corpus; selects the offline provider.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Interpreter command for payload programs.
    #[arg(long)]
    pub interpreter: Option<String>,
    #[arg(long, value_enum, default_value = "single")]
    pub tier: Tier,
    /// Directory holding the trial_<i> workspaces.
    #[arg(long, default_value = ".")]
    pub workdir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one mission.
    Run {
        /// Research plan file.
        #[arg(short = 's', long = "rp")]
        rp: PathBuf,
        /// Trial index; the workspace is trial_<index>.
        #[arg(short = 'n', long = "index", default_value_t = 0)]
        index: u32,
        #[command(flatten)]
        harness: HarnessArgs,
    },
    /// Run repeated trials of one plan and score them.
    Batch {
        #[arg(short = 's', long = "rp")]
        rp: PathBuf,
        #[arg(long, default_value_t = 20)]
        trials: u32,
        #[arg(long, default_value_t = 1)]
        parallelism: u32,
        /// Row label in the fulfillment matrix.
        #[arg(long)]
        agent: Option<String>,
        #[command(flatten)]
        harness: HarnessArgs,
    },
    /// Rank agents from fulfillment CSV files.
    Eval {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Gather trial outputs into results/<trial>/{plots,data,reports}.
    Collect {
        #[arg(required = true)]
        trials: Vec<PathBuf>,
        #[arg(long, default_value = "results")]
        dest: PathBuf,
    },
    /// Write a bundled scripted corpus.
    Scenario {
        name: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn harness(args: &HarnessArgs, env: HashMap<String, String>) -> Result<Harness, i32> {
    let cwd = std::env::current_dir().map_err(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })?;
    let flags = FlagOverrides {
        corpus: args.corpus.clone(),
        interpreter: args.interpreter.clone(),
    };
    let config = HarnessConfig::resolve(args.config.as_deref(), &cwd, &env, &flags).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })?;
    Ok(Harness {
        config,
        env,
        tier: args.tier,
    })
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli, env: HashMap<String, String>) -> i32 {
    match cli.command {
        Command::Run { rp, index, harness: h } => match harness(&h, env) {
            Ok(hs) => commands::cmd_run(&hs, &rp, index, &h.workdir),
            Err(code) => code,
        },
        Command::Batch {
            rp,
            trials,
            parallelism,
            agent,
            harness: h,
        } => match harness(&h, env) {
            Ok(hs) => commands::cmd_batch(&hs, &rp, trials, parallelism, &h.workdir, agent),
            Err(code) => code,
        },
        Command::Eval { inputs, out } => commands::cmd_eval(&inputs, &out),
        Command::Collect { trials, dest } => commands::cmd_collect(&trials, &dest),
        Command::Scenario { name, out } => commands::cmd_scenario(&name, &out),
    }
}
