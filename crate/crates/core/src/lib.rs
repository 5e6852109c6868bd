//! Autonomous simulation agent harness: research plans, model providers,
//! reply parsing, sandboxed execution, remote hosts, the agent loop and
//! evaluation of the resulting work.

pub mod agent;
pub mod collect;
pub mod evaluator;
pub mod mission;
pub mod parser;
pub mod provider;
pub mod remote;
pub mod sandbox;
pub mod scenarios;
pub mod secret;

pub use agent::{run_main_sub, run_mission, run_nested, trim_memory, MissionReport};
pub use mission::{load_research_plan, DialogueHistory, Limits, Message, MissionState, ResearchPlan, Role};
pub use provider::{ChatProvider, ProviderSource};
pub use sandbox::{execute_program, ExecutionOutcome, Sandbox};
pub use secret::Secret;
