//! Robust ReAct-based autonomous agent runtime.
//!
//! The crate is organized around six pieces:
//!
//! - [`memory`]: shared domain types and the transferable agent memory store
//! - [`engine`]: the pluggable thought-engine contract (scripted + HTTP LLM)
//! - [`toolkit`]: tool specs, registry, execution and handoff tools
//! - [`policy`]: the next-move strategy and the timely-abandonment gate
//! - [`runtime`]: agents, the execution loop, and handoff dispatch
//! - [`mcp`]: Model Context Protocol client, adapter and mock server
//! - [`harness`]: task corpus, suite runner and success-rate reports

pub mod engine;
pub mod harness;
pub mod mcp;
pub mod memory;
pub mod policy;
pub mod runtime;
pub mod toolkit;
pub mod trace;

pub use memory::{
    ActionRecord, AgentId, AgentState, MemoryEntry, MemoryError, MemoryStore, OutcomeKind,
    TaskOutcome, TaskRequest,
};
pub use policy::{penalize, AbandonmentPolicy, MoveDecision, RunBudget, RunRng, RunState};
pub use runtime::{Agent, AgentRuntime, RunRecord, RunResult, RuntimeError};
pub use toolkit::{ToolFeedback, ToolRegistry, ToolSpec};
