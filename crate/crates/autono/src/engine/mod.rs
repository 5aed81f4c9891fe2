//! The thought-engine contract: the pluggable "brain" behind request
//! resolution, next-move scheduling, step estimation and introspection.
//!
//! Two implementations ship here: a deterministic [`ScriptedEngine`] driven
//! by a playbook file (hermetic testing), and an HTTP-backed
//! [`LlmEngine`] adapter for real chat-completion endpoints.

mod llm;
mod scripted;

pub use llm::{LlmEngine, LlmEngineConfig};
pub use scripted::{Playbook, ScriptStep, ScriptedEngine, TaskScript};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memory::{AgentState, MemoryStore, OutcomeKind, TaskRequest};
use crate::toolkit::ToolSpec;

#[derive(Debug, Error)]
pub enum EngineError {
    /// Transport or model failure; retryable at the loop level.
    #[error("engine unavailable: {0}")]
    Unavailable(String),
    /// The engine violated its contract (hallucinated tool, empty subtask
    /// list, schema-invalid arguments). Aborts the run.
    #[error("engine contract breach: {0}")]
    ContractBreach(String),
}

/// Chronological task-relevant events extracted from memory.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventDigest {
    pub events: Vec<String>,
}

/// Remaining subtasks in execution order; empty exactly when the task was
/// judged complete.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtaskList {
    pub subtasks: Vec<String>,
}

/// A planned next action: which tool to call and with what arguments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MovePlan {
    pub description: String,
    pub chosen_tool: String,
    pub arguments: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Complete,
    Incomplete,
    Unattainable,
}

/// Completion judgment with its chain-of-thought rationale. The rationale
/// is opaque: kept for observability, never parsed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionJudgment {
    pub verdict: Verdict,
    pub rationale: String,
}

/// Contract every thought engine must satisfy. Implementations are
/// stateless per call and safely shareable across concurrent runs.
pub trait ThoughtEngine: Send + Sync {
    /// Extract events relevant to `request` from memory, chronologically.
    fn extract_events(
        &self,
        request: &TaskRequest,
        memory: &MemoryStore,
        state: &AgentState,
    ) -> Result<EventDigest, EngineError>;

    /// Judge whether the request is complete according to the events.
    fn judge_completion(
        &self,
        request: &TaskRequest,
        events: &EventDigest,
    ) -> Result<CompletionJudgment, EngineError>;

    /// Extract the remaining subtasks. Only called after an `Incomplete`
    /// judgment; must return a non-empty list.
    fn derive_subtasks(
        &self,
        request: &TaskRequest,
        events: &EventDigest,
    ) -> Result<SubtaskList, EngineError>;

    /// Select the subset of `tools` capable of advancing `subtasks`, or
    /// `None` when no capable tool exists.
    fn match_tools(
        &self,
        request: &TaskRequest,
        events: &EventDigest,
        subtasks: &SubtaskList,
        tools: &[ToolSpec],
    ) -> Result<Option<Vec<ToolSpec>>, EngineError>;

    /// Plan the next action over the non-empty candidate subset.
    fn plan_move(
        &self,
        request: &TaskRequest,
        events: &EventDigest,
        subtasks: &SubtaskList,
        candidates: &[ToolSpec],
    ) -> Result<MovePlan, EngineError>;

    /// Estimate how many steps the task should need. Always >= 1; the
    /// caller clamps a zero estimate to 1 with a warning.
    fn estimate_steps(
        &self,
        request: &TaskRequest,
        tools: &[ToolSpec],
    ) -> Result<u32, EngineError>;

    /// Summarize the run after termination. On engine failure the caller
    /// falls back to [`mechanical_summary`].
    fn introspect(
        &self,
        request: &TaskRequest,
        memory: &MemoryStore,
        outcome_kind: OutcomeKind,
    ) -> Result<String, EngineError>;
}

/// Model-free fallback summary: entry count plus the last feedback.
pub fn mechanical_summary(memory: &MemoryStore, outcome_kind: OutcomeKind) -> String {
    let count = memory.len();
    let last = memory.iter().last().map(|e| e.summary.clone());
    match last {
        Some(feedback) => {
            format!("{outcome_kind}: {count} actions taken; last feedback: {feedback}")
        }
        None => format!("{outcome_kind}: 0 actions taken"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::{ActionRecord, AgentId, MemoryEntry};

    #[test]
    fn mechanical_summary_on_empty_memory() {
        let memory = MemoryStore::new();
        assert_eq!(
            mechanical_summary(&memory, OutcomeKind::Failed),
            "failed: 0 actions taken"
        );
    }

    #[test]
    fn mechanical_summary_reports_last_feedback() {
        let mut memory = MemoryStore::new();
        memory
            .record(MemoryEntry {
                timestamp: 1,
                agent: AgentId::new("a"),
                seq: 1,
                action: ActionRecord { tool: "echo".into(), args: Default::default() },
                summary: "echoed hi".into(),
            })
            .unwrap();
        assert_eq!(
            mechanical_summary(&memory, OutcomeKind::Succeeded),
            "succeeded: 1 actions taken; last feedback: echoed hi"
        );
    }
}
