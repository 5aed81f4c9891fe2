//! Deterministic playbook-driven engine for hermetic testing.
//!
//! A playbook maps task ids to a list of per-step scripts. The step index
//! is the number of events in the current digest (minus an optional
//! `event_offset`, used when a task starts with transferred memory), so a
//! fixed `(playbook, request.id, inputs)` always yields the same outputs.
//!
//! Playbook JSON schema:
//!
//! ```json
//! {
//!   "tasks": {
//!     "task-1": {
//!       "estimated_steps": 2,
//!       "event_offset": 0,
//!       "irrelevant_markers": ["noise"],
//!       "repeat_last": false,
//!       "steps": [
//!         {
//!           "verdict": "incomplete",
//!           "rationale": "nothing done yet",
//!           "subtasks": ["write the file"],
//!           "tool": "echo",
//!           "args": {"msg": "hi"},
//!           "description": "echo a greeting"
//!         },
//!         {"verdict": "complete", "rationale": "file written"}
//!       ],
//!       "summaries": {"succeeded": "wrote the file"}
//!     }
//!   }
//! }
//! ```
//!
//! Step flags `no_capable_tools`, `hallucinate_tool`, `force_empty_subtasks`
//! and `unavailable_times` inject the corresponding failure modes for tests.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Mutex;

use serde::Deserialize;

use super::{
    mechanical_summary, CompletionJudgment, EngineError, EventDigest, MovePlan, SubtaskList,
    ThoughtEngine, Verdict,
};
use crate::memory::{AgentState, MemoryStore, OutcomeKind, TaskRequest};
use crate::toolkit::ToolSpec;

#[derive(Debug, Clone, Deserialize)]
pub struct Playbook {
    pub tasks: BTreeMap<String, TaskScript>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct TaskScript {
    pub estimated_steps: u32,
    /// Events already present when this agent starts (transferred memory).
    #[serde(default)]
    pub event_offset: usize,
    #[serde(default)]
    pub irrelevant_markers: Vec<String>,
    /// Keep replaying the last step once the script is exhausted. Used for
    /// never-completing engines in abandonment tests.
    #[serde(default)]
    pub repeat_last: bool,
    pub steps: Vec<ScriptStep>,
    /// Canned introspection summaries keyed by outcome kind
    /// (`succeeded` / `failed` / `abandoned`).
    #[serde(default)]
    pub summaries: BTreeMap<String, String>,
    /// Simulate an unavailable engine during introspection.
    #[serde(default)]
    pub introspect_unavailable: bool,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ScriptStep {
    pub verdict: Verdict,
    #[serde(default)]
    pub rationale: String,
    #[serde(default)]
    pub subtasks: Vec<String>,
    #[serde(default)]
    pub tool: Option<String>,
    #[serde(default)]
    pub args: BTreeMap<String, String>,
    #[serde(default)]
    pub description: Option<String>,
    /// Report that no registered tool can advance the task.
    #[serde(default)]
    pub no_capable_tools: bool,
    /// Return a tool name that was never supplied (contract breach).
    #[serde(default)]
    pub hallucinate_tool: bool,
    /// Return an empty subtask list despite an incomplete verdict.
    #[serde(default)]
    pub force_empty_subtasks: bool,
    /// Fail this step's completion judgment N times before succeeding.
    #[serde(default)]
    pub unavailable_times: u32,
}

impl Playbook {
    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    pub fn from_file(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

pub struct ScriptedEngine {
    playbook: Playbook,
    // (task id, step index) -> unavailability failures already served
    unavailable_served: Mutex<HashMap<(String, usize), u32>>,
}

impl ScriptedEngine {
    pub fn new(playbook: Playbook) -> Self {
        ScriptedEngine { playbook, unavailable_served: Mutex::new(HashMap::new()) }
    }

    fn task(&self, id: &str) -> Result<&TaskScript, EngineError> {
        self.playbook
            .tasks
            .get(id)
            .ok_or_else(|| EngineError::ContractBreach(format!("no script for task `{id}`")))
    }

    fn step(&self, id: &str, events_len: usize) -> Result<(usize, &ScriptStep), EngineError> {
        let task = self.task(id)?;
        let mut idx = events_len.saturating_sub(task.event_offset);
        if idx >= task.steps.len() {
            if task.repeat_last && !task.steps.is_empty() {
                idx = task.steps.len() - 1;
            } else {
                return Err(EngineError::ContractBreach(format!(
                    "script for task `{id}` exhausted at step {idx}"
                )));
            }
        }
        Ok((idx, &task.steps[idx]))
    }
}

impl ThoughtEngine for ScriptedEngine {
    fn extract_events(
        &self,
        request: &TaskRequest,
        memory: &MemoryStore,
        _state: &AgentState,
    ) -> Result<EventDigest, EngineError> {
        let task = self.task(&request.id)?;
        let events = memory
            .iter()
            .map(|e| e.render())
            .filter(|line| !task.irrelevant_markers.iter().any(|m| line.contains(m.as_str())))
            .collect();
        Ok(EventDigest { events })
    }

    fn judge_completion(
        &self,
        request: &TaskRequest,
        events: &EventDigest,
    ) -> Result<CompletionJudgment, EngineError> {
        let (idx, step) = self.step(&request.id, events.events.len())?;
        if step.unavailable_times > 0 {
            let mut served = self.unavailable_served.lock().unwrap();
            let count = served.entry((request.id.clone(), idx)).or_insert(0);
            if *count < step.unavailable_times {
                *count += 1;
                return Err(EngineError::Unavailable(format!(
                    "scripted outage {count}/{} at step {idx}",
                    step.unavailable_times
                )));
            }
        }
        Ok(CompletionJudgment { verdict: step.verdict, rationale: step.rationale.clone() })
    }

    fn derive_subtasks(
        &self,
        request: &TaskRequest,
        events: &EventDigest,
    ) -> Result<SubtaskList, EngineError> {
        let (_, step) = self.step(&request.id, events.events.len())?;
        if step.force_empty_subtasks {
            return Ok(SubtaskList::default());
        }
        let subtasks = if step.subtasks.is_empty() {
            vec![request.goal.clone()]
        } else {
            step.subtasks.clone()
        };
        Ok(SubtaskList { subtasks })
    }

    fn match_tools(
        &self,
        request: &TaskRequest,
        events: &EventDigest,
        _subtasks: &SubtaskList,
        tools: &[ToolSpec],
    ) -> Result<Option<Vec<ToolSpec>>, EngineError> {
        let (_, step) = self.step(&request.id, events.events.len())?;
        if step.no_capable_tools || tools.is_empty() {
            return Ok(None);
        }
        if step.hallucinate_tool {
            // Deliberately not a member of `tools`; the loop must flag it.
            return Ok(Some(vec![ToolSpec::no_params(
                "phantom_tool",
                "a tool that was never supplied",
            )]));
        }
        match &step.tool {
            Some(name) => Ok(tools.iter().find(|t| &t.name == name).map(|t| vec![t.clone()])),
            None => Ok(None),
        }
    }

    fn plan_move(
        &self,
        request: &TaskRequest,
        events: &EventDigest,
        _subtasks: &SubtaskList,
        candidates: &[ToolSpec],
    ) -> Result<MovePlan, EngineError> {
        let (_, step) = self.step(&request.id, events.events.len())?;
        let tool = step
            .tool
            .clone()
            .ok_or_else(|| EngineError::ContractBreach("script step has no tool".into()))?;
        let _ = candidates;
        Ok(MovePlan {
            description: step.description.clone().unwrap_or_else(|| format!("call {tool}")),
            chosen_tool: tool,
            arguments: step.args.clone(),
        })
    }

    fn estimate_steps(
        &self,
        request: &TaskRequest,
        _tools: &[ToolSpec],
    ) -> Result<u32, EngineError> {
        Ok(self.task(&request.id)?.estimated_steps)
    }

    fn introspect(
        &self,
        request: &TaskRequest,
        memory: &MemoryStore,
        outcome_kind: OutcomeKind,
    ) -> Result<String, EngineError> {
        let task = self.task(&request.id)?;
        if task.introspect_unavailable {
            return Err(EngineError::Unavailable("scripted introspection outage".into()));
        }
        match task.summaries.get(&outcome_kind.to_string()) {
            Some(summary) => Ok(summary.clone()),
            None => Ok(mechanical_summary(memory, outcome_kind)),
        }
    }
}
