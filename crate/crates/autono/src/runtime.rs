//! Agent runtime: owns the registered agents, drives the timely-abandonment
//! execution loop, and dispatches handoff tools between agents.
//!
//! One run executes strictly sequentially; distinct agents interact only
//! through explicit handoff, which synchronously runs the target agent on
//! the same request with the source's memories merged in.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{mechanical_summary, EngineError, ThoughtEngine};
use crate::memory::{
    ActionRecord, AgentId, AgentState, MemoryEntry, MemoryStore, OutcomeKind, TaskOutcome,
    TaskRequest,
};
use crate::policy::{
    next_move, overtime_gate, AbandonmentPolicy, GateDecision, MoveDecision, RunBudget, RunRng,
    RunState, RNG_ALGORITHM,
};
use crate::toolkit::{ToolError, ToolFeedback, ToolRegistry};
use crate::trace::{RunTrace, TraceRecord};

pub const DEFAULT_HANDOFF_DEPTH_LIMIT: u32 = 3;

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("agent `{0}` already registered")]
    DuplicateAgent(String),
}

/// An agent: identity, brain, action space and abandonment policy.
/// Memory is per-run; it starts empty (or from a transfer) and is reset
/// when the task terminates.
#[derive(Clone)]
pub struct Agent {
    pub id: AgentId,
    pub engine: Arc<dyn ThoughtEngine>,
    pub registry: Arc<ToolRegistry>,
    pub policy: AbandonmentPolicy,
}

/// One line of the JSON-lines run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub task: String,
    pub outcome: OutcomeKind,
    pub steps: u64,
    pub estimated: u32,
    pub overtime_checks: u64,
    pub final_p: f64,
    pub seed: u64,
}

/// Everything observable about one completed run, including the runs of
/// agents reached through handoff.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub agent: AgentId,
    pub outcome: TaskOutcome,
    pub record: RunRecord,
    pub trace: RunTrace,
    /// Snapshot of the run's memory just before the per-task reset.
    pub final_memory: MemoryStore,
    pub sub_runs: Vec<RunResult>,
}

pub struct AgentRuntime {
    agents: BTreeMap<AgentId, Agent>,
    /// Maximum handoff hops before delegation is refused.
    pub handoff_depth_limit: u32,
    /// Append the target's full transfer payload to handoff feedback.
    pub return_full_transfer: bool,
    /// Hard bound on executed actions per run; the run fails once reached.
    /// Meant for harness caps around never-completing fixtures.
    pub step_cap: Option<u64>,
    // Logical millisecond clock shared by all agents; keeps traces
    // deterministic while preserving cross-agent entry interleaving.
    clock: AtomicU64,
}

impl Default for AgentRuntime {
    fn default() -> Self {
        Self::new()
    }
}

impl AgentRuntime {
    pub fn new() -> Self {
        AgentRuntime {
            agents: BTreeMap::new(),
            handoff_depth_limit: DEFAULT_HANDOFF_DEPTH_LIMIT,
            return_full_transfer: false,
            step_cap: None,
            clock: AtomicU64::new(1),
        }
    }

    /// Identifier of the RNG algorithm used for all probabilistic draws.
    pub fn rng_algorithm(&self) -> &'static str {
        RNG_ALGORITHM
    }

    pub fn add_agent(&mut self, agent: Agent) -> Result<(), RuntimeError> {
        if self.agents.contains_key(&agent.id) {
            return Err(RuntimeError::DuplicateAgent(agent.id.to_string()));
        }
        self.agents.insert(agent.id.clone(), agent);
        Ok(())
    }

    pub fn agent(&self, id: &AgentId) -> Option<&Agent> {
        self.agents.get(id)
    }

    fn tick(&self) -> u64 {
        self.clock.fetch_add(1, Ordering::SeqCst)
    }

    /// Run `request` on `agent` with a fresh, empty memory.
    pub fn run(&self, agent: &AgentId, request: &TaskRequest) -> Result<RunResult, RuntimeError> {
        self.run_with(agent, request, MemoryStore::new(), 0, None)
    }

    /// Run with an explicit seed override (harness-derived per-case seeds).
    pub fn run_seeded(
        &self,
        agent: &AgentId,
        request: &TaskRequest,
        seed: u64,
    ) -> Result<RunResult, RuntimeError> {
        self.run_with(agent, request, MemoryStore::new(), 0, Some(seed))
    }

    fn run_with(
        &self,
        agent_id: &AgentId,
        request: &TaskRequest,
        seed_memory: MemoryStore,
        depth: u32,
        seed_override: Option<u64>,
    ) -> Result<RunResult, RuntimeError> {
        let agent = self
            .agents
            .get(agent_id)
            .ok_or_else(|| RuntimeError::UnknownAgent(agent_id.to_string()))?
            .clone();
        let seed = seed_override.unwrap_or(agent.policy.rng_seed);
        let mut rng = RunRng::seed_from_u64(seed);
        let mut trace = RunTrace::default();
        let mut memory = seed_memory;
        let mut state = AgentState::default();
        let mut sub_runs = Vec::new();
        let tools = agent.registry.list();

        let estimate = retrying(|| agent.engine.estimate_steps(request, &tools));
        let budget = match estimate {
            Ok(est) => RunBudget::from_estimate(est),
            Err(err) => {
                return Ok(self.finish(
                    &agent,
                    request,
                    OutcomeKind::Failed,
                    format!("{err}; {}", mechanical_summary(&memory, OutcomeKind::Failed)),
                    memory,
                    state,
                    RunState::new(&agent.policy),
                    RunBudget::from_estimate(1),
                    seed,
                    trace,
                    sub_runs,
                ));
            }
        };
        trace.push(TraceRecord::Estimate { estimated_steps: budget.estimated_steps });
        let mut run_state = RunState::new(&agent.policy);

        loop {
            let decision =
                match next_move(request, &memory, &state, &tools, &*agent.engine, &mut trace) {
                    Ok(decision) => decision,
                    Err(err) => {
                        // Persistent unavailability or a broken brain both
                        // terminate as Failed, with the cause in the summary.
                        let summary =
                            format!("{err}; {}", mechanical_summary(&memory, OutcomeKind::Failed));
                        return Ok(self.finish(
                            &agent, request, OutcomeKind::Failed, summary, memory, state,
                            run_state, budget, seed, trace, sub_runs,
                        ));
                    }
                };

            let plan = match decision {
                MoveDecision::Success => {
                    return Ok(self.finish_introspected(
                        &agent, request, OutcomeKind::Succeeded, memory, state, run_state,
                        budget, seed, trace, sub_runs,
                    ));
                }
                MoveDecision::Failure => {
                    return Ok(self.finish_introspected(
                        &agent, request, OutcomeKind::Failed, memory, state, run_state, budget,
                        seed, trace, sub_runs,
                    ));
                }
                MoveDecision::Call(plan) => plan,
            };

            let feedback = if let Some(target) = agent.registry.handoff_target(&plan.chosen_tool)
            {
                let (feedback, sub) =
                    self.handoff(&agent.id, target, request, &memory, depth, seed);
                trace.push(TraceRecord::Handoff {
                    target: target.to_string(),
                    ok: feedback.ok,
                    text: feedback.text.clone(),
                });
                if let Some(sub) = sub {
                    sub_runs.push(sub);
                }
                feedback
            } else {
                match agent.registry.invoke(&plan.chosen_tool, &plan.arguments) {
                    Ok(feedback) => feedback,
                    // Planner mistakes are environment feedback for the
                    // next reasoning step, not faults.
                    Err(err @ (ToolError::UnknownTool(_) | ToolError::ArgumentSchema(_))) => {
                        ToolFeedback::fail(err.to_string())
                    }
                    Err(err) => ToolFeedback::fail(err.to_string()),
                }
            };
            trace.push(TraceRecord::Execution {
                tool: plan.chosen_tool.clone(),
                args: plan.arguments.clone(),
                ok: feedback.ok,
                text: feedback.text.clone(),
            });

            let entry = MemoryEntry {
                timestamp: self.tick(),
                agent: agent.id.clone(),
                seq: memory.next_seq(&agent.id),
                action: ActionRecord { tool: plan.chosen_tool.clone(), args: plan.arguments.clone() },
                summary: feedback.text.clone(),
            };
            memory.record(entry).expect("next_seq produces a fresh key");
            state.latest_feedback = feedback.text;
            state.steps_taken += 1;

            let p_before = run_state.current_p;
            match overtime_gate(&mut run_state, &budget, &agent.policy, &mut rng) {
                GateDecision::Proceed => {}
                GateDecision::ProceedPenalized(p_after) => {
                    trace.push(TraceRecord::Gate {
                        step_count: run_state.step_count,
                        decision: "proceed_penalized".into(),
                        p_before,
                        p_after,
                    });
                }
                GateDecision::Abandon => {
                    trace.push(TraceRecord::Gate {
                        step_count: run_state.step_count,
                        decision: "abandon".into(),
                        p_before,
                        p_after: p_before,
                    });
                    return Ok(self.finish_introspected(
                        &agent, request, OutcomeKind::Abandoned, memory, state, run_state,
                        budget, seed, trace, sub_runs,
                    ));
                }
            }
            run_state.step_count += 1;

            if let Some(cap) = self.step_cap {
                if state.steps_taken >= cap {
                    let summary = format!(
                        "step cap {cap} reached; {}",
                        mechanical_summary(&memory, OutcomeKind::Failed)
                    );
                    return Ok(self.finish(
                        &agent, request, OutcomeKind::Failed, summary, memory, state, run_state,
                        budget, seed, trace, sub_runs,
                    ));
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn finish_introspected(
        &self,
        agent: &Agent,
        request: &TaskRequest,
        kind: OutcomeKind,
        memory: MemoryStore,
        state: AgentState,
        run_state: RunState,
        budget: RunBudget,
        seed: u64,
        trace: RunTrace,
        sub_runs: Vec<RunResult>,
    ) -> RunResult {
        let summary = match retrying(|| agent.engine.introspect(request, &memory, kind)) {
            Ok(summary) => summary,
            Err(_) => mechanical_summary(&memory, kind),
        };
        self.finish(agent, request, kind, summary, memory, state, run_state, budget, seed, trace, sub_runs)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        agent: &Agent,
        request: &TaskRequest,
        kind: OutcomeKind,
        summary: String,
        memory: MemoryStore,
        state: AgentState,
        run_state: RunState,
        budget: RunBudget,
        seed: u64,
        mut trace: RunTrace,
        sub_runs: Vec<RunResult>,
    ) -> RunResult {
        let outcome = TaskOutcome { kind, summary: summary.clone(), steps_used: state.steps_taken };
        trace.push(TraceRecord::Outcome { kind, steps_used: state.steps_taken, summary });
        let record = RunRecord {
            task: request.id.clone(),
            outcome: kind,
            steps: state.steps_taken,
            estimated: budget.estimated_steps,
            overtime_checks: run_state.overtime_checks,
            final_p: run_state.current_p,
            seed,
        };
        // Memory resets for the next task; the snapshot stays observable.
        RunResult { agent: agent.id.clone(), outcome, record, trace, final_memory: memory, sub_runs }
    }

    /// Delegate `request` plus the source's memories to `target`, run the
    /// target's own full loop, and return its result as tool feedback.
    fn handoff(
        &self,
        source: &AgentId,
        target: &AgentId,
        request: &TaskRequest,
        memory: &MemoryStore,
        depth: u32,
        source_seed: u64,
    ) -> (ToolFeedback, Option<RunResult>) {
        if target == source || !self.agents.contains_key(target) {
            return (
                ToolFeedback::fail(ToolError::UnknownAgent(target.to_string()).to_string()),
                None,
            );
        }
        if depth >= self.handoff_depth_limit {
            return (
                ToolFeedback::fail(
                    ToolError::HandoffDepthExceeded(self.handoff_depth_limit).to_string(),
                ),
                None,
            );
        }
        // Target merges the transferred memories before acting.
        let seed_memory = match MemoryStore::new().merge(memory) {
            Ok(merged) => merged,
            Err(err) => return (ToolFeedback::fail(format!("memory transfer failed: {err}")), None),
        };
        let target_seed = source_seed ^ fnv1a(target.as_str());
        let result = self
            .run_with(target, request, seed_memory, depth + 1, Some(target_seed))
            .expect("target existence checked above");
        let mut text = format!(
            "agent `{target}` {}: {}",
            result.outcome.kind, result.outcome.summary
        );
        if self.return_full_transfer {
            text.push_str("\ntransfer: ");
            text.push_str(&result.final_memory.transfer_json());
        }
        let ok = result.outcome.kind == OutcomeKind::Succeeded;
        (ToolFeedback { ok, text }, Some(result))
    }
}

/// Stable 64-bit FNV-1a, used to derive per-target and per-case seeds.
pub fn fnv1a(data: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in data.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn retrying<T>(mut call: impl FnMut() -> Result<T, EngineError>) -> Result<T, EngineError> {
    let mut attempts = 0;
    loop {
        match call() {
            Err(EngineError::Unavailable(_)) if attempts < 2 => attempts += 1,
            other => return other,
        }
    }
}
