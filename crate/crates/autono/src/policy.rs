//! The two core decision procedures: the ReAct next-move strategy and the
//! timely-abandonment machinery (probabilistic penalty and overtime gate).
//!
//! The penalty rule is `p <- (beta * p) mod 1`. With `beta * p >= 1` the
//! wrap reduces `p`, making the agent more exploratory again; the optional
//! `clamp` mode (`min(beta * p, 1)`) gives monotone penalties instead and
//! is off by default.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{EngineError, MovePlan, ThoughtEngine, Verdict};
use crate::memory::{AgentState, MemoryStore, TaskRequest};
use crate::toolkit::ToolSpec;
use crate::trace::{RunTrace, TraceRecord};

/// Seedable generator used for every probabilistic decision. The algorithm
/// identifier is recorded in run reports so ensembles reproduce
/// bit-for-bit.
pub type RunRng = ChaCha8Rng;

/// Identifier of the RNG algorithm behind [`RunRng`].
pub const RNG_ALGORITHM: &str = "chacha8";

/// Abandonment hyperparameters: initial probability `p0`, penalty
/// coefficient `beta`, and the run seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbandonmentPolicy {
    pub p0: f64,
    pub beta: f64,
    pub rng_seed: u64,
    /// Gate at `c >= s` instead of the literal `c > s`. Default off.
    #[serde(default)]
    pub gate_at_estimate: bool,
    /// Clamp the penalty to `min(beta * p, 1)` instead of wrapping mod 1.
    /// Default off.
    #[serde(default)]
    pub clamp: bool,
}

impl AbandonmentPolicy {
    pub fn new(p0: f64, beta: f64, rng_seed: u64) -> Self {
        assert!((0.0..=1.0).contains(&p0), "p0 must be in [0, 1]");
        assert!(beta > 0.0, "beta must be positive");
        AbandonmentPolicy { p0, beta, rng_seed, gate_at_estimate: false, clamp: false }
    }
}

/// Estimated step budget for one task run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunBudget {
    pub estimated_steps: u32,
}

impl RunBudget {
    /// Clamp a zero estimate to 1, with a warning.
    pub fn from_estimate(estimate: u32) -> Self {
        if estimate == 0 {
            log::warn!("step estimator returned 0; clamping to 1");
        }
        RunBudget { estimated_steps: estimate.max(1) }
    }
}

/// Mutable per-run abandonment state: step counter, current abandonment
/// probability, and how many overtime checks have been taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    pub step_count: u64,
    pub current_p: f64,
    pub overtime_checks: u64,
}

impl RunState {
    pub fn new(policy: &AbandonmentPolicy) -> Self {
        RunState { step_count: 0, current_p: policy.p0, overtime_checks: 0 }
    }
}

/// Apply the probabilistic penalty: `(beta * p) mod 1`, always in `[0, 1)`.
pub fn penalize(p: f64, beta: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    debug_assert!(beta > 0.0);
    (beta * p).rem_euclid(1.0)
}

fn penalize_with(policy: &AbandonmentPolicy, p: f64) -> f64 {
    if policy.clamp {
        (policy.beta * p).min(1.0)
    } else {
        penalize(p, policy.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateDecision {
    /// Step count within budget; no RNG draw consumed.
    Proceed,
    /// Overtime, but the draw allowed continuing; carries the penalized p.
    ProceedPenalized(f64),
    Abandon,
}

/// The per-iteration overtime check. While the step count is within
/// budget this is a no-op; once overtime, exactly one uniform draw is
/// consumed: continue with probability `1 - p` (penalizing `p`), abandon
/// with probability `p`.
pub fn overtime_gate(
    state: &mut RunState,
    budget: &RunBudget,
    policy: &AbandonmentPolicy,
    rng: &mut RunRng,
) -> GateDecision {
    let overtime = if policy.gate_at_estimate {
        state.step_count >= budget.estimated_steps as u64
    } else {
        state.step_count > budget.estimated_steps as u64
    };
    if !overtime {
        return GateDecision::Proceed;
    }
    state.overtime_checks += 1;
    let draw: f64 = rng.gen();
    if draw > state.current_p {
        let penalized = penalize_with(policy, state.current_p);
        state.current_p = penalized;
        GateDecision::ProceedPenalized(penalized)
    } else {
        GateDecision::Abandon
    }
}

/// Output of the next-move strategy: reach a final state or call a tool.
#[derive(Debug, Clone, PartialEq)]
pub enum MoveDecision {
    Success,
    Failure,
    Call(MovePlan),
}

const ENGINE_RETRIES: u32 = 2;

fn with_retries<T>(
    mut call: impl FnMut() -> Result<T, EngineError>,
) -> Result<T, EngineError> {
    let mut attempts = 0;
    loop {
        match call() {
            Err(EngineError::Unavailable(reason)) if attempts < ENGINE_RETRIES => {
                attempts += 1;
                log::warn!("engine unavailable ({reason}); retry {attempts}/{ENGINE_RETRIES}");
            }
            other => return other,
        }
    }
}

/// The ReAct next-move strategy: extract events, judge completion, derive
/// remaining subtasks, match tools, and plan the next action.
///
/// Transient engine failures are retried up to two times per call; a
/// contract breach (hallucinated tool, empty subtasks after an incomplete
/// verdict, structurally invalid arguments) aborts the run.
pub fn next_move(
    request: &TaskRequest,
    memory: &MemoryStore,
    state: &AgentState,
    tools: &[ToolSpec],
    engine: &dyn ThoughtEngine,
    trace: &mut RunTrace,
) -> Result<MoveDecision, EngineError> {
    let events = with_retries(|| engine.extract_events(request, memory, state))?;
    trace.push(TraceRecord::Events { events: events.events.clone() });

    let judgment = with_retries(|| engine.judge_completion(request, &events))?;
    trace.push(TraceRecord::Judgment {
        verdict: format!("{:?}", judgment.verdict).to_lowercase(),
        rationale: judgment.rationale.clone(),
    });
    match judgment.verdict {
        Verdict::Complete => return Ok(MoveDecision::Success),
        Verdict::Unattainable => return Ok(MoveDecision::Failure),
        Verdict::Incomplete => {}
    }

    let subtasks = with_retries(|| engine.derive_subtasks(request, &events))?;
    if subtasks.subtasks.is_empty() {
        return Err(EngineError::ContractBreach(
            "incomplete judgment yielded an empty subtask list".into(),
        ));
    }
    trace.push(TraceRecord::Subtasks { subtasks: subtasks.subtasks.clone() });

    let candidates = with_retries(|| engine.match_tools(request, &events, &subtasks, tools))?;
    let candidates = match candidates {
        None => return Ok(MoveDecision::Failure),
        Some(subset) if subset.is_empty() => return Ok(MoveDecision::Failure),
        Some(subset) => {
            for candidate in &subset {
                if !tools.iter().any(|t| t.name == candidate.name) {
                    return Err(EngineError::ContractBreach(format!(
                        "matched tool `{}` was never supplied",
                        candidate.name
                    )));
                }
            }
            subset
        }
    };
    trace.push(TraceRecord::Candidates {
        tools: candidates.iter().map(|t| t.name.clone()).collect(),
    });

    let plan = with_retries(|| engine.plan_move(request, &events, &subtasks, &candidates))?;
    let chosen = candidates.iter().find(|t| t.name == plan.chosen_tool).ok_or_else(|| {
        EngineError::ContractBreach(format!(
            "planned tool `{}` is not among the candidates",
            plan.chosen_tool
        ))
    })?;
    // Structural argument check against the chosen tool's schema. Value
    // coercion failures surface later as feedback, not as a breach.
    for param in chosen.params.iter().filter(|p| p.required) {
        if !plan.arguments.contains_key(&param.name) {
            return Err(EngineError::ContractBreach(format!(
                "plan for `{}` misses required argument `{}`",
                chosen.name, param.name
            )));
        }
    }
    for arg in plan.arguments.keys() {
        if !chosen.params.iter().any(|p| &p.name == arg) {
            return Err(EngineError::ContractBreach(format!(
                "plan for `{}` carries unknown argument `{arg}`",
                chosen.name
            )));
        }
    }
    trace.push(TraceRecord::Plan {
        tool: plan.chosen_tool.clone(),
        args: plan.arguments.clone(),
        description: plan.description.clone(),
    });
    Ok(MoveDecision::Call(plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn penalize_direct_arithmetic() {
        assert_eq!(penalize(0.3, 2.0), 0.6);
        assert!((penalize(0.6, 2.0) - 0.2).abs() < 1e-12);
        for p in [0.0, 0.1, 0.25, 0.5, 0.75, 0.999] {
            assert_eq!(penalize(p, 1.0), p);
        }
    }

    #[test]
    fn penalize_chain_enters_period_four_cycle() {
        // Oracle: iterate the map numerically and detect the cycle.
        // The doubling map amplifies floating error by 2 per step, so the
        // tolerance scales with the step index.
        let mut p = 0.3;
        let mut seen = Vec::new();
        for _ in 0..16 {
            p = penalize(p, 2.0);
            seen.push(p);
        }
        let expected_prefix = [0.6, 0.2, 0.4, 0.8];
        for (i, v) in seen.iter().enumerate() {
            let want = expected_prefix[i % 4];
            let tol = 1e-15 * f64::powi(2.0, i as i32 + 4);
            assert!((v - want).abs() < tol, "step {i}: {v} != {want}");
        }
        // cycle detection oracle: period divides 4 from the first value on
        for i in 0..seen.len() - 4 {
            let tol = 1e-15 * f64::powi(2.0, i as i32 + 8);
            assert!((seen[i] - seen[i + 4]).abs() < tol);
        }
    }

    #[test]
    fn gate_within_budget_consumes_no_draw() {
        let policy = AbandonmentPolicy::new(0.5, 2.0, 7);
        let budget = RunBudget { estimated_steps: 3 };
        let mut state = RunState::new(&policy);
        let mut rng = RunRng::seed_from_u64(policy.rng_seed);
        let mut probe = rng.clone();
        state.step_count = 3; // c == s: not overtime under the literal rule
        assert_eq!(overtime_gate(&mut state, &budget, &policy, &mut rng), GateDecision::Proceed);
        assert_eq!(state.overtime_checks, 0);
        // RNG untouched: next draw identical to the pristine clone
        assert_eq!(rng.gen::<u64>(), probe.gen::<u64>());
    }

    #[test]
    fn gate_certain_abandon_and_certain_continue() {
        let budget = RunBudget { estimated_steps: 1 };
        let sure = AbandonmentPolicy::new(1.0, 2.0, 1);
        let mut state = RunState::new(&sure);
        state.step_count = 2;
        let mut rng = RunRng::seed_from_u64(1);
        assert_eq!(overtime_gate(&mut state, &budget, &sure, &mut rng), GateDecision::Abandon);

        let never = AbandonmentPolicy::new(0.0, 2.0, 1);
        let mut state = RunState::new(&never);
        state.step_count = 2;
        for _ in 0..1000 {
            match overtime_gate(&mut state, &budget, &never, &mut rng) {
                GateDecision::ProceedPenalized(p) => assert_eq!(p, 0.0),
                other => panic!("expected ProceedPenalized(0.0), got {other:?}"),
            }
        }
        assert_eq!(state.overtime_checks, 1000);
    }

    #[test]
    fn gate_at_estimate_variant_fires_one_step_earlier() {
        let mut policy = AbandonmentPolicy::new(1.0, 2.0, 1);
        policy.gate_at_estimate = true;
        let budget = RunBudget { estimated_steps: 2 };
        let mut state = RunState::new(&policy);
        state.step_count = 2; // c == s fires under the variant
        let mut rng = RunRng::seed_from_u64(1);
        assert_eq!(overtime_gate(&mut state, &budget, &policy, &mut rng), GateDecision::Abandon);
    }

    #[test]
    fn clamp_mode_is_monotone() {
        let mut policy = AbandonmentPolicy::new(0.6, 2.0, 1);
        policy.clamp = true;
        assert_eq!(penalize_with(&policy, 0.6), 1.0);
        assert_eq!(penalize_with(&policy, 0.3), 0.6);
    }

    #[test]
    fn zero_estimate_clamped() {
        assert_eq!(RunBudget::from_estimate(0).estimated_steps, 1);
        assert_eq!(RunBudget::from_estimate(4).estimated_steps, 4);
    }
}
