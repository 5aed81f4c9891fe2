//! Python bindings for the agent runtime: the penalty function, the
//! shared memory store, single-task runs against a scripted playbook, the
//! corpus harness, and the abandonment sweep.

// fires inside the #[pyfunction]/#[pymethods] macro expansion
#![allow(clippy::useless_conversion)]

use std::collections::BTreeMap;
use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use autono::engine::{Playbook, ScriptedEngine};
use autono::harness::{load_corpus_json, run_suite, sweep as sweep_rows, sweep_csv, RuntimeConfig};
use autono::memory::{ActionRecord, AgentId, MemoryEntry, TaskRequest};
use autono::policy::AbandonmentPolicy;
use autono::runtime::{Agent, AgentRuntime};
use autono::toolkit::{
    ArithmeticTool, EchoTool, FlakyTool, KvReadTool, KvStore, KvWriteTool, ToolRegistry,
};

/// `(beta * p) mod 1`: the probabilistic penalty applied after every
/// overtime check that decides to continue.
#[pyfunction]
fn penalize(p: f64, beta: f64) -> PyResult<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(PyValueError::new_err("p must be in [0, 1]"));
    }
    if beta <= 0.0 {
        return Err(PyValueError::new_err("beta must be positive"));
    }
    Ok(autono::policy::penalize(p, beta))
}

/// Chronologically ordered, deduplicated action log shared across agents.
#[pyclass(name = "MemoryStore")]
struct PyMemoryStore {
    inner: autono::memory::MemoryStore,
}

#[pymethods]
impl PyMemoryStore {
    #[new]
    fn new() -> Self {
        PyMemoryStore { inner: autono::memory::MemoryStore::new() }
    }

    /// Append an action for `agent` at logical time `ts`; the per-agent
    /// sequence number is assigned automatically.
    fn record(
        &mut self,
        ts: u64,
        agent: &str,
        tool: &str,
        args: BTreeMap<String, String>,
        summary: &str,
    ) -> PyResult<()> {
        let agent = AgentId::new(agent);
        let seq = self.inner.next_seq(&agent);
        self.inner
            .record(MemoryEntry {
                timestamp: ts,
                agent,
                seq,
                action: ActionRecord { tool: tool.to_string(), args },
                summary: summary.to_string(),
            })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Union with another store; raises on conflicting payloads.
    fn merge(&self, other: &PyMemoryStore) -> PyResult<PyMemoryStore> {
        self.inner
            .merge(&other.inner)
            .map(|inner| PyMemoryStore { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn reset(&mut self) {
        self.inner.reset();
    }

    /// The JSON transfer payload handed to a delegate agent.
    fn transfer(&self) -> String {
        self.inner.transfer_json()
    }

    #[staticmethod]
    fn from_transfer(payload: &str) -> PyResult<PyMemoryStore> {
        autono::memory::MemoryStore::from_transfer(payload.as_bytes())
            .map(|inner| PyMemoryStore { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Human-readable event lines, oldest first.
    fn render(&self) -> Vec<String> {
        self.inner.iter().map(|e| e.render()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __eq__(&self, other: &PyMemoryStore) -> bool {
        self.inner == other.inner
    }
}

fn standard_registry() -> ToolRegistry {
    let mut registry = ToolRegistry::new();
    registry.register(EchoTool::spec(), Arc::new(EchoTool)).expect("fresh registry");
    registry.register(ArithmeticTool::spec(), Arc::new(ArithmeticTool)).expect("fresh registry");
    let store = KvStore::new();
    registry
        .register(KvWriteTool::spec(), Arc::new(KvWriteTool(store.clone())))
        .expect("fresh registry");
    registry.register(KvReadTool::spec(), Arc::new(KvReadTool(store))).expect("fresh registry");
    registry.register(FlakyTool::spec(), Arc::new(FlakyTool::new(1))).expect("fresh registry");
    registry
}

/// Run one scripted task to completion and return a JSON object with the
/// run record, the outcome summary, and the decision trace lines.
#[pyfunction]
#[pyo3(signature = (playbook_json, task_id, goal, p0=0.2, beta=1.5, seed=42))]
fn run_task(
    playbook_json: &str,
    task_id: &str,
    goal: &str,
    p0: f64,
    beta: f64,
    seed: u64,
) -> PyResult<String> {
    let playbook =
        Playbook::from_json(playbook_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let id = AgentId::new("agent");
    let mut runtime = AgentRuntime::new();
    runtime
        .add_agent(Agent {
            id: id.clone(),
            engine: Arc::new(ScriptedEngine::new(playbook)),
            registry: Arc::new(standard_registry()),
            policy: AbandonmentPolicy::new(p0, beta, seed),
        })
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let result = runtime
        .run(&id, &TaskRequest::new(task_id, goal, 0))
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let body = serde_json::json!({
        "record": result.record,
        "summary": result.outcome.summary,
        "trace": result.trace.to_json_lines().lines().collect::<Vec<_>>(),
    });
    Ok(body.to_string())
}

/// Run a task corpus under a runtime config; both arguments are JSON
/// strings. Returns the report JSON (wall-clock stamp zeroed when
/// `golden` is set).
#[pyfunction]
#[pyo3(signature = (corpus_json, config_json, golden=false))]
fn run_corpus(corpus_json: &str, config_json: &str, golden: bool) -> PyResult<String> {
    let corpus = load_corpus_json(corpus_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let config: RuntimeConfig =
        serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let report = run_suite(&corpus, &config);
    Ok(if golden { report.to_json_golden() } else { report.to_json() })
}

/// Monte Carlo sweep of the overtime gate; returns CSV.
#[pyfunction]
#[pyo3(signature = (p0s, betas, runs=10_000, seed=42, cap=1_000_000))]
fn sweep(p0s: Vec<f64>, betas: Vec<f64>, runs: u64, seed: u64, cap: u64) -> String {
    sweep_csv(&sweep_rows(&p0s, &betas, runs, seed, cap))
}

#[pymodule]
fn autono_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(penalize, m)?)?;
    m.add_function(wrap_pyfunction!(run_task, m)?)?;
    m.add_function(wrap_pyfunction!(run_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_class::<PyMemoryStore>()?;
    m.add("RNG_ALGORITHM", autono::policy::RNG_ALGORITHM)?;
    Ok(())
}
