//! Shared fixtures for integration tests.

use std::sync::Arc;

use autono::engine::{Playbook, ScriptedEngine};
use autono::memory::AgentId;
use autono::policy::AbandonmentPolicy;
use autono::runtime::{Agent, AgentRuntime};
use autono::toolkit::{EchoTool, FlakyTool, ToolRegistry};

pub fn playbook(json: &str) -> Playbook {
    Playbook::from_json(json).expect("valid playbook json")
}

pub fn echo_registry() -> ToolRegistry {
    let mut registry = ToolRegistry::new();
    registry.register(EchoTool::spec(), Arc::new(EchoTool)).unwrap();
    registry
}

#[allow(dead_code)]
pub fn flaky_registry(fail_first_n: u64) -> ToolRegistry {
    let mut registry = ToolRegistry::new();
    registry.register(FlakyTool::spec(), Arc::new(FlakyTool::new(fail_first_n))).unwrap();
    registry
}

pub fn single_agent_runtime(
    name: &str,
    playbook_json: &str,
    registry: ToolRegistry,
    policy: AbandonmentPolicy,
) -> (AgentRuntime, AgentId) {
    let id = AgentId::new(name);
    let mut runtime = AgentRuntime::new();
    runtime
        .add_agent(Agent {
            id: id.clone(),
            engine: Arc::new(ScriptedEngine::new(playbook(playbook_json))),
            registry: Arc::new(registry),
            policy,
        })
        .unwrap();
    (runtime, id)
}
