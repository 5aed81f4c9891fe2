//! Tool abstraction and registry.
//!
//! Tools carry descriptive metadata and return semantically rich text
//! feedback; failures inside a tool are environment feedback (`ok=false`),
//! never faults. General tools and handoff tools live in disjoint
//! namespaces: handoff tools delegate the task plus memory to another
//! agent and are dispatched by the runtime, not invoked directly.

mod builtin;

pub use builtin::{ArithmeticTool, EchoTool, KvReadTool, KvStore, KvWriteTool, FlakyTool};

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::memory::AgentId;

#[derive(Debug, Error)]
pub enum ToolError {
    #[error("tool `{0}` already registered")]
    DuplicateTool(String),
    #[error("unknown tool `{0}`")]
    UnknownTool(String),
    #[error("argument schema error: {0}")]
    ArgumentSchema(String),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("handoff depth exceeded (limit {0})")]
    HandoffDepthExceeded(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamType {
    String,
    Int,
    Float,
    Bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub param_type: ParamType,
    pub required: bool,
    #[serde(default)]
    pub description: String,
}

impl ParamSpec {
    pub fn required(name: &str, param_type: ParamType, description: &str) -> Self {
        ParamSpec { name: name.into(), param_type, required: true, description: description.into() }
    }

    pub fn optional(name: &str, param_type: ParamType, description: &str) -> Self {
        ParamSpec { name: name.into(), param_type, required: false, description: description.into() }
    }
}

/// Descriptive tool metadata: name, description, parameter requirements
/// and return description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    pub params: Vec<ParamSpec>,
    pub returns: String,
}

impl ToolSpec {
    pub fn new(name: &str, description: &str, params: Vec<ParamSpec>, returns: &str) -> Self {
        assert!(!name.is_empty(), "tool name must be non-empty");
        let mut seen = std::collections::BTreeSet::new();
        for p in &params {
            assert!(seen.insert(&p.name), "duplicate param `{}` in tool `{name}`", p.name);
        }
        ToolSpec { name: name.into(), description: description.into(), params, returns: returns.into() }
    }

    pub fn no_params(name: &str, description: &str) -> Self {
        Self::new(name, description, Vec::new(), "text feedback")
    }
}

/// Tool feedback: success flag plus non-empty semantic text, present even
/// on failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolFeedback {
    pub ok: bool,
    pub text: String,
}

impl ToolFeedback {
    pub fn ok(text: impl Into<String>) -> Self {
        let text = text.into();
        debug_assert!(!text.is_empty());
        ToolFeedback { ok: true, text }
    }

    pub fn fail(text: impl Into<String>) -> Self {
        let text = text.into();
        debug_assert!(!text.is_empty());
        ToolFeedback { ok: false, text }
    }
}

/// A typed argument value after strict coercion from text.
#[derive(Debug, Clone, PartialEq)]
pub enum ArgValue {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
}

impl ArgValue {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            ArgValue::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            ArgValue::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_float(&self) -> Option<f64> {
        match self {
            ArgValue::Float(f) => Some(*f),
            _ => None,
        }
    }
}

/// Arguments validated and coerced against a [`ToolSpec`].
#[derive(Debug, Clone, Default)]
pub struct ToolArgs(BTreeMap<String, ArgValue>);

impl ToolArgs {
    pub fn get(&self, name: &str) -> Option<&ArgValue> {
        self.0.get(name)
    }

    pub fn str(&self, name: &str) -> &str {
        self.0.get(name).and_then(ArgValue::as_str).unwrap_or_default()
    }
}

/// Strict validation and coercion of a flat text arg map against the spec:
/// required params must be present, unknown params are rejected, and each
/// value must parse exactly as its declared type.
pub fn coerce_args(
    spec: &ToolSpec,
    raw: &BTreeMap<String, String>,
) -> Result<ToolArgs, ToolError> {
    for param in spec.params.iter().filter(|p| p.required) {
        if !raw.contains_key(&param.name) {
            return Err(ToolError::ArgumentSchema(format!(
                "missing required argument `{}` for tool `{}`",
                param.name, spec.name
            )));
        }
    }
    let mut out = BTreeMap::new();
    for (key, value) in raw {
        let param = spec.params.iter().find(|p| &p.name == key).ok_or_else(|| {
            ToolError::ArgumentSchema(format!(
                "unexpected argument `{key}` for tool `{}`",
                spec.name
            ))
        })?;
        let coerced = match param.param_type {
            ParamType::String => ArgValue::Str(value.clone()),
            ParamType::Int => ArgValue::Int(value.parse::<i64>().map_err(|_| {
                ToolError::ArgumentSchema(format!("argument `{key}` is not an integer: `{value}`"))
            })?),
            ParamType::Float => ArgValue::Float(value.parse::<f64>().map_err(|_| {
                ToolError::ArgumentSchema(format!("argument `{key}` is not a number: `{value}`"))
            })?),
            ParamType::Bool => ArgValue::Bool(value.parse::<bool>().map_err(|_| {
                ToolError::ArgumentSchema(format!("argument `{key}` is not a bool: `{value}`"))
            })?),
        };
        out.insert(key.clone(), coerced);
    }
    Ok(ToolArgs(out))
}

/// Executable behavior behind a [`ToolSpec`]. Calls within one agent run
/// are serialized by the runtime.
pub trait Tool: Send + Sync {
    fn invoke(&self, args: &ToolArgs) -> ToolFeedback;
}

impl<F> Tool for F
where
    F: Fn(&ToolArgs) -> ToolFeedback + Send + Sync,
{
    fn invoke(&self, args: &ToolArgs) -> ToolFeedback {
        self(args)
    }
}

#[derive(Clone)]
struct RegisteredTool {
    spec: ToolSpec,
    behavior: Arc<dyn Tool>,
}

/// A handoff tool: delegates the task and the sender's memory to a target
/// agent. Dispatched by the runtime.
#[derive(Debug, Clone)]
pub struct HandoffSpec {
    pub spec: ToolSpec,
    pub target: AgentId,
}

/// Name-keyed tool registry with disjoint general and handoff namespaces.
/// Immutable after agent construction.
#[derive(Clone, Default)]
pub struct ToolRegistry {
    general: BTreeMap<String, RegisteredTool>,
    handoff: BTreeMap<String, HandoffSpec>,
}

impl ToolRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    fn name_used(&self, name: &str) -> bool {
        self.general.contains_key(name) || self.handoff.contains_key(name)
    }

    pub fn register(
        &mut self,
        spec: ToolSpec,
        behavior: Arc<dyn Tool>,
    ) -> Result<(), ToolError> {
        if self.name_used(&spec.name) {
            return Err(ToolError::DuplicateTool(spec.name));
        }
        self.general.insert(spec.name.clone(), RegisteredTool { spec, behavior });
        Ok(())
    }

    /// Register a handoff tool targeting another agent.
    pub fn register_handoff(&mut self, target: AgentId) -> Result<(), ToolError> {
        let name = format!("handoff_to_{target}");
        if self.name_used(&name) {
            return Err(ToolError::DuplicateTool(name));
        }
        let spec = ToolSpec::new(
            &name,
            &format!("delegate the current task and this agent's memories to agent `{target}`"),
            Vec::new(),
            "the target agent's result summary",
        );
        self.handoff.insert(name, HandoffSpec { spec, target });
        Ok(())
    }

    pub fn spec(&self, name: &str) -> Option<&ToolSpec> {
        self.general
            .get(name)
            .map(|t| &t.spec)
            .or_else(|| self.handoff.get(name).map(|h| &h.spec))
    }

    /// All tool specs (general + handoff), sorted by name.
    pub fn list(&self) -> Vec<ToolSpec> {
        let mut specs: Vec<ToolSpec> = self
            .general
            .values()
            .map(|t| t.spec.clone())
            .chain(self.handoff.values().map(|h| h.spec.clone()))
            .collect();
        specs.sort_by(|a, b| a.name.cmp(&b.name));
        specs
    }

    /// Target agent when `name` is a handoff tool.
    pub fn handoff_target(&self, name: &str) -> Option<&AgentId> {
        self.handoff.get(name).map(|h| &h.target)
    }

    /// Invoke a general tool with a raw text arg map. In-tool failures come
    /// back as `ok=false` feedback; schema problems are errors for the
    /// caller to feed back into the loop.
    pub fn invoke(
        &self,
        name: &str,
        args: &BTreeMap<String, String>,
    ) -> Result<ToolFeedback, ToolError> {
        let tool = self
            .general
            .get(name)
            .ok_or_else(|| ToolError::UnknownTool(name.to_string()))?;
        let coerced = coerce_args(&tool.spec, args)?;
        Ok(tool.behavior.invoke(&coerced))
    }
}
