//! Tool adapter: turn MCP tool descriptors into registry tools so agents
//! invoke them like any other tool.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use serde_json::Value;

use super::protocol::McpToolDescriptor;
use super::session::McpSession;
use super::McpError;
use crate::toolkit::{ArgValue, ParamSpec, ParamType, Tool, ToolArgs, ToolFeedback, ToolSpec};

/// A registry tool backed by `tools/call` on a shared session.
pub struct McpTool {
    session: Arc<Mutex<McpSession>>,
    spec: ToolSpec,
}

impl Tool for McpTool {
    fn invoke(&self, args: &ToolArgs) -> ToolFeedback {
        let mut arguments: BTreeMap<String, Value> = BTreeMap::new();
        for param in &self.spec.params {
            if let Some(value) = args.get(&param.name) {
                let json = match value {
                    ArgValue::Str(s) => Value::String(s.clone()),
                    ArgValue::Int(i) => Value::from(*i),
                    ArgValue::Float(f) => Value::from(*f),
                    ArgValue::Bool(b) => Value::Bool(*b),
                };
                arguments.insert(param.name.clone(), json);
            }
        }
        let mut session = self.session.lock().unwrap();
        match session.call_tool(&self.spec.name, &arguments) {
            Ok(feedback) => feedback,
            Err(err) => ToolFeedback::fail(format!("mcp call failed: {err}")),
        }
    }
}

/// Map a descriptor's input schema onto a [`ToolSpec`] and a callable tool.
/// Only scalar parameter types are supported; anything else is
/// [`McpError::UnsupportedSchema`] and the tool is skipped.
pub fn adapt(
    descriptor: &McpToolDescriptor,
    session: Arc<Mutex<McpSession>>,
) -> Result<(ToolSpec, McpTool), McpError> {
    if descriptor.name.is_empty() {
        return Err(McpError::UnsupportedSchema {
            tool: "<unnamed>".into(),
            reason: "empty tool name".into(),
        });
    }
    let schema = &descriptor.input_schema;
    for required in &schema.required {
        if !schema.properties.contains_key(required) {
            return Err(McpError::UnsupportedSchema {
                tool: descriptor.name.clone(),
                reason: format!("required property `{required}` is not declared"),
            });
        }
    }
    let mut params = Vec::new();
    for (name, prop) in &schema.properties {
        let type_tag = prop.get("type").and_then(Value::as_str).unwrap_or("<missing>");
        let param_type = match type_tag {
            "string" => ParamType::String,
            "integer" => ParamType::Int,
            "number" => ParamType::Float,
            "boolean" => ParamType::Bool,
            other => {
                return Err(McpError::UnsupportedSchema {
                    tool: descriptor.name.clone(),
                    reason: format!("property `{name}` has unsupported type `{other}`"),
                })
            }
        };
        let description =
            prop.get("description").and_then(Value::as_str).unwrap_or_default().to_string();
        params.push(ParamSpec {
            name: name.clone(),
            param_type,
            required: schema.required.contains(name),
            description,
        });
    }
    let spec = ToolSpec::new(
        &descriptor.name,
        &descriptor.description,
        params,
        "text content returned by the MCP server",
    );
    Ok((spec.clone(), McpTool { session, spec }))
}
