//! MCP session management: handshake, request-id bookkeeping, and session
//! reuse across task runs.

use std::collections::BTreeMap;
use std::time::Duration;

use serde_json::{json, Value};

use super::protocol::{
    JsonRpcRequest, JsonRpcResponse, McpToolDescriptor, METHOD_INITIALIZE, METHOD_INITIALIZED,
    METHOD_TOOLS_CALL, METHOD_TOOLS_LIST, PROTOCOL_VERSION,
};
use super::transport::{SseTransport, StdioTransport, Transport, WebSocketTransport};
use super::{McpEndpoint, McpError, DEFAULT_TIMEOUT_SECS};
use crate::toolkit::ToolFeedback;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionState {
    Connecting,
    Ready,
    Closed,
}

/// An open MCP session. Requests are serialized (one in flight) and ids
/// strictly increase for the session's lifetime; the session survives
/// across task runs without re-handshaking.
pub struct McpSession {
    endpoint: McpEndpoint,
    session_id: String,
    state: SessionState,
    next_request_id: u64,
    transport: Box<dyn Transport>,
    timeout: Duration,
}

/// Connect and perform the MCP initialize handshake.
pub fn open_session(endpoint: &McpEndpoint) -> Result<McpSession, McpError> {
    open_session_with_timeout(endpoint, Duration::from_secs(DEFAULT_TIMEOUT_SECS))
}

pub fn open_session_with_timeout(
    endpoint: &McpEndpoint,
    timeout: Duration,
) -> Result<McpSession, McpError> {
    endpoint.validate()?;
    let transport: Box<dyn Transport> = match endpoint {
        McpEndpoint::Stdio(cmd) => Box::new(StdioTransport::spawn(cmd)?),
        McpEndpoint::Sse(url) => Box::new(SseTransport::connect(url)?),
        McpEndpoint::Websocket(url) => Box::new(WebSocketTransport::connect(url)?),
    };
    let mut session = McpSession {
        endpoint: endpoint.clone(),
        session_id: String::new(),
        state: SessionState::Connecting,
        next_request_id: 1,
        transport,
        timeout,
    };
    session.handshake()?;
    Ok(session)
}

impl std::fmt::Debug for McpSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("McpSession")
            .field("endpoint", &self.endpoint)
            .field("session_id", &self.session_id)
            .field("state", &self.state)
            .field("next_request_id", &self.next_request_id)
            .finish_non_exhaustive()
    }
}

impl McpSession {
    fn handshake(&mut self) -> Result<(), McpError> {
        let params = json!({
            "protocolVersion": PROTOCOL_VERSION,
            "capabilities": {},
            "clientInfo": {"name": "autono", "version": env!("CARGO_PKG_VERSION")},
        });
        let result = self.raw_request(METHOD_INITIALIZE, params)?;
        let advertised = result
            .get("protocolVersion")
            .and_then(Value::as_str)
            .ok_or_else(|| McpError::HandshakeFailed("missing protocolVersion".into()))?;
        if advertised != PROTOCOL_VERSION {
            self.close();
            return Err(McpError::HandshakeFailed(format!(
                "server speaks `{advertised}`, client requires `{PROTOCOL_VERSION}`"
            )));
        }
        self.session_id = result
            .get("serverInfo")
            .and_then(|info| info.get("name"))
            .and_then(Value::as_str)
            .map(|name| format!("{name}-{}", std::process::id()))
            .unwrap_or_else(|| format!("session-{}", std::process::id()));
        // initialized notification completes the handshake
        let notification = JsonRpcRequest::notification(METHOD_INITIALIZED);
        self.transport.send(&serde_json::to_string(&notification).unwrap())?;
        self.state = SessionState::Ready;
        Ok(())
    }

    pub fn endpoint(&self) -> &McpEndpoint {
        &self.endpoint
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    /// Issue a JSON-RPC request and wait for its matched response.
    pub fn raw_request(&mut self, method: &str, params: Value) -> Result<Value, McpError> {
        if self.state == SessionState::Closed {
            return Err(McpError::SessionClosed);
        }
        let id = self.next_request_id;
        self.next_request_id += 1;
        let request = JsonRpcRequest::new(id, method, params);
        self.transport.send(&serde_json::to_string(&request).unwrap())?;
        let line = match self.transport.recv(self.timeout) {
            Ok(line) => line,
            Err(McpError::SessionClosed) => {
                self.state = SessionState::Closed;
                return Err(McpError::SessionClosed);
            }
            Err(err) => return Err(err),
        };
        let response: JsonRpcResponse = serde_json::from_str(&line)
            .map_err(|e| McpError::ProtocolError(format!("malformed response: {e}")))?;
        if response.id != id {
            return Err(McpError::ProtocolError(format!(
                "response id {} does not match request id {id}",
                response.id
            )));
        }
        if let Some(error) = response.error {
            return Err(McpError::ProtocolError(format!(
                "server error {}: {}",
                error.code, error.message
            )));
        }
        response
            .result
            .ok_or_else(|| McpError::ProtocolError("response missing result".into()))
    }

    /// `tools/list`: the server's advertised tool descriptors.
    pub fn list_tools(&mut self) -> Result<Vec<McpToolDescriptor>, McpError> {
        self.ensure_ready()?;
        let result = self.raw_request(METHOD_TOOLS_LIST, json!({}))?;
        let tools = result
            .get("tools")
            .cloned()
            .ok_or_else(|| McpError::ProtocolError("tools/list result missing `tools`".into()))?;
        serde_json::from_value(tools)
            .map_err(|e| McpError::ProtocolError(format!("malformed tool descriptors: {e}")))
    }

    /// `tools/call`: server-side tool errors come back as `ok=false`
    /// feedback, not as faults.
    pub fn call_tool(
        &mut self,
        name: &str,
        arguments: &BTreeMap<String, Value>,
    ) -> Result<ToolFeedback, McpError> {
        self.ensure_ready()?;
        let result =
            self.raw_request(METHOD_TOOLS_CALL, json!({"name": name, "arguments": arguments}))?;
        let is_error = result.get("isError").and_then(Value::as_bool).unwrap_or(false);
        let text = result
            .get("content")
            .and_then(Value::as_array)
            .map(|items| {
                items
                    .iter()
                    .filter_map(|item| item.get("text").and_then(Value::as_str))
                    .collect::<Vec<_>>()
                    .join("\n")
            })
            .unwrap_or_default();
        let text = if text.is_empty() { "(empty result)".to_string() } else { text };
        Ok(ToolFeedback { ok: !is_error, text })
    }

    /// Reuse the session for another task run: same connection, no new
    /// handshake.
    pub fn reuse(&mut self) -> Result<&mut Self, McpError> {
        self.ensure_ready()?;
        Ok(self)
    }

    fn ensure_ready(&self) -> Result<(), McpError> {
        match self.state {
            SessionState::Ready => Ok(()),
            _ => Err(McpError::SessionClosed),
        }
    }

    pub fn close(&mut self) {
        self.transport.close();
        self.state = SessionState::Closed;
    }
}
