//! Model Context Protocol compatibility layer.
//!
//! JSON-RPC 2.0 with the MCP core tool methods (`initialize`,
//! `tools/list`, `tools/call`), pinned to protocol revision
//! [`PROTOCOL_VERSION`]. Transports: newline-delimited JSON over a child
//! process's stdio, one JSON document per WebSocket text message, and an
//! SSE binding (HTTP POST client-to-server, event stream back).
//!
//! A mock MCP server ships in [`mock`], driven by a JSON manifest of tools
//! and canned behaviors, so every test here is hermetic.

mod adapter;
pub mod mock;
mod protocol;
mod session;
mod transport;

pub use adapter::{adapt, McpTool};
pub use protocol::{JsonRpcRequest, JsonRpcResponse, McpToolDescriptor, PROTOCOL_VERSION};
pub use session::{open_session, open_session_with_timeout, McpSession, SessionState};
pub use transport::Transport;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default per-request timeout.
pub const DEFAULT_TIMEOUT_SECS: u64 = 30;

#[derive(Debug, Error)]
pub enum McpError {
    #[error("connect failed: {0}")]
    ConnectFailed(String),
    #[error("handshake failed: {0}")]
    HandshakeFailed(String),
    #[error("session closed")]
    SessionClosed,
    #[error("protocol error: {0}")]
    ProtocolError(String),
    #[error("request timed out after {0:?}")]
    Timeout(std::time::Duration),
    #[error("unsupported schema for tool `{tool}`: {reason}")]
    UnsupportedSchema { tool: String, reason: String },
}

/// How to reach an MCP server: a command line for stdio, a URL for SSE
/// and WebSocket.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "transport", content = "address", rename_all = "snake_case")]
pub enum McpEndpoint {
    /// Command line to spawn; speaks newline-delimited JSON on stdio.
    Stdio(String),
    /// Base URL of an SSE server exposing `/events` and `/rpc`.
    Sse(String),
    /// WebSocket URL.
    Websocket(String),
}

impl McpEndpoint {
    pub fn validate(&self) -> Result<(), McpError> {
        let ok = match self {
            McpEndpoint::Stdio(cmd) => !cmd.trim().is_empty(),
            McpEndpoint::Sse(url) => url.starts_with("http://") || url.starts_with("https://"),
            McpEndpoint::Websocket(url) => url.starts_with("ws://") || url.starts_with("wss://"),
        };
        if ok {
            Ok(())
        } else {
            Err(McpError::ConnectFailed(format!("invalid endpoint address: {self:?}")))
        }
    }
}
