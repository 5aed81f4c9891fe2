//! Bundled mock MCP server, driven by a JSON manifest of tools and canned
//! behaviors. Speaks the same core logic over stdio, WebSocket and SSE so
//! transport-transparency tests can compare payloads byte-for-byte.
//!
//! Manifest format: a JSON array of
//! `{name, description, input_schema, behavior: {kind: "echo"|"add"|"fail_first_n", ...}}`.
//!
//! Besides the MCP methods, the mock answers `mock/stats` with handshake
//! and request counters so tests can observe session reuse.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde::Deserialize;
use serde_json::{json, Value};

use super::protocol::{
    InputSchema, JsonRpcRequest, JsonRpcResponse, METHOD_INITIALIZE, METHOD_TOOLS_CALL,
    METHOD_TOOLS_LIST, PROTOCOL_VERSION,
};

#[derive(Debug, Clone, Deserialize)]
pub struct ManifestTool {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub input_schema: InputSchema,
    pub behavior: Behavior,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Behavior {
    /// Return the `msg` argument verbatim.
    Echo,
    /// Return `a + b`.
    Add,
    /// Return `is_error` results for the first `n` calls, then echo `msg`.
    FailFirstN { n: u64 },
}

#[derive(Debug, Default)]
struct MockStats {
    initialize_count: u64,
    request_ids: Vec<u64>,
    call_counts: BTreeMap<String, u64>,
}

pub struct MockServer {
    tools: Vec<ManifestTool>,
    protocol_version: String,
    malformed_tools_list: bool,
    stats: Mutex<MockStats>,
}

impl MockServer {
    pub fn from_manifest_json(json: &str) -> Result<Self, serde_json::Error> {
        let tools: Vec<ManifestTool> = serde_json::from_str(json)?;
        Ok(MockServer {
            tools,
            protocol_version: PROTOCOL_VERSION.into(),
            malformed_tools_list: false,
            stats: Mutex::new(MockStats::default()),
        })
    }

    pub fn from_manifest_file(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_manifest_json(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    /// Advertise a different protocol revision (handshake-failure fixture).
    pub fn with_protocol_version(mut self, version: &str) -> Self {
        self.protocol_version = version.into();
        self
    }

    /// Reply to `tools/list` with garbage (corrupted-reply fixture).
    pub fn with_malformed_tools_list(mut self) -> Self {
        self.malformed_tools_list = true;
        self
    }

    /// Handle one incoming frame; `None` for notifications.
    pub fn handle_line(&self, line: &str) -> Option<String> {
        let request: JsonRpcRequest = match serde_json::from_str(line) {
            Ok(request) => request,
            Err(_) => {
                return Some(
                    serde_json::to_string(&JsonRpcResponse::error(0, -32700, "parse error"))
                        .unwrap(),
                )
            }
        };
        let id = request.id?;
        self.stats.lock().unwrap().request_ids.push(id);
        let response = match request.method.as_str() {
            METHOD_INITIALIZE => {
                self.stats.lock().unwrap().initialize_count += 1;
                JsonRpcResponse::result(
                    id,
                    json!({
                        "protocolVersion": self.protocol_version,
                        "capabilities": {"tools": {}},
                        "serverInfo": {"name": "autono-mock", "version": env!("CARGO_PKG_VERSION")},
                    }),
                )
            }
            METHOD_TOOLS_LIST => {
                if self.malformed_tools_list {
                    return Some("this is not a json-rpc response".into());
                }
                let tools: Vec<Value> = self
                    .tools
                    .iter()
                    .map(|t| {
                        json!({
                            "name": t.name,
                            "description": t.description,
                            "inputSchema": t.input_schema,
                        })
                    })
                    .collect();
                JsonRpcResponse::result(id, json!({"tools": tools}))
            }
            METHOD_TOOLS_CALL => self.handle_call(id, request.params.unwrap_or(Value::Null)),
            "mock/stats" => {
                let stats = self.stats.lock().unwrap();
                JsonRpcResponse::result(
                    id,
                    json!({
                        "initialize_count": stats.initialize_count,
                        "request_ids": stats.request_ids,
                        "call_counts": stats.call_counts,
                    }),
                )
            }
            other => JsonRpcResponse::error(id, -32601, &format!("unknown method `{other}`")),
        };
        Some(serde_json::to_string(&response).unwrap())
    }

    fn handle_call(&self, id: u64, params: Value) -> JsonRpcResponse {
        let name = params.get("name").and_then(Value::as_str).unwrap_or_default();
        let arguments = params.get("arguments").cloned().unwrap_or(json!({}));
        let Some(tool) = self.tools.iter().find(|t| t.name == name) else {
            return JsonRpcResponse::error(id, -32602, &format!("unknown tool `{name}`"));
        };
        let calls = {
            let mut stats = self.stats.lock().unwrap();
            let count = stats.call_counts.entry(name.to_string()).or_insert(0);
            *count += 1;
            *count
        };
        let (text, is_error) = match &tool.behavior {
            Behavior::Echo => (
                arguments.get("msg").and_then(Value::as_str).unwrap_or_default().to_string(),
                false,
            ),
            Behavior::Add => {
                let a = arguments.get("a");
                let b = arguments.get("b");
                match (a.and_then(Value::as_i64), b.and_then(Value::as_i64)) {
                    (Some(a), Some(b)) => (format!("{}", a + b), false),
                    _ => {
                        let a = a.and_then(Value::as_f64).unwrap_or(0.0);
                        let b = b.and_then(Value::as_f64).unwrap_or(0.0);
                        (format!("{}", a + b), false)
                    }
                }
            }
            Behavior::FailFirstN { n } => {
                if calls <= *n {
                    ("simulated failure".to_string(), true)
                } else {
                    (
                        arguments
                            .get("msg")
                            .and_then(Value::as_str)
                            .unwrap_or("ok")
                            .to_string(),
                        false,
                    )
                }
            }
        };
        JsonRpcResponse::result(
            id,
            json!({"content": [{"type": "text", "text": text}], "isError": is_error}),
        )
    }

    /// Serve newline-delimited JSON on this process's stdio. Used by the
    /// `mock-mcp-server` binary and the CLI's `serve-mock` subcommand.
    pub fn serve_stdio(&self) -> std::io::Result<()> {
        let stdin = std::io::stdin();
        let mut stdout = std::io::stdout();
        for line in stdin.lock().lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if let Some(response) = self.handle_line(&line) {
                stdout.write_all(response.as_bytes())?;
                stdout.write_all(b"\n")?;
                stdout.flush()?;
            }
        }
        Ok(())
    }

    /// Spawn a WebSocket server on an ephemeral local port. Accepts any
    /// number of sequential connections; stats accumulate across them.
    pub fn spawn_ws(self: &Arc<Self>) -> std::io::Result<(SocketAddr, JoinHandle<()>)> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let server = Arc::clone(self);
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                let server = Arc::clone(&server);
                std::thread::spawn(move || {
                    let Ok(mut socket) = tungstenite::accept(stream) else { return };
                    loop {
                        match socket.read() {
                            Ok(tungstenite::Message::Text(text)) => {
                                if let Some(response) = server.handle_line(&text) {
                                    if socket
                                        .send(tungstenite::Message::Text(response))
                                        .is_err()
                                    {
                                        break;
                                    }
                                }
                            }
                            Ok(tungstenite::Message::Close(_)) | Err(_) => break,
                            Ok(_) => continue,
                        }
                    }
                });
            }
        });
        Ok((addr, handle))
    }

    /// Spawn an SSE server on an ephemeral local port: `GET /events` holds
    /// the event stream, `POST /rpc` submits requests.
    pub fn spawn_sse(self: &Arc<Self>) -> std::io::Result<(SocketAddr, JoinHandle<()>)> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let server = Arc::clone(self);
        let outbox: Arc<Mutex<Option<std::sync::mpsc::Sender<String>>>> =
            Arc::new(Mutex::new(None));
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                let server = Arc::clone(&server);
                let outbox = Arc::clone(&outbox);
                std::thread::spawn(move || {
                    let _ = handle_sse_connection(stream, &server, &outbox);
                });
            }
        });
        Ok((addr, handle))
    }
}

fn handle_sse_connection(
    stream: TcpStream,
    server: &MockServer,
    outbox: &Mutex<Option<std::sync::mpsc::Sender<String>>>,
) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut content_length = 0usize;
    loop {
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let header = header.trim();
        if header.is_empty() {
            break;
        }
        if let Some(value) = header.to_ascii_lowercase().strip_prefix("content-length:") {
            content_length = value.trim().parse().unwrap_or(0);
        }
    }
    let mut stream = stream;
    if request_line.starts_with("GET /events") {
        stream.write_all(
            b"HTTP/1.1 200 OK\r\ncontent-type: text/event-stream\r\ncache-control: no-cache\r\nconnection: keep-alive\r\n\r\n",
        )?;
        stream.flush()?;
        let (tx, rx) = std::sync::mpsc::channel::<String>();
        *outbox.lock().unwrap() = Some(tx);
        for message in rx {
            stream.write_all(format!("data: {message}\n\n").as_bytes())?;
            stream.flush()?;
        }
        Ok(())
    } else if request_line.starts_with("POST /rpc") {
        let mut body = vec![0u8; content_length];
        reader.read_exact(&mut body)?;
        let body = String::from_utf8_lossy(&body);
        if let Some(response) = server.handle_line(&body) {
            if let Some(tx) = outbox.lock().unwrap().as_ref() {
                let _ = tx.send(response);
            }
        }
        stream.write_all(b"HTTP/1.1 202 Accepted\r\ncontent-length: 0\r\n\r\n")?;
        stream.flush()
    } else {
        stream.write_all(b"HTTP/1.1 404 Not Found\r\ncontent-length: 0\r\n\r\n")?;
        stream.flush()
    }
}

/// Default two-tool manifest used by tests and the probe examples.
pub fn default_manifest() -> &'static str {
    r#"[
  {
    "name": "add",
    "description": "add two integers",
    "input_schema": {
      "type": "object",
      "properties": {
        "a": {"type": "integer", "description": "left operand"},
        "b": {"type": "integer", "description": "right operand"}
      },
      "required": ["a", "b"]
    },
    "behavior": {"kind": "add"}
  },
  {
    "name": "echo",
    "description": "echo a message",
    "input_schema": {
      "type": "object",
      "properties": {
        "msg": {"type": "string", "description": "message to echo"}
      },
      "required": ["msg"]
    },
    "behavior": {"kind": "echo"}
  }
]"#
}
