//! MCP conformance tests exercised against the bundled mock server over
//! stdio, WebSocket and SSE.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use autono::mcp::mock::{default_manifest, MockServer};
use autono::mcp::{
    adapt, open_session_with_timeout, McpEndpoint, McpError, McpSession, McpToolDescriptor,
    SessionState,
};
use autono::toolkit::{ParamType, ToolRegistry};
use serde_json::{json, Value};

const TIMEOUT: Duration = Duration::from_secs(10);

fn stdio_endpoint() -> McpEndpoint {
    McpEndpoint::Stdio(env!("CARGO_BIN_EXE_mock-mcp-server").to_string())
}

fn ws_endpoint(server: &Arc<MockServer>) -> McpEndpoint {
    let (addr, _handle) = server.spawn_ws().expect("spawn ws server");
    McpEndpoint::Websocket(format!("ws://{addr}"))
}

fn open(endpoint: &McpEndpoint) -> McpSession {
    open_session_with_timeout(endpoint, TIMEOUT).expect("session opens")
}

fn stats(session: &mut McpSession) -> Value {
    session.raw_request("mock/stats", json!({})).expect("stats reply")
}

fn add_args(a: i64, b: i64) -> BTreeMap<String, Value> {
    BTreeMap::from([("a".to_string(), json!(a)), ("b".to_string(), json!(b))])
}

/// Full conformance pass, shared by every transport: handshake, tool
/// listing, adaptation, calls, id monotonicity and single-handshake reuse.
fn conformance_pass(mut session: McpSession) -> Vec<McpToolDescriptor> {
    assert_eq!(session.state(), SessionState::Ready);
    let tools = session.list_tools().expect("tools/list");
    let names: Vec<&str> = tools.iter().map(|t| t.name.as_str()).collect();
    assert_eq!(names, ["add", "echo"]);

    let feedback = session.call_tool("add", &add_args(2, 3)).expect("tools/call");
    assert!(feedback.ok);
    assert_eq!(feedback.text, "5");

    // reuse: a second round of requests on the same session, then verify a
    // single handshake was performed and ids strictly increased
    session.reuse().expect("session still usable");
    let again = session.list_tools().expect("second tools/list");
    assert_eq!(again, tools);
    let feedback = session
        .call_tool(
            "echo",
            &BTreeMap::from([("msg".to_string(), json!("round trip"))]),
        )
        .expect("echo call");
    assert!(feedback.ok);
    assert_eq!(feedback.text, "round trip");

    let stats = stats(&mut session);
    assert_eq!(stats["initialize_count"], json!(1));
    assert_eq!(stats["call_counts"]["add"], json!(1));
    assert_eq!(stats["call_counts"]["echo"], json!(1));
    let ids: Vec<u64> =
        stats["request_ids"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert!(ids.windows(2).all(|w| w[0] < w[1]), "request ids not increasing: {ids:?}");
    assert_eq!(ids.first(), Some(&1));

    session.close();
    assert_eq!(session.state(), SessionState::Closed);
    assert!(matches!(session.list_tools(), Err(McpError::SessionClosed)));
    tools
}

#[test]
fn stdio_transport_conformance() {
    conformance_pass(open(&stdio_endpoint()));
}

#[test]
fn websocket_transport_conformance() {
    let server = Arc::new(MockServer::from_manifest_json(default_manifest()).unwrap());
    conformance_pass(open(&ws_endpoint(&server)));
}

#[test]
fn sse_transport_conformance() {
    let server = Arc::new(MockServer::from_manifest_json(default_manifest()).unwrap());
    let (addr, _handle) = server.spawn_sse().expect("spawn sse server");
    conformance_pass(open(&McpEndpoint::Sse(format!("http://{addr}"))));
}

#[test]
fn payloads_are_identical_across_transports() {
    let server = Arc::new(MockServer::from_manifest_json(default_manifest()).unwrap());
    let mut stdio = open(&stdio_endpoint());
    let mut ws = open(&ws_endpoint(&server));

    let stdio_tools = stdio.list_tools().unwrap();
    let ws_tools = ws.list_tools().unwrap();
    assert_eq!(stdio_tools, ws_tools);

    let stdio_call = stdio.call_tool("add", &add_args(19, 23)).unwrap();
    let ws_call = ws.call_tool("add", &add_args(19, 23)).unwrap();
    assert_eq!(stdio_call, ws_call);
    assert_eq!(stdio_call.text, "42");
}

#[test]
fn adapter_exposes_schema_correct_tools() {
    let mut session = open(&stdio_endpoint());
    let tools = session.list_tools().unwrap();
    let session = Arc::new(Mutex::new(session));

    let mut registry = ToolRegistry::new();
    for descriptor in &tools {
        let (spec, tool) = adapt(descriptor, Arc::clone(&session)).expect("supported schema");
        registry.register(spec, Arc::new(tool)).unwrap();
    }

    let add = registry.spec("add").expect("add registered");
    assert_eq!(add.description, "add two integers");
    let types: Vec<(String, ParamType, bool)> =
        add.params.iter().map(|p| (p.name.clone(), p.param_type, p.required)).collect();
    assert_eq!(
        types,
        [
            ("a".to_string(), ParamType::Int, true),
            ("b".to_string(), ParamType::Int, true)
        ]
    );
    let echo = registry.spec("echo").expect("echo registered");
    assert_eq!(echo.params[0].param_type, ParamType::String);

    // invocation goes through the normal registry path, string args coerced
    let raw = BTreeMap::from([("a".to_string(), "2".into()), ("b".to_string(), "3".into())]);
    let feedback = registry.invoke("add", &raw).unwrap();
    assert!(feedback.ok);
    assert_eq!(feedback.text, "5");
}

#[test]
fn server_side_tool_error_is_feedback_not_fault() {
    let manifest = r#"[
      {
        "name": "wobbly",
        "description": "fails once then echoes",
        "input_schema": {
          "type": "object",
          "properties": {"msg": {"type": "string"}},
          "required": ["msg"]
        },
        "behavior": {"kind": "fail_first_n", "n": 1}
      }
    ]"#;
    let server = Arc::new(MockServer::from_manifest_json(manifest).unwrap());
    let mut session = open(&ws_endpoint(&server));
    let args = BTreeMap::from([("msg".to_string(), json!("recovered"))]);
    let first = session.call_tool("wobbly", &args).unwrap();
    assert!(!first.ok);
    assert_eq!(first.text, "simulated failure");
    let second = session.call_tool("wobbly", &args).unwrap();
    assert!(second.ok);
    assert_eq!(second.text, "recovered");
}

#[test]
fn protocol_version_mismatch_fails_handshake() {
    let command = format!("{} --protocol-version 1999-12-31", env!("CARGO_BIN_EXE_mock-mcp-server"));
    let result = open_session_with_timeout(&McpEndpoint::Stdio(command), TIMEOUT);
    assert!(matches!(result, Err(McpError::HandshakeFailed(_))), "got {result:?}");

    let server = Arc::new(
        MockServer::from_manifest_json(default_manifest())
            .unwrap()
            .with_protocol_version("draft"),
    );
    let result = open_session_with_timeout(&ws_endpoint(&server), TIMEOUT);
    assert!(matches!(result, Err(McpError::HandshakeFailed(_))), "got {result:?}");
}

#[test]
fn malformed_reply_is_a_protocol_error() {
    let server = Arc::new(
        MockServer::from_manifest_json(default_manifest())
            .unwrap()
            .with_malformed_tools_list(),
    );
    let mut session = open(&ws_endpoint(&server));
    let result = session.list_tools();
    assert!(matches!(result, Err(McpError::ProtocolError(_))), "got {result:?}");
}

#[test]
fn nested_schema_is_rejected_by_the_adapter() {
    let descriptor: McpToolDescriptor = serde_json::from_value(json!({
        "name": "nested",
        "description": "object-valued parameter",
        "inputSchema": {
            "type": "object",
            "properties": {"payload": {"type": "object"}},
            "required": ["payload"]
        }
    }))
    .unwrap();
    let session = Arc::new(Mutex::new(open(&stdio_endpoint())));
    let result = adapt(&descriptor, session);
    match result {
        Err(McpError::UnsupportedSchema { tool, reason }) => {
            assert_eq!(tool, "nested");
            assert!(reason.contains("payload"), "reason: {reason}");
        }
        other => panic!("expected UnsupportedSchema, got {:?}", other.map(|(spec, _)| spec)),
    }
}

#[test]
fn undeclared_required_property_is_rejected() {
    let descriptor: McpToolDescriptor = serde_json::from_value(json!({
        "name": "phantom_req",
        "description": "",
        "inputSchema": {
            "type": "object",
            "properties": {"msg": {"type": "string"}},
            "required": ["msg", "ghost"]
        }
    }))
    .unwrap();
    let session = Arc::new(Mutex::new(open(&stdio_endpoint())));
    assert!(matches!(
        adapt(&descriptor, session),
        Err(McpError::UnsupportedSchema { .. })
    ));
}

#[test]
fn unreachable_endpoints_fail_to_connect() {
    let result =
        open_session_with_timeout(&McpEndpoint::Websocket("ws://127.0.0.1:1".into()), TIMEOUT);
    assert!(matches!(result, Err(McpError::ConnectFailed(_))), "got {result:?}");

    let result = open_session_with_timeout(
        &McpEndpoint::Stdio("/nonexistent/binary".into()),
        TIMEOUT,
    );
    assert!(matches!(result, Err(McpError::ConnectFailed(_))), "got {result:?}");
}
