//! Standalone mock MCP server speaking newline-delimited JSON on stdio.
//!
//! Usage: `mock-mcp-server [manifest.json] [--protocol-version <v>]`
//! Without a manifest it serves the built-in two-tool manifest.

use autono::mcp::mock::{default_manifest, MockServer};

fn main() {
    let mut manifest_path: Option<String> = None;
    let mut protocol_version: Option<String> = None;
    let mut args = std::env::args().skip(1);
    while let Some(arg) = args.next() {
        match arg.as_str() {
            "--protocol-version" => protocol_version = args.next(),
            other => manifest_path = Some(other.to_string()),
        }
    }
    let server = match &manifest_path {
        Some(path) => MockServer::from_manifest_file(path).unwrap_or_else(|e| {
            eprintln!("failed to load manifest {path}: {e}");
            std::process::exit(2);
        }),
        None => MockServer::from_manifest_json(default_manifest()).expect("built-in manifest"),
    };
    let server = match protocol_version {
        Some(version) => server.with_protocol_version(&version),
        None => server,
    };
    if let Err(e) = server.serve_stdio() {
        eprintln!("stdio server error: {e}");
        std::process::exit(1);
    }
}
