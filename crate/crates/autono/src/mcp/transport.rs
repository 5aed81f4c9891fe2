//! Transport clients: stdio (child process, newline-delimited JSON),
//! WebSocket (one JSON document per text message), and SSE (HTTP POST up,
//! event stream down).

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{Receiver, RecvTimeoutError, Sender};
use std::time::Duration;

use tungstenite::stream::MaybeTlsStream;
use tungstenite::{Message, WebSocket};

use super::McpError;

/// A frame-oriented, serialized client transport: send one JSON document,
/// receive one back.
pub trait Transport: Send {
    fn send(&mut self, frame: &str) -> Result<(), McpError>;
    fn recv(&mut self, timeout: Duration) -> Result<String, McpError>;
    fn close(&mut self);
}

// ---------------------------------------------------------------------------
// stdio

pub struct StdioTransport {
    child: Child,
    incoming: Receiver<String>,
}

impl StdioTransport {
    /// Spawn `command_line` and speak newline-delimited JSON on its stdio.
    pub fn spawn(command_line: &str) -> Result<Self, McpError> {
        let mut parts = command_line.split_whitespace();
        let program = parts
            .next()
            .ok_or_else(|| McpError::ConnectFailed("empty command line".into()))?;
        let mut child = Command::new(program)
            .args(parts)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| McpError::ConnectFailed(format!("spawn `{command_line}`: {e}")))?;
        let stdout = child.stdout.take().expect("stdout piped");
        let (tx, rx): (Sender<String>, Receiver<String>) = std::sync::mpsc::channel();
        std::thread::spawn(move || {
            let reader = BufReader::new(stdout);
            for line in reader.lines() {
                match line {
                    Ok(line) if !line.trim().is_empty() => {
                        if tx.send(line).is_err() {
                            break;
                        }
                    }
                    Ok(_) => continue,
                    Err(_) => break,
                }
            }
        });
        Ok(StdioTransport { child, incoming: rx })
    }
}

impl Transport for StdioTransport {
    fn send(&mut self, frame: &str) -> Result<(), McpError> {
        let stdin = self.child.stdin.as_mut().ok_or(McpError::SessionClosed)?;
        stdin
            .write_all(frame.as_bytes())
            .and_then(|_| stdin.write_all(b"\n"))
            .and_then(|_| stdin.flush())
            .map_err(|e| McpError::ProtocolError(format!("stdio write: {e}")))
    }

    fn recv(&mut self, timeout: Duration) -> Result<String, McpError> {
        match self.incoming.recv_timeout(timeout) {
            Ok(line) => Ok(line),
            Err(RecvTimeoutError::Timeout) => Err(McpError::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(McpError::SessionClosed),
        }
    }

    fn close(&mut self) {
        drop(self.child.stdin.take());
        let _ = self.child.wait();
    }
}

impl Drop for StdioTransport {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

// ---------------------------------------------------------------------------
// websocket

pub struct WebSocketTransport {
    socket: WebSocket<MaybeTlsStream<TcpStream>>,
}

impl WebSocketTransport {
    pub fn connect(url: &str) -> Result<Self, McpError> {
        let (socket, _response) = tungstenite::connect(url)
            .map_err(|e| McpError::ConnectFailed(format!("websocket connect `{url}`: {e}")))?;
        Ok(WebSocketTransport { socket })
    }

    fn set_read_timeout(&mut self, timeout: Duration) {
        if let MaybeTlsStream::Plain(stream) = self.socket.get_mut() {
            let _ = stream.set_read_timeout(Some(timeout));
        }
    }
}

impl Transport for WebSocketTransport {
    fn send(&mut self, frame: &str) -> Result<(), McpError> {
        self.socket
            .send(Message::Text(frame.to_string()))
            .map_err(|e| McpError::ProtocolError(format!("websocket send: {e}")))
    }

    fn recv(&mut self, timeout: Duration) -> Result<String, McpError> {
        self.set_read_timeout(timeout);
        loop {
            match self.socket.read() {
                Ok(Message::Text(text)) => return Ok(text),
                Ok(Message::Close(_)) => return Err(McpError::SessionClosed),
                Ok(_) => continue, // ping/pong/binary: not protocol frames
                Err(tungstenite::Error::Io(e))
                    if e.kind() == std::io::ErrorKind::WouldBlock
                        || e.kind() == std::io::ErrorKind::TimedOut =>
                {
                    return Err(McpError::Timeout(timeout))
                }
                Err(e) => return Err(McpError::ProtocolError(format!("websocket read: {e}"))),
            }
        }
    }

    fn close(&mut self) {
        let _ = self.socket.close(None);
    }
}

// ---------------------------------------------------------------------------
// SSE

/// SSE binding: requests go up as HTTP POSTs to `{base}/rpc`; responses
/// arrive as `data:` events on a long-lived `GET {base}/events` stream.
/// Stream loss marks the session closed (no reconnect-with-resume).
pub struct SseTransport {
    base_url: String,
    incoming: Receiver<String>,
}

impl SseTransport {
    pub fn connect(base_url: &str) -> Result<Self, McpError> {
        let events_url = format!("{}/events", base_url.trim_end_matches('/'));
        let response = ureq::get(&events_url)
            .call()
            .map_err(|e| McpError::ConnectFailed(format!("sse connect `{events_url}`: {e}")))?;
        let reader = BufReader::new(response.into_reader());
        let (tx, rx) = std::sync::mpsc::channel();
        std::thread::spawn(move || {
            for line in reader.lines() {
                match line {
                    Ok(line) => {
                        if let Some(data) = line.strip_prefix("data: ") {
                            if tx.send(data.to_string()).is_err() {
                                break;
                            }
                        }
                    }
                    Err(_) => break,
                }
            }
        });
        Ok(SseTransport { base_url: base_url.trim_end_matches('/').to_string(), incoming: rx })
    }
}

impl Transport for SseTransport {
    fn send(&mut self, frame: &str) -> Result<(), McpError> {
        ureq::post(&format!("{}/rpc", self.base_url))
            .set("content-type", "application/json")
            .send_string(frame)
            .map(|_| ())
            .map_err(|e| McpError::ProtocolError(format!("sse post: {e}")))
    }

    fn recv(&mut self, timeout: Duration) -> Result<String, McpError> {
        match self.incoming.recv_timeout(timeout) {
            Ok(frame) => Ok(frame),
            Err(RecvTimeoutError::Timeout) => Err(McpError::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(McpError::SessionClosed),
        }
    }

    fn close(&mut self) {}
}
