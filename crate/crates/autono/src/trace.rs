//! Structured run traces: every decision the loop takes, in order.
//!
//! Traces back the golden-trace tests and the `--trace` CLI output. Records
//! serialize as JSON lines so two runs can be diffed byte-for-byte.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::memory::OutcomeKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum TraceRecord {
    Estimate { estimated_steps: u32 },
    Events { events: Vec<String> },
    Judgment { verdict: String, rationale: String },
    Subtasks { subtasks: Vec<String> },
    Candidates { tools: Vec<String> },
    Plan { tool: String, args: BTreeMap<String, String>, description: String },
    Execution { tool: String, args: BTreeMap<String, String>, ok: bool, text: String },
    Gate { step_count: u64, decision: String, p_before: f64, p_after: f64 },
    Handoff { target: String, ok: bool, text: String },
    Outcome { kind: OutcomeKind, steps_used: u64, summary: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
}

impl RunTrace {
    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    /// One JSON document per line, in decision order.
    pub fn to_json_lines(&self) -> String {
        self.records
            .iter()
            .map(|r| serde_json::to_string(r).expect("trace record serializes"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}
