//! Domain types shared across the runtime, and the agent memory store.
//!
//! Memories are kept as an ordered record of tool actions and their
//! summaries. Each entry is keyed by `(agent, seq)` and iteration always
//! yields chronological order with a deterministic `(timestamp, agent, seq)`
//! tie-break, so stores transferred between agents interleave correctly.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MemoryError {
    #[error("duplicate entry for agent `{agent}` seq {seq}")]
    DuplicateEntry { agent: String, seq: u64 },
    #[error("stale sequence for agent `{agent}`: got {got}, expected {expected}")]
    StaleSequence { agent: String, got: u64, expected: u64 },
    #[error("conflicting entry for agent `{agent}` seq {seq}: payloads differ")]
    ConflictingEntry { agent: String, seq: u64 },
    #[error("malformed transfer payload: {0}")]
    CorruptPayload(String),
}

/// Identifier of an agent instance, unique within a runtime.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(String);

impl AgentId {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        assert!(!name.is_empty(), "agent id must be non-empty");
        AgentId(name)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A user-issued task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskRequest {
    pub id: String,
    pub goal: String,
    /// Milliseconds since epoch.
    pub issued_at: u64,
}

impl TaskRequest {
    pub fn new(id: impl Into<String>, goal: impl Into<String>, issued_at: u64) -> Self {
        let goal = goal.into();
        assert!(!goal.is_empty(), "task goal must be non-empty");
        TaskRequest { id: id.into(), goal, issued_at }
    }
}

/// A tool invocation: tool name plus flat text arguments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub tool: String,
    pub args: BTreeMap<String, String>,
}

/// One remembered action with its feedback summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryEntry {
    /// Milliseconds since epoch.
    #[serde(rename = "ts")]
    pub timestamp: u64,
    pub agent: AgentId,
    /// Per-agent monotone counter, starting at 1.
    pub seq: u64,
    pub action: ActionRecord,
    pub summary: String,
}

impl MemoryEntry {
    fn key(&self) -> (u64, &AgentId, u64) {
        (self.timestamp, &self.agent, self.seq)
    }

    /// Stable one-line rendering used for event digests and traces.
    pub fn render(&self) -> String {
        let args: Vec<String> =
            self.action.args.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!(
            "[{} {}#{}] {}({}) => {}",
            self.timestamp,
            self.agent,
            self.seq,
            self.action.tool,
            args.join(", "),
            self.summary
        )
    }
}

/// Insertion-ordered memory store keyed by `(agent, seq)`.
///
/// Entries are held sorted by `(timestamp, agent, seq)`; all accessors
/// observe that order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MemoryStore {
    entries: Vec<MemoryEntry>,
    next_seq: BTreeMap<AgentId, u64>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Next sequence number for `agent` (1 for an unseen agent).
    pub fn next_seq(&self, agent: &AgentId) -> u64 {
        self.next_seq.get(agent).copied().unwrap_or(1)
    }

    pub fn iter(&self) -> impl Iterator<Item = &MemoryEntry> {
        self.entries.iter()
    }

    pub fn entries_for<'a>(
        &'a self,
        agent: &'a AgentId,
    ) -> impl Iterator<Item = &'a MemoryEntry> + 'a {
        self.entries.iter().filter(move |e| &e.agent == agent)
    }

    fn contains_key(&self, agent: &AgentId, seq: u64) -> bool {
        self.entries.iter().any(|e| &e.agent == agent && e.seq == seq)
    }

    fn insert_sorted(&mut self, entry: MemoryEntry) {
        let pos = self
            .entries
            .partition_point(|e| e.key() <= entry.key());
        let next = self.next_seq.entry(entry.agent.clone()).or_insert(1);
        *next = (*next).max(entry.seq + 1);
        self.entries.insert(pos, entry);
    }

    /// Append a new entry. `entry.seq` must be the next counter value for
    /// its agent and the `(agent, seq)` key must be unused.
    pub fn record(&mut self, entry: MemoryEntry) -> Result<(), MemoryError> {
        if self.contains_key(&entry.agent, entry.seq) {
            return Err(MemoryError::DuplicateEntry {
                agent: entry.agent.to_string(),
                seq: entry.seq,
            });
        }
        let expected = self.next_seq(&entry.agent);
        if entry.seq != expected {
            return Err(MemoryError::StaleSequence {
                agent: entry.agent.to_string(),
                got: entry.seq,
                expected,
            });
        }
        self.insert_sorted(entry);
        Ok(())
    }

    /// Merge `incoming` into a copy of `self`, deduplicating by
    /// `(agent, seq)`. Payload-equal duplicates collapse; differing payloads
    /// under the same key signal a corrupted transfer.
    pub fn merge(&self, incoming: &MemoryStore) -> Result<MemoryStore, MemoryError> {
        let mut out = self.clone();
        for entry in incoming.iter() {
            match out
                .entries
                .iter()
                .find(|e| e.agent == entry.agent && e.seq == entry.seq)
            {
                Some(existing) if existing == entry => continue,
                Some(_) => {
                    return Err(MemoryError::ConflictingEntry {
                        agent: entry.agent.to_string(),
                        seq: entry.seq,
                    })
                }
                None => out.insert_sorted(entry.clone()),
            }
        }
        Ok(out)
    }

    /// Drop all entries and restart every agent's counter at 1.
    pub fn reset(&mut self) {
        self.entries.clear();
        self.next_seq.clear();
    }

    /// Serialize to the transfer wire format: a UTF-8 JSON array of entry
    /// objects sorted by `(ts, agent, seq)`. This is also the harness's
    /// trajectory-log format.
    pub fn transfer(&self) -> Vec<u8> {
        serde_json::to_vec(&self.entries).expect("memory entries serialize")
    }

    pub fn transfer_json(&self) -> String {
        serde_json::to_string(&self.entries).expect("memory entries serialize")
    }

    /// Rebuild a store from a transfer payload.
    pub fn from_transfer(payload: &[u8]) -> Result<MemoryStore, MemoryError> {
        let entries: Vec<MemoryEntry> = serde_json::from_slice(payload)
            .map_err(|e| MemoryError::CorruptPayload(e.to_string()))?;
        let mut store = MemoryStore::new();
        for entry in entries {
            if store.contains_key(&entry.agent, entry.seq) {
                return Err(MemoryError::CorruptPayload(format!(
                    "duplicate key {}#{}",
                    entry.agent, entry.seq
                )));
            }
            store.insert_sorted(entry);
        }
        Ok(store)
    }

    /// True when every entry of `other` is present (payload-equal) here.
    pub fn contains_all(&self, other: &MemoryStore) -> bool {
        other.iter().all(|e| self.entries.contains(e))
    }
}

/// Per-run mutable agent state: the latest tool feedback and how many
/// actions this agent has taken for the current task.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AgentState {
    pub latest_feedback: String,
    pub steps_taken: u64,
}

/// Terminal result of a task run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Succeeded,
    Failed,
    Abandoned,
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OutcomeKind::Succeeded => f.write_str("succeeded"),
            OutcomeKind::Failed => f.write_str("failed"),
            OutcomeKind::Abandoned => f.write_str("abandoned"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub kind: OutcomeKind,
    /// Introspection summary for the run.
    pub summary: String,
    pub steps_used: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(ts: u64, agent: &str, seq: u64) -> MemoryEntry {
        MemoryEntry {
            timestamp: ts,
            agent: AgentId::new(agent),
            seq,
            action: ActionRecord {
                tool: "echo".into(),
                args: BTreeMap::from([("msg".to_string(), format!("{agent}-{seq}"))]),
            },
            summary: format!("did {agent} {seq}"),
        }
    }

    #[test]
    fn record_into_empty_store() {
        let mut store = MemoryStore::new();
        store.record(entry(1, "a", 1)).unwrap();
        assert_eq!(store.len(), 1);
    }

    #[test]
    fn duplicate_seq_rejected() {
        let mut store = MemoryStore::new();
        store.record(entry(1, "a", 1)).unwrap();
        let err = store.record(entry(2, "a", 1)).unwrap_err();
        assert!(matches!(err, MemoryError::DuplicateEntry { .. }));
    }

    #[test]
    fn stale_seq_rejected() {
        let mut store = MemoryStore::new();
        store.record(entry(1, "a", 1)).unwrap();
        let err = store.record(entry(2, "a", 3)).unwrap_err();
        assert_eq!(
            err,
            MemoryError::StaleSequence { agent: "a".into(), got: 3, expected: 2 }
        );
    }

    // Independent oracle: full sort of the raw entry list.
    fn oracle_sort(mut entries: Vec<MemoryEntry>) -> Vec<MemoryEntry> {
        entries.sort_by(|a, b| {
            (a.timestamp, a.agent.clone(), a.seq).cmp(&(b.timestamp, b.agent.clone(), b.seq))
        });
        entries
    }

    #[test]
    fn iteration_matches_sort_oracle_for_all_permutations() {
        // 5 entries across two agents with shuffled timestamps; equal
        // timestamps exercise the (agent, seq) tie-break.
        let base = vec![
            entry(30, "a", 1),
            entry(10, "a", 2),
            entry(20, "b", 1),
            entry(20, "a", 3),
            entry(5, "b", 2),
        ];
        let expected = oracle_sort(base.clone());
        let n = base.len();
        let mut perm: Vec<usize> = (0..n).collect();
        // Heap's algorithm over all 5! orderings.
        let mut c = vec![0usize; n];
        let check = |p: &[usize]| {
            let mut store = MemoryStore::new();
            for &i in p {
                // record() enforces per-agent seq order; bypass via merge of
                // singleton stores to test pure ordering.
                let mut single = MemoryStore::new();
                single.insert_sorted(base[i].clone());
                store = store.merge(&single).unwrap();
            }
            let got: Vec<MemoryEntry> = store.iter().cloned().collect();
            assert_eq!(got, expected);
        };
        check(&perm);
        let mut i = 0;
        while i < n {
            if c[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(c[i], i);
                }
                check(&perm);
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn merge_identity_and_idempotence() {
        let mut s = MemoryStore::new();
        s.record(entry(1, "a", 1)).unwrap();
        s.record(entry(2, "a", 2)).unwrap();
        assert_eq!(s.merge(&MemoryStore::new()).unwrap(), s);
        assert_eq!(s.merge(&s.clone()).unwrap(), s);
    }

    #[test]
    fn merge_interleaves_in_oracle_order() {
        let mut left = MemoryStore::new();
        left.record(entry(10, "a", 1)).unwrap();
        left.record(entry(30, "a", 2)).unwrap();
        left.record(entry(50, "a", 3)).unwrap();
        let mut right = MemoryStore::new();
        right.record(entry(20, "b", 1)).unwrap();
        right.record(entry(40, "b", 2)).unwrap();
        right.record(entry(60, "b", 3)).unwrap();

        let merged = left.merge(&right).unwrap();
        assert_eq!(merged.len(), 6);
        let all: Vec<MemoryEntry> =
            left.iter().chain(right.iter()).cloned().collect();
        let expected = oracle_sort(all);
        let got: Vec<MemoryEntry> = merged.iter().cloned().collect();
        assert_eq!(got, expected);

        // Commutative on entry sets.
        assert_eq!(right.merge(&left).unwrap(), merged);
    }

    #[test]
    fn merge_conflicting_payload_rejected() {
        let mut left = MemoryStore::new();
        left.record(entry(1, "a", 1)).unwrap();
        let mut right = MemoryStore::new();
        let mut tampered = entry(1, "a", 1);
        tampered.summary = "something else".into();
        right.record(tampered).unwrap();
        assert!(matches!(
            left.merge(&right).unwrap_err(),
            MemoryError::ConflictingEntry { .. }
        ));
    }

    #[test]
    fn reset_clears_and_restarts_counters() {
        let mut store = MemoryStore::new();
        for i in 1..=3 {
            store.record(entry(i, "a", i)).unwrap();
        }
        store.reset();
        assert!(store.is_empty());
        store.reset(); // idempotent
        assert!(store.is_empty());
        // seq restarts at 1 per agent after reset
        assert_eq!(store.next_seq(&AgentId::new("a")), 1);
        store.record(entry(9, "a", 1)).unwrap();
        assert_eq!(store.next_seq(&AgentId::new("a")), 2);
    }

    #[test]
    fn transfer_round_trip_and_fixpoint() {
        let empty = MemoryStore::new();
        assert_eq!(MemoryStore::from_transfer(&empty.transfer()).unwrap(), empty);

        let mut store = MemoryStore::new();
        store.record(entry(5, "a", 1)).unwrap();
        store.record(entry(6, "b", 1)).unwrap();
        store.record(entry(7, "a", 2)).unwrap();
        store.record(entry(8, "b", 2)).unwrap();

        let payload = store.transfer();
        let decoded = MemoryStore::from_transfer(&payload).unwrap();
        assert_eq!(decoded, store);
        // encode-decode-encode fixpoint: byte-identical re-encoding
        assert_eq!(decoded.transfer(), payload);

        // both agents' seq chains survive the round trip
        for agent in ["a", "b"] {
            let id = AgentId::new(agent);
            let seqs: Vec<u64> = decoded.entries_for(&id).map(|e| e.seq).collect();
            assert_eq!(seqs, vec![1, 2]);
        }
    }

    #[test]
    fn wire_format_field_names() {
        let mut store = MemoryStore::new();
        store.record(entry(5, "a", 1)).unwrap();
        let json: serde_json::Value =
            serde_json::from_slice(&store.transfer()).unwrap();
        let obj = &json[0];
        assert_eq!(obj["ts"], 5);
        assert_eq!(obj["agent"], "a");
        assert_eq!(obj["seq"], 1);
        assert_eq!(obj["action"]["tool"], "echo");
        assert!(obj["action"]["args"].is_object());
        assert!(obj["summary"].is_string());
    }
}
