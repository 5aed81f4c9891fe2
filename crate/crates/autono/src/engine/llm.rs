//! HTTP-backed engine adapter: one chat-completion request per operation.
//!
//! Prompt templates live in files under `prompt_dir`, one per operation
//! (`extract_events.txt`, `judge_completion.txt`, `derive_subtasks.txt`,
//! `match_tools.txt`, `plan_move.txt`, `estimate_steps.txt`,
//! `introspect.txt`), with `{{goal}}`, `{{events}}`, `{{subtasks}}`,
//! `{{tools}}`, `{{outcome}}` placeholders. The API key is read from the
//! configured environment variable at call time and never implicitly.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{
    CompletionJudgment, EngineError, EventDigest, MovePlan, SubtaskList, ThoughtEngine, Verdict,
};
use crate::memory::{AgentState, MemoryStore, OutcomeKind, TaskRequest};
use crate::toolkit::ToolSpec;

#[derive(Debug, Clone, Deserialize)]
pub struct LlmEngineConfig {
    /// Chat-completions endpoint URL.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key, if any.
    #[serde(default)]
    pub api_key_env: Option<String>,
    /// Directory of per-operation prompt template files.
    pub prompt_dir: PathBuf,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
}

fn default_timeout_secs() -> u64 {
    60
}

pub struct LlmEngine {
    config: LlmEngineConfig,
    client: ureq::Agent,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

impl LlmEngine {
    pub fn new(config: LlmEngineConfig) -> Self {
        let client = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build();
        LlmEngine { config, client }
    }

    fn template(&self, operation: &str) -> Result<String, EngineError> {
        let path = self.config.prompt_dir.join(format!("{operation}.txt"));
        std::fs::read_to_string(&path).map_err(|e| {
            EngineError::Unavailable(format!("prompt template {}: {e}", path.display()))
        })
    }

    fn render(template: &str, vars: &BTreeMap<&str, String>) -> String {
        let mut out = template.to_string();
        for (key, value) in vars {
            out = out.replace(&format!("{{{{{key}}}}}"), value);
        }
        out
    }

    fn complete(&self, prompt: &str) -> Result<String, EngineError> {
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut request = self.client.post(&self.config.endpoint);
        if let Some(env_var) = &self.config.api_key_env {
            let key = std::env::var(env_var).map_err(|_| {
                EngineError::Unavailable(format!("API key env var `{env_var}` unset"))
            })?;
            request = request.set("Authorization", &format!("Bearer {key}"));
        }
        let response = request
            .send_json(body)
            .map_err(|e| EngineError::Unavailable(format!("chat request failed: {e}")))?;
        let parsed: ChatResponse = response
            .into_json()
            .map_err(|e| EngineError::Unavailable(format!("malformed chat response: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| EngineError::Unavailable("chat response had no choices".into()))
    }

    fn op(
        &self,
        operation: &str,
        vars: BTreeMap<&str, String>,
    ) -> Result<String, EngineError> {
        let template = self.template(operation)?;
        self.complete(&Self::render(&template, &vars))
    }

    fn tool_listing(tools: &[ToolSpec]) -> String {
        tools
            .iter()
            .map(|t| {
                let params: Vec<String> = t
                    .params
                    .iter()
                    .map(|p| {
                        format!(
                            "{}:{:?}{}",
                            p.name,
                            p.param_type,
                            if p.required { " (required)" } else { "" }
                        )
                    })
                    .collect();
                format!("- {}: {} [{}] -> {}", t.name, t.description, params.join(", "), t.returns)
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

impl ThoughtEngine for LlmEngine {
    fn extract_events(
        &self,
        request: &TaskRequest,
        memory: &MemoryStore,
        state: &AgentState,
    ) -> Result<EventDigest, EngineError> {
        let rendered: Vec<String> = memory.iter().map(|e| e.render()).collect();
        let vars = BTreeMap::from([
            ("goal", request.goal.clone()),
            ("events", rendered.join("\n")),
            ("latest_feedback", state.latest_feedback.clone()),
        ]);
        let reply = self.op("extract_events", vars)?;
        let events = reply.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
        Ok(EventDigest { events })
    }

    fn judge_completion(
        &self,
        request: &TaskRequest,
        events: &EventDigest,
    ) -> Result<CompletionJudgment, EngineError> {
        let vars = BTreeMap::from([
            ("goal", request.goal.clone()),
            ("events", events.events.join("\n")),
        ]);
        let reply = self.op("judge_completion", vars)?;
        let mut lines = reply.lines();
        let first = lines.next().unwrap_or_default().trim().to_ascii_uppercase();
        let verdict = match first.as_str() {
            "COMPLETE" => Verdict::Complete,
            "UNATTAINABLE" => Verdict::Unattainable,
            "INCOMPLETE" => Verdict::Incomplete,
            other => {
                return Err(EngineError::ContractBreach(format!(
                    "unparseable completion verdict `{other}`"
                )))
            }
        };
        Ok(CompletionJudgment { verdict, rationale: lines.collect::<Vec<_>>().join("\n") })
    }

    fn derive_subtasks(
        &self,
        request: &TaskRequest,
        events: &EventDigest,
    ) -> Result<SubtaskList, EngineError> {
        let vars = BTreeMap::from([
            ("goal", request.goal.clone()),
            ("events", events.events.join("\n")),
        ]);
        let reply = self.op("derive_subtasks", vars)?;
        let subtasks: Vec<String> =
            reply.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect();
        Ok(SubtaskList { subtasks })
    }

    fn match_tools(
        &self,
        request: &TaskRequest,
        events: &EventDigest,
        subtasks: &SubtaskList,
        tools: &[ToolSpec],
    ) -> Result<Option<Vec<ToolSpec>>, EngineError> {
        let vars = BTreeMap::from([
            ("goal", request.goal.clone()),
            ("events", events.events.join("\n")),
            ("subtasks", subtasks.subtasks.join("\n")),
            ("tools", Self::tool_listing(tools)),
        ]);
        let reply = self.op("match_tools", vars)?;
        let reply = reply.trim();
        if reply.eq_ignore_ascii_case("none") {
            return Ok(None);
        }
        // Keep only names that were actually supplied; the model cannot
        // hallucinate a tool into the candidate set.
        let subset: Vec<ToolSpec> = reply
            .split([',', '\n'])
            .map(str::trim)
            .filter(|n| !n.is_empty())
            .filter_map(|name| tools.iter().find(|t| t.name == name).cloned())
            .collect();
        Ok(if subset.is_empty() { None } else { Some(subset) })
    }

    fn plan_move(
        &self,
        request: &TaskRequest,
        events: &EventDigest,
        subtasks: &SubtaskList,
        candidates: &[ToolSpec],
    ) -> Result<MovePlan, EngineError> {
        let vars = BTreeMap::from([
            ("goal", request.goal.clone()),
            ("events", events.events.join("\n")),
            ("subtasks", subtasks.subtasks.join("\n")),
            ("tools", Self::tool_listing(candidates)),
        ]);
        let reply = self.op("plan_move", vars)?;
        #[derive(Deserialize)]
        struct PlanReply {
            tool: String,
            #[serde(default)]
            args: BTreeMap<String, String>,
            #[serde(default)]
            description: String,
        }
        let plan: PlanReply = serde_json::from_str(reply.trim())
            .map_err(|e| EngineError::ContractBreach(format!("unparseable move plan: {e}")))?;
        Ok(MovePlan { description: plan.description, chosen_tool: plan.tool, arguments: plan.args })
    }

    fn estimate_steps(
        &self,
        request: &TaskRequest,
        tools: &[ToolSpec],
    ) -> Result<u32, EngineError> {
        let vars = BTreeMap::from([
            ("goal", request.goal.clone()),
            ("tools", Self::tool_listing(tools)),
        ]);
        let reply = self.op("estimate_steps", vars)?;
        let estimate = reply
            .split_whitespace()
            .find_map(|w| w.trim_matches(|c: char| !c.is_ascii_digit()).parse::<u32>().ok())
            .ok_or_else(|| {
                EngineError::ContractBreach(format!("unparseable step estimate `{reply}`"))
            })?;
        Ok(estimate)
    }

    fn introspect(
        &self,
        request: &TaskRequest,
        memory: &MemoryStore,
        outcome_kind: OutcomeKind,
    ) -> Result<String, EngineError> {
        let rendered: Vec<String> = memory.iter().map(|e| e.render()).collect();
        let vars = BTreeMap::from([
            ("goal", request.goal.clone()),
            ("events", rendered.join("\n")),
            ("outcome", outcome_kind.to_string()),
        ]);
        self.op("introspect", vars)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    // Minimal one-shot chat-completion stub.
    fn stub_server(content: &'static str) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { break };
                let mut buf = [0u8; 8192];
                let _ = stream.read(&mut buf);
                let body = serde_json::json!({
                    "choices": [{"message": {"role": "assistant", "content": content}}]
                })
                .to_string();
                let response = format!(
                    "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\n\r\n{}",
                    body.len(),
                    body
                );
                let _ = stream.write_all(response.as_bytes());
            }
        });
        format!("http://{addr}/v1/chat/completions")
    }

    fn engine(endpoint: String, dir: &std::path::Path) -> LlmEngine {
        LlmEngine::new(LlmEngineConfig {
            endpoint,
            model: "test-model".into(),
            api_key_env: None,
            prompt_dir: dir.to_path_buf(),
            timeout_secs: 5,
        })
    }

    #[test]
    fn judge_completion_parses_verdict_and_rationale() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("judge_completion.txt"), "goal: {{goal}}\n{{events}}")
            .unwrap();
        let engine = engine(stub_server("COMPLETE\nall done"), dir.path());
        let request = TaskRequest::new("t", "do it", 0);
        let judgment = engine.judge_completion(&request, &EventDigest::default()).unwrap();
        assert_eq!(judgment.verdict, Verdict::Complete);
        assert_eq!(judgment.rationale, "all done");
    }

    #[test]
    fn estimate_steps_parses_integer() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("estimate_steps.txt"), "{{goal}} {{tools}}").unwrap();
        let engine = engine(stub_server("about 4 steps"), dir.path());
        let request = TaskRequest::new("t", "do it", 0);
        assert_eq!(engine.estimate_steps(&request, &[]).unwrap(), 4);
    }

    #[test]
    fn missing_template_is_unavailable() {
        let dir = tempfile::tempdir().unwrap();
        let engine = engine("http://127.0.0.1:9/unused".into(), dir.path());
        let request = TaskRequest::new("t", "do it", 0);
        assert!(matches!(
            engine.judge_completion(&request, &EventDigest::default()),
            Err(EngineError::Unavailable(_))
        ));
    }
}
