//! Evaluation harness: loads a scripted task corpus over the three task
//! categories, runs each case through the full agent loop, and aggregates
//! per-category success rates into a reproducible report.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{LlmEngine, LlmEngineConfig, Playbook, ScriptedEngine, TaskScript, ThoughtEngine};
use crate::memory::{AgentId, OutcomeKind, TaskRequest};
use crate::policy::{AbandonmentPolicy, RunRng, RNG_ALGORITHM};
use crate::runtime::{fnv1a, Agent, AgentRuntime, RunRecord};
use crate::toolkit::{
    ArithmeticTool, EchoTool, FlakyTool, KvReadTool, KvStore, KvWriteTool, ToolRegistry,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("corpus parse error: {0}")]
    CorpusParse(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    SingleStep,
    MultiStep,
    MultiStepFailures,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Category::SingleStep => f.write_str("single_step"),
            Category::MultiStep => f.write_str("multi_step"),
            Category::MultiStepFailures => f.write_str("multi_step_failures"),
        }
    }
}

/// Tool fixtures a corpus case can request.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ToolFixture {
    Echo,
    Arithmetic,
    Kv,
    Flaky { fail_first_n: u64 },
}

/// One corpus case: a request, its scripted fixture, and the expected
/// terminal outcome.
#[derive(Debug, Clone, Deserialize)]
pub struct TaskCase {
    pub id: String,
    pub category: Category,
    pub goal: String,
    pub expected: OutcomeKind,
    pub script: TaskScript,
    #[serde(default)]
    pub tools: Vec<ToolFixture>,
}

/// Parse and validate a corpus file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<TaskCase>, HarnessError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::CorpusParse(format!("{}: {e}", path.display())))?;
    load_corpus_json(&text)
}

pub fn load_corpus_json(text: &str) -> Result<Vec<TaskCase>, HarnessError> {
    let cases: Vec<TaskCase> = serde_json::from_str(text)
        .map_err(|e| HarnessError::CorpusParse(e.to_string()))?;
    let mut seen = std::collections::BTreeSet::new();
    for case in &cases {
        if !seen.insert(&case.id) {
            return Err(HarnessError::CorpusParse(format!("duplicate task id `{}`", case.id)));
        }
        if !matches!(case.expected, OutcomeKind::Succeeded | OutcomeKind::Failed) {
            return Err(HarnessError::CorpusParse(format!(
                "task `{}`: expected outcome must be succeeded or failed",
                case.id
            )));
        }
        if case.category == Category::MultiStepFailures
            && !case
                .tools
                .iter()
                .any(|t| matches!(t, ToolFixture::Flaky { fail_first_n } if *fail_first_n >= 1))
        {
            return Err(HarnessError::CorpusParse(format!(
                "task `{}`: multi_step_failures cases need a flaky tool with fail_first_n >= 1",
                case.id
            )));
        }
    }
    Ok(cases)
}

/// Suite-level configuration. `engine` selects `scripted` (default,
/// hermetic) or `llm` together with the `llm` adapter settings; the
/// scripted mode never reads environment credentials.
#[derive(Debug, Clone, Deserialize)]
pub struct RuntimeConfig {
    pub p0: f64,
    pub beta: f64,
    pub seed: u64,
    #[serde(default = "default_engine")]
    pub engine: String,
    #[serde(default)]
    pub gate_at_estimate: bool,
    #[serde(default)]
    pub clamp: bool,
    #[serde(default)]
    pub llm: Option<LlmEngineConfig>,
}

fn default_engine() -> String {
    "scripted".into()
}

impl RuntimeConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path.as_ref())?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub total: u64,
    pub succeeded: u64,
    /// Percentage, one decimal, half-up.
    pub success_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub p0: f64,
    pub beta: f64,
    pub seed: u64,
    pub engine: String,
    pub rng: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    pub categories: BTreeMap<Category, CategoryStats>,
    pub tasks: Vec<RunRecord>,
    /// Task ids whose outcome differed from the corpus expectation.
    pub mismatches: Vec<String>,
    /// Wall-clock stamp; zeroed in golden comparisons.
    pub generated_at_ms: u64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Byte-stable form for golden-file comparison: the wall-clock field
    /// is zeroed, everything else untouched.
    pub fn to_json_golden(&self) -> String {
        let mut normalized = self.clone();
        normalized.generated_at_ms = 0;
        normalized.to_json()
    }

    /// Plain-text table with one row per engine config, mirroring the
    /// three category columns.
    pub fn to_table(&self) -> String {
        let rate = |c: Category| {
            self.categories
                .get(&c)
                .map(|s| format!("{:.1}%", s.success_rate))
                .unwrap_or_else(|| "n/a".into())
        };
        let mut out = String::new();
        out.push_str(
            "Framework | Engine | Single-Step Tasks | Multi-Step Tasks | Multi-Step Tasks with Possible Failures\n",
        );
        out.push_str(&format!(
            "autono | {} | {} | {} | {}\n",
            self.config.engine,
            rate(Category::SingleStep),
            rate(Category::MultiStep),
            rate(Category::MultiStepFailures),
        ));
        out
    }
}

/// Success rate as a percentage, rounded half-up to one decimal.
pub fn success_rate(succeeded: u64, total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let rate = 100.0 * succeeded as f64 / total as f64;
    ((rate * 10.0) + 0.5).floor() / 10.0
}

fn build_registry(fixtures: &[ToolFixture]) -> ToolRegistry {
    let mut registry = ToolRegistry::new();
    for fixture in fixtures {
        match fixture {
            ToolFixture::Echo => {
                registry.register(EchoTool::spec(), Arc::new(EchoTool)).expect("fresh registry")
            }
            ToolFixture::Arithmetic => registry
                .register(ArithmeticTool::spec(), Arc::new(ArithmeticTool))
                .expect("fresh registry"),
            ToolFixture::Kv => {
                let store = KvStore::new();
                registry
                    .register(KvWriteTool::spec(), Arc::new(KvWriteTool(store.clone())))
                    .expect("fresh registry");
                registry
                    .register(KvReadTool::spec(), Arc::new(KvReadTool(store)))
                    .expect("fresh registry");
            }
            ToolFixture::Flaky { fail_first_n } => registry
                .register(FlakyTool::spec(), Arc::new(FlakyTool::new(*fail_first_n)))
                .expect("fresh registry"),
        }
    }
    registry
}

/// Run every corpus case and aggregate per-category success rates.
/// Deterministic under a fixed seed: per-case seeds derive as
/// `seed ^ fnv1a(task id)` and cases share no state.
pub fn run_suite(corpus: &[TaskCase], config: &RuntimeConfig) -> RunReport {
    let agent_id = AgentId::new("agent");
    let mut tasks = Vec::new();
    let mut mismatches = Vec::new();
    let mut totals: BTreeMap<Category, (u64, u64)> = BTreeMap::new();

    for case in corpus {
        let engine: Arc<dyn ThoughtEngine> = if config.engine == "llm" {
            match &config.llm {
                Some(llm) => Arc::new(LlmEngine::new(llm.clone())),
                None => {
                    log::error!("engine `llm` selected without llm config; using scripted");
                    scripted_for(case)
                }
            }
        } else {
            scripted_for(case)
        };
        let mut policy = AbandonmentPolicy::new(config.p0, config.beta, config.seed);
        policy.gate_at_estimate = config.gate_at_estimate;
        policy.clamp = config.clamp;

        let mut runtime = AgentRuntime::new();
        runtime
            .add_agent(Agent {
                id: agent_id.clone(),
                engine,
                registry: Arc::new(build_registry(&case.tools)),
                policy,
            })
            .expect("one agent per runtime");

        let request = TaskRequest::new(&case.id, &case.goal, 0);
        let case_seed = config.seed ^ fnv1a(&case.id);
        let result = runtime
            .run_seeded(&agent_id, &request, case_seed)
            .expect("agent registered above");

        let (total, succeeded) = totals.entry(case.category).or_insert((0, 0));
        *total += 1;
        if result.outcome.kind == OutcomeKind::Succeeded {
            *succeeded += 1;
        }
        if result.outcome.kind != case.expected {
            mismatches.push(case.id.clone());
        }
        tasks.push(result.record);
    }

    let categories = totals
        .into_iter()
        .map(|(category, (total, succeeded))| {
            (category, CategoryStats { total, succeeded, success_rate: success_rate(succeeded, total) })
        })
        .collect();

    RunReport {
        config: ConfigEcho {
            p0: config.p0,
            beta: config.beta,
            seed: config.seed,
            engine: config.engine.clone(),
            rng: RNG_ALGORITHM.into(),
        },
        categories,
        tasks,
        mismatches,
        generated_at_ms: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0),
    }
}

fn scripted_for(case: &TaskCase) -> Arc<dyn ThoughtEngine> {
    let playbook = Playbook { tasks: BTreeMap::from([(case.id.clone(), case.script.clone())]) };
    Arc::new(ScriptedEngine::new(playbook))
}

/// One row of the abandonment sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub p0: f64,
    pub beta: f64,
    pub runs: u64,
    /// Empirical mean overtime checks until abandon.
    pub mean_checks: f64,
    /// Fraction of runs abandoned within the first two checks.
    pub abandoned_within_2: f64,
}

/// Monte Carlo over the overtime gate with a never-completing task:
/// repeatedly draw against the (penalized) abandonment probability and
/// count checks until abandon. `cap` bounds pathological configs (p0=0).
pub fn sweep(p0s: &[f64], betas: &[f64], runs: u64, seed: u64, cap: u64) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for &p0 in p0s {
        for &beta in betas {
            let mut total_checks = 0u64;
            let mut within_two = 0u64;
            for run in 0..runs {
                let mut rng = RunRng::seed_from_u64(seed ^ run);
                let mut p = p0;
                let mut checks = 0u64;
                loop {
                    checks += 1;
                    let draw: f64 = rng.gen();
                    if draw <= p {
                        break;
                    }
                    p = (beta * p).rem_euclid(1.0);
                    if checks >= cap {
                        break;
                    }
                }
                total_checks += checks;
                if checks <= 2 {
                    within_two += 1;
                }
            }
            rows.push(SweepRow {
                p0,
                beta,
                runs,
                mean_checks: total_checks as f64 / runs as f64,
                abandoned_within_2: within_two as f64 / runs as f64,
            });
        }
    }
    rows
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("p0,beta,runs,mean_checks,abandoned_within_2\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{:.4},{:.4}\n",
            row.p0, row.beta, row.runs, row.mean_checks, row.abandoned_within_2
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_matches_reported_convention() {
        assert_eq!(success_rate(29, 30), 96.7);
        assert_eq!(success_rate(30, 30), 100.0);
        assert_eq!(success_rate(28, 30), 93.3);
        assert_eq!(success_rate(23, 30), 76.7);
        assert_eq!(success_rate(0, 30), 0.0);
        assert_eq!(success_rate(0, 0), 0.0);
    }

    #[test]
    fn empty_corpus_is_valid() {
        assert!(load_corpus_json("[]").unwrap().is_empty());
    }

    #[test]
    fn unknown_category_rejected() {
        let text = r#"[{"id":"x","category":"mystery","goal":"g","expected":"succeeded",
            "script":{"estimated_steps":1,"steps":[{"verdict":"complete"}]}}]"#;
        assert!(matches!(load_corpus_json(text), Err(HarnessError::CorpusParse(_))));
    }

    #[test]
    fn failure_category_requires_flaky_fixture() {
        let text = r#"[{"id":"x","category":"multi_step_failures","goal":"g",
            "expected":"succeeded",
            "script":{"estimated_steps":1,"steps":[{"verdict":"complete"}]},
            "tools":[{"kind":"echo"}]}]"#;
        assert!(matches!(load_corpus_json(text), Err(HarnessError::CorpusParse(_))));
    }

    #[test]
    fn sweep_mean_tracks_geometric_oracle() {
        // closed form: checks until abandon ~ Geometric(p), mean 1/p
        let rows = sweep(&[0.5], &[1.0], 4000, 7, 1_000_000);
        let mean = rows[0].mean_checks;
        assert!((mean - 2.0).abs() / 2.0 < 0.05, "mean {mean} not within 5% of 2.0");
    }
}
