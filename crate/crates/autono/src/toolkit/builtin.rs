//! Built-in test tools shipped with the harness: echo, arithmetic,
//! key-value store read/write, and a flaky tool that fails its first N
//! calls.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use super::{ParamSpec, ParamType, Tool, ToolArgs, ToolFeedback, ToolSpec};

/// Returns its `msg` argument unchanged.
pub struct EchoTool;

impl EchoTool {
    pub fn spec() -> ToolSpec {
        ToolSpec::new(
            "echo",
            "echo the given message back",
            vec![ParamSpec::required("msg", ParamType::String, "message to echo")],
            "the message, verbatim",
        )
    }
}

impl Tool for EchoTool {
    fn invoke(&self, args: &ToolArgs) -> ToolFeedback {
        ToolFeedback::ok(args.str("msg").to_string())
    }
}

/// Binary arithmetic over two floats: add, sub, mul, div.
pub struct ArithmeticTool;

impl ArithmeticTool {
    pub fn spec() -> ToolSpec {
        ToolSpec::new(
            "arithmetic",
            "apply a binary arithmetic operation to two numbers",
            vec![
                ParamSpec::required("op", ParamType::String, "one of add, sub, mul, div"),
                ParamSpec::required("a", ParamType::Float, "left operand"),
                ParamSpec::required("b", ParamType::Float, "right operand"),
            ],
            "the numeric result as text",
        )
    }
}

impl Tool for ArithmeticTool {
    fn invoke(&self, args: &ToolArgs) -> ToolFeedback {
        let a = args.get("a").and_then(|v| v.as_float()).unwrap_or(0.0);
        let b = args.get("b").and_then(|v| v.as_float()).unwrap_or(0.0);
        match args.str("op") {
            "add" => ToolFeedback::ok(format!("{}", a + b)),
            "sub" => ToolFeedback::ok(format!("{}", a - b)),
            "mul" => ToolFeedback::ok(format!("{}", a * b)),
            "div" if b == 0.0 => ToolFeedback::fail("division by zero"),
            "div" => ToolFeedback::ok(format!("{}", a / b)),
            other => ToolFeedback::fail(format!("unsupported operation `{other}`")),
        }
    }
}

/// Shared in-memory key-value store backing the read/write tools.
#[derive(Clone, Default)]
pub struct KvStore(Arc<Mutex<BTreeMap<String, String>>>);

impl KvStore {
    pub fn new() -> Self {
        Self::default()
    }
}

pub struct KvWriteTool(pub KvStore);

impl KvWriteTool {
    pub fn spec() -> ToolSpec {
        ToolSpec::new(
            "kv_write",
            "store a value under a key",
            vec![
                ParamSpec::required("key", ParamType::String, "key to write"),
                ParamSpec::required("value", ParamType::String, "value to store"),
            ],
            "confirmation of the write",
        )
    }
}

impl Tool for KvWriteTool {
    fn invoke(&self, args: &ToolArgs) -> ToolFeedback {
        let key = args.str("key").to_string();
        let value = args.str("value").to_string();
        self.0 .0.lock().unwrap().insert(key.clone(), value);
        ToolFeedback::ok(format!("stored `{key}`"))
    }
}

pub struct KvReadTool(pub KvStore);

impl KvReadTool {
    pub fn spec() -> ToolSpec {
        ToolSpec::new(
            "kv_read",
            "read the value stored under a key",
            vec![ParamSpec::required("key", ParamType::String, "key to read")],
            "the stored value",
        )
    }
}

impl Tool for KvReadTool {
    fn invoke(&self, args: &ToolArgs) -> ToolFeedback {
        let key = args.str("key");
        match self.0 .0.lock().unwrap().get(key) {
            Some(value) => ToolFeedback::ok(value.clone()),
            None => ToolFeedback::fail(format!("no value for key `{key}`")),
        }
    }
}

/// Echo-like tool that fails its first `fail_first_n` calls with
/// `simulated failure`. Drives the failure-injection task category.
pub struct FlakyTool {
    fail_first_n: u64,
    calls: Mutex<u64>,
}

impl FlakyTool {
    pub fn new(fail_first_n: u64) -> Self {
        FlakyTool { fail_first_n, calls: Mutex::new(0) }
    }

    pub fn spec() -> ToolSpec {
        ToolSpec::new(
            "flaky",
            "echo the given message, but fail the first N calls",
            vec![ParamSpec::required("msg", ParamType::String, "message to echo")],
            "the message once the tool stops failing",
        )
    }
}

impl Tool for FlakyTool {
    fn invoke(&self, args: &ToolArgs) -> ToolFeedback {
        let mut calls = self.calls.lock().unwrap();
        *calls += 1;
        if *calls <= self.fail_first_n {
            ToolFeedback::fail("simulated failure")
        } else {
            ToolFeedback::ok(args.str("msg").to_string())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toolkit::coerce_args;

    fn invoke(tool: &dyn Tool, spec: &ToolSpec, pairs: &[(&str, &str)]) -> ToolFeedback {
        let raw: BTreeMap<String, String> =
            pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        tool.invoke(&coerce_args(spec, &raw).unwrap())
    }

    #[test]
    fn arithmetic_add() {
        let fb = invoke(&ArithmeticTool, &ArithmeticTool::spec(), &[("op", "add"), ("a", "2"), ("b", "3")]);
        assert!(fb.ok);
        assert_eq!(fb.text, "5");
    }

    #[test]
    fn arithmetic_division_by_zero_is_feedback() {
        let fb = invoke(&ArithmeticTool, &ArithmeticTool::spec(), &[("op", "div"), ("a", "1"), ("b", "0")]);
        assert!(!fb.ok);
        assert_eq!(fb.text, "division by zero");
    }

    #[test]
    fn kv_round_trip() {
        let store = KvStore::new();
        let write = KvWriteTool(store.clone());
        let read = KvReadTool(store);
        let fb = invoke(&write, &KvWriteTool::spec(), &[("key", "k"), ("value", "v")]);
        assert!(fb.ok);
        let fb = invoke(&read, &KvReadTool::spec(), &[("key", "k")]);
        assert!(fb.ok);
        assert_eq!(fb.text, "v");
        let fb = invoke(&read, &KvReadTool::spec(), &[("key", "missing")]);
        assert!(!fb.ok);
    }
}
