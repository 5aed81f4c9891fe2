#!/usr/bin/env python3
"""Smoke test for the autono_py extension module.

Build the extension first, then run this script from the repository root:

    cargo build -p autono-py
    python3 python/smoke_test.py
"""

import json
import pathlib
import shutil
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def stage_module() -> None:
    """Copy the built cdylib next to this script under an importable name."""
    candidates = [
        ROOT / "target" / "debug" / "libautono_py.so",
        ROOT / "target" / "release" / "libautono_py.so",
        ROOT / "target" / "debug" / "libautono_py.dylib",
        ROOT / "target" / "release" / "libautono_py.dylib",
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("extension not built; run `cargo build -p autono-py` first")
    shutil.copy(built, pathlib.Path(__file__).parent / "autono_py.so")


stage_module()
sys.path.insert(0, str(pathlib.Path(__file__).parent))
import autono_py  # noqa: E402


def test_penalize():
    assert abs(autono_py.penalize(0.3, 2.0) - 0.6) < 1e-12
    assert abs(autono_py.penalize(0.6, 2.0) - 0.2) < 1e-12  # wraps past 1
    assert autono_py.penalize(0.5, 1.0) == 0.5
    try:
        autono_py.penalize(1.5, 2.0)
    except ValueError:
        pass
    else:
        raise AssertionError("out-of-range p must raise")


def test_memory_store():
    a = autono_py.MemoryStore()
    a.record(1, "alpha", "echo", {"msg": "hi"}, "hi")
    a.record(2, "alpha", "echo", {"msg": "again"}, "again")
    b = autono_py.MemoryStore()
    b.record(3, "beta", "echo", {"msg": "yo"}, "yo")

    merged = a.merge(b)
    assert len(merged) == 3
    assert merged.__eq__(b.merge(a))

    payload = merged.transfer()
    entries = json.loads(payload)
    assert [e["agent"] for e in entries] == ["alpha", "alpha", "beta"]
    assert set(entries[0]) == {"ts", "agent", "seq", "action", "summary"}

    round_tripped = autono_py.MemoryStore.from_transfer(payload)
    assert round_tripped.__eq__(merged)
    assert round_tripped.render()[0] == "[1 alpha#1] echo(msg=hi) => hi"

    merged.reset()
    assert len(merged) == 0


def test_run_task():
    playbook = json.dumps({
        "tasks": {
            "greet": {
                "estimated_steps": 1,
                "steps": [
                    {"verdict": "incomplete", "subtasks": ["say hello"],
                     "tool": "echo", "args": {"msg": "hello"}},
                    {"verdict": "complete"},
                ],
            }
        }
    })
    result = json.loads(autono_py.run_task(playbook, "greet", "say hello"))
    assert result["record"]["outcome"] == "succeeded"
    assert result["record"]["steps"] == 1
    assert any('"record":"execution"' in line for line in result["trace"])

    # same playbook and seed, same record
    again = json.loads(autono_py.run_task(playbook, "greet", "say hello"))
    assert again["record"] == result["record"]


def test_run_corpus():
    corpus = (ROOT / "crates/autono/tests/data/corpus.json").read_text()
    config = (ROOT / "crates/autono/tests/data/config.json").read_text()
    report = json.loads(autono_py.run_corpus(corpus, config, golden=True))
    assert report["config"]["rng"] == autono_py.RNG_ALGORITHM
    assert report["categories"]["single_step"]["success_rate"] == 100.0
    assert report["mismatches"] == []
    frozen = (ROOT / "crates/autono/tests/data/golden_report.json").read_text()
    assert report == json.loads(frozen)


def test_sweep():
    csv = autono_py.sweep([0.5], [1.0], runs=2000)
    header, row = csv.strip().splitlines()
    assert header == "p0,beta,runs,mean_checks,abandoned_within_2"
    mean = float(row.split(",")[3])
    assert abs(mean - 2.0) < 0.2  # geometric mean 1/p0


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for test in tests:
        test()
        print(f"ok - {test.__name__}")
    print(f"{len(tests)} smoke tests passed")


if __name__ == "__main__":
    main()
