#!/usr/bin/env python3
"""Smoke test for the cfggrader_py extension module.

Build the extension first, then run this script from anywhere:

    cargo build -p cfggrader-py
    python3 python/smoke_test.py
"""

import shutil
import sys
import tempfile
from pathlib import Path


def load_module():
    repo = Path(__file__).resolve().parent.parent
    built = repo / "target" / "debug" / "libcfggrader_py.so"
    if not built.exists():
        sys.exit(f"{built} not found; run `cargo build -p cfggrader-py` first")
    staging = Path(tempfile.mkdtemp(prefix="cfggrader-py-"))
    shutil.copy2(built, staging / "cfggrader_py.so")
    sys.path.insert(0, str(staging))
    import cfggrader_py

    return cfggrader_py


def main():
    m = load_module()

    single = m.Program.parse("func main { e: ret }")
    assert single.function_count() == 1
    assert single.function_names() == ["main"]
    assert single.unified_node_count() == 2

    chain = m.Program.parse("func main { a: br b  b: ret }")
    assert chain.unified_node_count() == 3
    assert chain.unified_edge_count() == 2

    again = m.Program.parse(chain.emit())
    assert again.emit() == chain.emit()

    assert m.similarity(single, single) == 1.0
    assert m.similarity(chain, chain, mode="topo") == 1.0
    cross = m.similarity(chain, single, mode="topo")
    assert 0.0 < cross < 1.0
    fine = m.similarity(chain, single, mode="topo", epsilon=1e-6)
    assert abs(cross - fine) < 1e-3

    report = m.match_report(chain, single)
    assert report["converged"] is True
    assert len(report["pairs"]) == 2
    assert report["pairs"][0][0] == "@root"
    assert report["unmatched_a"] and not report["unmatched_b"]

    pairs, total = m.solve_assignment([[2.0, 1.0], [1.0, 2.0]])
    assert pairs == [(0, 0), (1, 1)]
    assert total == 4.0

    assert m.feedback_band(0.95) == "very_similar"
    assert m.feedback_band(0.2) == "dissimilar"
    assert abs(m.rescale_similarity(0.8, 0.6) - 0.5) < 1e-12
    assert m.rescale_similarity(1.0, 0.6) == 1.0
    assert m.rescale_similarity(0.3, 0.6) == 0.0

    raw, grade = m.predict([6.058, 1.014, 2.919], 1.0, True, 1.0)
    assert abs(raw - 9.991) < 1e-9
    assert grade == raw
    _, clamped = m.predict([20.0, 0.0, 0.0], 1.0, False, 0.0)
    assert clamped == 10.0

    sim, best = m.best_match(chain, [single, chain])
    assert sim == 1.0 and best == 1

    rows = []
    for i in range(12):
        passed = i % 11
        bug = i % 2 == 0
        x3 = (7 * i % 12) / 11
        grade = 8 * passed / 10 + (1 if bug else 0) + x3
        rows.append((passed, 10, bug, x3, grade))
    model = m.train(rows)
    for got, planted in zip(model["alpha"], (8.0, 1.0, 1.0)):
        assert abs(got - planted) < 1e-9, model
    assert model["trained_on"] == 12
    assert model["train_mae"] < 1e-9

    try:
        m.Program.parse("func main { a: br nowhere }")
    except ValueError as e:
        assert "nowhere" in str(e)
    else:
        raise AssertionError("parse should reject a branch to a missing label")

    try:
        m.similarity(single, single, mode="sideways")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown mode should be rejected")

    print("all smoke tests passed")


if __name__ == "__main__":
    main()
