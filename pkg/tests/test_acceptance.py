"""The acceptance battery as a test module.

One test per criterion, each printing its pass/fail line with the
measured value against its pinned bound.  The battery (including the
Monte Carlo games at 10^4 trials) runs once per session; the determinism
criterion inside it re-runs everything with the same seed and
byte-compares the serialized results.
"""

import pytest

from qlease import suite

SEED = 0
TRIALS = 10000

CRITERIA = [
    "qas-correctness",
    "wrong-key-bound",
    "design-certificate",
    "pairwise-independence",
    "eps-uniform-bound",
    "protection-correctness",
    "trace-distance-orthogonal",
    "reusability",
    "mix-worst-case-correctness",
    "baselines",
    "harness-vs-oracles",
    "security-sanity",
    "bruteforce-degradation",
    "determinism",
]


@pytest.fixture(scope="module")
def results():
    out = {r.name: r for r in suite.run_suite(seed=SEED, trials=TRIALS)}
    assert set(out) == set(CRITERIA)
    return out


@pytest.mark.parametrize("name", CRITERIA)
def test_criterion(results, name):
    r = results[name]
    status = "PASS" if r.passed else "FAIL"
    print(f"{status}  {r.name}: measured={r.measured:.6g} bound={r.bound:.6g}  {r.note}")
    assert r.passed, f"{r.name}: measured={r.measured!r} vs bound={r.bound!r} ({r.note})"
