import itertools

import numpy as np
import pytest

from knar.instance import KnapsackInstance, new_instance


@pytest.fixture
def instance_a():
    return new_instance([2, 3], [0.6, 0.7], 4, w_max=8, id="A")


def subsets(n):
    return itertools.product((0, 1), repeat=n)


def prefix_optimum(inst, i, c):
    """Best value using items 1..i within capacity c, by enumeration."""
    best = 0.0
    for bits in subsets(i):
        w = sum(b * x for b, x in zip(bits, inst.weights))
        if w <= c:
            best = max(best, sum(b * v for b, v in zip(bits, inst.values)))
    return best


def achievable_sums(numbers):
    sums = {0}
    for x in numbers:
        sums |= {s + x for s in sums}
    return sums


def random_instance(rng, n_max=12, c_max=16, w_max=8, n_min=0):
    n = int(rng.integers(n_min, n_max + 1))
    return KnapsackInstance(
        tuple(int(w) for w in rng.integers(1, w_max + 1, size=n)),
        tuple(float(v) for v in rng.uniform(0, 1, size=n)),
        int(rng.integers(0, c_max + 1)),
        w_max,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance criterion check")


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", "call") != "call" and outcome == "passed":
                continue
            name = rep.nodeid.rsplit("::", 1)[-1]
            if "test_acceptance.py" in rep.nodeid and name.startswith("test_c"):
                label = "PASS" if outcome == "passed" else "FAIL"
                lines.append((name, f"{label}  {name[6:8]} {name[9:].replace('_', ' ')}"
                              f"  ({rep.duration:.2f}s)"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
