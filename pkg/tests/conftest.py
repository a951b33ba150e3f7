import itertools
from fractions import Fraction

import numpy as np
import pytest

_ACCEPTANCE_LINES = []


def brute_force_optimum(values, costs, budget, horizon):
    """Exhaustive search over all count vectors in exact rational arithmetic.

    Independent of every solver in the package; only usable for tiny n, T.
    """
    vals = [Fraction(str(v)) for v in values]
    cs = [Fraction(str(c)) for c in costs]
    cap = Fraction(str(budget))
    best_value, best_counts = Fraction(0), (0,) * len(values)
    for ks in itertools.product(range(horizon + 1), repeat=len(values)):
        if sum(k * c for k, c in zip(ks, cs)) <= cap:
            v = sum(k * x for k, x in zip(ks, vals))
            if v > best_value:
                best_value, best_counts = v, ks
    return float(best_value), best_counts


def grid_instance(rng, n_max=6, t_max=5, b_max=3.0, step=0.05):
    """Random instance with costs and budget on a ``step`` grid."""
    n = int(rng.integers(1, n_max + 1))
    T = int(rng.integers(1, t_max + 1))
    units = round(1 / step)
    costs = [int(k) / units for k in rng.integers(1, units + 1, size=n)]
    budget = int(rng.integers(0, round(b_max / step) + 1)) / units
    values = [float(x) for x in rng.uniform(0, 1, size=n)]
    return values, costs, budget, T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def acceptance_report():
    def record(criterion, passed, detail=""):
        _ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
