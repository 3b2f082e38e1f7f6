import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from rrmeval.aggregation import MobiusCapacity2Add


def random_capacity(rng: np.random.Generator, n: int, interaction: float = 1.0) -> MobiusCapacity2Add:
    """Random valid 2-additive capacity.

    Each singleton gets the negative interactions touching it plus a random slack,
    so every monotonicity margin equals that slack; dividing by the total then
    normalizes without changing any sign.
    """
    pairs = {p: interaction * rng.uniform(-1.0, 1.0) for p in itertools.combinations(range(n), 2)}
    m = rng.uniform(0.0, 1.0, n)
    for (i, j), v in pairs.items():
        if v < 0:
            m[i] -= v
            m[j] -= v
    total = m.sum() + sum(pairs.values())
    return MobiusCapacity2Add(tuple(m / total), {k: v / total for k, v in pairs.items()})


@st.composite
def capacities(draw, min_n=2, max_n=6):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_capacity(np.random.default_rng(seed), n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Acceptance verdicts, one line per criterion, echoed in the terminal summary.
ACCEPTANCE: dict[str, str] = {}


def record(criterion: str, ok: bool, detail: str) -> None:
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
