import numpy as np
import pytest
from hypothesis import settings, strategies as st

from pfkernel.diagram import PersistenceDiagram

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, name: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number} {name}: {detail}")


@pytest.fixture
def acceptance():
    return record_acceptance


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_diagram(rng, n_min=1, n_max=50) -> PersistenceDiagram:
    """Births uniform on [0, 1], persistence uniform on [0, 0.5]."""
    n = int(rng.integers(n_min, n_max + 1))
    b = rng.random(n)
    return PersistenceDiagram(np.column_stack([b, b + 0.5 * rng.random(n)]))


coord = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)


@st.composite
def diagrams(draw, max_size=12):
    pts = draw(st.lists(st.tuples(coord, st.floats(0, 5, allow_nan=False)), min_size=0, max_size=max_size))
    return PersistenceDiagram([(b, b + p) for b, p in pts])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
