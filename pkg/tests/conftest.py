from __future__ import annotations

import pytest
from hypothesis import settings, strategies as st

from rhombform.configuration import Configuration

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

SIDE_STEPS = ((0, 1), (-1, 0), (0, -1), (1, 0))


def grow(steps) -> list[tuple[int, int]]:
    """Side-connected cell list grown from (0, 0); each step is (cell index, side)."""
    cells = [(0, 0)]
    seen = {(0, 0)}
    for i, d in steps:
        x, y = cells[i % len(cells)]
        dx, dy = SIDE_STEPS[d]
        q = (x + dx, y + dy)
        if q not in seen:
            seen.add(q)
            cells.append(q)
    return cells


def polyomino(max_steps: int = 25):
    """Hypothesis strategy for side-connected cell lists containing (0, 0)."""
    step = st.tuples(st.integers(0, 10_000), st.integers(0, 3))
    return st.lists(step, max_size=max_steps).map(grow)


@st.composite
def configurations(draw, max_steps: int = 25):
    cells = draw(polyomino(max_steps))
    leader = cells[draw(st.integers(0, len(cells) - 1))]
    return Configuration.initial(cells, leader)


# acceptance criteria report -------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance_report():
    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
