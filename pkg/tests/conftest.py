import functools

import pytest

from prandtl4.grid import Grid, bump
from prandtl4.solver import SolverConfig, evolve

BLOWUP_GRID = (150.0, 1024)


@functools.lru_cache(maxsize=1)
def blowup_trace():
    """Doubling-snapshot run of the amplitude-10 bump up to 16x its initial sup norm."""
    g = Grid(*BLOWUP_GRID)
    a0 = bump(g)
    return evolve(a0, 2.0, SolverConfig(blowup_threshold=16.0 * a0.sup()))


@pytest.fixture(scope="session")
def bump_grid():
    return Grid(60.0, 1024)


@pytest.fixture(scope="session")
def example_bump(bump_grid):
    return bump(bump_grid)


def row_grid(t, x, reach=40.0, per_scale=12):
    """Grid on [0, x + reach t^(1/4)] resolving the kernel's length scale t^(1/4)."""
    s = t**0.25
    length = x + reach * s
    return Grid(length, max(64, int(length / (s / per_scale)) + 2))


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per criterion, then assert it."""

    def record(number, title, passed, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number:2d}: {title} | {detail}")
        print(ACCEPTANCE_LINES[-1])
        assert passed, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
