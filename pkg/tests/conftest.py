"""Shared fixtures.

The long simulations (star3 at production resolution, the cycle run, the
n = 2 run) are expensive, so they are computed once per session and shared
between the unit tests and the acceptance suite. The acceptance tests log
one line per criterion into ACCEPTANCE_LINES; the terminal-summary hook
prints them after capture ends so the table shows in every pytest run.
"""

import time

import numpy as np
import pytest

from netfilm import build_graph, build_grid, builtin_spec
from netfilm.profiles import build_initial_state, make_profile
from netfilm.stepping import FilmState, SolverConfig, run

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def droplet_state(grid, profiles, seed=0):
    graph = grid.graph
    table = {}
    for name in graph.edge_names:
        table[name] = profiles[name] if name in profiles else profiles["all"]
    return build_initial_state(grid, table, run_seed=seed)


def timed_run(grid, u0, cfg, **kwargs):
    t0 = time.perf_counter()
    result = run(grid, FilmState(u=u0), cfg, **kwargs)
    return result, time.perf_counter() - t0


@pytest.fixture(scope="session")
def star3_grid():
    return build_grid(build_graph(builtin_spec("star3")), 128)


@pytest.fixture(scope="session")
def star3_run(star3_grid):
    """Symmetric droplet on star3, n = 1: the workhorse acceptance run."""
    prof = make_profile("droplet", center=1.0, width=0.3, height=1.0, base=0.05)
    u0 = droplet_state(star3_grid, {"all": prof})
    cfg = SolverConfig(n=1.0, eps=1e-6, t_end=40.0, dt_max=0.5)
    result, wall = timed_run(star3_grid, u0, cfg)
    return result, cfg, wall


@pytest.fixture(scope="session")
def star3_asym_run(star3_grid):
    """Non-symmetric droplets (different heights per branch), same graph."""
    heights = {"e1": 1.2, "e2": 0.7, "e3": 0.4}
    profiles = {
        name: make_profile("droplet", center=0.8, width=0.2, height=h, base=0.05)
        for name, h in heights.items()
    }
    u0 = droplet_state(star3_grid, profiles)
    cfg = SolverConfig(n=1.0, eps=1e-6, t_end=40.0, dt_max=0.5)
    result, wall = timed_run(star3_grid, u0, cfg)
    return result, cfg, wall


@pytest.fixture(scope="session")
def cycle4_run():
    """Large droplets on opposite edges of the 4-cycle; snapshots every step
    so edge means can be checked along the whole trajectory."""
    grid = build_grid(build_graph(builtin_spec("cycle4")), 96)
    big = make_profile("droplet", center=0.5, width=0.35, height=0.8, base=0.1)
    small = make_profile("droplet", center=0.5, width=0.35, height=0.2, base=0.1)
    u0 = droplet_state(grid, {"e1": big, "e3": big, "e2": small, "e4": small})
    cfg = SolverConfig(n=1.0, eps=1e-6, t_end=40.0, dt_max=0.5)
    result, wall = timed_run(grid, u0, cfg, snapshot_every_steps=1)
    return grid, result, cfg


@pytest.fixture(scope="session")
def star3_n2_run(star3_grid):
    """Same symmetric droplet with quadratic mobility, for the decay bound."""
    prof = make_profile("droplet", center=1.0, width=0.3, height=1.0, base=0.05)
    u0 = droplet_state(star3_grid, {"all": prof})
    cfg = SolverConfig(n=2.0, eps=1e-6, t_end=40.0, dt_max=0.5)
    result, wall = timed_run(star3_grid, u0, cfg)
    return result, cfg, wall


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
