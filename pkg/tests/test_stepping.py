import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netfilm.errors import ConfigError, NumericalError
from netfilm.functionals import mass
from netfilm.graph import build_graph, builtin_spec
from netfilm.grid import build_grid
from netfilm.profiles import build_initial_state, make_profile
from netfilm.stepping import (
    FilmState,
    SolverConfig,
    adapt_dt,
    detect_steady,
    lift_initial,
    run,
    step,
)


def interval_grid(n=32):
    return build_grid(build_graph(builtin_spec("interval")), n)


def cosine_state(grid, amp=0.1):
    n = grid.cells[0]
    x = np.zeros(grid.n_total)
    x[grid.edge_nodes[0]] = np.arange(n + 1) / n
    return FilmState(u=1.0 + amp * np.cos(np.pi * x)), x


@pytest.mark.parametrize("kwargs", [
    {"eps": -1e-9},
    {"n": 0.5},
    {"n": -1.0, "mobility_exponent_override": True},
    {"theta": 0.5},
    {"theta": 0.0},
    {"dt_min": 0.0},
    {"dt_init": 1e-16},               # below dt_min
    {"dt_max": 1e-9},                 # below dt_init... inconsistent ordering
    {"adapt_target": 0.0},
    {"linear_tol": 1e-9},             # too loose to mean anything
    {"linear_tol": 0.0},
    {"t_end": 0.0},
    {"steady_tol": -1.0},
    {"negativity_slack": -1e-3},
    {"entropy_base": 0.0},
    {"avg": "median"},
])
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(ConfigError):
        SolverConfig(**kwargs)


def test_config_defaults_are_valid():
    cfg = SolverConfig()
    assert cfg.n == 1.0 and cfg.eps == 1e-6


def test_lift_initial():
    cfg = SolverConfig(eps=1e-4, theta=0.25)
    u0 = np.array([0.0, 1.0])
    lifted = lift_initial(u0, cfg)
    assert lifted == pytest.approx(u0 + 0.1)
    cfg0 = SolverConfig(eps=0.0)
    out = lift_initial(u0, cfg0)
    assert out == pytest.approx(u0)
    assert out is not u0


def test_step_damps_cosine_by_symbol():
    """Frozen oracle: with constant mobility (n = 0, eps = 0) the scheme is
    linear and the discrete cosine mode is damped by exactly
    1 / (1 + dt lambda_h^2), lambda_h the second-difference symbol."""
    grid = interval_grid(100)
    state, x = cosine_state(grid)
    cfg = SolverConfig(n=0.0, eps=0.0, mobility_exponent_override=True)
    dt = 1e-4
    new = step(grid, state, dt, cfg)
    lam_h = (2 - 2 * np.cos(np.pi / 100)) * 100**2
    expected = 1.0 + 0.1 * np.cos(np.pi * x) / (1.0 + dt * lam_h**2)
    assert np.max(np.abs(new.u - expected)) < 1e-11
    assert new.t == pytest.approx(dt)
    assert new.step_count == 1


def test_step_conserves_mass():
    grid = build_grid(build_graph(builtin_spec("star3")), 24)
    prof = make_profile("droplet", center=1.0, width=0.4, height=1.0, base=0.1)
    u0 = build_initial_state(grid, {n: prof for n in grid.graph.edge_names})
    cfg = SolverConfig(n=1.0, eps=1e-6)
    state = FilmState(u=lift_initial(u0, cfg))
    m0 = mass(grid, state.u)
    new = step(grid, state, 1e-5, cfg)
    assert abs(mass(grid, new.u) - m0) <= 1e-13 * m0


def test_step_fixes_constants():
    grid = build_grid(build_graph(builtin_spec("paper-example-8")), 8)
    state = FilmState(u=np.full(grid.n_total, 0.7))
    new = step(grid, state, 1e-3, SolverConfig())
    assert np.max(np.abs(new.u - 0.7)) < 1e-14


def test_step_rejects_nonpositive_dt():
    grid = interval_grid(8)
    with pytest.raises(ValueError):
        step(grid, FilmState(u=np.ones(grid.n_total)), 0.0, SolverConfig())


def test_adapt_dt_accepts_small_changes():
    cfg = SolverConfig(adapt_target=1e-3, dt_min=1e-12, dt_max=1.0)
    prev = FilmState(u=np.array([1.0, 1.0]))
    new = FilmState(u=np.array([1.0 + 5e-4, 1.0]), t=1e-3, step_count=1)
    accept, dt_next = adapt_dt(prev, new, 1e-3, cfg)
    assert accept
    assert dt_next == pytest.approx(2e-3)  # target/r = 2, within the cap


def test_adapt_dt_rejects_large_changes():
    cfg = SolverConfig(adapt_target=1e-3)
    prev = FilmState(u=np.array([1.0, 1.0]))
    new = FilmState(u=np.array([1.5, 1.0]), t=1e-3, step_count=1)
    accept, dt_next = adapt_dt(prev, new, 1e-3, cfg)
    assert not accept
    assert dt_next <= 0.5e-3 + 1e-18


def test_adapt_dt_rejects_negativity_even_when_smooth():
    cfg = SolverConfig(adapt_target=1e-3, negativity_slack=1e-12)
    prev = FilmState(u=np.array([1e-4, 1.0]))
    new = FilmState(u=np.array([-1e-6, 1.0]), t=1e-3, step_count=1)
    accept, dt_next = adapt_dt(prev, new, 1e-2, cfg)
    assert not accept
    assert dt_next == pytest.approx(0.5e-2)


def test_adapt_dt_zero_change_doubles():
    cfg = SolverConfig()
    prev = FilmState(u=np.ones(3))
    new = FilmState(u=np.ones(3), t=1.0, step_count=1)
    accept, dt_next = adapt_dt(prev, new, 0.25, cfg)
    assert accept
    assert dt_next == pytest.approx(0.5)


@given(
    base=st.floats(min_value=0.1, max_value=10.0),
    bump=st.floats(min_value=0.0, max_value=1.0),
    dt=st.floats(min_value=1e-10, max_value=1.0),
)
@settings(max_examples=200, deadline=None)
def test_adapt_dt_contract(base, bump, dt):
    cfg = SolverConfig(dt_min=1e-12, dt_max=1.0, adapt_target=1e-3)
    prev = FilmState(u=np.array([base, base]))
    new = FilmState(u=np.array([base + bump, base]), t=dt, step_count=1)
    accept, dt_next = adapt_dt(prev, new, dt, cfg)
    r = bump / base
    assert accept == (r <= 2 * cfg.adapt_target)
    assert cfg.dt_min <= dt_next <= cfg.dt_max
    if not accept:
        assert dt_next <= max(0.5 * dt, cfg.dt_min) * (1 + 1e-12)


def test_detect_steady():
    grid = interval_grid(8)
    cfg = SolverConfig(steady_tol=1e-3)
    flat = FilmState(u=np.full(grid.n_total, 2.0))
    assert detect_steady(flat, grid, cfg)
    assert detect_steady(flat, grid, cfg, k_value=2.0)
    assert not detect_steady(flat, grid, cfg, k_value=2.1)
    bumpy = FilmState(u=np.linspace(1.0, 2.0, grid.n_total))
    assert not detect_steady(bumpy, grid, cfg)


def test_run_constant_ic_is_immediately_steady():
    grid = interval_grid(8)
    res = run(grid, FilmState(u=np.full(grid.n_total, 0.3)), SolverConfig(eps=0.0))
    assert res.steady_detected
    assert res.accepted_steps == 0 and res.rejected_steps == 0
    assert len(res.records) == 1
    assert len(res.snapshots) == 1
    assert res.k_value == pytest.approx(0.3)


def test_run_validates_initial_state():
    grid = interval_grid(8)
    cfg = SolverConfig(eps=0.0)
    with pytest.raises(ValueError):
        run(grid, FilmState(u=np.ones(grid.n_total - 1)), cfg)
    bad = np.ones(grid.n_total)
    bad[3] = -0.2
    with pytest.raises(ValueError):
        run(grid, FilmState(u=bad), cfg)


def test_run_lifts_and_reports_lifted_mass():
    grid = interval_grid(16)
    state, _ = cosine_state(grid)
    cfg = SolverConfig(eps=1e-4, theta=0.25, t_end=1e-6, dt_init=1e-7)
    res = run(grid, state, cfg)
    want = (mass(grid, state.u) + 0.1 * grid.total_measure) / grid.total_measure
    assert res.k_value == pytest.approx(want, rel=1e-12)
    assert res.records[0].mass == pytest.approx(mass(grid, state.u) + 0.1 * grid.total_measure)


def test_run_reaches_flat_state_and_conserves_mass():
    grid = interval_grid(24)
    state, _ = cosine_state(grid, amp=0.3)
    cfg = SolverConfig(n=1.0, eps=1e-6, t_end=50.0, dt_max=0.5)
    res = run(grid, state, cfg)
    assert res.steady_detected
    assert np.max(np.abs(res.final_state.u - res.k_value)) <= cfg.steady_tol
    m0 = res.records[0].mass
    drift = max(abs(r.mass - m0) for r in res.records) / m0
    assert drift <= 1e-10
    # every accepted step recorded, plus the initial row
    assert len(res.records) == res.accepted_steps + 1


def test_run_record_and_snapshot_cadence():
    grid = interval_grid(24)
    state, _ = cosine_state(grid, amp=0.3)
    cfg = SolverConfig(n=1.0, eps=1e-6, t_end=50.0, dt_max=0.5)
    res = run(grid, state, cfg, snapshot_every_steps=25, record_every=10)
    a = res.accepted_steps
    want_records = 1 + a // 10 + (0 if a % 10 == 0 else 1)
    assert len(res.records) == want_records
    want_snaps = 1 + a // 25 + (0 if a % 25 == 0 else 1)
    assert len(res.snapshots) == want_snaps
    steps = [s for _, s, _ in res.snapshots]
    assert steps == sorted(steps) and len(set(steps)) == len(steps)


def test_run_time_based_snapshots():
    grid = interval_grid(16)
    state, _ = cosine_state(grid, amp=0.2)
    cfg = SolverConfig(n=1.0, eps=1e-6, t_end=2.0, dt_max=0.05, steady_tol=1e-9)
    res = run(grid, state, cfg, snapshot_every_time=0.1)
    times = [t for t, _, _ in res.snapshots]
    # t=0, one at/after each 0.1 crossing until steady (~0.45), final state
    assert len(times) >= 5
    assert times == sorted(times)
    crossings = [t for t in times if t >= 0.1]
    assert crossings[0] == pytest.approx(0.1, abs=0.06)


def test_run_underflow_aborts():
    grid = interval_grid(16)
    state, _ = cosine_state(grid, amp=0.3)
    cfg = SolverConfig(n=1.0, eps=1e-6, t_end=1.0,
                       dt_init=1e-14, dt_min=1e-14, adapt_target=1e-16)
    with pytest.raises(NumericalError):
        run(grid, state, cfg)
