"""Conserved and dissipated functionals of the film height.

Three scalars track the structure of the flow: the mass M (measure-weighted
integral of u, conserved exactly by the flux-form scheme), the surface energy
E = 1/2 int |u_s|^2 (non-increasing along solutions), and the entropy
S = int G_eps(u) built from G_eps'' = 1/f_eps, which is finite for positive
data and controls the distance to the degenerate set u = 0.

The energy of the regularized flow obeys an algebraic-in-time decay bound

    E(t) <= E(0) / (1 + (9/C) E(0) t),

where C bounds the trajectory's sup of sum_j int |u_j|^{2-n}. The derivation
covers 1 <= n <= 2; decay_bound_check evaluates C from a diagnostics series
(n=1: the running mass supremum; n=2: the total measure exactly; in between:
a Holder interpolation upper bound, which only weakens the bound) and reports
the first violation, if any, together with an informational fitted decay
exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .grid import GraphGrid, as_heights, assemble_neg_laplacian, max_vertex_residual, mobility


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One time-stamped row of run diagnostics."""

    t: float
    mass: float
    energy: float
    entropy: float
    min_u: float
    max_u: float
    vertex_residual_max: float
    clamp_events: int


def mass(grid: GraphGrid, u):
    """Measure-weighted total volume of film."""
    return float(grid.measure @ as_heights(u))


def energy(grid: GraphGrid, u):
    """Discrete Dirichlet energy 1/2 sum_faces d_j ((du)/dx_j)^2 dx_j."""
    vals = as_heights(u)
    du = vals[grid.face_right] - vals[grid.face_left]
    return float(0.5 * np.sum(grid.face_weight * du * du / grid.face_dx))


def steady_value(grid: GraphGrid, u0):
    """Height K of the flat steady state sharing u0's mass."""
    return mass(grid, u0) / grid.total_measure


def entropy_pointwise(z, n, eps, base=1.0):
    """G_eps(z) = int_base^z (z - y) / f_eps(y) dy, the convex entropy density
    with minimum 0 at z = base.

    Closed forms cover eps = 0 for every n >= 1 and eps > 0 for n in {1, 2};
    other parameter pairs fall back to adaptive quadrature at 1e-10 relative
    tolerance (the quadrature path doubles as the oracle for the closed
    forms). Returns +inf where the integral diverges (z at the degenerate
    point with n >= 2 and eps = 0).
    """
    a = float(base)
    if a <= 0:
        raise ValueError(f"entropy base must be > 0, got {base}")
    z = float(z)
    if z == a:
        return 0.0
    if eps == 0.0:
        if z < 0:
            return math.inf
        if n == 1:
            if z == 0.0:
                return a
            return z * math.log(z / a) - z + a
        if z == 0.0 and n >= 2:
            return math.inf
        if n == 2:
            return (z - a) / a - math.log(z / a)
        return ((z ** (2 - n) - a ** (2 - n)) / ((1 - n) * (2 - n))
                - a ** (1 - n) * (z - a) / (1 - n))
    if z >= 0 and n == 1:
        return (z + eps) * math.log((z + eps) / (a + eps)) - (z - a)
    if z >= 0 and n == 2:
        r = math.sqrt(eps)
        return ((z * math.atan(z / r) - a * math.atan(a / r)
                 - 0.5 * r * (math.log(z * z + eps) - math.log(a * a + eps))) / r
                - (z - a) * math.atan(a / r) / r)
    val, _ = integrate.quad(
        lambda y: (z - y) / mobility(y, n, eps), a, z,
        epsrel=1e-10, epsabs=1e-14, limit=200)
    return val


def entropy(grid: GraphGrid, u, n, eps, base=1.0):
    """Measure-weighted entropy S = sum_i m_i G_eps(u_i)."""
    vals = as_heights(u)
    if eps == 0.0 and n == 1:
        # vectorized hot path; z log z -> 0 at z = 0
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.where(vals > 0, vals * np.log(vals / base) - vals + base, base)
        if vals.min() < 0:
            return math.inf
        return float(grid.measure @ g)
    if eps > 0.0 and n == 1 and vals.min() >= 0:
        g = (vals + eps) * np.log((vals + eps) / (base + eps)) - (vals - base)
        return float(grid.measure @ g)
    if eps > 0.0 and n == 2 and vals.min() >= 0:
        r = math.sqrt(eps)
        g = ((vals * np.arctan(vals / r) - base * math.atan(base / r)
              - 0.5 * r * (np.log(vals * vals + eps) - math.log(base * base + eps))) / r
             - (vals - base) * math.atan(base / r) / r)
        return float(grid.measure @ g)
    total = 0.0
    for m, z in zip(grid.measure, vals):
        g = entropy_pointwise(z, n, eps, base)
        if math.isinf(g):
            return math.inf
        total += m * g
    return float(total)


def collect_record(grid: GraphGrid, state, cfg, clamp_events=0, lap=None) -> DiagnosticsRecord:
    """Assemble one diagnostics row for the current state.

    ``lap`` may pass a prebuilt negative Laplacian to avoid reassembly in the
    time loop; the pressure w = L u feeds the junction residual column.
    """
    vals = as_heights(state)
    if lap is None:
        lap = assemble_neg_laplacian(grid)
    w = lap @ vals
    return DiagnosticsRecord(
        t=float(getattr(state, "t", 0.0)),
        mass=mass(grid, vals),
        energy=energy(grid, vals),
        entropy=entropy(grid, vals, cfg.n, cfg.eps, cfg.entropy_base),
        min_u=float(vals.min()),
        max_u=float(vals.max()),
        vertex_residual_max=max_vertex_residual(grid, vals, w),
        clamp_events=int(clamp_events),
    )


@dataclass(frozen=True)
class DecayReport:
    applicable: bool
    reason: str
    c_value: float
    passed: bool
    first_violation_t: float | None
    fitted_exponent: float | None
    checked: int

    def summary(self):
        if not self.applicable:
            return f"decay bound: not checked ({self.reason})"
        status = "holds" if self.passed else f"violated first at t={self.first_violation_t:.6g}"
        exp = "n/a" if self.fitted_exponent is None else f"{self.fitted_exponent:.3f}"
        return (f"decay bound: {status} over {self.checked} records "
                f"(C={self.c_value:.6g}, fitted exponent {exp})")


def decay_bound_check(records, n, grid=None, total_measure=None, slack=0.05) -> DecayReport:
    """Check E(t_k) <= E(0)/(1 + (9/C) E(0) t_k) with relative slack.

    ``records`` is a DiagnosticsRecord sequence in time order. C is taken as
    the running supremum of sum_j int |u_j|^{2-n}: for n=1 that integral is
    the (recorded) mass, for n=2 it is the total network measure, and for
    1 < n < 2 the Holder bound sup M^{2-n} * measure^(n-1) is used. Outside
    1 <= n <= 2 the derivation does not apply and nothing is asserted.
    Either ``grid`` or ``total_measure`` must supply the network measure when
    n > 1. The fitted exponent is an informational least-squares slope of
    log E against log t.
    """
    records = list(records)
    if len(records) < 3:
        return DecayReport(False, "needs at least 3 records", math.nan,
                           False, None, None, len(records))
    if n < 1 or n > 2:
        return DecayReport(False, f"n={n} outside the derivation range [1, 2]",
                           math.nan, False, None, None, len(records))
    if n > 1:
        if total_measure is None:
            if grid is None:
                raise ValueError("n > 1 needs grid or total_measure for C")
            total_measure = grid.total_measure
    sup_mass = max(r.mass for r in records)
    if n == 1:
        c = sup_mass
    elif n == 2:
        c = float(total_measure)
    else:
        c = sup_mass ** (2 - n) * float(total_measure) ** (n - 1)

    e0 = records[0].energy
    t0 = records[0].t
    passed = True
    first_violation = None
    for r in records:
        if c > 0 and e0 > 0:
            bound = e0 / (1.0 + (9.0 / c) * e0 * (r.t - t0))
        else:
            bound = e0
        if r.energy > bound * (1.0 + slack):
            passed = False
            first_violation = r.t
            break

    pts = [(r.t - t0, r.energy) for r in records
           if r.t > t0 and r.energy > max(e0 * 1e-14, 0.0)]
    fitted = None
    if len(pts) >= 3:
        lt = np.log([p[0] for p in pts])
        le = np.log([p[1] for p in pts])
        if lt.max() - lt.min() > 1e-12:
            fitted = float(np.polyfit(lt, le, 1)[0])
    return DecayReport(True, "", float(c), passed, first_violation, fitted, len(records))
