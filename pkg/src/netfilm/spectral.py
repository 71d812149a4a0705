"""Eigenstructure of the network Laplacian and a Galerkin reference solver.

The discrete -d^2/ds^2 with junction coupling and no-flux boundary closure is
self-adjoint in the measure-weighted inner product, so its eigenpairs solve
the symmetric generalized problem A phi = lambda M phi with A the face
stiffness and M the lumped dual-volume matrix. Eigenvalues are nonnegative,
the lowest is 0 with the constant eigenvector, and eigenvectors come back
M-orthonormal. Known closed forms validate the assembly: a unit interval has
lambda_i = (pi i)^2, a circumference-4 cycle has (pi m / 2)^2 twice over, and
the shipped 8-edge pendant-on-cycle example carries per-edge-class families
(pi i)^2 and (2 pi i)^2 inside its global spectrum.

The same eigenbasis powers an independent reference integrator: expanding
u = sum_i c_i phi_i turns the film equation into the dense stiff ODE system

    c_i' = -sum_k lambda_k c_k int f_eps(u) phi_k' phi_i' ds,

whose mobility integral is evaluated here by per-cell Gauss-Legendre
quadrature of the piecewise-linear modal reconstruction. Integrated with a
high-order adaptive stiff method at tight tolerance, it cross-checks the
finite-volume time stepper on smooth strictly positive data without sharing
its time discretization or solver path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .errors import NumericalError
from .grid import GraphGrid, as_heights, assemble_neg_laplacian, mobility
from .stepping import SolverConfig, lift_initial

MAX_GALERKIN_MODES = 32

# edge-class eigenvalue families of the shipped 8-edge example
EXAMPLE_EDGE_CLASSES = {
    "e1": "pendant", "e2": "pendant", "e3": "pendant", "e4": "pendant",
    "e5": "cycle-full", "e8": "cycle-full",
    "e6": "cycle-half", "e7": "cycle-half",
}


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray = field(repr=False)
    residual: float = 0.0


def graph_laplacian_eigen(grid: GraphGrid, k):
    """The k lowest eigenpairs of the assembled negative Laplacian.

    Solves the dense symmetric generalized problem (exact for the sizes the
    validation paths use); eigenvectors are orthonormal in the measure inner
    product and deterministic up to the sign convention that the largest
    component is positive.
    """
    if not 1 <= k <= grid.n_total:
        raise ValueError(f"need 1 <= k <= {grid.n_total}, got {k}")
    lap = assemble_neg_laplacian(grid)
    a = (sp.diags(grid.measure) @ lap.matrix).toarray()
    a = 0.5 * (a + a.T)
    m = np.diag(grid.measure)
    vals, vecs = sla.eigh(a, m, subset_by_index=[0, k - 1])
    pairs = []
    for i in range(k):
        v = vecs[:, i]
        lead = np.argmax(np.abs(v))
        if v[lead] < 0:
            v = -v
        resid = float(np.linalg.norm(lap.matrix @ v - vals[i] * v))
        rel = resid / max(abs(vals[i]), 1.0)
        if rel > 1e-8:
            raise NumericalError(
                f"eigensolve residual {rel:.3e} for eigenvalue {vals[i]:.6g}")
        pairs.append(EigenPair(float(vals[i]), v, resid))
    return pairs


def analytic_example_eigen(edge_class, i):
    """Closed-form per-edge-class eigenvalues of the 8-edge example.

    pendant    -> (pi i)^2     (edges e1..e4)
    cycle-full -> (2 pi i)^2   (edges e5, e8)
    cycle-half -> (pi i)^2     (edges e6, e7)
    """
    if not (isinstance(i, (int, np.integer)) and i >= 1):
        raise ValueError(f"mode index must be an integer >= 1, got {i}")
    if edge_class == "pendant":
        return (math.pi * i) ** 2
    if edge_class == "cycle-full":
        return (2.0 * math.pi * i) ** 2
    if edge_class == "cycle-half":
        return (math.pi * i) ** 2
    raise ValueError(f"unknown edge class {edge_class!r}; "
                     "known: pendant, cycle-full, cycle-half")


def analytic_builtin_spectrum(name, up_to):
    """Known eigenvalues (value, label) of a builtin topology, sorted, with
    repeats for multiplicity, up to the given value. Used by the eigen
    comparison table; names without closed forms return an empty list."""
    out = [(0.0, "constant")]
    if name == "interval":
        i = 1
        while (math.pi * i) ** 2 <= up_to:
            out.append(((math.pi * i) ** 2, f"cos({i} pi s)"))
            i += 1
    elif name == "star3":
        k = 1
        while True:
            anti = ((2 * k - 1) * math.pi / 2) ** 2
            sym = (k * math.pi) ** 2
            if anti > up_to and sym > up_to:
                break
            if anti <= up_to:
                out += [(anti, f"antisymmetric {k}")] * 2
            if sym <= up_to:
                out.append((sym, f"symmetric {k}"))
            k += 1
    elif name == "cycle4":
        m = 1
        while (math.pi * m / 2) ** 2 <= up_to:
            out += [((math.pi * m / 2) ** 2, f"loop mode {m}")] * 2
            m += 1
    elif name == "paper-example-8":
        # the listed per-edge-class families; the global spectrum holds more
        out = [(0.0, "constant")]
        i = 1
        while (math.pi * i) ** 2 <= up_to:
            out.append(((math.pi * i) ** 2, f"pendant/cycle-half {i}"))
            if (2 * math.pi * i) ** 2 <= up_to:
                out.append(((2 * math.pi * i) ** 2, f"cycle-full {i}"))
            i += 1
    else:
        return []
    return sorted(out)


_GAUSS3 = (
    (0.5 * (1.0 - math.sqrt(3.0 / 5.0)), 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.5 * (1.0 + math.sqrt(3.0 / 5.0)), 5.0 / 18.0),
)


def galerkin_reference_solve(grid: GraphGrid, modes, state0, cfg: SolverConfig,
                             t_eval=None, rtol=1e-8):
    """Reference trajectory from the spectral Galerkin system.

    Restricted to small smooth problems: eps > 0, strictly positive lifted
    initial data, at most 32 modes. The initial height receives the same
    eps^theta lift as the finite-volume run so both integrate the identical
    regularized problem. Returns a list of (t, heights) pairs at ``t_eval``
    (default: 0 and t_end).
    """
    if cfg.eps <= 0:
        raise ValueError("the Galerkin reference requires eps > 0")
    if not 1 <= modes <= min(MAX_GALERKIN_MODES, grid.n_total):
        raise ValueError(
            f"modes must lie in [1, {min(MAX_GALERKIN_MODES, grid.n_total)}], got {modes}")
    u0 = lift_initial(as_heights(state0), cfg)
    if u0.min() <= 0:
        raise ValueError("the Galerkin reference requires strictly positive data")

    pairs = graph_laplacian_eigen(grid, modes)
    lam = np.array([p.value for p in pairs])
    phi = np.column_stack([p.vector for p in pairs])        # n_total x modes
    c0 = phi.T @ (grid.measure * u0)

    phi_l = phi[grid.face_left]
    phi_r = phi[grid.face_right]
    dphi = (phi_r - phi_l) / grid.face_dx[:, None]          # n_faces x modes
    face_vol = grid.face_weight * grid.face_dx

    def rhs(_t, c):
        ul = phi_l @ c
        ur = phi_r @ c
        g = np.zeros_like(ul)
        for xi, wgt in _GAUSS3:
            g += wgt * mobility((1.0 - xi) * ul + xi * ur, cfg.n, cfg.eps)
        weighted = (face_vol * g)[:, None] * dphi
        return -(dphi.T @ weighted) @ (lam * c)

    if t_eval is None:
        t_eval = [0.0, cfg.t_end]
    t_eval = np.asarray(t_eval, dtype=float)
    sol = solve_ivp(rhs, (0.0, float(t_eval[-1])), c0, method="BDF",
                    rtol=rtol, atol=rtol * 1e-2, t_eval=t_eval)
    if not sol.success:
        raise NumericalError(f"Galerkin reference integration failed: {sol.message}")
    return [(float(t), phi @ sol.y[:, i]) for i, t in enumerate(sol.t)]
