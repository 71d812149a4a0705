"""Viscous thin-film coating flow on fiber networks.

Finite-volume solver for the fourth-order film equation on metric graphs
with junction coupling, plus spectral validation, structure diagnostics
(mass/energy/entropy, algebraic decay bound) and a config-driven CLI.
"""

from .config import RunSpec, config_hash, load_config, parse_config, serialize_config
from .errors import ConfigError, GraphError, GridError, NumericalError, StepFailure
from .functionals import (DecayReport, DiagnosticsRecord, decay_bound_check, energy,
                          entropy, entropy_pointwise, mass, steady_value)
from .graph import (BUILTIN_NAMES, Edge, GraphSpec, IncidenceSets, MetricGraph,
                    build_graph, builtin_spec, incidence, make_spec, validate_spec)
from .grid import (DiscreteOperator, GraphGrid, assemble_mobility_flux_div,
                   assemble_neg_laplacian, build_grid, evaluate_rhs, face_average,
                   mobility, vertex_flux_residual)
from .profiles import InitialProfile, build_initial_state, evaluate_profile, make_profile
from .spectral import (EigenPair, analytic_builtin_spectrum, analytic_example_eigen,
                       galerkin_reference_solve, graph_laplacian_eigen)
from .stepping import (FilmState, RunResult, SolverConfig, adapt_dt, detect_steady,
                       lift_initial, run, step)

__version__ = "0.1.0"
