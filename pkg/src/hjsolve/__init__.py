"""Hamilton-Jacobi equations on a staggered lattice.

The scheme is the staggered Lax-Friedrichs recursion; every value it
produces is also the minimal expected action of a controlled random walk,
which is what :mod:`hjsolve.walks` and :mod:`hjsolve.characteristics`
expose.
"""
from .errors import *  # noqa: F401,F403
from .hamiltonian import (HamiltonianModel, SchemeConstants, biconjugate, builtin_names, eval_h,
                          get_model, legendre, scheme_constants)
from .initial_data import InitialData, get_initial
from .lattice import Cone, Lattice, NodeIndex, Periodic, directions, k_of_t, reachable_set
from .scheme import (Layer, SolveResult, check_cfl, discretize_initial, make_lattice,
                     read_layers_csv, solve, step, write_layers_csv)
from .walks import (ControlField, WalkEnsemble, enumerate_paths, expected_action_exact,
                    expected_action_mc, minimizing_control, sample_paths, transition_probs,
                    walk_stats)
from .characteristics import (PiecewisePath, derivative_sandwich, extract_characteristic,
                              interp_u, interp_v)
from .oracle import exact_characteristic, hopf_lax, hopf_lax_batch, one_step_min
from .harness import Config, run_checks, run_convergence

__version__ = "0.1.0"
