"""Mean-field zero-range process toolkit.

Simulation (exact event-driven dynamics and couplings), the explicit
hydrodynamic dissolution limit, mixing-time predictions, and exact
small-instance oracles for cross-validation.
"""

from .backend import BACKEND

__version__ = "0.1.0"

from .core import (OccupancyConfig, Trajectory, dirac_config, monotone_pair_simulate,
                   observables, profile_config, simulate_fast, simulate_graphical,
                   truncate_solid, zeta)
from .coupling import (coalescence_tail, delta_rate, path_coupling_bound,
                       tagged_pair_simulate)
from .equilibrium import (exact_small_chain, exact_tmix, exact_tv_curve, sample_pi,
                          tv_lower_bound)
from .hydro import (HydroSolution, Profile, breakpoints, f_explicit, f_ode, gamma,
                    mixing_prediction, phi, phi_inv)
from .rates import DiscreteDist, RateFunction, big_r, normalize, preset, psi, psi_inv, q_bar, q_dist

__all__ = [
    "BACKEND", "__version__",
    "RateFunction", "DiscreteDist", "normalize", "preset",
    "big_r", "psi", "psi_inv", "q_dist", "q_bar",
    "OccupancyConfig", "Trajectory", "dirac_config", "profile_config",
    "simulate_graphical", "simulate_fast", "monotone_pair_simulate",
    "zeta", "truncate_solid", "observables",
    "delta_rate", "tagged_pair_simulate", "coalescence_tail", "path_coupling_bound",
    "Profile", "HydroSolution", "phi", "phi_inv", "gamma", "breakpoints",
    "f_explicit", "f_ode", "mixing_prediction",
    "sample_pi", "exact_small_chain", "exact_tv_curve", "exact_tmix",
    "tv_lower_bound",
]
