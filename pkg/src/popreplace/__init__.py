"""Optimal impulse-release strategies for periodic bistable population replacement.

The controlled equation is ``p' = f(t, p) + u(t)/K(t) g(p)`` on ``[0, 1]``
with a T-periodic nonlinearity ``f`` and carrying capacity ``K``.
"""
__version__ = "0.1.0"

from ._backend import HAVE_COMPILED  # noqa: E402
from .dynamics import (CarryingCapacity, ModelSpec, SeparatedSpec, WolbachiaParams,  # noqa: E402
                       build_separated_model, build_wolbachia_model, check_hypotheses,
                       cubic_separated, mean_nonlinearity, separated_from_wolbachia, theta_bar)
from .errors import *  # noqa: E402,F401,F403
from .integrate import (CompartmentState, ControlSignal, Trajectory,  # noqa: E402
                        integrate_compartments, integrate_scalar, sup_distance)
from .optimize import (cost_curve, eta_sweep, finite_s_infimum, pulse_ocp,  # noqa: E402
                       two_release_experiment)
from .periodic import (Basin, classify_basin, envelope_at, find_periodic_envelope,  # noqa: E402
                       poincare_map)
from .release import (Impulse, Pulse, ReleaseSchedule, build_cost_potential,  # noqa: E402
                      invert_cost, jump_map, simulate_finite_rate, simulate_impulsive)
