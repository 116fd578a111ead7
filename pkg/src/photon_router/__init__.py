"""Single-photon routing in a waveguide-emitter star network.

One input channel is joined to N output waveguides, each through its own
two-level emitter.  The package evaluates the long-time routing amplitudes
in closed form, checks them against Laplace-domain linear solves and two
time-domain simulators, and searches emitter parameters for target routing
distributions.
"""

from ._accel import backend_name
from .core import (coupling_asymmetry, detuning, eval_amplitudes, eval_identical, eval_n1, eval_n2,
                   eval_one_special, reflection_residual, routing_distribution, routing_probabilities)
from .design import DesignResult, DesignSpace, TargetDistribution, analytic_seed, objective, optimize
from .errors import (BudgetExhausted, ConservationViolation, DegenerateDenominator, NormDrift, NotConverged,
                     SchemaError, SingularSystem, StabilityViolation, UndefinedAsymmetry, UnknownParameter)
from .model import ChannelParams, PulseSpec, RouterConfig, RoutingDistribution, ScatteringAmplitudes
from .spectral import (LaplaceSystem, assemble_system, beta_closed_form, solve_dense, solve_rank_one,
                       transfer_amplitudes)
from .timedomain import (EmitterTrajectory, ModeDiscretization, TimeGrid, longtime_distribution,
                         simulate_full_hamiltonian, simulate_markov)

__version__ = "0.1.0"
