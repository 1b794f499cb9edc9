"""Steady-state atomic entanglement from two-mode squeezed light.

Factor order: two-atom models use [atom A, atom B], the full cavity model
[atom A, atom B, mode a, mode b], the network [atom A, atom B (4 levels), atom C].
Qubit level 0 is |g>, level 1 is |e> (or the stored |g'>).
"""
from .algebra import (DensityMatrix, HilbertSpace, Operator, StateVector, annihilation, bogoliubov_modes, embed,
                      partial_trace, sigma_minus, tensor, two_mode_squeezed_vacuum)
from .entanglement import (EntanglementReport, binary_entropy, concurrence, entanglement_entropy,
                           entanglement_report, eof_two_qubit, squeezed_state_eof)
from .errors import (ConfigError, ConvergenceError, FilteredOutError, InvalidStateError, ModelError,
                     NonUniqueSteadyStateError, SolverError, TruncationError)
from .experiments import (SweepConfig, SweepRow, load_config, position_average, run_network, sweep_epsilon,
                          transfer_curve, validate_elimination)
from .models import (EffectiveBathParams, Liouvillian, PhysicalParams, SqueezingParams, build_effective_me,
                     build_full_me, build_network_me, build_transformed_me, dark_state, effective_bath_params,
                     network_dark_state)
from .protocols import FilterOutcome, FilterSpec, balancing_filter, filter_state, measure_node_B, optimize_filter
from .steady import SteadyStateReport, steady_state_direct, steady_state_evolve, uniqueness_check

__version__ = "0.1.0"
