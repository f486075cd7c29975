"""fpnc: fixed-point network coding for non-multicast networks.

Stage I searches real coding coefficients that approximately satisfy every
terminal demand; Stage II plans a fixed-point precision, simulates the
quantized network exactly, and verifies zero-error integer recovery.
"""

__version__ = "0.1.0"

from .fixedpoint import (FixedPointFormat, FixedPointOverflowError,
                         FixedPointValue, linear_combine, quantize,
                         round_to_int)
from .network import (DepthPartition, Network, NetworkCycleError,
                      NetworkFormatError, Violation, depth_partition, load,
                      save, validate)
from .precision import (BoundDomainError, InfeasibleError, NetworkStats,
                        PrecisionPlan, load_plan, max_feasible_bound,
                        network_stats, noise_bound, plan_per_edge,
                        plan_worst_case, rate, save_plan, value_bound)
from .simulate import (BudgetExceededError, Exhaustive, MessageVector,
                       Sampled, VerificationReport, run_fixed, run_real,
                       verify)
from .solver import (SolverConfig, SolverReport, load_solution, refine_beta,
                     save_solution, solve)
from .transfer import (CodingSolution, DeviationProfile, deviation_profile,
                       gain_matrix, transfer_matrix)

__all__ = [name for name in dir() if not name.startswith("_")]
