"""
Prediction-correction dual-regularized ADMM for time-varying consensus
optimization over graphs.

Modules
-------
graph
    Topologies, the edge operators ``A`` and ``P``, mixing weights.
costs
    Time-varying local costs and the Taylor prediction builder.
dradmm
    The ADMM engine, distributed and centralized forms.
pcsched
    The prediction-correction driver.
bounds
    Closed-form rate constants and tracking radii.
baselines
    Penalized gradient and dual decomposition comparisons.
oracle
    Exact and reference solutions.
bench
    Experiment harness and command line interface.
"""

from .bounds import (DualConstants, RateConstants, dual_constants,
                     optimal_rho, prs_rate, tracking_radius)
from .costs import (LogisticTrackingCost, QuadraticCost, QuadraticTrackingCost,
                    TimeVaryingCost, build_prediction, sample_experiment_costs)
from .dradmm import (AdmmState, SolverError, SolverParams, centralized_sweep,
                     distributed_sweep, local_x_update, recover_duals, z_update)
from .graph import (Graph, TopologyError, apply_A, apply_A_transpose, apply_P,
                    build_random_geometric, metropolis_weights)
from .oracle import (regularization_gap, solve_consensus,
                     solve_regularized_saddle)
from .pcsched import PcConfig, PcTrace, run

__version__ = "0.1.0"
