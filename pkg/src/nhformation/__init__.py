"""Communication-free leader-follower formation control for unicycle agents.

Each follower estimates its predecessors' relative state from range and
bearing alone and tracks X+ (longitudinal, with time headway) and Y
(lateral) setpoints through closed-form barrier-function laws.
"""

from .controller import (
    EdgeControlParams,
    check_feasibility,
    control_lateral,
    control_longitudinal,
    eval_h1,
    eval_h2,
)
from .dynamics import (
    ActuationLimits,
    AgentState,
    ControlInput,
    RelativeMeasurement,
    TruthProjection,
    measure_relative,
    project_truth,
    step_agent,
)
from .estimator import (
    EstimatorGains,
    EstimatorState,
    derive_gains,
    error_matrix,
    estimator_step,
    guub_bounds,
    solve_lyapunov,
)
from .graph import Edge, FormationGraph, topological_order, validate, wire
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "EdgeControlParams", "check_feasibility", "control_lateral", "control_longitudinal",
    "eval_h1", "eval_h2", "ActuationLimits", "AgentState", "ControlInput",
    "RelativeMeasurement", "TruthProjection", "measure_relative", "project_truth",
    "step_agent", "EstimatorGains", "EstimatorState", "derive_gains", "error_matrix",
    "estimator_step", "guub_bounds", "solve_lyapunov", "Edge", "FormationGraph",
    "topological_order", "validate", "wire", "BACKEND", "__version__",
]
