"""Scale-free adaptive protocols for weak state synchronization of multi-agent networks."""

__version__ = "0.1.0"

from ._errors import IntegrationError, NonFiniteStateError, StepSizeUnderflowError
from .control import (
    AgentModel,
    RiccatiSolution,
    protocol_gain,
    solve_care,
    solve_lyapunov,
    stabilizability_check,
    triple_integrator,
)
from .graph import (
    BetaMatrix,
    CondensationDecomposition,
    WeightedDigraph,
    build_laplacian,
    compute_beta,
    condense,
    has_directed_spanning_tree,
    load_graph,
    strongly_connected_components,
)
from .simulator import ScenarioConfig, SimulationResult, closed_loop_derivative, compute_zeta, simulate

__all__ = [
    "AgentModel",
    "BetaMatrix",
    "CondensationDecomposition",
    "IntegrationError",
    "NonFiniteStateError",
    "RiccatiSolution",
    "ScenarioConfig",
    "SimulationResult",
    "StepSizeUnderflowError",
    "WeightedDigraph",
    "build_laplacian",
    "closed_loop_derivative",
    "compute_beta",
    "compute_zeta",
    "condense",
    "has_directed_spanning_tree",
    "load_graph",
    "protocol_gain",
    "simulate",
    "solve_care",
    "solve_lyapunov",
    "stabilizability_check",
    "strongly_connected_components",
    "triple_integrator",
]
