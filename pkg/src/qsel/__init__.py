"""Exact QoS-aware service selection on decomposable operation graphs."""

from .estimator import ServiceSelector
from .gen import GenSpec, generate_instance, template
from .model import (
    Candidate, Domain, Instance, InstanceError, InstanceSemanticError, InstanceSyntaxError,
    NonDecomposableError, OperationGraph, QosVector, Sla, parse_instance, penalty,
    serialize_instance, validate_decomposable,
)
from .order import build_nels, build_nels_plus, generate_nelo, mdf_sort, pep, sigma
from .reduce import (
    aggregate, compute_reduction_order, deepness, evaluate, evaluate_partial, reachability,
)
from .solve import (
    Algorithm, Objective, SolveReport, SolverConfig, Status, solve, solve_all_solutions,
    solve_backtrack, solve_exhaustive, solve_feasibility,
)

__version__ = "0.1.0"

__all__ = [
    "Algorithm", "Candidate", "Domain", "GenSpec", "Instance", "InstanceError",
    "InstanceSemanticError", "InstanceSyntaxError", "NonDecomposableError", "Objective",
    "OperationGraph", "QosVector", "ServiceSelector", "Sla", "SolveReport", "SolverConfig", "Status",
    "aggregate", "build_nels", "build_nels_plus", "compute_reduction_order", "deepness",
    "evaluate", "evaluate_partial", "generate_instance", "generate_nelo", "mdf_sort",
    "parse_instance", "penalty", "pep", "reachability", "serialize_instance", "sigma", "solve",
    "solve_all_solutions", "solve_backtrack", "solve_exhaustive", "solve_feasibility",
    "template", "validate_decomposable",
]
