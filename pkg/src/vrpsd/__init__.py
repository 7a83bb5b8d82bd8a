"""Exact solver for the VRP with stochastic scenario demands.

Routes are fixed before demands are known; when a scenario is realized,
unload trips to the depot keep the vehicle within capacity.  The solver
minimizes first-stage edge cost plus expected recourse cost, either under
the classical back-and-forth policy or under per-scenario optimal unload
decisions, via cutting planes in the (x, theta) space.
"""

from vrpsd.model import (
    Instance,
    PartialRoute,
    Route,
    RoutingPlan,
    adheres,
    min_vehicles,
    parse_instance,
    preprocess_large_demands,
    routes_of,
)
from vrpsd.recourse import RecourseWeights, classical_recourse, scenario_optimal_recourse
from vrpsd.solver import SolveReport, SolverConfig, solve

__all__ = [
    "Instance",
    "PartialRoute",
    "RecourseWeights",
    "Route",
    "RoutingPlan",
    "SolveReport",
    "SolverConfig",
    "adheres",
    "classical_recourse",
    "min_vehicles",
    "parse_instance",
    "preprocess_large_demands",
    "routes_of",
    "scenario_optimal_recourse",
    "solve",
]

__version__ = "0.1.0"
