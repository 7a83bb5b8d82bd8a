"""Shared fixtures: small hand-built instances and random generators."""

import random
from fractions import Fraction

import pytest

from vrpsd.model import Instance, Route, generate_instance


def make_instance(costs, capacity, scenarios, probabilities=None, fleet_size=None):
    n = len(costs) - 1
    if probabilities is None:
        probabilities = [Fraction(1, len(scenarios))] * len(scenarios)
    return Instance(
        n_customers=n,
        cost=tuple(tuple(row) for row in costs),
        capacity=capacity,
        scenarios=tuple(tuple(row) for row in scenarios),
        probabilities=tuple(probabilities),
        fleet_size=fleet_size,
    )


@pytest.fixture
def worked_example():
    """Single scenario, route (1,2,3,4), C=10, d=(4,4,4,8), unload weights
    (2,2,6,2) under the doubled-depot-cost convention; the per-scenario
    optimum is 4, attained by unloading at customers 2 and 4."""
    inst = make_instance(
        costs=[
            [0, 1, 1, 3, 1],
            [1, 0, 1, 1, 1],
            [1, 1, 0, 1, 1],
            [3, 1, 1, 0, 1],
            [1, 1, 1, 1, 0],
        ],
        capacity=10,
        scenarios=[[4, 4, 4, 8]],
    )
    return inst, Route((1, 2, 3, 4))


def rand_instance(rng: random.Random, n: int, n_scenarios: int, capacity: int = 10) -> Instance:
    return generate_instance(
        n=n,
        n_scenarios=n_scenarios,
        capacity=capacity,
        seed=rng.randrange(10**6),
        demand_mean=4,
        demand_spread=3,
    )


def rand_route(rng: random.Random, inst: Instance, max_len: int) -> Route:
    size = rng.randint(2, min(max_len, inst.n_customers))
    return Route(tuple(rng.sample(list(inst.customers), size)))
