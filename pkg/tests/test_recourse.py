"""Recourse engines: policy simulation, membership, per-scenario optima."""

import random
from fractions import Fraction

import pytest

from vrpsd.model import Route
from vrpsd.recourse import (
    InfeasibleRecourseError,
    RecourseWeights,
    classical_recourse,
    is_recourse_action,
    scenario_optimal_recourse,
    simulate_classical,
)
from vrpsd import oracles

from conftest import make_instance, rand_instance, rand_route


def test_simulate_single_crossing():
    inst = make_instance([[0, 1, 1], [1, 0, 1], [1, 1, 0]], 10, [[6, 6]])
    assert simulate_classical(inst, Route((1, 2)), 0) == (0, 1)


def test_simulate_single_customer_never_fails():
    inst = make_instance([[0, 1], [1, 0]], 10, [[10]])
    assert simulate_classical(inst, Route((1,)), 0) == (0,)


def test_simulate_three_customers():
    inst = make_instance(
        [[0, 1, 1, 1], [1, 0, 1, 1], [1, 1, 0, 1], [1, 1, 1, 0]], 10, [[4, 4, 4]]
    )
    assert simulate_classical(inst, Route((1, 2, 3)), 0) == (0, 0, 1)


def test_simulate_rejects_oversized_demand():
    inst = make_instance([[0, 1], [1, 0]], 10, [[11]])
    with pytest.raises(InfeasibleRecourseError):
        simulate_classical(inst, Route((1,)), 0)


def test_classical_picks_cheaper_orientation():
    inst = make_instance([[0, 3, 5], [3, 0, 1], [5, 1, 0]], 10, [[6, 6]])
    br = classical_recourse(inst, Route((1, 2)))
    assert br.total == 6
    assert br.per_customer == {1: Fraction(6), 2: Fraction(0)}


def test_classical_single_customer_zero():
    inst = make_instance([[0, 9], [9, 0]], 10, [[10]])
    assert classical_recourse(inst, Route((1,))).total == 0


def test_classical_averages_over_scenarios():
    inst = make_instance(
        [[0, 3, 5], [3, 0, 1], [5, 1, 0]],
        10,
        [[6, 6], [2, 2]],
        probabilities=[Fraction(1, 2), Fraction(1, 2)],
    )
    br = classical_recourse(inst, Route((1, 2)))
    assert br.total == Fraction(1, 2) * 6  # failing scenario only, cheap orientation


def test_membership_examples():
    costs = [[0 if i == j else 1 for j in range(5)] for i in range(5)]
    inst = make_instance(costs, 10, [[4, 4, 4, 3]])
    r = Route((1, 2, 3, 4))
    assert is_recourse_action(inst, r, 0, (0, 0, 1, 0))
    assert not is_recourse_action(inst, r, 0, (1, 0, 0, 0))
    small = make_instance([[0, 1, 1], [1, 0, 1], [1, 1, 0]], 10, [[3, 3]])
    assert is_recourse_action(small, Route((1, 2)), 0, (0, 0))


def test_membership_rejects_negative_counts():
    inst = make_instance([[0, 1], [1, 0]], 10, [[5]])
    with pytest.raises(ValueError):
        is_recourse_action(inst, Route((1,)), 0, (-1,))


def test_membership_cross_check_mode():
    rng = random.Random(37)
    for _ in range(25):
        inst = rand_instance(rng, rng.randint(2, 5), 1)
        route = rand_route(rng, inst, 5)
        y = [rng.randint(0, 1) for _ in route.customers]
        # raises if the independent flow check ever disagrees
        is_recourse_action(inst, route, 0, y, cross_check=True)


def test_scenario_optimal_worked_example(worked_example):
    inst, route = worked_example
    weights = RecourseWeights.classical(inst)
    res = scenario_optimal_recourse(inst, route, weights)
    assert res.value == 4
    assert res.policy.y[0] == (0, 1, 0, 1)
    assert res.value == oracles.brute_force_scenario_optimal(inst, route, weights)
    assert sum(res.breakdown.per_customer.values(), Fraction(0)) == 4


def test_scenario_optimal_zero_when_under_capacity():
    inst = make_instance([[0, 1, 1], [1, 0, 1], [1, 1, 0]], 10, [[3, 3]])
    res = scenario_optimal_recourse(inst, Route((1, 2)), RecourseWeights.classical(inst))
    assert res.value == 0
    assert res.policy.y[0] == (0, 0)


def test_scenario_optimal_zero_weights(worked_example):
    inst, route = worked_example
    weights = RecourseWeights(w=(0, 0, 0, 0), b=(1, 1, 1, 1))
    assert scenario_optimal_recourse(inst, route, weights).value == 0


def test_scenario_optimal_infeasible_bounds(worked_example):
    inst, route = worked_example
    weights = RecourseWeights(w=(1, 1, 1, 1), b=(0, 0, 0, 0))
    with pytest.raises(InfeasibleRecourseError):
        scenario_optimal_recourse(inst, route, weights)
    with pytest.raises(InfeasibleRecourseError):
        oracles.brute_force_scenario_optimal(inst, route, weights)


# -- properties ---------------------------------------------------------------


def test_lp_matches_enumeration_on_random_routes():
    rng = random.Random(7)
    for _ in range(40):
        inst = rand_instance(rng, rng.randint(2, 6), rng.randint(1, 3))
        route = rand_route(rng, inst, 5)
        weights = RecourseWeights.classical(inst, bound=rng.choice((1, 2)))
        assert (
            scenario_optimal_recourse(inst, route, weights).value
            == oracles.brute_force_scenario_optimal(inst, route, weights)
        )


def test_minimal_spans_agree_with_all_spans():
    rng = random.Random(11)
    for _ in range(40):
        inst = rand_instance(rng, rng.randint(2, 6), rng.randint(1, 3))
        route = rand_route(rng, inst, 6)
        weights = RecourseWeights.classical(inst)
        full = scenario_optimal_recourse(inst, route, weights, minimal_only=False)
        minimal = scenario_optimal_recourse(inst, route, weights, minimal_only=True)
        assert full.value == minimal.value


def test_membership_orientation_symmetric():
    rng = random.Random(3)
    for _ in range(80):
        inst = rand_instance(rng, rng.randint(2, 6), 1)
        route = rand_route(rng, inst, 6)
        y = {v: rng.randint(0, 2) for v in route.customers}
        assert is_recourse_action(inst, route, 0, y) == is_recourse_action(
            inst, route.reverse(), 0, y
        )


def test_classical_counts_are_recourse_actions():
    rng = random.Random(5)
    for _ in range(60):
        inst = rand_instance(rng, rng.randint(2, 6), rng.randint(1, 3))
        route = rand_route(rng, inst, 6)
        for xi in range(inst.n_scenarios):
            for reverse in (False, True):
                counts = simulate_classical(inst, route, xi, reverse=reverse)
                assert is_recourse_action(inst, route, xi, counts)


def test_scenario_optimal_below_classical():
    rng = random.Random(9)
    for _ in range(40):
        inst = rand_instance(rng, rng.randint(2, 6), rng.randint(1, 3))
        route = rand_route(rng, inst, 6)
        weights = RecourseWeights.classical(inst, bound=1)
        assert (
            scenario_optimal_recourse(inst, route, weights).value
            <= classical_recourse(inst, route).total
        )


def test_disaggregation_monotone_over_subroutes():
    rng = random.Random(13)
    for _ in range(25):
        inst = rand_instance(rng, rng.randint(3, 6), rng.randint(1, 2))
        route = rand_route(rng, inst, 6)
        weights = RecourseWeights.classical(inst)
        full = scenario_optimal_recourse(inst, route, weights).breakdown
        for i, j in route.spans():
            sub = route.subroute(i, j)
            sub_total = scenario_optimal_recourse(inst, sub, weights).value
            over = sum((full.per_customer[v] for v in sub.customers), Fraction(0))
            assert sub_total <= over


def test_membership_agrees_with_maxflow_sample():
    rng = random.Random(17)
    for _ in range(150):
        inst = rand_instance(rng, rng.randint(2, 6), rng.randint(1, 3))
        route = rand_route(rng, inst, 6)
        xi = rng.randrange(inst.n_scenarios)
        y = [rng.randint(0, 1) for _ in route.customers]
        assert is_recourse_action(inst, route, xi, y) == oracles.maxflow_membership(
            inst, route, xi, y
        )


def test_preventive_weights_formula():
    inst = make_instance(
        [[0, 4, 6, 9], [4, 0, 1, 12], [6, 1, 0, 2], [9, 12, 2, 0]], 10, [[5, 5, 5]]
    )
    w = RecourseWeights.preventive(inst)
    # v=1: min(2*4, 4+6-1, 4+9-12) = min(8, 9, 1) = 1
    assert w.weight(1) == 1
    # v=3: min(2*9, 4+9-12, 6+9-2) = 1
    assert w.weight(3) == 1
    assert all(b == 2 for b in w.b)
