"""Cut algebra: golden worked example, bundle certificates, dominance,
activation-function contracts, and validity against enumerated plans."""

import itertools
import random
from fractions import Fraction

import pytest

from vrpsd import cuts as cutlib
from vrpsd import lp_backend, oracles
from vrpsd.cuts import (
    InfeasibleBoundError,
    activation_route_exact,
    activation_wdl,
    activation_wof,
    aggregate_sri,
    aggregated_sri_cut,
    partial_route_bundle,
    project_inequality,
    projected_aggregated_sri,
    rci_cut,
    route_equality_cut,
    set_cut_bundle,
    sri_violation,
)
from vrpsd.model import PartialRoute, Route, adheres
from vrpsd.recourse import RecourseWeights, classical_recourse, scenario_optimal_recourse

from conftest import make_instance, rand_instance, rand_route


def golden_weights():
    return RecourseWeights((Fraction(2), Fraction(3), Fraction(4)), (1, 1, 1))


def golden_instance():
    # one scenario with three full loads on S = {1, 2, 3}
    return make_instance(
        [[0, 1, 3, 2], [1, 0, 1, 1], [3, 1, 0, 1], [2, 1, 1, 0]], 10, [[10, 10, 10]]
    )


# -- violations ----------------------------------------------------------------


def test_sri_violation_worked_fractional_point(worked_example):
    inst, route = worked_example
    xbar = {e: 1 for e in route.edge_multiplicities()}
    ybar = {(0, 1): 0.3, (0, 2): 0.3, (0, 4): 0.6}
    v1 = sri_violation(inst, xbar, ybar, {1, 2, 3}, 0)
    v2 = sri_violation(inst, xbar, ybar, {3, 4}, 0)
    assert v1 == pytest.approx(0.4)
    assert v2 == pytest.approx(0.4)


def test_sri_violation_nonpositive_on_feasible_policies(worked_example):
    inst, route = worked_example
    weights = RecourseWeights.classical(inst)
    xbar = {e: Fraction(m) for e, m in route.edge_multiplicities().items()}
    res = scenario_optimal_recourse(inst, route, weights)
    ybar = {
        (0, v): Fraction(res.policy.y[0][v - 1]) for v in inst.customers
    }
    for size in range(1, 5):
        for S in itertools.combinations(inst.customers, size):
            assert sri_violation(inst, xbar, ybar, S, 0) <= 0


def test_sri_violation_whole_customer_set_plug_in():
    inst = make_instance(
        [[0, 1, 1, 1], [1, 0, 1, 1], [1, 1, 0, 1], [1, 1, 1, 0]], 10, [[6, 6, 6]]
    )
    # two routes: (1,2) and (3): x(E(S)) = |S| - 2 and k_xi(V+) = 2
    xbar = {(0, 1): 1, (1, 2): 1, (0, 2): 1, (0, 3): 2}
    assert sri_violation(inst, xbar, {}, {1, 2, 3}, 0) == 0


def test_aggregate_sri_cases(worked_example):
    inst, route = worked_example
    xbar = {e: 1 for e in route.edge_multiplicities()}
    ybar = {(0, 1): 0.3, (0, 2): 0.3, (0, 4): 0.6}
    cut = aggregate_sri(inst, xbar, ybar, {1, 2, 3})
    assert cut is not None and cut.support[1] == (0,)
    assert float(cut.violation(xbar=xbar, ybar=ybar)) == pytest.approx(0.4)

    two = make_instance(
        [[0, 1, 1], [1, 0, 1], [1, 1, 0]],
        10,
        [[6, 6], [7, 7]],
        probabilities=[Fraction(1, 2), Fraction(1, 2)],
    )
    xbar2 = {(0, 1): 1, (1, 2): 1, (0, 2): 1}
    ybar2 = {(0, 1): 0.6, (1, 1): 0.8}
    c2 = aggregate_sri(two, xbar2, ybar2, {1, 2})
    assert c2 is not None and c2.support[1] == (0, 1)
    assert float(c2.violation(xbar=xbar2, ybar=ybar2)) == pytest.approx(0.6)

    assert aggregate_sri(two, xbar2, {(0, 1): 1, (1, 1): 1}, {1, 2}) is None


# -- projection ----------------------------------------------------------------


def test_project_inequality_worked_numbers():
    weights = golden_weights()
    p = Fraction(1, 3)
    a = {(0, 1): 2 * p, (0, 2): 3 * p, (0, 3): 3 * p}
    x_part = {e: 3 * p for e in cutlib.edges_within({1, 2, 3})}
    const = 3 * p * (3 - 3) + (-1 * p)  # alpha-scaled (k - |S|) plus beta * b
    cut = project_inequality(a, x_part, const, weights, (p, p, p))
    assert cut.theta_coeffs == {1: Fraction(1), 2: Fraction(1), 3: Fraction(3, 4)}
    assert cut.rhs == -p
    assert all(c == 3 * p for c in cut.x_coeffs.values())


def test_project_inequality_zero_is_zero_cut():
    weights = golden_weights()
    cut = project_inequality({}, {}, Fraction(0), weights, (Fraction(1),))
    assert cut.theta_coeffs == {} and cut.x_coeffs == {} and cut.rhs == 0


def test_project_inequality_trivial_when_zero_weight_positive_coefficient():
    weights = RecourseWeights((Fraction(0), Fraction(3)), (1, 1))
    assert project_inequality({(0, 1): Fraction(1)}, {}, Fraction(1), weights, (Fraction(1),)) is None
    # negative coefficient on a zero-weight customer is fine
    cut = project_inequality(
        {(0, 1): Fraction(-1), (0, 2): Fraction(3)}, {}, Fraction(1), weights, (Fraction(1),)
    )
    assert cut is not None and 1 not in cut.theta_coeffs


# -- set cut bundle --------------------------------------------------------------


def test_set_cut_bundle_golden_example():
    inst = golden_instance()
    bundle = set_cut_bundle(inst, {1, 2, 3}, 1, golden_weights())
    assert bundle.per_scenario == (Fraction(5),)
    assert bundle.value == 5
    assert bundle.alpha == (Fraction(3),)
    assert bundle.beta == ({1: Fraction(-1)},)
    dom = bundle.dominating
    assert dom.theta_coeffs == {1: Fraction(1), 2: Fraction(1), 3: Fraction(3, 4)}
    assert dom.rhs == -1
    assert all(c == 3 for c in dom.x_coeffs.values())
    # ILS set cut: theta(S) >= 5 * (1 + x(E(S)) - 3 + 1)
    assert bundle.ils.rhs == 5 * (1 - 3 + 1)


def test_set_cut_bundle_vacuous_when_k_small():
    inst = make_instance([[0, 1, 1], [1, 0, 1], [1, 1, 0]], 10, [[3, 3]])
    bundle = set_cut_bundle(inst, {1, 2}, 1, RecourseWeights.classical(inst))
    assert bundle.value == 0
    assert bundle.alpha == (Fraction(0),)
    assert bundle.beta == ({},)


def test_set_cut_bundle_greedy_matches_lp():
    """b=(2,1,1), w=(1,5,9), three failures beyond k': greedy gives 7 and the
    bound LP (one covering row plus the box) agrees."""
    inst = make_instance(
        [[0, 1, 1, 1], [1, 0, 1, 1], [1, 1, 0, 1], [1, 1, 1, 0]], 10, [[10, 10, 10]]
    )
    weights = RecourseWeights((Fraction(1), Fraction(5), Fraction(9)), (2, 1, 1))
    bundle = set_cut_bundle(inst, {1, 2, 3}, 1, weights)
    # need = 2: cheapest has b=2 -> both failures on w=1
    assert bundle.per_scenario[0] == 2

    m = lp_backend.LinearModel()
    ids = [m.add_var(lb=0.0, ub=float(b), obj=float(w)) for w, b in zip(weights.w, weights.b)]
    m.add_row({i: 1.0 for i in ids}, ">=", 3.0)
    out = lp_backend.solve_lp(m)
    assert out.objective == pytest.approx(7.0)  # 2*1 + 1*5 with pivot at w=5

    # greedy with need=3 comes from (k_xi - k') via a 4-vehicle scenario set
    four = make_instance(
        [[0, 1, 1, 1], [1, 0, 1, 1], [1, 1, 0, 1], [1, 1, 1, 0]], 5, [[5, 5, 10]]
    )
    b2 = set_cut_bundle(four, {1, 2, 3}, 1, weights)
    assert b2.per_scenario[0] == 7
    # closed-form duals: objective equals the greedy value exactly
    assert b2.alpha[0] * (four.k_scenario(0, {1, 2, 3}) - 1) + sum(
        (bv * weights.bound(v) for v, bv in b2.beta[0].items()), Fraction(0)
    ) == Fraction(7)
    assert b2.alpha[0] <= b2.per_scenario[0]


def test_set_cut_bundle_infeasible_bound():
    inst = make_instance([[0, 1, 1], [1, 0, 1], [1, 1, 0]], 10, [[10, 10]])
    weights = RecourseWeights((Fraction(1), Fraction(1)), (0, 0))
    with pytest.raises(InfeasibleBoundError):
        set_cut_bundle(inst, {1, 2}, 1, weights)


# -- partial route bundle ----------------------------------------------------------


def test_partial_route_all_singletons_equals_scenario_optimum(worked_example):
    inst, route = worked_example
    weights = RecourseWeights.classical(inst)
    bundle = partial_route_bundle(inst, PartialRoute.from_route(route), weights)
    assert bundle.value == scenario_optimal_recourse(inst, route, weights).value == 4
    assert bundle.value == oracles.brute_force_scenario_optimal(inst, route, weights)
    assert bundle.certificate_exact


def test_partial_route_no_binding_spans():
    inst = make_instance([[0, 1, 1], [1, 0, 1], [1, 1, 0]], 10, [[3, 3]])
    H = PartialRoute((frozenset({1}), frozenset({2})))
    bundle = partial_route_bundle(inst, H, RecourseWeights.classical(inst))
    assert bundle.value == 0
    assert bundle.alpha == ({},)


def test_partial_route_single_constraint_picks_cheapest():
    inst = make_instance(
        [[0, 2, 5, 7, 3]] + [[2, 0, 1, 1, 1], [5, 1, 0, 1, 1], [7, 1, 1, 0, 1], [3, 1, 1, 1, 0]],
        10,
        [[3, 3, 3, 3]],
    )
    H = PartialRoute((frozenset({1}), frozenset({2, 3}), frozenset({4})))
    weights = RecourseWeights.classical(inst)
    bundle = partial_route_bundle(inst, H, weights)
    # k(H) = ceil(12/10) = 2 and no strict sub-span exceeds capacity
    assert bundle.per_scenario == (min(weights.weight(v) for v in H.customers()),)
    full = partial_route_bundle(inst, H, weights, minimal_only=False)
    assert full.value == bundle.value


def test_partial_route_minimal_only_agrees_with_full():
    rng = random.Random(23)
    for _ in range(25):
        inst = rand_instance(rng, rng.randint(3, 6), rng.randint(1, 3))
        route = rand_route(rng, inst, 5)
        weights = RecourseWeights.classical(inst, bound=rng.choice((1, 2)))
        H = PartialRoute.from_route(route)
        assert (
            partial_route_bundle(inst, H, weights, minimal_only=True).value
            == partial_route_bundle(inst, H, weights, minimal_only=False).value
        )


def test_dual_postprocessing_invariants():
    rng = random.Random(31)
    for _ in range(40):
        inst = rand_instance(rng, rng.randint(3, 6), rng.randint(1, 3))
        route = rand_route(rng, inst, 6)
        weights = RecourseWeights.classical(inst, bound=rng.choice((1, 2)))
        H = PartialRoute.from_route(route)
        bundle = partial_route_bundle(inst, H, weights)
        assert bundle.certificate_exact
        for xi in range(inst.n_scenarios):
            alpha, beta = bundle.alpha[xi], bundle.beta[xi]
            # support sum capped by the scenario bound
            assert sum(alpha.values(), Fraction(0)) <= bundle.per_scenario[xi]
            # dual feasibility
            for v in H.customers():
                covered = sum(
                    (m for (i, j), m in alpha.items() if v in H.span_customers(i, j)),
                    Fraction(0),
                )
                assert covered + beta.get(v, Fraction(0)) <= weights.weight(v)
            # dual objective equals the primal optimum
            obj = sum(
                (m * (inst.k_scenario(xi, H.span_customers(i, j)) - 1) for (i, j), m in alpha.items()),
                Fraction(0),
            ) + sum((bv * weights.bound(v) for v, bv in beta.items()), Fraction(0))
            assert obj == bundle.per_scenario[xi]
            # exchange exit condition: active spans keep k - b(capped) >= 2
            capped = {v for v, bv in beta.items() if bv < 0}
            for (i, j), m in alpha.items():
                if m > 0:
                    custs = H.span_customers(i, j)
                    cap = sum(weights.bound(v) for v in custs & capped)
                    assert inst.k_scenario(xi, custs) - cap >= 2


def test_singleton_bundle_exact_enforcement_at_adhering_plans(worked_example):
    inst, route = worked_example
    weights = RecourseWeights.classical(inst)
    bundle = partial_route_bundle(inst, PartialRoute.from_route(route), weights)
    xbar = {e: Fraction(m) for e, m in route.edge_multiplicities().items()}
    enforced = bundle.ils.rhs + sum(
        (c * xbar.get(e, 0) for e, c in bundle.ils.x_coeffs.items()), Fraction(0)
    )
    assert enforced == scenario_optimal_recourse(inst, route, weights).value


# -- activations -----------------------------------------------------------------


def test_activation_wof_cases(worked_example):
    inst, route = worked_example
    H = PartialRoute((frozenset({1}), frozenset({2, 3}), frozenset({4})))
    adhering = Route((1, 2, 3, 4))
    xbar = {e: 1 for e in adhering.edge_multiplicities()}
    assert activation_wof(xbar, H) == 1
    dropped = dict(xbar)
    dropped[(3, 4)] = 0  # remove the inter-set edge into {4}
    assert activation_wof(dropped, H) <= 0
    assert activation_wof({(0, 5): 2}, PartialRoute((frozenset({5}),))) == 1


def test_activation_wdl_cases():
    S = {1, 2, 3}
    adhering = {(1, 2): 1, (2, 3): 1}
    assert activation_wdl(adhering, S, 1) == 1
    assert activation_wdl({(1, 2): 1}, S, 1) == 0
    assert activation_wdl({(1, 2): 1, (2, 3): 1.3}, S, 1) == pytest.approx(1.3)


def _window_adhering(plan, H):
    size = len(H.customers())
    for r in plan.routes:
        cs = r.customers
        for i in range(len(cs) - size + 1):
            if adheres(Route(cs[i : i + size]), H):
                return True
    return False


def _all_partial_routes(customers, max_sets=3):
    # every ordered tuple of disjoint sets over a subset, adjacency rule obeyed
    out = []

    def rec(prefix, remaining):
        if prefix:
            try:
                out.append(PartialRoute(tuple(prefix)))
            except ValueError:
                pass
        if len(prefix) == max_sets:
            return
        for size in range(1, len(remaining) + 1):
            for block in itertools.combinations(sorted(remaining), size):
                if prefix and len(prefix[-1]) > 1 and size > 1:
                    continue
                rec(prefix + [frozenset(block)], remaining - set(block))

    rec([], set(customers))
    return out


def test_wof_activation_contract_exhaustive():
    inst = make_instance(
        [[0, 1, 2, 3], [1, 0, 1, 2], [2, 1, 0, 1], [3, 2, 1, 0]], 10, [[3, 3, 3]]
    )
    plans = list(oracles.all_plans(inst))
    for H in _all_partial_routes([1, 2, 3]):
        for plan in plans:
            x = plan.edge_multiplicities()
            w = activation_wof(x, H)
            if _window_adhering(plan, H):
                assert w == 1, (H.sets, plan)
            else:
                assert w <= 0, (H.sets, plan)


def test_route_exact_activation_contract_exhaustive():
    inst = make_instance(
        [[0, 1, 2, 3], [1, 0, 1, 2], [2, 1, 0, 1], [3, 2, 1, 0]], 10, [[3, 3, 3]]
    )
    plans = list(oracles.all_plans(inst))
    routes = [
        Route(perm)
        for size in (1, 2, 3)
        for members in itertools.combinations([1, 2, 3], size)
        for perm in itertools.permutations(members)
    ]
    for r in routes:
        key = {min(r.customers, tuple(reversed(r.customers)))}
        for plan in plans:
            x = plan.edge_multiplicities()
            val = activation_route_exact(inst, x, r)
            present = any(
                min(pr.customers, tuple(reversed(pr.customers))) in key for pr in plan.routes
            )
            if present:
                assert val == 1, (r.customers, plan)
            else:
                assert val <= 0, (r.customers, plan)


# -- projected aggregated inequalities ---------------------------------------------


def test_projected_aggregated_single_scenario_matches_basic_projection(worked_example):
    inst, route = worked_example
    weights = RecourseWeights.classical(inst)
    S = {1, 2, 3}
    cut = projected_aggregated_sri(inst, S, (0,), weights)
    a = {(0, v): Fraction(1) for v in S}
    x_part = {e: Fraction(1) for e in cutlib.edges_within(S)}
    const = Fraction(inst.k_scenario(0, S) - len(S))
    base = project_inequality(a, x_part, const, weights, inst.probabilities)
    assert cut.theta_coeffs == base.theta_coeffs
    assert cut.x_coeffs == base.x_coeffs
    assert cut.rhs == base.rhs


def test_projected_aggregated_uniform_plug_in():
    inst = make_instance(
        [[0, 1, 1, 1], [1, 0, 1, 1], [1, 1, 0, 1], [1, 1, 1, 0]],
        10,
        [[6, 6, 6], [6, 6, 6], [1, 1, 1]],
    )
    weights = RecourseWeights((Fraction(2), Fraction(2), Fraction(2)), (1, 1, 1))
    cut = projected_aggregated_sri(inst, {1, 2, 3}, (0, 1), weights)
    N = 3
    assert all(c == Fraction(N, 2) for c in cut.theta_coeffs.values())
    assert all(c == 2 for c in cut.x_coeffs.values())
    assert cut.rhs == 2 + 2 - 2 * 3  # sum k_xi - |Xi| * |S|


def test_projected_aggregated_empty_pool_rejected(worked_example):
    inst, _ = worked_example
    with pytest.raises(ValueError):
        projected_aggregated_sri(inst, {1, 2}, (), RecourseWeights.classical(inst))


# -- validity and dominance ----------------------------------------------------------


def _feasible_point_cache(inst, weights, recourse):
    return list(oracles.feasible_points(inst, weights, recourse))


def test_cut_validity_against_enumerated_plans():
    rng = random.Random(41)
    for _ in range(6):
        inst = rand_instance(rng, rng.randint(3, 5), rng.randint(1, 2))
        weights = RecourseWeights.classical(inst)
        points_q = _feasible_point_cache(inst, weights, "scenopt")
        points_c = _feasible_point_cache(inst, weights, "classical")
        produced: list[cutlib.Cut] = []  # valid for *any* recourse meeting the weight bound
        classical_only: list[cutlib.Cut] = []  # bound tied to the classical policy
        scenopt_only: list[cutlib.Cut] = []
        for _ in range(4):
            S = frozenset(rng.sample(list(inst.customers), rng.randint(1, inst.n_customers)))
            xi = rng.randrange(inst.n_scenarios)
            produced.append(cutlib.sri_cut(inst, S, xi))
            produced.append(aggregated_sri_cut(inst, S, range(inst.n_scenarios)))
            produced.append(rci_cut(S, 1))
            bundle = set_cut_bundle(inst, S, 1, weights)
            produced.append(bundle.ils)
            if bundle.dominating is not None:
                produced.append(bundle.dominating)
            if all(weights.weight(v) > 0 for v in S):
                produced.append(projected_aggregated_sri(inst, S, (xi,), weights))
                produced.append(
                    projected_aggregated_sri(inst, S, (xi,), weights, scenario_pool="all")
                )
            route = rand_route(rng, inst, 4)
            pb = partial_route_bundle(inst, PartialRoute.from_route(route), weights)
            produced.append(pb.ils)
            if pb.dominating is not None:
                produced.append(pb.dominating)
            classical_only.append(
                route_equality_cut(inst, route, classical_recourse(inst, route).total)
            )
            scenopt_only.append(
                route_equality_cut(
                    inst, route, scenario_optimal_recourse(inst, route, weights).value
                )
            )
        for cut in produced + scenopt_only:
            for x, theta, y, plan in points_q:
                assert cut.satisfied_by(x, y, theta), (cut.serialize(), plan)
        for cut in produced + classical_only:
            if cut.kind in ("rci", "sri", "agg_sri"):
                continue  # y/x cuts already checked on optimal policies
            for x, theta, y, plan in points_c:
                assert cut.satisfied_by(x, y, theta), (cut.serialize(), plan)


def test_dominance_on_sampled_relaxation_points():
    rng = random.Random(43)
    for _ in range(20):
        inst = rand_instance(rng, rng.randint(3, 6), rng.randint(1, 3))
        weights = RecourseWeights.classical(inst)
        route = rand_route(rng, inst, 5)
        pb = partial_route_bundle(inst, PartialRoute.from_route(route), weights)
        sb = set_cut_bundle(inst, route.customer_set(), 1, weights)
        for x, theta in oracles.sample_relaxation_points(rng, inst, 15):
            assert not cutlib.dominance_violated(pb.ils, pb.dominating, x, theta)
            xe = float(cutlib.x_sum_over(x, cutlib.edges_within(route.customer_set())))
            if xe <= len(route.customers) - 1 + 1e-9:
                assert not cutlib.dominance_violated(sb.ils, sb.dominating, x, theta)


def test_serialize_format():
    cut = rci_cut({2, 1}, 1)
    line = cut.serialize()
    assert line.startswith("rci; ((1, 2), 1);")
    assert "rhs=-1" in line
