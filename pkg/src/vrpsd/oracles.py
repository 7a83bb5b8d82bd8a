"""Brute-force ground truth, independent of the cutting-plane machinery.

Routing plans are enumerated as set partitions with orders canonical up to
reversal; unload policies are enumerated over the integer box; membership is
double-checked through a feasibility network solved by max-flow.  Everything
here is deliberately slow and simple.
"""

from __future__ import annotations

import itertools
import random
from collections import deque
from fractions import Fraction
from typing import Iterator, Optional

import numpy as np

from vrpsd import lp_backend
from vrpsd.model import Instance, Route, RoutingPlan
from vrpsd.recourse import (
    InfeasibleRecourseError,
    RecourseWeights,
    classical_recourse,
    is_recourse_action,
    route_spans_with_requirements,
    scenario_optimal_recourse,
)

POLICY_ENUMERATION_BUDGET = 100_000


def set_partitions(items: list) -> Iterator[list[list]]:
    """All partitions of a list into nonempty unordered blocks."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for smaller in set_partitions(rest):
        for i in range(len(smaller)):
            yield smaller[:i] + [[first] + smaller[i]] + smaller[i + 1 :]
        yield [[first]] + smaller


def _canonical_orders(part: tuple[int, ...]) -> Iterator[tuple[int, ...]]:
    """Orders of a block up to reversal (routes are direction-free)."""
    if len(part) == 1:
        yield part
        return
    for perm in itertools.permutations(part):
        if perm <= perm[::-1]:
            yield perm


def _policy_matrix(inst: Instance, route: Route, bounds: list[int]) -> np.ndarray:
    """Rows: candidate unload vectors within the per-customer bounds."""
    grids = [np.arange(b + 1) for b in bounds]
    mesh = np.meshgrid(*grids, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def brute_force_scenario_optimal(
    inst: Instance,
    route: Route,
    weights: RecourseWeights,
    budget: int = POLICY_ENUMERATION_BUDGET,
) -> Fraction:
    """Cheapest unload policy by pure enumeration over the integer box."""
    bounds = [weights.bound(v) for v in route.customers]
    size = 1
    for b in bounds:
        size *= b + 1
    if size > budget:
        raise ValueError(f"enumeration of {size} policies exceeds the size guard")
    w = [weights.weight(v) for v in route.customers]
    total = Fraction(0)
    for xi, p in enumerate(inst.probabilities):
        best: Optional[Fraction] = None
        for cand in itertools.product(*[range(b + 1) for b in bounds]):
            if not is_recourse_action(inst, route, xi, cand):
                continue
            val = sum((wi * ci for wi, ci in zip(w, cand)), Fraction(0))
            if best is None or val < best:
                best = val
        if best is None:
            raise InfeasibleRecourseError(
                f"no policy within bounds for route {route.customers} in scenario {xi}"
            )
        total += p * best
    return total


def _scenario_optimal_vectorized(
    inst: Instance, route: Route, weights: RecourseWeights
) -> Fraction:
    """Enumeration again, but batched with numpy for the plan oracle."""
    bounds = [weights.bound(v) for v in route.customers]
    size = 1
    for b in bounds:
        size *= b + 1
    if size > POLICY_ENUMERATION_BUDGET:
        raise ValueError("route too large for the enumeration oracle")
    candidates = _policy_matrix(inst, route, bounds)
    w = np.array([float(weights.weight(v)) for v in route.customers])
    float_costs = candidates @ w
    order = np.argsort(float_costs, kind="stable")
    candidates = candidates[order]
    float_costs = float_costs[order]
    n = len(route.customers)
    spans = [(i, j) for i in range(n) for j in range(i, n)]
    A = np.zeros((len(spans), n))
    for row, (i, j) in enumerate(spans):
        A[row, i : j + 1] = 1.0
    cover = candidates @ A.T  # candidate x span
    total = Fraction(0)
    exact_w = [weights.weight(v) for v in route.customers]

    def exact_cost(row) -> Fraction:
        return sum((wi * int(ci) for wi, ci in zip(exact_w, row)), Fraction(0))

    for xi, p in enumerate(inst.probabilities):
        req = np.zeros(len(spans))
        demands = [inst.demand(xi, v) for v in route.customers]
        prefix = [0]
        for d in demands:
            prefix.append(prefix[-1] + d)
        for row, (i, j) in enumerate(spans):
            dsum = prefix[j + 1] - prefix[i]
            req[row] = -(-dsum // inst.capacity) - 1
        feasible = np.all(cover >= req - 1e-9, axis=1)
        idx = int(np.argmax(feasible))
        if not feasible[idx]:
            raise InfeasibleRecourseError("no feasible policy in enumeration oracle")
        # float order may tie or near-tie; settle the window in exact arithmetic
        best = exact_cost(candidates[idx])
        cutoff = float_costs[idx] + 1e-6 * max(1.0, abs(float_costs[idx]))
        j = idx + 1
        while j < len(candidates) and float_costs[j] <= cutoff:
            if feasible[j]:
                best = min(best, exact_cost(candidates[j]))
            j += 1
        total += p * best
    return total


def enumerate_optimal(
    inst: Instance,
    first_stage: str = "subtour",
    recourse: str = "classical",
    weights: Optional[RecourseWeights] = None,
    max_customers: int = 8,
) -> tuple[Fraction, RoutingPlan]:
    """Exact optimum by enumerating partitions and orders up to reversal.

    Under first_stage="cvrp" only partitions with exactly fleet_size blocks,
    each within expected-demand capacity, are admitted.
    """
    n = inst.n_customers
    if n > max_customers:
        raise ValueError(f"enumeration limited to {max_customers} customers")
    if inst.needs_preprocessing:
        raise ValueError("preprocess the instance before calling the oracle")
    if first_stage not in ("subtour", "cvrp"):
        raise ValueError(f"bad first-stage set {first_stage!r}")
    if first_stage == "cvrp" and inst.fleet_size is None:
        raise ValueError("fleet_size required for the cvrp first stage")
    if recourse not in ("classical", "scenopt"):
        raise ValueError(f"bad recourse kind {recourse!r}")
    if weights is None:
        weights = RecourseWeights.classical(inst)

    best_route_cache: dict[frozenset[int], tuple[Fraction, Route]] = {}

    def best_route(part: frozenset[int]) -> tuple[Fraction, Route]:
        if part in best_route_cache:
            return best_route_cache[part]
        best_val: Optional[Fraction] = None
        best_r: Optional[Route] = None
        for order in _canonical_orders(tuple(sorted(part))):
            r = Route(order)
            if recourse == "classical":
                q = classical_recourse(inst, r).total
            else:
                q = _scenario_optimal_vectorized(inst, r, weights)
            val = Fraction(r.cost(inst)) + q
            if best_val is None or val < best_val:
                best_val, best_r = val, r
        best_route_cache[part] = (best_val, best_r)
        return best_val, best_r

    best_total: Optional[Fraction] = None
    best_plan: Optional[RoutingPlan] = None
    for partition in set_partitions(list(inst.customers)):
        if first_stage == "cvrp":
            if len(partition) != inst.fleet_size:
                continue
            if any(
                inst.expected_demand_of(block) > inst.capacity for block in partition
            ):
                continue
        total = Fraction(0)
        routes = []
        for block in partition:
            val, r = best_route(frozenset(block))
            total += val
            routes.append(r)
        if best_total is None or total < best_total:
            best_total = total
            best_plan = RoutingPlan(tuple(routes))
    if best_total is None:
        raise InfeasibleRecourseError("no feasible routing plan under the first-stage set")
    return best_total, best_plan


def classical_recourse_formula(inst: Instance, route: Route):
    """Back-and-forth cost from the closed indicator form, not simulation.

    Per traversal position j the term is 2 c_0vj times the probability-
    weighted count of thresholds t with sum_{i<j} d_i <= t C < sum_{i<=j} d_i;
    the cheaper orientation is kept (tie: forward), mirroring the policy
    evaluator's contract.
    """
    from vrpsd.recourse import RecourseBreakdown

    C = inst.capacity

    def evaluate(order: tuple[int, ...]):
        per = {v: Fraction(0) for v in route.customers}
        for xi, p in enumerate(inst.probabilities):
            demands = [inst.demand(xi, v) for v in order]
            total = sum(demands)
            prefix = 0
            for j, v in enumerate(order):
                lo, hi = prefix, prefix + demands[j]
                crossings = sum(1 for t in range(1, total // C + 2) if lo <= t * C < hi)
                per[v] += p * 2 * inst.cost[0][v] * crossings
                prefix = hi
        return sum(per.values(), Fraction(0)), per

    fwd_total, fwd_per = evaluate(route.customers)
    rev_total, rev_per = evaluate(tuple(reversed(route.customers)))
    if rev_total < fwd_total:
        return RecourseBreakdown(rev_total, rev_per)
    return RecourseBreakdown(fwd_total, fwd_per)


def maxflow_membership(inst: Instance, route: Route, xi: int, y) -> bool:
    """Membership via the unload feasibility network, solved by max-flow.

    Nodes: route customers plus the depot.  Forward route arcs carry capacity
    C, unload arcs (customer -> depot) capacity C * y_v; customers supply
    their scenario demand, the depot absorbs the total.  The policy is an
    unload action iff the supply saturates.
    """
    if isinstance(y, dict):
        counts = [int(y.get(v, 0)) for v in route.customers]
    else:
        counts = [int(c) for c in y]
    if any(c < 0 for c in counts):
        raise ValueError("unload counts must be nonnegative")
    C = inst.capacity
    seq = route.customers
    n = len(seq)
    # node ids: 0..n-1 customers in route order, n = depot, n+1 = source, n+2 = sink
    depot, source, sink = n, n + 1, n + 2
    cap: dict[tuple[int, int], int] = {}

    def add(u, v, c):
        cap[(u, v)] = cap.get((u, v), 0) + c

    add(depot, 0, C)  # depot -> first customer
    for i in range(n - 1):
        add(i, i + 1, C)
    add(n - 1, depot, C)  # last customer -> depot (route return arc)
    for i in range(n):
        add(i, depot, C * counts[i])  # unload arcs
    demand_total = 0
    for i, v in enumerate(seq):
        d = inst.demand(xi, v)
        demand_total += d
        add(source, i, d)
    add(depot, sink, demand_total)
    return _max_flow(cap, source, sink) >= demand_total


def _max_flow(cap: dict[tuple[int, int], int], s: int, t: int) -> int:
    """Edmonds-Karp on an adjacency dict; capacities are integers."""
    flow: dict[tuple[int, int], int] = {}
    adj: dict[int, set[int]] = {}
    for (u, v) in cap:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)

    def residual(u, v):
        return cap.get((u, v), 0) - flow.get((u, v), 0) + flow.get((v, u), 0)

    total = 0
    while True:
        parent = {s: None}
        queue = deque([s])
        while queue and t not in parent:
            u = queue.popleft()
            for v in adj.get(u, ()):
                if v not in parent and residual(u, v) > 0:
                    parent[v] = u
                    queue.append(v)
        if t not in parent:
            return total
        # bottleneck along the path
        path = []
        v = t
        while parent[v] is not None:
            path.append((parent[v], v))
            v = parent[v]
        aug = min(residual(u, v) for u, v in path)
        for u, v in path:
            back = min(flow.get((v, u), 0), aug)
            if back:
                flow[(v, u)] = flow.get((v, u), 0) - back
            rest = aug - back
            if rest:
                flow[(u, v)] = flow.get((u, v), 0) + rest
        total += aug


def hull_integrality_probe(
    inst: Instance,
    route: Route,
    trials: int,
    rng: random.Random,
    bounds: Optional[list[int]] = None,
) -> bool:
    """Random objectives over the unload polytope; every LP vertex must be
    integral within 1e-6 and stay feasible and optimal after rounding."""
    if len(route) > 8:
        raise ValueError("probe limited to routes of length 8")
    n = len(route.customers)
    if bounds is None:
        bounds = [1] * n
    for _ in range(trials):
        w = [Fraction(rng.randint(0, 20)) for _ in range(n)]
        for xi in range(inst.n_scenarios):
            spans = route_spans_with_requirements(inst, route, xi)
            model = lp_backend.LinearModel(name="hull-probe")
            for i in range(n):
                model.add_var(lb=0.0, ub=float(bounds[i]), obj=float(w[i]))
            for i, j, r in spans:
                model.add_row({t: 1.0 for t in range(i, j + 1)}, ">=", float(r))
            out = lp_backend.solve_lp(model, check_duality=False)
            if out.status != "optimal":
                return False
            rounded = []
            for val in out.x:
                r_ = round(val)
                if abs(val - r_) > lp_backend.INTEGRALITY_TOL:
                    return False
                rounded.append(int(r_))
            for i, j, r in spans:
                if sum(rounded[i : j + 1]) < r:
                    return False
            exact_obj = sum((wi * ci for wi, ci in zip(w, rounded)), Fraction(0))
            if abs(float(exact_obj) - out.objective) > 1e-6 * max(1.0, abs(out.objective)):
                return False
    return True


def plan_point(
    inst: Instance,
    plan: RoutingPlan,
    weights: RecourseWeights,
    recourse: str = "scenopt",
) -> tuple[dict, dict, dict]:
    """The integer feasible (x, theta, y) a plan induces, exact: theta at the
    recourse disaggregation, y the matching policy."""
    x = {e: Fraction(m) for e, m in plan.edge_multiplicities().items()}
    theta = {v: Fraction(0) for v in inst.customers}
    yvals: dict[tuple[int, int], Fraction] = {}
    for r in plan.routes:
        if recourse == "classical":
            br = classical_recourse(inst, r)
            for xi, counts in enumerate(_classical_policy_counts(inst, r)):
                for v, c in zip(r.customers, counts):
                    if c:
                        yvals[(xi, v)] = Fraction(c)
        else:
            res = scenario_optimal_recourse(inst, r, weights)
            br = res.breakdown
            for xi in range(inst.n_scenarios):
                for v in r.customers:
                    c = res.policy.y[xi][v - 1]
                    if c:
                        yvals[(xi, v)] = Fraction(c)
        for v, q in br.per_customer.items():
            theta[v] += q
    return x, theta, yvals


def all_plans(inst: Instance, first_stage: str = "subtour") -> Iterator[RoutingPlan]:
    for partition in set_partitions(list(inst.customers)):
        if first_stage == "cvrp":
            if inst.fleet_size is not None and len(partition) != inst.fleet_size:
                continue
            if any(inst.expected_demand_of(b) > inst.capacity for b in partition):
                continue
        for orders in itertools.product(
            *[list(_canonical_orders(tuple(sorted(b)))) for b in partition]
        ):
            yield RoutingPlan(tuple(Route(o) for o in orders))


def random_plan(rng: random.Random, inst: Instance) -> RoutingPlan:
    customers = list(inst.customers)
    rng.shuffle(customers)
    blocks: list[list[int]] = []
    for v in customers:
        if blocks and rng.random() < 0.6:
            rng.choice(blocks).append(v)
        else:
            blocks.append([v])
    return RoutingPlan(tuple(Route(tuple(b)) for b in blocks))


def feasible_points(
    inst: Instance,
    weights: RecourseWeights,
    recourse: str = "scenopt",
    first_stage: str = "subtour",
) -> Iterator[tuple[dict, dict, dict, RoutingPlan]]:
    """Every integer feasible (x, theta, y); for cut validity checks on small
    instances."""
    for plan in all_plans(inst, first_stage):
        x, theta, yvals = plan_point(inst, plan, weights, recourse)
        yield x, theta, yvals, plan


def sample_relaxation_points(
    rng: random.Random, inst: Instance, count: int
) -> Iterator[tuple[dict, dict]]:
    """(x, theta) points with x inside the first-stage LP relaxation: convex
    combinations of random integer plans, theta independently nonnegative.

    Dominance statements quantify over such points, with theta free.
    """
    scale = max(float(2 * inst.cost[0][v]) for v in inst.customers)
    for _ in range(count):
        plans = [random_plan(rng, inst) for _ in range(rng.randint(1, 3))]
        lam = [rng.random() for _ in plans]
        total = sum(lam)
        lam = [l / total for l in lam]
        x: dict = {}
        for plan, weight in zip(plans, lam):
            for e, m in plan.edge_multiplicities().items():
                x[e] = x.get(e, 0.0) + weight * m
        theta = {v: rng.random() * scale for v in inst.customers}
        yield x, theta


def _classical_policy_counts(inst: Instance, route: Route) -> list[tuple[int, ...]]:
    """Per-scenario counts of the orientation the classical policy commits to,
    chosen by expected cost exactly as classical_recourse does."""
    from vrpsd.recourse import simulate_classical

    def totals(reverse: bool):
        rows = [simulate_classical(inst, route, xi, reverse=reverse) for xi in range(inst.n_scenarios)]
        cost = sum(
            (
                p * 2 * inst.cost[0][v] * c
                for xi, p in enumerate(inst.probabilities)
                for v, c in zip(route.customers, rows[xi])
            ),
            Fraction(0),
        )
        return cost, rows

    fwd_cost, fwd_rows = totals(False)
    rev_cost, rev_rows = totals(True)
    return rev_rows if rev_cost < fwd_cost else fwd_rows
