"""Recourse evaluation engines.

Three views of the same object: the classical back-and-forth policy by
simulation, membership testing for arbitrary integer unload-count vectors
via contiguous-subroute inequalities, and the per-scenario optimal recourse
cost as an LP whose feasible set is the box-bounded convex hull of unload
policies (an interval matrix, so every vertex is integral and the optimum
is exact in integers).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from vrpsd import lp_backend
from vrpsd.model import Instance, Route


class InfeasibleRecourseError(ValueError):
    """No unload policy within the per-customer bounds exists."""


@dataclass(frozen=True)
class RecourseWeights:
    """Per-customer unload weights w (index v-1) and trip bounds b."""

    w: tuple[Fraction, ...]
    b: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "w", tuple(Fraction(x) for x in self.w))
        object.__setattr__(self, "b", tuple(int(x) for x in self.b))
        if len(self.w) != len(self.b):
            raise ValueError("w and b must have one entry per customer")
        if any(x < 0 for x in self.w):
            raise ValueError("weights must be nonnegative")
        if any(x < 0 for x in self.b):
            raise ValueError("bounds must be nonnegative")

    @classmethod
    def classical(cls, inst: Instance, bound: int = 1) -> "RecourseWeights":
        """w_v = 2 c_0v; one unload per customer suffices for the classical policy."""
        w = tuple(Fraction(2 * inst.cost[0][v]) for v in inst.customers)
        return cls(w, tuple(bound for _ in inst.customers))

    @classmethod
    def preventive(cls, inst: Instance, bound: int = 2) -> "RecourseWeights":
        """Cheapest detour through the depot, allowing preventive returns."""
        w = []
        for v in inst.customers:
            best = 2 * inst.cost[0][v]
            for u in inst.customers:
                if u == v:
                    continue
                best = min(best, inst.cost[0][u] + inst.cost[0][v] - inst.cost[u][v])
            w.append(Fraction(max(0, best)))
        return cls(tuple(w), tuple(bound for _ in inst.customers))

    def weight(self, v: int) -> Fraction:
        return self.w[v - 1]

    def bound(self, v: int) -> int:
        return self.b[v - 1]


@dataclass(frozen=True)
class RecoursePolicy:
    """Unload counts per scenario per customer (N x n, zero off-route)."""

    y: tuple[tuple[int, ...], ...]
    b: tuple[int, ...]

    def __post_init__(self):
        for row in self.y:
            for v, count in enumerate(row, start=1):
                if count < 0 or count > self.b[v - 1]:
                    raise ValueError(f"unload count {count} outside [0, b] at customer {v}")

    def scenario(self, xi: int) -> tuple[int, ...]:
        return self.y[xi]


@dataclass(frozen=True)
class RecourseBreakdown:
    """Route recourse cost split per customer (Q(R) = sum of Q(R, v))."""

    total: Fraction
    per_customer: dict[int, Fraction]

    def __post_init__(self):
        if sum(self.per_customer.values(), Fraction(0)) != self.total:
            raise ValueError("breakdown does not sum to the total")

    def over(self, S) -> Fraction:
        return sum((q for v, q in self.per_customer.items() if v in S), Fraction(0))


def simulate_classical(
    inst: Instance, route: Route, xi: int, reverse: bool = False
) -> tuple[int, ...]:
    """Walk the directed route, one failure where cumulative load crosses tC.

    Returns failure counts aligned with route.customers (storage order, not
    traversal order).  Requires per-customer demands at most C.
    """
    order = tuple(reversed(route.customers)) if reverse else route.customers
    C = inst.capacity
    counts = {v: 0 for v in route.customers}
    load = 0
    for v in order:
        d = inst.demand(xi, v)
        if d > C:
            raise InfeasibleRecourseError(
                f"demand {d} above capacity {C} at customer {v}; preprocess first"
            )
        load += d
        if load > C:
            counts[v] += 1
            load -= C
    return tuple(counts[v] for v in route.customers)


def classical_recourse(inst: Instance, route: Route) -> RecourseBreakdown:
    """Expected back-and-forth cost of the cheaper orientation (tie: forward)."""

    def evaluate(reverse: bool) -> tuple[Fraction, dict[int, Fraction]]:
        per = {v: Fraction(0) for v in route.customers}
        for xi, p in enumerate(inst.probabilities):
            counts = simulate_classical(inst, route, xi, reverse=reverse)
            for v, k in zip(route.customers, counts):
                per[v] += p * 2 * inst.cost[0][v] * k
        return sum(per.values(), Fraction(0)), per

    fwd_total, fwd_per = evaluate(False)
    rev_total, rev_per = evaluate(True)
    if rev_total < fwd_total:
        return RecourseBreakdown(rev_total, rev_per)
    return RecourseBreakdown(fwd_total, fwd_per)


def is_recourse_action(inst: Instance, route: Route, xi: int, y, cross_check: bool = False) -> bool:
    """Membership test: y(R') >= d(R')/C - 1 on every contiguous subroute.

    `y` maps customers to integer unload counts (mapping keyed by customer or
    sequence aligned with route.customers).  Exact integer arithmetic.  With
    cross_check (debug/test builds) the independent max-flow membership in
    the oracles module is consulted and must agree.
    """
    counts = _route_counts(route, y)
    if any(c < 0 for c in counts):
        raise ValueError("unload counts must be nonnegative")
    C = inst.capacity
    demands = [inst.demand(xi, v) for v in route.customers]
    prefix_d = [0]
    prefix_y = [0]
    for d, c in zip(demands, counts):
        prefix_d.append(prefix_d[-1] + d)
        prefix_y.append(prefix_y[-1] + c)
    n = len(demands)
    answer = True
    for i in range(n):
        if not answer:
            break
        for j in range(i, n):
            dsum = prefix_d[j + 1] - prefix_d[i]
            ysum = prefix_y[j + 1] - prefix_y[i]
            if C * ysum < dsum - C:
                answer = False
                break
    if cross_check:
        from vrpsd.oracles import maxflow_membership

        flow_answer = maxflow_membership(inst, route, xi, counts)
        if flow_answer != answer:
            raise AssertionError(
                f"membership tests disagree on {route.customers}, y={counts}: "
                f"subroute={answer}, max-flow={flow_answer}"
            )
    return answer


def _route_counts(route: Route, y) -> list[int]:
    if isinstance(y, Mapping):
        return [int(y.get(v, 0)) for v in route.customers]
    seq = list(y)
    if len(seq) != len(route.customers):
        raise ValueError("count vector length must match the route")
    return [int(c) for c in seq]


def route_spans_with_requirements(
    inst: Instance, route: Route, xi: int, minimal_only: bool = False
) -> list[tuple[int, int, int]]:
    """Contiguous spans (i, j, k-1) with k = vehicles needed, k >= 2.

    Spans whose requirement is zero never bind.  With minimal_only, keep only
    spans both of whose one-step shrinkings strictly drop the requirement;
    they imply all others and there are at most len(route) * (k(route)-1).
    """
    demands = [inst.demand(xi, v) for v in route.customers]
    return _spans_with_requirements(demands, inst.capacity, minimal_only)


def _spans_with_requirements(
    demands: Sequence[int], C: int, minimal_only: bool
) -> list[tuple[int, int, int]]:
    n = len(demands)
    prefix = [0]
    for d in demands:
        prefix.append(prefix[-1] + d)

    def k(i: int, j: int) -> int:
        total = prefix[j + 1] - prefix[i]
        return -(-total // C)

    out = []
    for i in range(n):
        for j in range(i, n):
            kij = k(i, j)
            if kij < 2:
                continue
            if minimal_only:
                if j > i and (k(i + 1, j) == kij or k(i, j - 1) == kij):
                    continue
            out.append((i, j, kij - 1))
    return out


@dataclass(frozen=True)
class ScenarioOptimalResult:
    value: Fraction
    policy: RecoursePolicy
    breakdown: RecourseBreakdown
    per_scenario: tuple[Fraction, ...]


def scenario_optimal_recourse(
    inst: Instance,
    route: Route,
    weights: RecourseWeights,
    minimal_only: bool = False,
) -> ScenarioOptimalResult:
    """Cheapest unload policy per scenario, solved as an LP per scenario.

    The LP minimizes w^T y over the contiguous-subroute inequalities and the
    box [0, b]; the constraint matrix has the consecutive-ones property, so
    an optimal vertex is integral and is recovered exactly by rounding.  The
    returned policy is that vertex (deterministic; which optimal vertex is
    returned on ties is not contractual).  Raises InfeasibleRecourseError if
    the box excludes every policy (possible only when some b_v = 0).
    """
    n = inst.n_customers
    pos = {v: i for i, v in enumerate(route.customers)}
    per_scenario: list[Fraction] = []
    rows_y: list[list[int]] = []
    per_customer = {v: Fraction(0) for v in route.customers}
    for xi, p in enumerate(inst.probabilities):
        spans = route_spans_with_requirements(inst, route, xi, minimal_only=minimal_only)
        y_int = _solve_unload_lp(
            [weights.weight(v) for v in route.customers],
            [weights.bound(v) for v in route.customers],
            [(i, j, r) for (i, j, r) in spans],
        )
        value = sum(
            (weights.weight(v) * y_int[pos[v]] for v in route.customers), Fraction(0)
        )
        per_scenario.append(value)
        full = [0] * n
        for v in route.customers:
            full[v - 1] = y_int[pos[v]]
        rows_y.append(full)
        for v in route.customers:
            per_customer[v] += p * weights.weight(v) * y_int[pos[v]]
    total = sum(
        (p * q for p, q in zip(inst.probabilities, per_scenario)), Fraction(0)
    )
    policy = RecoursePolicy(tuple(tuple(r) for r in rows_y), weights.b)
    breakdown = RecourseBreakdown(total, per_customer)
    return ScenarioOptimalResult(total, policy, breakdown, tuple(per_scenario))


def _solve_unload_lp(
    w: Sequence[Fraction],
    b: Sequence[int],
    spans: Sequence[tuple[int, int, int]],
) -> list[int]:
    """Solve min w^T y over span covers and the box; return the integer vertex."""
    m = len(w)
    if not spans:
        return [0] * m
    if sum(b[i] for i in range(m)) < max(r for (_i, _j, r) in spans):
        raise InfeasibleRecourseError("unload bounds too small for some span requirement")
    model = lp_backend.LinearModel(name="unload")
    for i in range(m):
        model.add_var(lb=0.0, ub=float(b[i]), obj=float(w[i]))
    for i, j, r in spans:
        if sum(b[t] for t in range(i, j + 1)) < r:
            raise InfeasibleRecourseError("unload bounds too small on a span")
        model.add_row({t: 1.0 for t in range(i, j + 1)}, ">=", float(r), tag=("span", i, j))
    outcome = lp_backend.solve_lp(model, check_duality=False)
    if outcome.status != "optimal":
        raise InfeasibleRecourseError(f"unload LP ended {outcome.status}")
    y = _round_integral_vertex(outcome.x, b, spans)
    if y is None:
        y = _enumerate_unload(w, b, spans)
        if y is None:
            raise lp_backend.BackendError("unload LP vertex failed integrality recovery")
    return y


def _round_integral_vertex(x, b, spans) -> Optional[list[int]]:
    y = []
    for i, val in enumerate(x):
        r = round(val)
        if abs(val - r) > lp_backend.INTEGRALITY_TOL:
            return None
        r = min(max(int(r), 0), b[i])
        y.append(r)
    for i, j, r in spans:
        if sum(y[i : j + 1]) < r:
            return None
    return y


def _enumerate_unload(w, b, spans) -> Optional[list[int]]:
    # exhaustive fallback; only reachable if the LP returned a non-vertex
    best = None
    best_val = None
    for cand in itertools.product(*[range(bi + 1) for bi in b]):
        if any(sum(cand[i : j + 1]) < r for i, j, r in spans):
            continue
        val = sum((wi * ci for wi, ci in zip(w, cand)), Fraction(0))
        if best_val is None or val < best_val:
            best, best_val = list(cand), val
    return best
