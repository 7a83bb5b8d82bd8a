"""Violated-cut discovery.

Capacity/subtour sets come from a connected-component seed plus greedy
grow/shrink local search (an in-house stand-in for an external separation
package; the only contract used is "return up to ten violated sets").
Scenario inequalities are found by scanning scenarios in decreasing total
demand, with a feasibility-MIP fallback, and one orchestration routine walks
the capacity pass, the set-cut-or-projection pass and the partial-route
pass in that order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

from vrpsd import cuts as cutlib
from vrpsd import lp_backend
from vrpsd.cuts import Cut
from vrpsd.model import Edge, Instance, PartialRoute, routes_of
from vrpsd.recourse import RecourseWeights

SUPPORT_EPS = 1e-6
CHECK_DOMINANCE = True


class DominanceError(AssertionError):
    """A projected inequality failed to imply the cut it must dominate."""


@dataclass
class SeparationContext:
    """One candidate solution plus the flags steering a separation round."""

    inst: Instance
    weights: RecourseWeights
    xbar: Mapping[Edge, float]
    thetabar: Optional[Mapping[int, float]] = None
    ybar: Optional[Mapping[tuple[int, int], float]] = None
    use_sri: bool = True
    recourse: str = "scenopt"  # classical | scenopt
    first_stage: str = "subtour"  # subtour | cvrp
    tol: float = lp_backend.CUT_VIOLATION_TOL
    scenario_order: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.scenario_order:
            order = sorted(
                range(self.inst.n_scenarios),
                key=lambda xi: (-self.inst.total_demand(xi), xi),
            )
            self.scenario_order = tuple(order)
        totals = [self.inst.total_demand(xi) for xi in self.scenario_order]
        assert all(a >= b for a, b in zip(totals, totals[1:]))


# -- capacity / subtour sets -------------------------------------------------


def _violation(xbar, S: frozenset[int], demand, C) -> float:
    if not S:
        return -math.inf
    k = math.ceil(sum((Fraction(demand[v]) for v in S), Fraction(0)) / C)
    xe = float(cutlib.x_sum_over(xbar, cutlib.edges_within(S)))
    return xe - (len(S) - k)


def separate_rci(
    xbar: Mapping[Edge, float],
    demand: Mapping[int, object],
    C: int,
    n_customers: int,
    max_sets: int = 10,
    tol: float = lp_backend.CUT_VIOLATION_TOL,
) -> list[frozenset[int]]:
    """Customer sets S with x(E(S)) > |S| - ceil(d(S)/C) + tol, at most ten.

    Seeds are the connected components of the support graph without the
    depot; each seed is improved by a greedy add/remove local search on the
    violation.  Heuristic: an empty answer proves nothing.
    """
    customers = list(range(1, n_customers + 1))
    adj: dict[int, set[int]] = {v: set() for v in customers}
    for (u, v), val in xbar.items():
        if u == 0 or val <= SUPPORT_EPS:
            continue
        adj[u].add(v)
        adj[v].add(u)

    components: list[frozenset[int]] = []
    seen: set[int] = set()
    for v in customers:
        if v in seen:
            continue
        comp = {v}
        stack = [v]
        seen.add(v)
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    comp.add(w)
                    stack.append(w)
        if comp:
            components.append(frozenset(comp))

    found: dict[frozenset[int], float] = {}

    def consider(S: frozenset[int]):
        if S and S not in found:
            viol = _violation(xbar, S, demand, C)
            if viol > tol:
                found[S] = viol

    # contiguous windows of path/cycle-shaped components (route segments)
    for comp in components:
        if any(len(adj[v]) > 2 for v in comp):
            continue
        start = min(
            (v for v in comp if len(adj[v]) <= 1),
            default=min(comp),
        )
        order = [start]
        prev = None
        while True:
            nxt = [w for w in sorted(adj[order[-1]]) if w != prev and w not in order]
            if not nxt:
                break
            prev = order[-1]
            order.append(nxt[0])
        for i in range(len(order)):
            for j in range(i, len(order)):
                consider(frozenset(order[i : j + 1]))

    for comp in components:
        consider(comp)
        current = set(comp)
        best = _violation(xbar, frozenset(current), demand, C)
        for _ in range(2 * n_customers):
            move = None
            move_val = best
            for v in customers:
                if v in current:
                    if len(current) > 1:
                        cand = frozenset(current - {v})
                        val = _violation(xbar, cand, demand, C)
                        if val > move_val + 1e-12:
                            move, move_val = ("drop", v, cand), val
                else:
                    cand = frozenset(current | {v})
                    val = _violation(xbar, cand, demand, C)
                    if val > move_val + 1e-12:
                        move, move_val = ("add", v, cand), val
            if move is None:
                break
            current = set(move[2])
            best = move_val
            consider(move[2])

    ranked = sorted(found.items(), key=lambda kv: (-kv[1], tuple(sorted(kv[0]))))
    return [S for S, _ in ranked[:max_sets]]


def separate_sec(
    xbar: Mapping[Edge, float], n_customers: int, max_sets: int = 10, tol: float = 1e-4
) -> list[frozenset[int]]:
    """Subtour sets: x(E(S)) > |S| - 1; unit demands with a huge capacity."""
    demand = {v: 1 for v in range(1, n_customers + 1)}
    return separate_rci(xbar, demand, max(n_customers, 1), n_customers, max_sets, tol)


# -- scenario-inequality heuristics ------------------------------------------


def separate_sri_heuristic(ctx: SeparationContext) -> list[tuple[frozenset[int], tuple[int, ...]]]:
    """Scan scenarios by total demand; capacity sets for d^xi seed the search.

    For each candidate set, collect every scenario whose inequality the
    candidate policy violates; stop after the first scenario that produced
    any pair, so later scenarios are never scanned once something is found.
    """
    if ctx.ybar is None:
        raise ValueError("policy values required for scenario-inequality separation")
    inst = ctx.inst
    out: list[tuple[frozenset[int], tuple[int, ...]]] = []
    for xi in ctx.scenario_order:
        demand = {v: inst.demand(xi, v) for v in inst.customers}
        for S in separate_rci(ctx.xbar, demand, inst.capacity, inst.n_customers):
            pool = [
                xi2
                for xi2 in range(inst.n_scenarios)
                if cutlib.sri_violation(inst, ctx.xbar, ctx.ybar, S, xi2) > ctx.tol
            ]
            if pool:
                out.append((S, tuple(pool)))
        if out:
            break
    return out


MILP_THRESHOLD = 0.01


def separate_sri_milp(
    ctx: SeparationContext,
    xi: int,
    time_limit: float = 30.0,
    epsilon: float = 0.5,
) -> Optional[frozenset[int]]:
    """Feasibility MIP that finds a set violating scenario xi by >= 0.01.

    Integer gamma tracks ceil(d(S)/C) - 1 through gamma*C <= d(S) - epsilon;
    products x_e * [u, v in S] are linearized.  Returns None on infeasible
    or timeout; heuristic overall because of the threshold and time cap.
    """
    if ctx.ybar is None:
        raise ValueError("policy values required for scenario-inequality separation")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie strictly between 0 and 1")
    inst = ctx.inst
    n = inst.n_customers
    model = lp_backend.LinearModel(name=f"sri-separation-{xi}")
    gamma = model.add_var(lb=-2.0, ub=float(n + 1), integer=True, name="gamma")
    qvar = {v: model.add_var(lb=0.0, ub=1.0, integer=True, name=f"q{v}") for v in inst.customers}
    hvar = {}
    for u in inst.customers:
        for v in inst.customers:
            if u < v:
                hvar[(u, v)] = model.add_var(lb=0.0, ub=1.0, name=f"h{u}_{v}")
    # gamma * C <= sum d_v q_v - epsilon
    row = {gamma: float(inst.capacity)}
    for v in inst.customers:
        row[qvar[v]] = row.get(qvar[v], 0.0) - float(inst.demand(xi, v))
    model.add_row(row, "<=", -epsilon)
    for (u, v), h in hvar.items():
        model.add_row({h: 1.0, qvar[u]: -1.0}, "<=", 0.0)
        model.add_row({h: 1.0, qvar[v]: -1.0}, "<=", 0.0)
        model.add_row({h: 1.0, qvar[u]: -1.0, qvar[v]: -1.0}, ">=", -1.0)
    # (gamma + 1) - sum (ybar_v + 1) q_v + sum xbar_e h_e >= threshold
    row = {gamma: 1.0}
    for v in inst.customers:
        row[qvar[v]] = -(float(ctx.ybar.get((xi, v), 0.0)) + 1.0)
    for e, h in hvar.items():
        xv = float(ctx.xbar.get(e, 0.0))
        if xv:
            row[h] = row.get(h, 0.0) + xv
    model.add_row(row, ">=", MILP_THRESHOLD - 1.0)

    outcome = lp_backend.solve_mip(model, time_limit=time_limit)
    if outcome.status != "optimal" or outcome.x is None:
        return None
    S = frozenset(v for v in inst.customers if outcome.x[qvar[v]] > 0.5)
    if not S:
        return None
    gamma_val = round(outcome.x[gamma])
    k = inst.k_scenario(xi, S)
    if gamma_val > k - 1:
        raise lp_backend.BackendError("separation MIP returned gamma above ceil(d(S)/C) - 1")
    violation = float(cutlib.sri_violation(inst, ctx.xbar, ctx.ybar, S, xi))
    if violation < MILP_THRESHOLD - 1e-9:
        raise lp_backend.BackendError("separation MIP returned a set below the threshold")
    return S


# -- partial-route extraction -------------------------------------------------


def extract_partial_routes(
    xbar: Mapping[Edge, float],
    thetabar: Optional[Mapping[int, float]],
    n_customers: int,
    hi: float = 0.9,
    lo: float = 0.1,
) -> list[PartialRoute]:
    """Integer points decompose into all-singleton partial routes; fractional
    points yield depot-anchored chains of near-one edges, with an adjacent
    fractional cluster collapsed into one trailing set.  May abstain."""
    is_integer = all(abs(val - round(val)) <= 1e-6 for val in xbar.values())
    if is_integer:
        x_int = {e: int(round(val)) for e, val in xbar.items() if round(val) != 0}
        try:
            plan = routes_of(x_int, n_customers)
        except ValueError:
            return []
        return [PartialRoute.from_route(r) for r in plan.routes]

    customers = range(1, n_customers + 1)
    high_adj: dict[int, list[int]] = {v: [] for v in customers}
    frac_adj: dict[int, list[int]] = {v: [] for v in customers}
    depot_anchor: set[int] = set()
    for (u, v), val in xbar.items():
        if u == 0:
            if val >= hi:
                depot_anchor.add(v)
            continue
        if val >= hi:
            high_adj[u].append(v)
            high_adj[v].append(u)
        elif val > lo:
            frac_adj[u].append(v)
            frac_adj[v].append(u)

    out: list[PartialRoute] = []
    used: set[int] = set()
    for start in sorted(depot_anchor):
        if start in used:
            continue
        chain = [start]
        used.add(start)
        cur, prev = start, None
        while True:
            nxt = [w for w in sorted(high_adj[cur]) if w != prev and w not in used]
            if len(nxt) != 1:
                break
            cur, prev = nxt[0], cur
            chain.append(cur)
            used.add(cur)
        sets: list[frozenset[int]] = [frozenset((v,)) for v in chain]
        tail_cluster = {
            w for w in frac_adj[chain[-1]] if w not in used
        }
        if tail_cluster:
            # absorb the whole fractional component hanging off the chain end
            stack = list(tail_cluster)
            while stack:
                u = stack.pop()
                for w in frac_adj[u]:
                    if w not in used and w not in tail_cluster:
                        tail_cluster.add(w)
                        stack.append(w)
            sets.append(frozenset(tail_cluster))
            used |= tail_cluster
        try:
            out.append(PartialRoute(tuple(sets)))
        except ValueError:
            continue
    return out


# -- orchestration -------------------------------------------------------------


def _candidate_violation(ctx: SeparationContext, cut: Cut) -> float:
    return float(cut.violation(xbar=ctx.xbar, ybar=ctx.ybar, thetabar=ctx.thetabar))


def add_set_cut_or_sri(
    ctx: SeparationContext, S: frozenset[int], k_prime: int
) -> list[Cut]:
    """Set-support step: projected aggregated inequality when use_sri, else
    the greedy-bound set cut; returns the cuts violated at the candidate."""
    inst = ctx.inst
    bundle = cutlib.set_cut_bundle(inst, S, k_prime, ctx.weights)
    if ctx.use_sri:
        xe = float(cutlib.x_sum_over(ctx.xbar, cutlib.edges_within(S)))
        pool = [
            xi
            for xi in range(inst.n_scenarios)
            if inst.probabilities[xi] > 0 and inst.k_scenario(xi, S) + xe - len(S) > 0
        ]
        if ctx.first_stage == "cvrp":
            kbar = inst.k_bar(S)
            pool = [xi for xi in pool if inst.k_scenario(xi, S) > kbar]
        if not pool or any(ctx.weights.weight(v) == 0 for v in S):
            return []
        cut = cutlib.projected_aggregated_sri(inst, S, pool, ctx.weights)
        if CHECK_DOMINANCE and bundle.dominating is not None and xe <= len(S) - k_prime + 1e-9:
            if cutlib.dominance_violated(bundle.ils, bundle.dominating, ctx.xbar, ctx.thetabar):
                raise DominanceError(f"set-cut dominance failed on S={sorted(S)}")
        if _candidate_violation(ctx, cut) > ctx.tol:
            return [cut]
        return []
    if bundle.value <= 0:
        return []
    if _candidate_violation(ctx, bundle.ils) > ctx.tol:
        return [bundle.ils]
    return []


def add_partial_route_cut_or_sri(ctx: SeparationContext, H: PartialRoute) -> list[Cut]:
    """Partial-route step: dominating projected inequality when use_sri, else
    the W_OF cut; an inexact dual certificate also posts the exact-bound W_OF cut."""
    bundle = cutlib.partial_route_bundle(ctx.inst, H, ctx.weights)
    if bundle.value <= 0:
        return []
    if ctx.use_sri:
        cut = bundle.dominating
        if CHECK_DOMINANCE and cut is not None and bundle.certificate_exact:
            if cutlib.dominance_violated(bundle.ils, cut, ctx.xbar, ctx.thetabar):
                raise DominanceError(f"partial-route dominance failed on {H.sets}")
        out = []
        if cut is not None and _candidate_violation(ctx, cut) > ctx.tol:
            out.append(cut)
        if not bundle.certificate_exact and _candidate_violation(ctx, bundle.ils) > ctx.tol:
            out.append(bundle.ils)
        return out
    if _candidate_violation(ctx, bundle.ils) > ctx.tol:
        return [bundle.ils]
    return []


def separation_round(ctx: SeparationContext) -> list[Cut]:
    """One full pass: capacity/subtour sets first (return if any), then set
    cuts / projections and partial-route machinery, then the classical
    fallback bound.  Output is deterministic (sorted by serialization)."""
    inst = ctx.inst
    found: list[Cut] = []
    seen: set[str] = set()

    def push(cut: Optional[Cut]) -> bool:
        if cut is None:
            return False
        key = cut.key()
        if key in seen:
            return False
        if _candidate_violation(ctx, cut) > ctx.tol:
            seen.add(key)
            found.append(cut)
            return True
        return False

    if ctx.first_stage == "cvrp":
        demand = {v: inst.expected_demand(v) for v in inst.customers}
        sets = separate_rci(ctx.xbar, demand, inst.capacity, inst.n_customers, tol=ctx.tol)
    else:
        sets = separate_sec(ctx.xbar, inst.n_customers, tol=ctx.tol)
    for S in sets:
        k_prime = inst.k_bar(S) if ctx.first_stage == "cvrp" else 1
        push(cutlib.rci_cut(S, k_prime))
        if ctx.thetabar is not None:
            for cut in add_set_cut_or_sri(ctx, S, k_prime):
                push(cut)
    if found:
        return sorted(found, key=Cut.key)

    if ctx.thetabar is None:
        return []
    for H in extract_partial_routes(ctx.xbar, ctx.thetabar, inst.n_customers):
        S = H.customers()
        k_prime = inst.k_bar(S) if ctx.first_stage == "cvrp" else 1
        if any([push(c) for c in add_set_cut_or_sri(ctx, S, k_prime)]):
            continue
        if any([push(c) for c in add_partial_route_cut_or_sri(ctx, H)]):
            continue
        if ctx.recourse == "classical":
            # classical-recourse fallback bound, valid over every plan whose
            # route extends H (the exact per-route enforcement is the route
            # equality cut added by the solver's verifier)
            bundle = cutlib.partial_route_bundle(inst, H, ctx.weights)
            if bundle.value > 0:
                push(bundle.ils)
    return sorted(found, key=Cut.key)
