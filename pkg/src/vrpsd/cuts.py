"""Cut algebra for the (x, theta, y) and (x, theta) formulations.

Every cut is normalized to

    sum(theta_coeffs * theta) + sum(y_coeffs * y) >= sum(x_coeffs * x) + rhs

with exact rational coefficients; conversion to floats happens only when a
cut becomes a solver row.  Projection to (x, theta) space follows a single
recipe: combine scenario inequalities and y upper bounds with multipliers
(alpha >= 0, beta <= 0), then replace the y-part by theta coefficients
phi_v = (max_xi a_v / (p_xi w_v))^+.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from vrpsd.lp_backend import INTEGRALITY_TOL, BackendError, LinearModel, solve_lp
from vrpsd.model import Edge, Instance, PartialRoute, Route, edge
from vrpsd.recourse import RecourseWeights, _spans_with_requirements

# Test hook for cmd_verify --mutate: "correct" or "wrong-phi".
_PHI_MODE = "correct"


class InfeasibleBoundError(ValueError):
    """Bound LP infeasible: some scenario needs more unloads than b allows."""


@dataclass
class Cut:
    """One valid inequality; see the module docstring for the normal form."""

    kind: str  # rci | sri | agg_sri | proj_sri | set | partial_route | route
    theta_coeffs: dict[int, Fraction] = field(default_factory=dict)
    x_coeffs: dict[Edge, Fraction] = field(default_factory=dict)
    y_coeffs: dict[tuple[int, int], Fraction] = field(default_factory=dict)
    rhs: Fraction = Fraction(0)
    support: tuple = ()

    def __post_init__(self):
        self.theta_coeffs = {v: Fraction(c) for v, c in self.theta_coeffs.items() if c != 0}
        self.x_coeffs = {e: Fraction(c) for e, c in self.x_coeffs.items() if c != 0}
        self.y_coeffs = {k: Fraction(c) for k, c in self.y_coeffs.items() if c != 0}
        self.rhs = Fraction(self.rhs)

    def violation(self, xbar=None, ybar=None, thetabar=None):
        """rhs + x-part - theta-part - y-part at the candidate; > 0 means violated.

        Exact when fed exact values, float otherwise.  Missing candidate
        components are treated as zero.
        """
        val = self.rhs
        if self.x_coeffs:
            xb = xbar or {}
            val = val + sum(c * xb.get(e, 0) for e, c in self.x_coeffs.items())
        if self.theta_coeffs:
            tb = thetabar or {}
            val = val - sum(c * tb.get(v, 0) for v, c in self.theta_coeffs.items())
        if self.y_coeffs:
            yb = ybar or {}
            val = val - sum(c * yb.get(k, 0) for k, c in self.y_coeffs.items())
        return val

    def satisfied_by(self, xbar=None, ybar=None, thetabar=None, tol=0) -> bool:
        return self.violation(xbar, ybar, thetabar) <= tol

    def serialize(self) -> str:
        def fmt(items):
            return ",".join(f"{k}:{v}" for k, v in items) or "-"

        theta = fmt(sorted(self.theta_coeffs.items()))
        xs = fmt(sorted(self.x_coeffs.items()))
        ys = fmt(sorted(self.y_coeffs.items()))
        return f"{self.kind}; {self.support}; theta={theta} x={xs} y={ys}; rhs={self.rhs}"

    def key(self) -> str:
        return self.serialize()


def edges_within(S: Iterable[int]) -> list[Edge]:
    members = sorted(S)
    return [(u, v) for i, u in enumerate(members) for v in members[i + 1 :]]


def x_sum_over(xbar: Mapping[Edge, object], edges: Iterable[Edge]):
    return sum((xbar.get(e, 0) for e in edges), 0)


# -- first stage -----------------------------------------------------------


def rci_cut(S: Iterable[int], k: int) -> Cut:
    """x(E(S)) <= |S| - k (a subtour cut when k = 1)."""
    members = frozenset(S)
    return Cut(
        kind="rci",
        x_coeffs={e: Fraction(1) for e in edges_within(members)},
        rhs=Fraction(k - len(members)),
        support=(tuple(sorted(members)), k),
    )


# -- scenario recourse inequalities ---------------------------------------


def sri_cut(inst: Instance, S: Iterable[int], xi: int) -> Cut:
    members = frozenset(S)
    if not members:
        raise ValueError("empty support set")
    k = inst.k_scenario(xi, members)
    return Cut(
        kind="sri",
        y_coeffs={(xi, v): Fraction(1) for v in members},
        x_coeffs={e: Fraction(1) for e in edges_within(members)},
        rhs=Fraction(k - len(members)),
        support=(tuple(sorted(members)), xi),
    )


def aggregated_sri_cut(inst: Instance, S: Iterable[int], scenarios: Iterable[int]) -> Cut:
    members = frozenset(S)
    pool = tuple(sorted(set(scenarios)))
    if not members or not pool:
        raise ValueError("empty support")
    rhs = sum(inst.k_scenario(xi, members) for xi in pool) - len(pool) * len(members)
    return Cut(
        kind="agg_sri",
        y_coeffs={(xi, v): Fraction(1) for xi in pool for v in members},
        x_coeffs={e: Fraction(len(pool)) for e in edges_within(members)},
        rhs=Fraction(rhs),
        support=(tuple(sorted(members)), pool),
    )


def sri_violation(inst: Instance, xbar, ybar, S: Iterable[int], xi: int):
    """(k_xi(S) + x(E(S)) - |S|) - y^xi(S); positive iff violated."""
    members = frozenset(S)
    if not members:
        raise ValueError("empty support set")
    k = inst.k_scenario(xi, members)
    xe = x_sum_over(xbar, edges_within(members))
    ys = sum((ybar.get((xi, v), 0) for v in members), 0)
    return k + xe - len(members) - ys


def aggregate_sri(inst: Instance, xbar, ybar, S: Iterable[int], tol=0.0) -> Optional[Cut]:
    """Aggregated inequality over the scenarios violated at (xbar, ybar)."""
    members = frozenset(S)
    pool = [
        xi
        for xi in range(inst.n_scenarios)
        if sri_violation(inst, xbar, ybar, members, xi) > tol
    ]
    if not pool:
        return None
    return aggregated_sri_cut(inst, members, pool)


# -- projection to (x, theta) ----------------------------------------------


def _phi_value(ratios: Sequence[Fraction]) -> Fraction:
    best = max(ratios)
    return best if best > 0 else Fraction(0)


def project_inequality(
    a: Mapping[tuple[int, int], Fraction],
    x_part: Mapping[Edge, Fraction],
    constant: Fraction,
    weights: RecourseWeights,
    probabilities: Sequence[Fraction],
) -> Optional[Cut]:
    """Project sum_xi (a^xi)^T y^xi >= x_part . x + constant onto theta space.

    Returns None when the projection is all of the nonnegative orthant (some
    customer with w_v = 0 carries a positive coefficient); otherwise the
    theta coefficients are (max_xi a^xi_v / (p_xi w_v))^+ and the right-hand
    side is passed through unchanged.
    """
    if any(p < 0 for p in probabilities):
        raise ValueError("negative probability")
    by_customer: dict[int, list[tuple[int, Fraction]]] = {}
    for (xi, v), val in a.items():
        if val == 0:
            continue
        by_customer.setdefault(v, []).append((xi, Fraction(val)))
    theta: dict[int, Fraction] = {}
    for v, pairs in by_customer.items():
        w_v = weights.weight(v)
        # a positive coefficient on a y variable theta cannot see (zero
        # weight or zero-probability scenario) makes the projection trivial
        if any(val > 0 and probabilities[xi] * w_v == 0 for xi, val in pairs):
            return None
        if w_v == 0:
            continue
        pairs = [(xi, val) for xi, val in pairs if probabilities[xi] > 0]
        if not pairs:
            continue
        if _PHI_MODE == "wrong-phi":
            ratios = [val / probabilities[xi] for xi, val in pairs]
        else:
            ratios = [val / (probabilities[xi] * w_v) for xi, val in pairs]
        phi = _phi_value(ratios)
        if phi > 0:
            theta[v] = phi
    return Cut(
        kind="proj_sri",
        theta_coeffs=theta,
        x_coeffs=dict(x_part),
        rhs=Fraction(constant),
        support=("proj", tuple(sorted(theta))),
    )


def projected_aggregated_sri(
    inst: Instance,
    S: Iterable[int],
    scenarios: Iterable[int],
    weights: RecourseWeights,
    scenario_pool: str = "violated",
) -> Cut:
    """Theta-space projection of the aggregated inequality for (S, Xi).

    theta coefficient per v in S is max over the pool of 1 / (p_xi w_v); the
    pool is Xi itself by default, or every scenario with scenario_pool="all"
    (a weaker but still valid variant).  Every w_v on S must be positive.
    """
    members = sorted(set(S))
    pool = tuple(sorted(set(scenarios)))
    if not pool:
        raise ValueError("empty scenario subset")
    if any(weights.weight(v) == 0 for v in members):
        raise ValueError("projected aggregated inequality needs w_v > 0 on S")
    if any(inst.probabilities[xi] == 0 for xi in pool):
        raise ValueError("zero-probability scenario cannot be projected")
    if scenario_pool == "all":
        coeff_pool = range(inst.n_scenarios)
    elif scenario_pool == "violated":
        coeff_pool = pool
    else:
        raise ValueError(f"bad scenario_pool {scenario_pool!r}")
    theta = {
        v: max(Fraction(1) / (inst.probabilities[xi] * weights.weight(v)) for xi in coeff_pool)
        for v in members
    }
    if _PHI_MODE == "wrong-phi":
        theta = {v: max(Fraction(1) / inst.probabilities[xi] for xi in coeff_pool) for v in members}
    rhs = sum(inst.k_scenario(xi, members) for xi in pool) - len(pool) * len(members)
    return Cut(
        kind="proj_sri",
        theta_coeffs=theta,
        x_coeffs={e: Fraction(len(pool)) for e in edges_within(members)},
        rhs=Fraction(rhs),
        support=(tuple(members), pool),
    )


# -- activation functions ---------------------------------------------------


def activation_wdl(xbar, S: Iterable[int], k_prime: int):
    """1 + (x(E(S)) - |S| + k'); equals 1 on plans using exactly k' routes for S."""
    members = frozenset(S)
    return 1 + x_sum_over(xbar, edges_within(members)) - len(members) + k_prime


def wof_affine(H: PartialRoute) -> tuple[dict[Edge, Fraction], Fraction]:
    """W_OF as (x coefficients, constant): equals 1 when some route's subroute
    visits H's sets in order, and is at most 0 on other integer plans."""
    ell = len(H.sets)
    coeffs: dict[Edge, Fraction] = {}

    def bump(e: Edge, amount=1):
        coeffs[e] = coeffs.get(e, Fraction(0)) + amount

    const = Fraction(1) + Fraction(1 - len(H.customers()))
    for i, s in enumerate(H.sets):
        for e in edges_within(s):
            bump(e)
    for a, b in zip(H.sets[:-1], H.sets[1:]):
        for u in a:
            for v in b:
                bump(edge(u, v))
    for i in {2, ell - 1} & set(range(1, ell + 1)):
        s = H.sets[i - 1]
        const += Fraction(1 - len(s))
        for e in edges_within(s):
            bump(e)
    return coeffs, const


def activation_wof(xbar, H: PartialRoute):
    coeffs, const = wof_affine(H)
    return const + sum((c * xbar.get(e, 0) for e, c in coeffs.items()), 0)


def route_exact_affine(inst: Instance, route: Route) -> tuple[dict[Edge, Fraction], Fraction]:
    """Activation that is 1 exactly on plans containing this very route.

    1 + sum over interior route edges of (x_e - 1) minus every other edge
    incident to a route customer.  On integer first-stage points, equality
    to 1 forces all interior edges present with no stray incident edge,
    which by the degree-2 constraints pins both depot edges: the route is
    reproduced exactly.  Plays the role of an equality-set activation.
    """
    members = route.customer_set()
    interior = set(route.interior_edges())
    route_edges = set(route.edge_multiplicities())
    coeffs: dict[Edge, Fraction] = {e: Fraction(1) for e in interior}
    for v in members:
        for u in inst.vertices:
            if u == v:
                continue
            e = edge(u, v)
            if e in route_edges:
                continue
            coeffs[e] = coeffs.get(e, Fraction(0)) - 1
    const = Fraction(2 - len(route))
    return coeffs, const


def activation_route_exact(inst: Instance, xbar, route: Route):
    coeffs, const = route_exact_affine(inst, route)
    return const + sum((c * xbar.get(e, 0) for e, c in coeffs.items()), 0)


def set_ils_cut(S: Iterable[int], k_prime: int, bound: Fraction) -> Cut:
    """theta(S) >= bound * (1 + x(E(S)) - |S| + k')."""
    members = frozenset(S)
    bound = Fraction(bound)
    return Cut(
        kind="set",
        theta_coeffs={v: Fraction(1) for v in members},
        x_coeffs={e: bound for e in edges_within(members)},
        rhs=bound * (1 - len(members) + k_prime),
        support=(tuple(sorted(members)), k_prime),
    )


def partial_route_ils_cut(H: PartialRoute, bound: Fraction) -> Cut:
    """theta(V+(H)) >= bound * W_OF(x; H)."""
    coeffs, const = wof_affine(H)
    bound = Fraction(bound)
    return Cut(
        kind="partial_route",
        theta_coeffs={v: Fraction(1) for v in H.customers()},
        x_coeffs={e: bound * c for e, c in coeffs.items()},
        rhs=bound * const,
        support=tuple(tuple(sorted(s)) for s in H.sets),
    )


def route_equality_cut(inst: Instance, route: Route, bound: Fraction) -> Cut:
    """theta(V+(R)) >= bound exactly when the plan contains route R."""
    coeffs, const = route_exact_affine(inst, route)
    bound = Fraction(bound)
    return Cut(
        kind="route",
        theta_coeffs={v: Fraction(1) for v in route.customer_set()},
        x_coeffs={e: bound * c for e, c in coeffs.items()},
        rhs=bound * const,
        support=tuple(route.customers),
    )


# -- set cut bundle (greedy bound, closed-form duals, dominating projection) --


@dataclass(frozen=True)
class SetCutBundle:
    value: Fraction  # L*(S, k') = sum_xi p_xi L*_xi
    per_scenario: tuple[Fraction, ...]
    ils: Cut
    alpha: tuple[Fraction, ...]  # per scenario, multiplier of the S-inequality
    beta: tuple[dict[int, Fraction], ...]  # per scenario, y upper-bound multipliers
    dominating: Optional[Cut]


def set_cut_bundle(
    inst: Instance, S: Iterable[int], k_prime: int, weights: RecourseWeights
) -> SetCutBundle:
    """Greedy recourse bound for serving S with k' routes, plus certificates.

    Failures beyond k' are assigned to the cheapest members first; the dual
    pair (alpha, beta) certifying the bound has the closed form alpha =
    w_(pivot), beta_v = w_v - w_(pivot) on the members before the pivot.  The
    dominating projected inequality is the theta-space image of the
    probability-scaled certificate.
    """
    members = sorted(set(S), key=lambda v: (weights.weight(v), v))
    if not members:
        raise ValueError("empty support set")
    if k_prime < 1:
        raise ValueError("k' must be a positive integer")
    N = inst.n_scenarios
    b_of = weights.bound
    w_of = weights.weight
    for xi in range(N):
        if inst.k_scenario(xi, members) - k_prime > sum(b_of(v) for v in members):
            raise InfeasibleBoundError(
                f"scenario {xi} needs more unloads on {sorted(members)} than b allows"
            )

    per: list[Fraction] = []
    alphas: list[Fraction] = []
    betas: list[dict[int, Fraction]] = []
    for xi in range(N):
        need = inst.k_scenario(xi, members) - k_prime
        if need <= 0:
            per.append(Fraction(0))
            alphas.append(Fraction(0))
            betas.append({})
            continue
        j = None
        acc = 0
        for idx, v in enumerate(members):
            acc += b_of(v)
            if need <= acc:
                j = idx
                break
        assert j is not None  # guaranteed by the feasibility precheck
        pivot_w = w_of(members[j])
        head = members[:j]
        head_cap = sum(b_of(v) for v in head)
        value = sum((Fraction(b_of(v)) * w_of(v) for v in head), Fraction(0))
        value += (need - head_cap) * pivot_w
        per.append(value)
        alphas.append(pivot_w)
        betas.append({v: w_of(v) - pivot_w for v in head if w_of(v) != pivot_w})

    total = sum((p * q for p, q in zip(inst.probabilities, per)), Fraction(0))
    ils = set_ils_cut(members, k_prime, total)

    a: dict[tuple[int, int], Fraction] = {}
    x_part: dict[Edge, Fraction] = {}
    constant = Fraction(0)
    for xi in range(N):
        p = inst.probabilities[xi]
        if alphas[xi] == 0 and not betas[xi]:
            continue
        for v in members:
            a[(xi, v)] = p * (alphas[xi] + betas[xi].get(v, Fraction(0)))
        if alphas[xi] != 0:
            for e in edges_within(members):
                x_part[e] = x_part.get(e, Fraction(0)) + p * alphas[xi]
            constant += p * alphas[xi] * (inst.k_scenario(xi, members) - len(members))
        constant += p * sum(
            (beta * b_of(v) for v, beta in betas[xi].items()), Fraction(0)
        )
    dominating = project_inequality(a, x_part, constant, weights, inst.probabilities)
    return SetCutBundle(total, tuple(per), ils, tuple(alphas), tuple(betas), dominating)


# -- partial route bundle (LP bound, post-processed duals, dominating projection) --


def partial_route_spans(
    inst: Instance, H: PartialRoute, xi: int, minimal_only: bool = True
) -> list[tuple[int, int, int]]:
    """Set-index spans (i, j, k-1) of H binding in scenario xi (k >= 2)."""
    demands = [inst.demand_of(xi, s) for s in H.sets]
    return _spans_with_requirements(demands, inst.capacity, minimal_only)


def _snap_to_lattice(value: float, denominator: int) -> Optional[Fraction]:
    scaled = value * denominator
    nearest = round(scaled)
    if abs(scaled - nearest) <= 1e-5 * max(1.0, abs(scaled)) + 1e-6:
        return Fraction(nearest, denominator)
    return None


def _shrink_dual_support(
    alpha: dict[tuple[int, int], Fraction],
    beta: dict[int, Fraction],
    span_info: dict[tuple[int, int], tuple[frozenset[int], int]],
    weights: RecourseWeights,
) -> None:
    """Shrink dual support until every active span has k - b(support cap) >= 2.

    In-place exchange along the direction (-1 on a span multiplier, +1 on the
    capped customers inside it); preserves dual feasibility and, for optimal
    duals, the dual objective.  Terminates: total support strictly shrinks.
    """
    while True:
        capped = {v for v, bv in beta.items() if bv < 0}
        target = None
        for span in sorted(alpha):
            if alpha[span] <= 0:
                continue
            custs, k = span_info[span]
            cap = sum(weights.bound(v) for v in custs & capped)
            if k - cap <= 1:
                target = span
                break
        if target is None:
            return
        custs, _k = span_info[target]
        inside = sorted(custs & capped)
        eps = alpha[target]
        for v in inside:
            eps = min(eps, -beta[v])
        assert eps > 0
        alpha[target] -= eps
        for v in inside:
            beta[v] += eps
            if beta[v] == 0:
                del beta[v]
        if alpha[target] == 0:
            del alpha[target]


@dataclass(frozen=True)
class PartialRouteBundle:
    value: Fraction  # L*(H)
    per_scenario: tuple[Fraction, ...]
    ils: Cut
    alpha: tuple[dict[tuple[int, int], Fraction], ...]  # per scenario, span -> multiplier
    beta: tuple[dict[int, Fraction], ...]
    dominating: Optional[Cut]
    certificate_exact: bool


def partial_route_bundle(
    inst: Instance,
    H: PartialRoute,
    weights: RecourseWeights,
    minimal_only: bool = True,
) -> PartialRouteBundle:
    """Recourse lower bound over all routes adhering to (a superset of) H.

    Per scenario, minimizes w^T y subject to y(span) >= k(span) - 1 over the
    contiguous set-spans of H and y in [0, b]; the span matrix is an interval
    matrix, so the primal optimum is integral and exact.  Dual multipliers are
    snapped to the weight lattice, renormalized, exchange-processed so each
    active span satisfies k - b(capped members) >= 2, and verified against
    the primal value; certificate_exact reports whether verification held in
    exact arithmetic for every scenario.
    """
    customers = sorted(H.customers())
    pos = {v: i for i, v in enumerate(customers)}
    N = inst.n_scenarios
    denom = math.lcm(*(weights.weight(v).denominator for v in customers))

    per: list[Fraction] = []
    alphas: list[dict[tuple[int, int], Fraction]] = []
    betas: list[dict[int, Fraction]] = []
    exact = True
    for xi in range(N):
        spans = partial_route_spans(inst, H, xi, minimal_only=minimal_only)
        if not spans:
            per.append(Fraction(0))
            alphas.append({})
            betas.append({})
            continue
        span_info = {
            (i, j): (H.span_customers(i, j), r + 1) for (i, j, r) in spans
        }
        model = LinearModel(name="partial-route-bound")
        for v in customers:
            model.add_var(lb=0.0, ub=float(weights.bound(v)), obj=float(weights.weight(v)))
        for i, j, r in spans:
            custs = span_info[(i, j)][0]
            if sum(weights.bound(v) for v in custs) < r:
                raise InfeasibleBoundError("unload bounds below a span requirement")
            model.add_row({pos[v]: 1.0 for v in custs}, ">=", float(r), tag=("span", i, j))
        outcome = solve_lp(model, check_duality=False)
        if outcome.status != "optimal":
            raise BackendError(f"partial-route LP ended {outcome.status}")

        y_int = []
        ok = True
        for idx, val in enumerate(outcome.x):
            r = round(val)
            if abs(val - r) > INTEGRALITY_TOL:
                ok = False
                break
            y_int.append(min(max(int(r), 0), weights.bound(customers[idx])))
        if ok:
            for i, j, r in spans:
                got = sum(y_int[pos[v]] for v in span_info[(i, j)][0])
                if got < r:
                    ok = False
                    break
        if not ok:
            raise BackendError("partial-route LP vertex failed integrality recovery")
        value = sum(
            (weights.weight(v) * y_int[pos[v]] for v in customers), Fraction(0)
        )
        per.append(value)

        alpha: dict[tuple[int, int], Fraction] = {}
        for row_idx, (i, j, _r) in enumerate(spans):
            raw = float(outcome.duals[row_idx])
            snapped = _snap_to_lattice(raw, denom)
            if snapped is None:
                snapped = Fraction(raw)
                exact = False
            if snapped > 0:
                alpha[(i, j)] = snapped
        beta: dict[int, Fraction] = {}
        for v in customers:
            covered = sum(
                (alpha.get(span, Fraction(0)) for span in alpha if v in span_info[span][0]),
                Fraction(0),
            )
            slack = weights.weight(v) - covered
            if slack < 0:
                beta[v] = slack
        dual_obj = sum(
            (alpha[span] * (span_info[span][1] - 1) for span in alpha), Fraction(0)
        ) + sum((beta[v] * weights.bound(v) for v in beta), Fraction(0))
        if dual_obj != value:
            exact = False
        _shrink_dual_support(alpha, beta, span_info, weights)
        new_obj = sum(
            (alpha[span] * (span_info[span][1] - 1) for span in alpha), Fraction(0)
        ) + sum((beta[v] * weights.bound(v) for v in beta), Fraction(0))
        if new_obj != dual_obj:
            exact = False
        if sum(alpha.values(), Fraction(0)) > per[-1]:
            exact = False
        alphas.append(alpha)
        betas.append(beta)

    total = sum((p * q for p, q in zip(inst.probabilities, per)), Fraction(0))
    ils = partial_route_ils_cut(H, total)

    a: dict[tuple[int, int], Fraction] = {}
    x_part: dict[Edge, Fraction] = {}
    constant = Fraction(0)
    for xi in range(N):
        p = inst.probabilities[xi]
        alpha, beta = alphas[xi], betas[xi]
        for (i, j), mult in alpha.items():
            custs = H.span_customers(i, j)
            k = inst.k_scenario(xi, custs)
            for v in custs:
                a[(xi, v)] = a.get((xi, v), Fraction(0)) + p * mult
            for e in edges_within(custs):
                x_part[e] = x_part.get(e, Fraction(0)) + p * mult
            constant += p * mult * (k - len(custs))
        for v, bv in beta.items():
            a[(xi, v)] = a.get((xi, v), Fraction(0)) + p * bv
            constant += p * bv * weights.bound(v)
    dominating = project_inequality(a, x_part, constant, weights, inst.probabilities)
    return PartialRouteBundle(
        total, tuple(per), ils, tuple(alphas), tuple(betas), dominating, exact
    )


def dominance_violated(
    ils: Cut, dominating: Optional[Cut], xbar, thetabar, tol: float = 1e-7
) -> bool:
    """True if the candidate satisfies the projected cut but violates the ILS
    cut it is supposed to dominate (should never happen; asserted whenever
    both cuts are built during separation)."""
    if dominating is None:
        return False
    ils_viol = ils.violation(xbar=xbar, thetabar=thetabar)
    proj_viol = dominating.violation(xbar=xbar, thetabar=thetabar)
    return ils_viol > tol and proj_viol <= tol
