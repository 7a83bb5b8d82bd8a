"""Two-phase exact solver.

Phase 1 solves the high-dimensional (x, theta, y) LP relaxation with
iteratively separated capacity sets and aggregated scenario inequalities,
then harvests the dual multipliers.  Phase 2 rebuilds a compact (x, theta)
relaxation from projected inequalities that provably retains the phase-1
bound, and finishes with an outer branch-and-cut loop whose verifier runs
the separation round on integer candidates and enforces per-route recourse
exactly.  Values are reported both as floats and as exact rationals
recomputed from the incumbent plan.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping, Optional

import numpy as np

from vrpsd import cuts as cutlib
from vrpsd import lp_backend
from vrpsd.cuts import Cut
from vrpsd.model import Edge, Instance, PartialRoute, Route, RoutingPlan, preprocess_large_demands, routes_of
from vrpsd.recourse import RecourseWeights, classical_recourse, scenario_optimal_recourse
from vrpsd.separation import SeparationContext, separate_rci, separate_sec, separate_sri_heuristic, separate_sri_milp, separation_round


class ConfigError(ValueError):
    """Incompatible solver configuration."""


@dataclass(frozen=True)
class SolverConfig:
    first_stage: str = "subtour"  # subtour | cvrp
    recourse: str = "scenopt"  # classical | scenopt
    mode: str = "sri"  # ils | sri | ils_plus_sri
    time_limit_s: float = 1800.0
    root_phase1_limit_s: float = 60.0
    weights: str = "classical"  # classical | preventive
    b: int = 1
    seed: int = 0
    milp_separation: bool = True
    milp_separation_limit_s: float = 30.0
    dump_model_path: Optional[str] = None

    def __post_init__(self):
        if self.first_stage not in ("subtour", "cvrp"):
            raise ConfigError(f"bad first_stage {self.first_stage!r}")
        if self.recourse not in ("classical", "scenopt"):
            raise ConfigError(f"bad recourse {self.recourse!r}")
        if self.mode not in ("ils", "sri", "ils_plus_sri"):
            raise ConfigError(f"bad mode {self.mode!r}")
        if self.mode == "sri" and self.recourse != "scenopt":
            raise ConfigError("mode 'sri' requires recourse 'scenopt'")
        if self.mode == "ils_plus_sri" and self.recourse != "classical":
            raise ConfigError("mode 'ils_plus_sri' requires recourse 'classical'")
        if self.weights not in ("classical", "preventive"):
            raise ConfigError(f"bad weights {self.weights!r}")
        if self.b not in (1, 2):
            raise ConfigError("b must be 1 or 2")

    @property
    def use_sri(self) -> bool:
        return self.mode in ("sri", "ils_plus_sri")


def make_weights(inst: Instance, cfg: SolverConfig) -> RecourseWeights:
    if cfg.weights == "preventive":
        return RecourseWeights.preventive(inst, bound=cfg.b)
    return RecourseWeights.classical(inst, bound=cfg.b)


@dataclass
class DualBundle:
    """Phase-1 dual data: one multiplier per aggregated inequality (S, Xi)
    and one per y upper bound; the per-scenario multipliers they imply are
    never materialized."""

    iota: dict[tuple[frozenset[int], tuple[int, ...]], Fraction]
    beta: dict[tuple[int, int], Fraction]
    z_tilde: float


@dataclass
class Phase1Result:
    z_tilde: Optional[float]
    bundle: DualBundle
    sri_cuts: list[Cut]
    first_stage_cuts: list[Cut]
    converged: bool
    lp_rounds: int = 0


@dataclass
class SolveReport:
    status: str
    value: Optional[float] = None
    value_exact: Optional[Fraction] = None
    bound: Optional[float] = None
    root_value: Optional[float] = None
    root_gap_pct: Optional[float] = None
    gap_pct: Optional[float] = None
    phase1_value: Optional[float] = None
    cut_counts: dict[str, int] = field(default_factory=dict)
    outer_iterations: int = 0
    timings: dict[str, float] = field(default_factory=dict)
    plan: Optional[RoutingPlan] = None
    route_breakdown: list[dict] = field(default_factory=list)
    base_cost: Fraction = Fraction(0)
    cut_pool: list[Cut] = field(default_factory=list)

    def __post_init__(self):
        if self.value is not None and self.bound is not None:
            assert self.value >= self.bound - 1e-6 * max(1.0, abs(self.bound))


# -- model building helpers ---------------------------------------------------


class _VarMap:
    """Variable ids of the (x, theta[, y]) block inside one LinearModel."""

    def __init__(self, inst: Instance, model: lp_backend.LinearModel, with_y: bool,
                 weights: Optional[RecourseWeights] = None, integer_x: bool = False):
        self.x: dict[Edge, int] = {}
        for e in inst.edges():
            c = inst.cost[e[0]][e[1]]
            self.x[e] = model.add_var(
                lb=0.0, ub=2.0, obj=float(c), integer=integer_x, name=f"x{e[0]}_{e[1]}"
            )
        self.theta: dict[int, int] = {
            v: model.add_var(lb=0.0, ub=np.inf, obj=1.0, name=f"t{v}") for v in inst.customers
        }
        self.y: dict[tuple[int, int], int] = {}
        if with_y:
            assert weights is not None
            for xi in range(inst.n_scenarios):
                for v in inst.customers:
                    self.y[(xi, v)] = model.add_var(lb=0.0, ub=np.inf, name=f"y{xi}_{v}")


def _add_degree_rows(inst: Instance, cfg: SolverConfig, model: lp_backend.LinearModel, vm: _VarMap):
    for v in inst.customers:
        coeffs = {vm.x[(min(u, v), max(u, v))]: 1.0 for u in inst.vertices if u != v}
        model.add_row(coeffs, "==", 2.0, tag=("deg", v))
    if cfg.first_stage == "cvrp":
        if inst.fleet_size is None:
            raise ConfigError("first_stage 'cvrp' requires a fleet size")
        coeffs = {vm.x[(0, v)]: 1.0 for v in inst.customers}
        model.add_row(coeffs, "==", 2.0 * inst.fleet_size, tag=("depot_deg",))


def cut_to_row(cut: Cut, vm: _VarMap) -> tuple[dict[int, float], str, float]:
    """theta-part + y-part - x-part >= rhs, as float row coefficients."""
    coeffs: dict[int, float] = {}
    for v, c in cut.theta_coeffs.items():
        coeffs[vm.theta[v]] = coeffs.get(vm.theta[v], 0.0) + float(c)
    for key, c in cut.y_coeffs.items():
        if key not in vm.y:
            raise ValueError("cut uses policy variables absent from this model")
        coeffs[vm.y[key]] = coeffs.get(vm.y[key], 0.0) + float(c)
    for e, c in cut.x_coeffs.items():
        coeffs[vm.x[e]] = coeffs.get(vm.x[e], 0.0) - float(c)
    return coeffs, ">=", float(cut.rhs)


def _xbar_from(vm: _VarMap, xvec) -> dict[Edge, float]:
    return {e: float(xvec[j]) for e, j in vm.x.items()}


def _thetabar_from(vm: _VarMap, xvec) -> dict[int, float]:
    return {v: float(xvec[j]) for v, j in vm.theta.items()}


def _ybar_from(vm: _VarMap, xvec) -> dict[tuple[int, int], float]:
    return {key: float(xvec[j]) for key, j in vm.y.items()}


# -- phase 1 -------------------------------------------------------------------


def solve_root_phase1(
    inst: Instance, cfg: SolverConfig, weights: RecourseWeights
) -> Phase1Result:
    """Cutting-plane loop on the (x, theta, y) LP relaxation.

    Each round separates capacity/subtour sets on x and aggregated scenario
    inequalities on (x, y) (heuristic first, feasibility MIP as fallback),
    until nothing is violated or the time budget runs out.  Returns the
    final bound and the dual multipliers of the tagged rows.
    """
    t0 = time.monotonic()
    model = lp_backend.LinearModel(name="phase1")
    vm = _VarMap(inst, model, with_y=True, weights=weights)
    _add_degree_rows(inst, cfg, model, vm)
    for v in inst.customers:
        coeffs = {vm.theta[v]: 1.0}
        for xi, p in enumerate(inst.probabilities):
            w = weights.weight(v)
            if w > 0:
                coeffs[vm.y[(xi, v)]] = -float(p * w)
        model.add_row(coeffs, ">=", 0.0, tag=("theta", v))
    for xi in range(inst.n_scenarios):
        for v in inst.customers:
            model.add_row({vm.y[(xi, v)]: 1.0}, "<=", float(weights.bound(v)), tag=("yub", xi, v))

    seen: set[str] = set()
    sri_cuts: list[Cut] = []
    fs_cuts: list[Cut] = []
    outcome = None
    converged = False
    rounds = 0

    def remaining() -> float:
        return cfg.root_phase1_limit_s - (time.monotonic() - t0)

    for _ in range(500):
        outcome = lp_backend.solve_lp(model, check_duality=False)
        if outcome.status != "optimal":
            raise lp_backend.BackendError(f"phase-1 LP ended {outcome.status}")
        rounds += 1
        if remaining() <= 0:
            break
        xbar = _xbar_from(vm, outcome.x)
        ybar = _ybar_from(vm, outcome.x)
        new_cuts: list[Cut] = []
        if cfg.first_stage == "cvrp":
            demand = {v: inst.expected_demand(v) for v in inst.customers}
            for S in separate_rci(xbar, demand, inst.capacity, inst.n_customers):
                new_cuts.append(cutlib.rci_cut(S, inst.k_bar(S)))
        else:
            for S in separate_sec(xbar, inst.n_customers):
                new_cuts.append(cutlib.rci_cut(S, 1))
        ctx = SeparationContext(
            inst=inst,
            weights=weights,
            xbar=xbar,
            ybar=ybar,
            use_sri=True,
            recourse=cfg.recourse,
            first_stage=cfg.first_stage,
        )
        pairs = separate_sri_heuristic(ctx)
        if not pairs and not new_cuts and cfg.milp_separation:
            for xi in ctx.scenario_order:
                budget = min(cfg.milp_separation_limit_s, max(remaining(), 0.01))
                S = separate_sri_milp(ctx, xi, time_limit=budget)
                if S is not None:
                    pool = [
                        xi2
                        for xi2 in range(inst.n_scenarios)
                        if cutlib.sri_violation(inst, xbar, ybar, S, xi2) > ctx.tol
                    ]
                    pairs = [(S, tuple(pool))]
                    break
                if remaining() <= 0:
                    break
        for S, pool in pairs:
            new_cuts.append(cutlib.aggregated_sri_cut(inst, S, pool))

        added = 0
        for cut in new_cuts:
            key = cut.key()
            if key in seen:
                continue
            seen.add(key)
            coeffs, sense, rhs = cut_to_row(cut, vm)
            tag = ("agg", cut.support) if cut.kind == "agg_sri" else ("rci", cut.support)
            model.add_row(coeffs, sense, rhs, tag=tag)
            (sri_cuts if cut.kind == "agg_sri" else fs_cuts).append(cut)
            added += 1
        if added == 0:
            converged = True
            break

    # harvest duals from the last solve (re-solve so duals match final rows)
    outcome = lp_backend.solve_lp(model, check_duality=False)
    if outcome.status != "optimal":
        raise lp_backend.BackendError(f"phase-1 LP ended {outcome.status}")
    iota: dict[tuple[frozenset[int], tuple[int, ...]], Fraction] = {}
    beta: dict[tuple[int, int], Fraction] = {}
    for i, row in enumerate(model.rows):
        if row.tag is None:
            continue
        if row.tag[0] == "agg":
            val = float(outcome.duals[i])
            if val > 1e-9:
                support = row.tag[1]
                key = (frozenset(support[0]), tuple(support[1]))
                iota[key] = iota.get(key, Fraction(0)) + Fraction(val)
        elif row.tag[0] == "yub":
            val = float(outcome.duals[i])
            if val < -1e-9:
                beta[(row.tag[1], row.tag[2])] = Fraction(val)
    bundle = DualBundle(iota=iota, beta=beta, z_tilde=float(outcome.objective))
    return Phase1Result(
        z_tilde=float(outcome.objective),
        bundle=bundle,
        sri_cuts=sri_cuts,
        first_stage_cuts=fs_cuts,
        converged=converged,
        lp_rounds=rounds,
    )


def _single_projected_sri(
    inst: Instance, weights: RecourseWeights, bundle: DualBundle
) -> Optional[Cut]:
    """One projected inequality carrying the entire phase-1 dual bound.

    Built straight from the aggregated multipliers iota and bound duals
    beta; the per-scenario multipliers are implied, never formed.  Where
    w_v = 0, beta is pushed down so the multiplier-set membership condition
    holds (still a valid conic combination, possibly a hair weaker).
    """
    if not bundle.iota and not bundle.beta:
        return None
    a: dict[tuple[int, int], Fraction] = {}
    x_part: dict[Edge, Fraction] = {}
    constant = Fraction(0)
    for (S, pool), mult in bundle.iota.items():
        for xi in pool:
            for v in S:
                a[(xi, v)] = a.get((xi, v), Fraction(0)) + mult
            constant += mult * (inst.k_scenario(xi, S) - len(S))
        for e in cutlib.edges_within(S):
            x_part[e] = x_part.get(e, Fraction(0)) + mult * len(pool)
    beta = dict(bundle.beta)
    for v in inst.customers:
        if weights.weight(v) == 0:
            for xi in range(inst.n_scenarios):
                cover = a.get((xi, v), Fraction(0))
                if cover > 0:
                    beta[(xi, v)] = min(beta.get((xi, v), Fraction(0)), -cover)
    for (xi, v), bv in beta.items():
        a[(xi, v)] = a.get((xi, v), Fraction(0)) + bv
        constant += bv * weights.bound(v)
    return cutlib.project_inequality(a, x_part, constant, weights, inst.probabilities)


@dataclass
class RootRelaxation:
    model: lp_backend.LinearModel
    vm: _VarMap
    value: float
    cuts: list[Cut]
    used_single_cut: bool


def build_root_relaxation(
    inst: Instance,
    cfg: SolverConfig,
    weights: RecourseWeights,
    phase1: Optional[Phase1Result],
) -> RootRelaxation:
    """Compact (x, theta) relaxation seeded from phase-1 multipliers.

    Adds one projected aggregated inequality per positive multiplier whose
    support has all-positive weights; if the resulting LP value falls short
    of the phase-1 bound, the single dual-derived projected inequality is
    added, which restores that bound by weak duality.
    """
    model = lp_backend.LinearModel(name="root")
    vm = _VarMap(inst, model, with_y=False)
    _add_degree_rows(inst, cfg, model, vm)
    added: list[Cut] = []
    if phase1 is not None:
        for cut in phase1.first_stage_cuts:
            model.add_row(*cut_to_row(cut, vm), tag=("rci", cut.support))
            added.append(cut)
        for (S, pool), mult in sorted(
            phase1.bundle.iota.items(), key=lambda kv: (tuple(sorted(kv[0][0])), kv[0][1])
        ):
            if mult <= 0 or any(weights.weight(v) == 0 for v in S):
                continue
            pool = tuple(xi for xi in pool if inst.probabilities[xi] > 0)
            if not pool:
                continue
            cut = cutlib.projected_aggregated_sri(inst, S, pool, weights)
            model.add_row(*cut_to_row(cut, vm), tag=("proj", cut.support))
            added.append(cut)
    outcome = lp_backend.solve_lp(model, check_duality=False)
    if outcome.status != "optimal":
        raise lp_backend.BackendError(f"root LP ended {outcome.status}")
    value = float(outcome.objective)
    used_single = False
    if phase1 is not None and phase1.z_tilde is not None:
        scale = max(1.0, abs(phase1.z_tilde))
        if value < phase1.z_tilde - 1e-6 * scale:
            single = _single_projected_sri(inst, weights, phase1.bundle)
            if single is not None:
                model.add_row(*cut_to_row(single, vm), tag=("proj_single",))
                added.append(single)
                used_single = True
                outcome = lp_backend.solve_lp(model, check_duality=False)
                if outcome.status != "optimal":
                    raise lp_backend.BackendError(f"root LP ended {outcome.status}")
                value = float(outcome.objective)
    return RootRelaxation(model=model, vm=vm, value=value, cuts=added, used_single_cut=used_single)


def lagrangian_bound(
    inst: Instance,
    cfg: SolverConfig,
    weights: RecourseWeights,
    first_stage_cuts: list[Cut],
    iota: Mapping[tuple[frozenset[int], tuple[int, ...]], Fraction],
    beta: Mapping[tuple[int, int], Fraction],
) -> float:
    """sigma_x + sigma_y + nu for the given multipliers (test oracle).

    sigma_y is 0 when every y coefficient p_xi w_v - beta - sum(alpha) is
    nonnegative and -inf otherwise; sigma_x minimizes the alpha-modified
    edge costs over the current first-stage relaxation rows.
    """
    for (S, pool), mult in iota.items():
        if mult < 0:
            raise ValueError("aggregated multipliers must be nonnegative")
    for key, bv in beta.items():
        if bv > 0:
            raise ValueError("bound multipliers must be nonpositive")
    cover: dict[tuple[int, int], Fraction] = {}
    for (S, pool), mult in iota.items():
        for xi in pool:
            for v in S:
                cover[(xi, v)] = cover.get((xi, v), Fraction(0)) + mult
    nu = Fraction(0)
    for (S, pool), mult in iota.items():
        for xi in pool:
            nu += mult * (inst.k_scenario(xi, S) - len(S))
    for (xi, v), bv in beta.items():
        nu += bv * weights.bound(v)
    for xi in range(inst.n_scenarios):
        for v in inst.customers:
            coeff = (
                inst.probabilities[xi] * weights.weight(v)
                - beta.get((xi, v), Fraction(0))
                - cover.get((xi, v), Fraction(0))
            )
            if coeff < -Fraction(1, 10**9):
                return float("-inf")
    model = lp_backend.LinearModel(name="sigma-x")
    vm = _VarMap(inst, model, with_y=False)
    # theta is not part of sigma_x; zero out its objective
    for v, j in vm.theta.items():
        model.obj[j] = 0.0
    _add_degree_rows(inst, cfg, model, vm)
    for cut in first_stage_cuts:
        model.add_row(*cut_to_row(cut, vm), tag=("rci", cut.support))
    alpha_edge: dict[Edge, Fraction] = {}
    for (S, pool), mult in iota.items():
        for e in cutlib.edges_within(S):
            alpha_edge[e] = alpha_edge.get(e, Fraction(0)) + mult * len(pool)
    for e, extra in alpha_edge.items():
        model.obj[vm.x[e]] += float(extra)
    outcome = lp_backend.solve_lp(model, check_duality=False)
    if outcome.status != "optimal":
        raise lp_backend.BackendError(f"sigma_x LP ended {outcome.status}")
    return float(outcome.objective) + float(nu)


# -- phase 2: branch and cut ----------------------------------------------------


def _route_key(route: Route) -> tuple[int, ...]:
    fwd = route.customers
    rev = tuple(reversed(fwd))
    return min(fwd, rev)


class _RecourseCache:
    def __init__(self, inst: Instance, cfg: SolverConfig, weights: RecourseWeights):
        self.inst = inst
        self.cfg = cfg
        self.weights = weights
        self._q: dict[tuple[int, ...], Fraction] = {}
        self._breakdown: dict[tuple[int, ...], dict[int, Fraction]] = {}

    def q(self, route: Route) -> Fraction:
        key = _route_key(route)
        if key not in self._q:
            if self.cfg.recourse == "classical":
                br = classical_recourse(self.inst, route)
                self._q[key] = br.total
                self._breakdown[key] = dict(br.per_customer)
            else:
                res = scenario_optimal_recourse(self.inst, route, self.weights)
                self._q[key] = res.value
                self._breakdown[key] = dict(res.breakdown.per_customer)
        return self._q[key]

    def breakdown(self, route: Route) -> dict[int, Fraction]:
        self.q(route)
        return self._breakdown[_route_key(route)]


def _exactness_cuts(
    inst: Instance,
    cfg: SolverConfig,
    weights: RecourseWeights,
    cache: _RecourseCache,
    plan: RoutingPlan,
    thetabar: Mapping[int, float],
) -> list[Cut]:
    """Per-route enforcement cuts for routes whose theta undercovers Q(R)."""
    out: list[Cut] = []
    for route in plan.routes:
        if len(route) == 1:
            continue  # single-customer routes need no recourse under d <= C
        q = cache.q(route)
        if q <= 0:
            continue
        covered = sum(thetabar.get(v, 0.0) for v in route.customers)
        if covered >= float(q) - 1e-7 * max(1.0, float(q)):
            continue
        if cfg.recourse == "classical":
            out.append(cutlib.route_equality_cut(inst, route, q))
        else:
            H = PartialRoute.from_route(route)
            bundle = cutlib.partial_route_bundle(inst, H, weights)
            if cfg.mode == "sri" and bundle.dominating is not None:
                out.append(bundle.dominating)
                if not bundle.certificate_exact:
                    out.append(bundle.ils)
            else:
                out.append(bundle.ils)
    return out


def solve(inst: Instance, cfg: SolverConfig) -> SolveReport:
    """Run the configured algorithm to proven optimality or the time limit."""
    t_start = time.monotonic()
    if cfg.first_stage == "cvrp" and inst.fleet_size is None:
        raise ConfigError("first_stage 'cvrp' requires an instance with FLEET_SIZE")
    inst, base_cost = preprocess_large_demands(inst)
    weights = make_weights(inst, cfg)
    timings: dict[str, float] = {}
    cut_counts: dict[str, int] = {}
    cut_pool: list[Cut] = []

    phase1: Optional[Phase1Result] = None
    if cfg.mode != "ils":
        t0 = time.monotonic()
        phase1_cfg = cfg
        if cfg.time_limit_s < cfg.root_phase1_limit_s:
            phase1_cfg = replace(cfg, root_phase1_limit_s=cfg.time_limit_s)
        phase1 = solve_root_phase1(inst, phase1_cfg, weights)
        timings["phase1_s"] = time.monotonic() - t0
        for cut in phase1.sri_cuts + phase1.first_stage_cuts:
            cut_counts[cut.kind] = cut_counts.get(cut.kind, 0) + 1
            cut_pool.append(cut)

    t0 = time.monotonic()
    root = build_root_relaxation(inst, cfg, weights, phase1)
    timings["root_s"] = time.monotonic() - t0
    for cut in root.cuts:
        if cut.kind != "rci":  # first-stage cuts already counted in phase 1
            cut_counts[cut.kind] = cut_counts.get(cut.kind, 0) + 1
            cut_pool.append(cut)
    root_value = root.value

    model = root.model
    vm = root.vm
    for e, j in vm.x.items():
        model.integer[j] = True
    if cfg.dump_model_path:
        with open(cfg.dump_model_path, "w") as fh:
            fh.write(model.lp_text())
    cache = _RecourseCache(inst, cfg, weights)

    def verifier(xvec) -> list[lp_backend.RowSpec]:
        xbar_f = _xbar_from(vm, xvec)
        for e, val in xbar_f.items():
            if abs(val - round(val)) > 1e-6:
                raise lp_backend.BackendError(f"MIP returned fractional x on {e}")
        xbar = {e: float(round(val)) for e, val in xbar_f.items()}
        thetabar = _thetabar_from(vm, xvec)
        ctx = SeparationContext(
            inst=inst,
            weights=weights,
            xbar=xbar,
            thetabar=thetabar,
            ybar=None,
            use_sri=cfg.use_sri,
            recourse=cfg.recourse,
            first_stage=cfg.first_stage,
        )
        found = separation_round(ctx)
        if not found:
            x_int = {e: int(v) for e, v in xbar.items() if v}
            try:
                plan = routes_of(x_int, inst.n_customers)
            except ValueError:
                plan = None  # unreachable once the capacity pass is silent
            if plan is not None:
                found = _exactness_cuts(inst, cfg, weights, cache, plan, thetabar)
        rows: list[lp_backend.RowSpec] = []
        for cut in found:
            cut_counts[cut.kind] = cut_counts.get(cut.kind, 0) + 1
            cut_pool.append(cut)
            coeffs, sense, rhs = cut_to_row(cut, vm)
            rows.append((coeffs, sense, rhs, (cut.kind, cut.support)))
        return rows

    remaining = cfg.time_limit_s - (time.monotonic() - t_start)
    t0 = time.monotonic()
    outcome = lp_backend.solve_mip_with_lazy(model, verifier, time_limit=max(remaining, 0.01))
    timings["branch_cut_s"] = time.monotonic() - t0
    timings["total_s"] = time.monotonic() - t_start

    base_f = float(base_cost)
    report = SolveReport(
        status=outcome.status,
        outer_iterations=outcome.outer_rounds,
        timings=timings,
        cut_counts=cut_counts,
        base_cost=base_cost,
        phase1_value=(phase1.z_tilde + base_f) if phase1 is not None else None,
        root_value=root_value + base_f,
        cut_pool=cut_pool,
    )
    if outcome.status == "infeasible":
        return report
    if outcome.x is None:
        return report

    xbar = _xbar_from(vm, outcome.x)
    x_int = {e: int(round(v)) for e, v in xbar.items() if round(v)}
    try:
        plan = routes_of(x_int, inst.n_customers)
        if cfg.first_stage == "cvrp" and any(
            inst.expected_demand_of(r.customers) > inst.capacity for r in plan.routes
        ):
            raise ValueError("incumbent violates expected-demand capacity")
    except ValueError:
        # timeout left an unverified incumbent (subtours or missing capacity
        # sets): report the dual bound only
        if outcome.mip_bound is not None:
            report.bound = outcome.mip_bound + base_f
        return report
    exact = base_cost
    breakdown = []
    for route in plan.routes:
        q = cache.q(route) if len(route) > 1 else Fraction(0)
        per = cache.breakdown(route) if len(route) > 1 else {v: Fraction(0) for v in route.customers}
        exact += Fraction(route.cost(inst)) + q
        breakdown.append(
            {
                "route": route.customers,
                "edge_cost": route.cost(inst),
                "recourse": q,
                "per_customer": per,
            }
        )
    report.plan = plan
    report.value_exact = exact
    report.value = float(exact)
    if outcome.status == "optimal":
        report.bound = report.value
    elif outcome.mip_bound is not None:
        report.bound = outcome.mip_bound + base_f
    if report.bound is not None and report.value:
        report.gap_pct = max(0.0, 100.0 * (report.value - report.bound) / abs(report.value))
    if report.root_value is not None and report.value:
        report.root_gap_pct = max(
            0.0, 100.0 * (report.value - report.root_value) / abs(report.value)
        )
    report.route_breakdown = breakdown
    return report
