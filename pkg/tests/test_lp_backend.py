"""Backend layer: duals, sign conventions, and the outer lazy-cut loop."""

import random

import numpy as np
import pytest

from vrpsd import lp_backend
from vrpsd.lp_backend import LinearModel, VerifierContractError, solve_lp, solve_mip, solve_mip_with_lazy


def test_lp_simple_bound_dual():
    m = LinearModel()
    x = m.add_var(lb=0.0, obj=1.0)
    m.add_row({x: 1.0}, ">=", 3.0, tag=("lb",))
    out = solve_lp(m)
    assert out.status == "optimal"
    assert out.x[x] == pytest.approx(3.0)
    assert out.duals[0] == pytest.approx(1.0)


def test_lp_infeasible_rows():
    m = LinearModel()
    x = m.add_var(lb=0.0, obj=1.0)
    m.add_row({x: 1.0}, ">=", 3.0)
    m.add_row({x: 1.0}, "<=", 1.0)
    assert solve_lp(m).status == "infeasible"


def test_lp_unload_formulation_matches_enumeration(worked_example):
    """The per-scenario unload LP built by hand reaches the enumerated value."""
    inst, route = worked_example
    from vrpsd.recourse import RecourseWeights, route_spans_with_requirements
    from vrpsd import oracles

    weights = RecourseWeights.classical(inst)
    m = LinearModel()
    for v in route.customers:
        m.add_var(lb=0.0, ub=1.0, obj=float(weights.weight(v)))
    for i, j, r in route_spans_with_requirements(inst, route, 0):
        m.add_row({t: 1.0 for t in range(i, j + 1)}, ">=", float(r))
    out = solve_lp(m)
    assert out.status == "optimal"
    assert out.objective == pytest.approx(
        float(oracles.brute_force_scenario_optimal(inst, route, weights))
    )


def test_lp_strong_duality_on_random_models():
    rng = random.Random(2)
    for _ in range(30):
        m = LinearModel()
        n = rng.randint(2, 5)
        xs = [m.add_var(lb=0.0, ub=rng.uniform(1, 5), obj=rng.uniform(-2, 2)) for _ in range(n)]
        for _ in range(rng.randint(1, 4)):
            coeffs = {x: rng.uniform(-1, 1) for x in rng.sample(xs, rng.randint(1, n))}
            sense = rng.choice([">=", "<=", "=="])
            m.add_row(coeffs, sense, rng.uniform(-1, 1))
        out = solve_lp(m)  # raises internally if duality or slackness fail
        assert out.status in ("optimal", "infeasible", "unbounded")


def test_mip_basic():
    m = LinearModel()
    x = m.add_var(lb=0.0, ub=1.0, obj=-1.0, integer=True)
    y = m.add_var(lb=0.0, ub=1.0, obj=-1.0, integer=True)
    m.add_row({x: 1.0, y: 1.0}, "<=", 1.0)
    out = solve_mip(m)
    assert out.status == "optimal"
    assert out.objective == pytest.approx(-1.0)
    assert out.mip_bound == pytest.approx(-1.0)


def test_lazy_loop_clean_model_single_round():
    m = LinearModel()
    m.add_var(lb=0.0, ub=5.0, obj=1.0, integer=True)
    out = solve_mip_with_lazy(m, lambda x: [])
    assert out.status == "optimal"
    assert out.outer_rounds == 1


def test_lazy_loop_two_cuts_three_rounds():
    """Verifier raising the floor twice forces exactly three solves."""
    m = LinearModel()
    x = m.add_var(lb=0.0, ub=10.0, obj=1.0, integer=True)

    def verifier(sol):
        val = sol[x]
        if val < 2.5:
            return [({x: 1.0}, ">=", min(val + 2.0, 3.0), ("floor",))]
        return []

    out = solve_mip_with_lazy(m, verifier)
    assert out.status == "optimal"
    assert out.x[x] == pytest.approx(3.0)
    assert out.outer_rounds == 3


def test_lazy_loop_rejects_non_violated_row():
    m = LinearModel()
    x = m.add_var(lb=0.0, ub=5.0, obj=1.0, integer=True)

    def bad_verifier(sol):
        return [({x: 1.0}, ">=", -1.0, ("noop",))]  # already satisfied

    with pytest.raises(VerifierContractError):
        solve_mip_with_lazy(m, bad_verifier)


def test_three_customer_instance_converges_in_few_rounds():
    """A plan needing two recourse cuts closes within three outer rounds."""
    from vrpsd.model import generate_instance
    from vrpsd.solver import SolverConfig, solve

    inst = generate_instance(3, 1, 10, seed=0, demand_mean=6, demand_spread=2)
    rep = solve(inst, SolverConfig(mode="ils", recourse="scenopt", time_limit_s=60))
    assert rep.status == "optimal"
    assert rep.cut_counts.get("set", 0) + rep.cut_counts.get("partial_route", 0) >= 2
    assert rep.outer_iterations <= 3


def test_mip_determinism():
    def build():
        m = LinearModel()
        xs = [m.add_var(lb=0.0, ub=3.0, obj=c, integer=True) for c in (1.0, -2.0, 0.5)]
        m.add_row({xs[0]: 1.0, xs[1]: 1.0}, ">=", 2.0)
        m.add_row({xs[1]: 1.0, xs[2]: 2.0}, "<=", 4.0)
        return m

    a = solve_mip(build())
    b = solve_mip(build())
    assert np.array_equal(a.x, b.x)
    assert a.objective == b.objective


def test_lp_text_dump_mentions_rows_and_integers():
    m = LinearModel(name="demo")
    x = m.add_var(lb=0.0, ub=2.0, obj=1.5, integer=True, name="edge")
    m.add_row({x: 1.0}, "<=", 1.0, tag=("cap",))
    text = m.lp_text()
    assert "demo" in text and "edge" in text and "General" in text and "cap" in text
