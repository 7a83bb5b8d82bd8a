"""Command-line front end: generate instances, solve them, verify the engine.

`solve` writes one JSON report per instance and appends machine-readable
rows to a results CSV; `gen` emits deterministic random instances in the
text schema; `verify` runs the property battery (brute-force oracles vs the
production paths) and exits nonzero on the first discrepancy.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

from vrpsd import cuts as cutlib
from vrpsd import oracles
from vrpsd.model import Instance, PartialRoute, Route, format_instance, generate_instance, parse_instance
from vrpsd.recourse import RecourseWeights, classical_recourse, scenario_optimal_recourse
from vrpsd.solver import ConfigError, SolverConfig, solve

RESULTS_COLUMNS = [
    "instance",
    "first_stage",
    "recourse",
    "mode",
    "status",
    "value",
    "bound",
    "gap_pct",
    "root_gap_pct",
    "time_s",
    "cuts_rci",
    "cuts_sri",
    "cuts_proj_sri",
    "cuts_set",
    "cuts_partial",
]


def _fmt(x, digits=4):
    if x is None:
        return ""
    return f"{x:.{digits}f}"


def cmd_solve(args) -> int:
    mode = args.mode.replace("+", "_plus_")
    try:
        cfg = SolverConfig(
            first_stage=args.first_stage,
            recourse=args.recourse,
            mode=mode,
            time_limit_s=args.time_limit,
            root_phase1_limit_s=args.root_time_limit,
            weights=args.weights,
            b=args.b,
            seed=args.seed,
            dump_model_path=args.dump_model,
        )
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    paths = [Path(p) for p in args.instance]
    for p in paths:
        if not p.exists():
            print(f"error: no such instance file: {p}", file=sys.stderr)
            return 2

    def run_one(path: Path):
        inst = parse_instance(path.read_text())
        t0 = time.monotonic()
        report = solve(inst, cfg)
        elapsed = time.monotonic() - t0
        return path, inst, report, elapsed

    results = []
    if args.jobs > 1 and len(paths) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run_one, paths))
    else:
        results = [run_one(p) for p in paths]

    rows = []
    for path, inst, report, elapsed in results:
        counts = report.cut_counts
        row = {
            "instance": inst.name or path.stem,
            "first_stage": args.first_stage,
            "recourse": args.recourse,
            "mode": args.mode,
            "status": report.status,
            "value": _fmt(report.value),
            "bound": _fmt(report.bound),
            "gap_pct": _fmt(report.gap_pct, 3),
            "root_gap_pct": _fmt(report.root_gap_pct, 3),
            "time_s": _fmt(elapsed, 3),
            "cuts_rci": counts.get("rci", 0),
            "cuts_sri": counts.get("sri", 0) + counts.get("agg_sri", 0),
            "cuts_proj_sri": counts.get("proj_sri", 0),
            "cuts_set": counts.get("set", 0),
            "cuts_partial": counts.get("partial_route", 0) + counts.get("route", 0),
        }
        rows.append(row)
        print(
            f"{row['instance']}: status={report.status} value={row['value']}"
            f" G(%)={row['gap_pct'] or '-'} RG(%)={row['root_gap_pct'] or '-'}"
            f" T(s)={row['time_s']}"
        )
        if args.report_dir:
            outdir = Path(args.report_dir)
            outdir.mkdir(parents=True, exist_ok=True)
            payload = dict(row)
            payload["value_exact"] = str(report.value_exact) if report.value_exact is not None else None
            payload["phase1_value"] = report.phase1_value
            payload["root_value"] = report.root_value
            payload["outer_iterations"] = report.outer_iterations
            payload["timings"] = report.timings
            payload["cut_counts"] = counts
            payload["routes"] = [
                {
                    "customers": list(b["route"]),
                    "edge_cost": b["edge_cost"],
                    "recourse": str(b["recourse"]),
                    "per_customer": {str(v): str(q) for v, q in b["per_customer"].items()},
                }
                for b in report.route_breakdown
            ]
            (outdir / f"{row['instance']}.{args.mode.replace('+', '-')}.json").write_text(
                json.dumps(payload, indent=2) + "\n"
            )
        if args.dump_cuts:
            with open(args.dump_cuts, "a") as fh:
                for cut in report.cut_pool:
                    fh.write(cut.serialize() + "\n")

    if args.results:
        out = Path(args.results)
        new = not out.exists()
        with open(out, "a") as fh:
            if new:
                fh.write(",".join(RESULTS_COLUMNS) + "\n")
            for row in rows:
                fh.write(",".join(str(row[c]) for c in RESULTS_COLUMNS) + "\n")

    return 0 if all(r[2].status in ("optimal", "time_limit") for r in results) else 1


def cmd_gen(args) -> int:
    inst = generate_instance(
        n=args.n,
        n_scenarios=args.scenarios,
        capacity=args.capacity,
        seed=args.seed,
        grid=args.grid,
        demand_mean=args.demand_mean,
        demand_spread=args.demand_spread,
        fleet_size=args.fleet_size,
    )
    text = format_instance(inst)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# -- verification battery ------------------------------------------------------


def _random_instance(rng: random.Random, n: int, n_scenarios: int) -> Instance:
    return generate_instance(
        n=n,
        n_scenarios=n_scenarios,
        capacity=10,
        seed=rng.randrange(10**6),
        demand_mean=4,
        demand_spread=3,
    )


def _random_route(rng: random.Random, inst: Instance, max_len: int) -> Route:
    size = rng.randint(2, min(max_len, inst.n_customers))
    members = rng.sample(list(inst.customers), size)
    return Route(tuple(members))


def _check_golden_example(rng, sizes) -> str | None:
    inst = Instance(
        3,
        ((0, 1, 3, 2), (1, 0, 1, 1), (3, 1, 0, 1), (2, 1, 1, 0)),
        10,
        ((10, 10, 10),),
        (Fraction(1),),
    )
    weights = RecourseWeights((Fraction(2), Fraction(3), Fraction(4)), (1, 1, 1))
    bundle = cutlib.set_cut_bundle(inst, (1, 2, 3), 1, weights)
    expect_phi = {1: Fraction(1), 2: Fraction(1), 3: Fraction(3, 4)}
    problems = []
    if bundle.per_scenario[0] != 5:
        problems.append(f"greedy bound {bundle.per_scenario[0]} != 5")
    if bundle.alpha[0] != 3:
        problems.append(f"alpha {bundle.alpha[0]} != 3")
    if bundle.beta[0] != {1: Fraction(-1)}:
        problems.append(f"beta {bundle.beta[0]} != {{1: -1}}")
    dom = bundle.dominating
    if dom is None or dom.theta_coeffs != expect_phi:
        problems.append(f"theta coefficients {dom and dom.theta_coeffs} != {expect_phi}")
    if dom is not None and (dom.rhs != -1 or any(c != 3 for c in dom.x_coeffs.values())):
        problems.append(f"projected rhs/x-part {dom.rhs}, {dom.x_coeffs}")
    if problems:
        return "worked-example counterexample: " + "; ".join(problems)
    return None


def _check_classical_vs_simulation(rng, sizes) -> str | None:
    trials = 60 if sizes == "tiny" else 200
    for _ in range(trials):
        inst = _random_instance(rng, rng.randint(2, 6), rng.randint(1, 3))
        route = _random_route(rng, inst, 6)
        sim = classical_recourse(inst, route)
        formula = oracles.classical_recourse_formula(inst, route)
        if sim.total != formula.total or sim.per_customer != formula.per_customer:
            return f"formula {formula.total} vs simulation {sim.total} on {route.customers}"
    return None


def _check_scenopt_vs_bruteforce(rng, sizes) -> str | None:
    trials = 40 if sizes == "tiny" else 120
    for _ in range(trials):
        inst = _random_instance(rng, rng.randint(2, 6), rng.randint(1, 3))
        route = _random_route(rng, inst, 5)
        weights = RecourseWeights.classical(inst, bound=rng.choice((1, 2)))
        lp_val = scenario_optimal_recourse(inst, route, weights).value
        bf_val = oracles.brute_force_scenario_optimal(inst, route, weights)
        if lp_val != bf_val:
            return f"LP {lp_val} vs brute force {bf_val} on {route.customers}"
    return None


def _check_membership_agreement(rng, sizes) -> str | None:
    trials = 120 if sizes == "tiny" else 400
    from vrpsd.recourse import is_recourse_action

    for _ in range(trials):
        inst = _random_instance(rng, rng.randint(2, 6), rng.randint(1, 3))
        route = _random_route(rng, inst, 6)
        xi = rng.randrange(inst.n_scenarios)
        y = [rng.randint(0, 1) for _ in route.customers]
        a = is_recourse_action(inst, route, xi, y)
        b = oracles.maxflow_membership(inst, route, xi, y)
        if a != b:
            return f"subroute test {a} vs max-flow {b} on {route.customers}, y={y}"
    return None


def _check_dominance(rng, sizes) -> str | None:
    supports = 20 if sizes == "tiny" else 60
    for _ in range(supports):
        inst = _random_instance(rng, rng.randint(3, 6), rng.randint(1, 3))
        weights = RecourseWeights.classical(inst)
        route = _random_route(rng, inst, 5)
        H = PartialRoute.from_route(route)
        bundle = cutlib.partial_route_bundle(inst, H, weights)
        for x, theta in oracles.sample_relaxation_points(rng, inst, 10):
            if cutlib.dominance_violated(bundle.ils, bundle.dominating, x, theta):
                return f"partial-route dominance failed on {route.customers}"
    return None


def _check_end_to_end(rng, sizes) -> str | None:
    runs = 2 if sizes == "tiny" else 6
    for _ in range(runs):
        inst = _random_instance(rng, rng.randint(3, 5), rng.randint(1, 3))
        weights = RecourseWeights.classical(inst)
        want, _ = oracles.enumerate_optimal(inst, "subtour", "scenopt", weights)
        for mode in ("ils", "sri"):
            cfg = SolverConfig(
                first_stage="subtour",
                recourse="scenopt",
                mode=mode,
                time_limit_s=120,
                root_phase1_limit_s=5,
            )
            rep = solve(inst, cfg)
            if rep.value_exact != want:
                return f"mode {mode} returned {rep.value_exact}, oracle {want} on {inst.name}"
    return None


CHECKS = [
    ("worked-example-golden", _check_golden_example),
    ("classical-formula-vs-simulation", _check_classical_vs_simulation),
    ("scenario-optimal-vs-bruteforce", _check_scenopt_vs_bruteforce),
    ("membership-vs-maxflow", _check_membership_agreement),
    ("projected-cut-dominance", _check_dominance),
    ("end-to-end-vs-enumeration", _check_end_to_end),
]


def cmd_verify(args) -> int:
    if args.mutate == "wrong-phi":
        cutlib._PHI_MODE = "wrong-phi"
    print(f"verify: sizes={args.sizes} seed={args.seed}")
    rng = random.Random(args.seed)
    failures = 0
    for name, fn in CHECKS:
        t0 = time.monotonic()
        try:
            problem = fn(rng, args.sizes)
        except Exception as exc:  # a crash is a failure with the exception as detail
            problem = f"exception: {exc!r}"
        dt = time.monotonic() - t0
        if problem is None:
            print(f"PASS {name} ({dt:.1f}s)")
        else:
            failures += 1
            print(f"FAIL {name}: {problem}")
    if args.mutate != "none":
        cutlib._PHI_MODE = "correct"
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vrpsd", description="Stochastic-demand vehicle routing solver"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve instance files")
    p.add_argument("instance", nargs="+", help="instance file(s)")
    p.add_argument("--first-stage", choices=["cvrp", "subtour"], default="subtour")
    p.add_argument("--recourse", choices=["classical", "scenopt"], default="scenopt")
    p.add_argument("--mode", choices=["ils", "sri", "ils+sri"], default="sri")
    p.add_argument("--time-limit", type=float, default=1800.0)
    p.add_argument("--root-time-limit", type=float, default=60.0)
    p.add_argument("--b", type=int, choices=[1, 2], default=1)
    p.add_argument("--weights", choices=["classical", "preventive"], default="classical")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="solve this many instances concurrently")
    p.add_argument("--results", help="append rows to this CSV")
    p.add_argument("--report-dir", help="write one JSON report per instance here")
    p.add_argument("--dump-cuts", help="append the cut pool to this file")
    p.add_argument("--dump-model", help="write the branch-and-cut model in LP text form")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("-n", type=int, required=True, help="number of customers")
    p.add_argument("-N", "--scenarios", type=int, required=True)
    p.add_argument("-C", "--capacity", type=int, default=10)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--grid", type=int, default=100)
    p.add_argument("--demand-mean", type=int, default=None)
    p.add_argument("--demand-spread", type=int, default=None)
    p.add_argument("--fleet-size", type=int, default=None)
    p.add_argument("-o", "--output", help="output path (stdout if omitted)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", help="run the oracle property battery")
    p.add_argument("--sizes", choices=["tiny", "default"], default="default")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mutate", choices=["none", "wrong-phi"], default="none")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
