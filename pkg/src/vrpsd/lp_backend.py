"""Thin LP/MIP layer over scipy's HiGHS interface.

Rows carry a sense and an optional tag for dual lookup.  Dual signs follow
one fixed convention, asserted at extraction: '>=' rows have nonnegative
duals, '<=' rows nonpositive, '==' rows free.  MIP exactness is provided by
an outer verify-and-cut loop rather than solver callbacks, which keeps the
contract portable across backends.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Hashable, Optional, Sequence

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

INTEGRALITY_TOL = 1e-6
DUAL_FEAS_TOL = 1e-6
CUT_VIOLATION_TOL = 1e-4


class BackendError(RuntimeError):
    """LP/MIP backend failed in a way the caller cannot recover from."""


class VerifierContractError(RuntimeError):
    """A lazy-cut verifier returned a row not violated by the candidate."""


@dataclass
class _Row:
    coeffs: dict[int, float]
    sense: str  # '>=', '<=', '=='
    rhs: float
    tag: Optional[Hashable] = None


@dataclass
class LinearModel:
    """Sparse rows over dense variable ids, built incrementally."""

    name: str = ""
    lb: list[float] = field(default_factory=list)
    ub: list[float] = field(default_factory=list)
    obj: list[float] = field(default_factory=list)
    integer: list[bool] = field(default_factory=list)
    var_names: list[str] = field(default_factory=list)
    rows: list[_Row] = field(default_factory=list)

    def add_var(
        self,
        lb: float = 0.0,
        ub: float = np.inf,
        obj: float = 0.0,
        integer: bool = False,
        name: str = "",
    ) -> int:
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.obj.append(float(obj))
        self.integer.append(bool(integer))
        self.var_names.append(name or f"v{len(self.lb) - 1}")
        return len(self.lb) - 1

    def add_row(
        self,
        coeffs: dict[int, float],
        sense: str,
        rhs: float,
        tag: Optional[Hashable] = None,
    ) -> int:
        if sense not in (">=", "<=", "=="):
            raise ValueError(f"bad row sense {sense!r}")
        self.rows.append(_Row(dict(coeffs), sense, float(rhs), tag))
        return len(self.rows) - 1

    @property
    def n_vars(self) -> int:
        return len(self.lb)

    def rows_with_tag_prefix(self, prefix: Hashable) -> list[int]:
        return [i for i, r in enumerate(self.rows) if isinstance(r.tag, tuple) and r.tag and r.tag[0] == prefix]

    def relax(self) -> "LinearModel":
        """Copy with all integrality flags cleared."""
        out = LinearModel(name=self.name)
        out.lb = list(self.lb)
        out.ub = list(self.ub)
        out.obj = list(self.obj)
        out.integer = [False] * len(self.integer)
        out.var_names = list(self.var_names)
        out.rows = [_Row(dict(r.coeffs), r.sense, r.rhs, r.tag) for r in self.rows]
        return out

    def lp_text(self) -> str:
        """Human-readable model dump in an LP-like text format."""
        out = [f"\\ model {self.name}", "Minimize"]
        terms = [
            f"{'+' if c >= 0 else '-'} {abs(c)} {self.var_names[j]}"
            for j, c in enumerate(self.obj)
            if c != 0.0
        ]
        out.append(" obj: " + (" ".join(terms) if terms else "0"))
        out.append("Subject To")
        for i, r in enumerate(self.rows):
            lhs = " ".join(
                f"{'+' if c >= 0 else '-'} {abs(c)} {self.var_names[j]}"
                for j, c in sorted(r.coeffs.items())
            )
            op = {"<=": "<=", ">=": ">=", "==": "="}[r.sense]
            tag = f"  \\ {r.tag}" if r.tag is not None else ""
            out.append(f" r{i}: {lhs} {op} {r.rhs}{tag}")
        out.append("Bounds")
        for j in range(self.n_vars):
            out.append(f" {self.lb[j]} <= {self.var_names[j]} <= {self.ub[j]}")
        ints = [self.var_names[j] for j in range(self.n_vars) if self.integer[j]]
        if ints:
            out.append("General")
            out.append(" " + " ".join(ints))
        out.append("End")
        return "\n".join(out) + "\n"


@dataclass
class SolveOutcome:
    status: str  # optimal | infeasible | unbounded | time_limit | iteration_limit
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    duals: Optional[np.ndarray] = None  # per row, in model row order
    lower_duals: Optional[np.ndarray] = None  # reduced costs at variable lower bounds
    upper_duals: Optional[np.ndarray] = None
    wall_time: float = 0.0
    mip_bound: Optional[float] = None
    outer_rounds: int = 0


_LP_STATUS = {0: "optimal", 1: "iteration_limit", 2: "infeasible", 3: "unbounded"}


def _split_rows(model: LinearModel):
    """Partition rows into scipy's <= and == blocks, remembering positions.

    '>=' rows are negated into '<='; their duals get flipped back on the way
    out so the fixed sign convention holds.
    """
    ub_rows: list[tuple[int, dict[int, float], float, bool]] = []
    eq_rows: list[tuple[int, dict[int, float], float]] = []
    for i, r in enumerate(model.rows):
        if r.sense == "<=":
            ub_rows.append((i, r.coeffs, r.rhs, False))
        elif r.sense == ">=":
            ub_rows.append((i, {j: -c for j, c in r.coeffs.items()}, -r.rhs, True))
        else:
            eq_rows.append((i, r.coeffs, r.rhs))
    return ub_rows, eq_rows


def _dense(coeff_rows, n):
    A = np.zeros((len(coeff_rows), n))
    for k, (_, coeffs, _, *_rest) in enumerate(coeff_rows):
        for j, c in coeffs.items():
            A[k, j] = c
    return A


def solve_lp(
    model: LinearModel,
    time_limit: Optional[float] = None,
    check_duality: bool = True,
) -> SolveOutcome:
    """Solve the LP relaxation and return primal values with signed duals.

    Requires the model to carry no active integrality flags.  On an optimal
    solve, duals satisfy the sign convention and strong duality within
    DUAL_FEAS_TOL times the objective scale (asserted when check_duality).
    """
    if any(model.integer):
        raise ValueError("solve_lp on a model with integer variables; relax() first")
    t0 = time.monotonic()
    n = model.n_vars
    ub_rows, eq_rows = _split_rows(model)
    A_ub = _dense(ub_rows, n) if ub_rows else None
    b_ub = np.array([r[2] for r in ub_rows]) if ub_rows else None
    A_eq = _dense(eq_rows, n) if eq_rows else None
    b_eq = np.array([r[2] for r in eq_rows]) if eq_rows else None
    options = {}
    if time_limit is not None:
        options["time_limit"] = max(time_limit, 1e-3)
    res = linprog(
        c=np.array(model.obj),
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=list(zip(model.lb, model.ub)),
        method="highs",
        options=options,
    )
    wall = time.monotonic() - t0
    status = _LP_STATUS.get(res.status, "iteration_limit")
    if status != "optimal":
        if "time" in (res.message or "").lower():
            status = "time_limit"
        return SolveOutcome(status=status, wall_time=wall)

    duals = np.zeros(len(model.rows))
    if ub_rows:
        for k, (i, _c, _r, flipped) in enumerate(ub_rows):
            m = res.ineqlin.marginals[k]
            duals[i] = -m if flipped else m
    if eq_rows:
        for k, (i, _c, _r) in enumerate(eq_rows):
            duals[i] = res.eqlin.marginals[k]
    for i, r in enumerate(model.rows):
        if r.sense == ">=" and duals[i] < -DUAL_FEAS_TOL:
            raise BackendError(f"sign violation: >= row {i} has dual {duals[i]}")
        if r.sense == "<=" and duals[i] > DUAL_FEAS_TOL:
            raise BackendError(f"sign violation: <= row {i} has dual {duals[i]}")

    out = SolveOutcome(
        status="optimal",
        x=np.asarray(res.x),
        objective=float(res.fun),
        duals=duals,
        lower_duals=np.asarray(res.lower.marginals),
        upper_duals=np.asarray(res.upper.marginals),
        wall_time=wall,
    )
    if check_duality:
        dual_obj = sum(duals[i] * model.rows[i].rhs for i in range(len(model.rows)))
        for j in range(n):
            if np.isfinite(model.lb[j]):
                dual_obj += out.lower_duals[j] * model.lb[j]
            if np.isfinite(model.ub[j]):
                dual_obj += out.upper_duals[j] * model.ub[j]
        scale = max(1.0, abs(out.objective))
        if abs(dual_obj - out.objective) > DUAL_FEAS_TOL * scale:
            raise BackendError(
                f"strong duality violated: primal {out.objective} vs dual {dual_obj}"
            )
        # complementary slackness on rows
        for i, r in enumerate(model.rows):
            if r.sense == "==":
                continue
            act = sum(c * out.x[j] for j, c in r.coeffs.items())
            if abs(duals[i]) > DUAL_FEAS_TOL and abs(act - r.rhs) > DUAL_FEAS_TOL * scale:
                raise BackendError(f"complementary slackness violated on row {i}")
    return out


def solve_mip(model: LinearModel, time_limit: Optional[float] = None) -> SolveOutcome:
    """Single MIP solve to proven optimality (zero relative gap)."""
    t0 = time.monotonic()
    n = model.n_vars
    constraints = []
    ub_rows, eq_rows = _split_rows(model)
    if ub_rows:
        constraints.append(LinearConstraint(_dense(ub_rows, n), -np.inf, [r[2] for r in ub_rows]))
    if eq_rows:
        A = _dense([(i, c, r, False) for i, c, r in eq_rows], n)
        rhs = [r[2] for r in eq_rows]
        constraints.append(LinearConstraint(A, rhs, rhs))
    options = {"mip_rel_gap": 0.0}
    if time_limit is not None:
        options["time_limit"] = max(time_limit, 1e-3)
    res = milp(
        c=np.array(model.obj),
        constraints=constraints,
        integrality=np.array([1 if f else 0 for f in model.integer]),
        bounds=Bounds(np.array(model.lb), np.array(model.ub)),
        options=options,
    )
    wall = time.monotonic() - t0
    if res.status == 0:
        status = "optimal"
    elif res.status == 1:
        status = "time_limit" if "time" in (res.message or "").lower() else "iteration_limit"
    elif res.status == 2:
        status = "infeasible"
    elif res.status == 3:
        status = "unbounded"
    else:
        status = "iteration_limit"
    bound = getattr(res, "mip_dual_bound", None)
    return SolveOutcome(
        status=status,
        x=np.asarray(res.x) if res.x is not None else None,
        objective=float(res.fun) if res.fun is not None else None,
        wall_time=wall,
        mip_bound=float(bound) if bound is not None else None,
    )


RowSpec = tuple[dict[int, float], str, float, Optional[Hashable]]
Verifier = Callable[[np.ndarray], Sequence[RowSpec]]


def solve_mip_with_lazy(
    model: LinearModel,
    verifier: Verifier,
    time_limit: Optional[float] = None,
    max_rounds: int = 100000,
    debug: bool = True,
) -> SolveOutcome:
    """Solve-to-integer, verify, cut, repeat, until the verifier is silent.

    The verifier receives an integer candidate and returns violated valid
    rows (possibly none).  Termination: every returned row must cut off the
    candidate, candidates live in a finite integer set, and rows are never
    dropped.  In debug mode a returned row that the candidate satisfies
    raises VerifierContractError.
    """
    t0 = time.monotonic()
    best: Optional[SolveOutcome] = None
    last_bound = -np.inf
    for round_no in range(max_rounds):
        remaining = None
        if time_limit is not None:
            remaining = time_limit - (time.monotonic() - t0)
            if remaining <= 0:
                out = best or SolveOutcome(status="time_limit")
                out.status = "time_limit"
                out.outer_rounds = round_no
                out.wall_time = time.monotonic() - t0
                return out
        outcome = solve_mip(model, time_limit=remaining)
        outcome.outer_rounds = round_no + 1
        if outcome.status != "optimal":
            outcome.wall_time = time.monotonic() - t0
            if outcome.status == "time_limit" and best is not None and best.x is not None:
                # hand back the last incumbent (callers re-derive a primal
                # value from it defensively) with the newer bound
                best.status = "time_limit"
                best.mip_bound = outcome.mip_bound if outcome.mip_bound is not None else best.mip_bound
                best.outer_rounds = outcome.outer_rounds
                best.wall_time = outcome.wall_time
                return best
            return outcome
        if outcome.objective is not None and outcome.objective < last_bound - 1e-6 * max(
            1.0, abs(last_bound)
        ):
            raise BackendError("dual bound decreased across outer iterations")
        last_bound = max(last_bound, outcome.objective)
        rows = list(verifier(outcome.x))
        if not rows:
            outcome.wall_time = time.monotonic() - t0
            outcome.mip_bound = outcome.objective
            return outcome
        for coeffs, sense, rhs, tag in rows:
            if debug:
                act = sum(c * outcome.x[j] for j, c in coeffs.items())
                ok = (
                    act < rhs - 1e-9
                    if sense == ">="
                    else act > rhs + 1e-9
                    if sense == "<="
                    else abs(act - rhs) > 1e-9
                )
                if not ok:
                    raise VerifierContractError(
                        f"verifier emitted a non-violated row (tag={tag}, lhs={act}, {sense} {rhs})"
                    )
            model.add_row(coeffs, sense, rhs, tag)
        best = outcome
    out = best or SolveOutcome(status="iteration_limit")
    out.status = "iteration_limit"
    out.wall_time = time.monotonic() - t0
    return out
