"""Instance data and first-stage structures.

Vertices are numbered 0..n with 0 the depot; customers are 1..n.  Undirected
edges are ordered pairs (u, v) with u < v; depot edges may carry multiplicity
2 (single-customer routes).  Costs, demands and the capacity are integers so
that every ceiling is exact; probabilities are exact fractions.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Optional, Sequence

Edge = tuple[int, int]


class InstanceError(ValueError):
    """Raised when instance data violates the file schema or an invariant."""


class DepotFreeCycleError(ValueError):
    """An integer edge vector contains a cycle not through the depot.

    Signals a missing subtour elimination cut; the offending customer set is
    attached so the caller can separate it.
    """

    def __init__(self, cycle: frozenset[int]):
        super().__init__(f"depot-free cycle on customers {sorted(cycle)}")
        self.cycle = cycle


def edge(u: int, v: int) -> Edge:
    """Normalize an undirected edge to (min, max) order."""
    if u == v:
        raise ValueError(f"self-loop at vertex {u}")
    return (u, v) if u < v else (v, u)


def min_vehicles(S: Iterable[int], d: Mapping[int, int] | Sequence, C) -> int:
    """Minimum number of vehicles to serve S: ceil(d(S)/C), exact.

    `d` maps customers to demands (a mapping keyed by customer, or a sequence
    indexed by customer-1).  Returns 0 for zero-demand sets; callers clamp to
    1 where a nonempty set must use at least one vehicle.
    """
    members = list(S)
    if not members:
        raise ValueError("min_vehicles: empty customer set")
    if isinstance(d, Mapping):
        total = sum(d[v] for v in members)
    else:
        total = sum(d[v - 1] for v in members)
    return math.ceil(Fraction(total) / Fraction(C))


@dataclass(frozen=True)
class Instance:
    """A complete graph with integer costs and N demand scenarios.

    cost[(n+1) x (n+1)] is symmetric with zero diagonal.  scenarios[xi][v-1]
    is customer v's demand in scenario xi.  probabilities sum to 1 exactly.
    fleet_size is required only when the first-stage set fixes the number of
    routes.
    """

    n_customers: int
    cost: tuple[tuple[int, ...], ...]
    capacity: int
    scenarios: tuple[tuple[int, ...], ...]
    probabilities: tuple[Fraction, ...]
    fleet_size: Optional[int] = None
    name: str = ""

    def __post_init__(self):
        n = self.n_customers
        if n < 1:
            raise InstanceError("need at least one customer")
        if self.capacity < 1:
            raise InstanceError("capacity must be a positive integer")
        object.__setattr__(self, "cost", tuple(tuple(int(c) for c in row) for row in self.cost))
        object.__setattr__(
            self, "scenarios", tuple(tuple(int(x) for x in row) for row in self.scenarios)
        )
        object.__setattr__(self, "probabilities", tuple(Fraction(p) for p in self.probabilities))
        if len(self.cost) != n + 1 or any(len(row) != n + 1 for row in self.cost):
            raise InstanceError("cost matrix must be (n+1) x (n+1)")
        for i in range(n + 1):
            if self.cost[i][i] != 0:
                raise InstanceError("cost diagonal must be zero")
            for j in range(n + 1):
                if self.cost[i][j] < 0:
                    raise InstanceError("negative edge cost")
                if self.cost[i][j] != self.cost[j][i]:
                    raise InstanceError("cost matrix must be symmetric")
        if not self.scenarios:
            raise InstanceError("need at least one scenario")
        if len(self.probabilities) != len(self.scenarios):
            raise InstanceError("one probability per scenario required")
        for row in self.scenarios:
            if len(row) != n:
                raise InstanceError("each scenario needs one demand per customer")
            if any(x < 0 for x in row):
                raise InstanceError("negative demand")
        if any(p < 0 for p in self.probabilities):
            raise InstanceError("negative probability")
        if sum(self.probabilities, Fraction(0)) != 1:
            raise InstanceError("probabilities must sum to exactly 1")
        if self.fleet_size is not None and self.fleet_size < 1:
            raise InstanceError("fleet size must be a positive integer")

    # -- basic accessors -------------------------------------------------

    @property
    def n_scenarios(self) -> int:
        return len(self.scenarios)

    @property
    def customers(self) -> range:
        return range(1, self.n_customers + 1)

    @property
    def vertices(self) -> range:
        return range(0, self.n_customers + 1)

    def edges(self) -> list[Edge]:
        n = self.n_customers
        return [(u, v) for u in range(n + 1) for v in range(u + 1, n + 1)]

    def demand(self, xi: int, v: int) -> int:
        return self.scenarios[xi][v - 1]

    def demand_of(self, xi: int, S: Iterable[int]) -> int:
        row = self.scenarios[xi]
        return sum(row[v - 1] for v in S)

    def expected_demand(self, v: int) -> Fraction:
        return sum(
            (p * self.scenarios[xi][v - 1] for xi, p in enumerate(self.probabilities)),
            Fraction(0),
        )

    def expected_demand_of(self, S: Iterable[int]) -> Fraction:
        members = list(S)
        return sum((self.expected_demand(v) for v in members), Fraction(0))

    def k_scenario(self, xi: int, S: Iterable[int]) -> int:
        """Vehicles needed for S under scenario xi demands."""
        return min_vehicles(S, self.scenarios[xi], self.capacity)

    def k_bar(self, S: Iterable[int]) -> int:
        """Vehicles needed for S under expected demands (exact rational ceil)."""
        members = list(S)
        if not members:
            raise ValueError("empty customer set")
        return math.ceil(self.expected_demand_of(members) / self.capacity)

    @property
    def needs_preprocessing(self) -> bool:
        C = self.capacity
        return any(x > C for row in self.scenarios for x in row)

    def total_demand(self, xi: int) -> int:
        return sum(self.scenarios[xi])


def preprocess_large_demands(inst: Instance) -> tuple[Instance, Fraction]:
    """Fold guaranteed depot trips of over-capacity demands into a base cost.

    Each demand d > C is replaced by its residual after charging full
    back-and-forth trips at 2*c_0v each.  A residual of 0 with positive
    original demand keeps one full load C instead (one fewer charged trip),
    so the customer still requires a full vehicle.  Idempotent.
    """
    C = inst.capacity
    base = Fraction(0)
    new_rows = []
    for xi, row in enumerate(inst.scenarios):
        p = inst.probabilities[xi]
        new_row = []
        for v, d in enumerate(row, start=1):
            trips, residual = divmod(d, C)
            if trips > 0 and residual == 0:
                trips -= 1
                residual = C
            base += p * 2 * inst.cost[0][v] * trips
            new_row.append(residual)
        new_rows.append(tuple(new_row))
    out = Instance(
        n_customers=inst.n_customers,
        cost=inst.cost,
        capacity=C,
        scenarios=tuple(new_rows),
        probabilities=inst.probabilities,
        fleet_size=inst.fleet_size,
        name=inst.name,
    )
    return out, base


# -- first-stage structures ----------------------------------------------


@dataclass(frozen=True)
class Route:
    """An ordered visit of distinct customers, depot implicit at both ends."""

    customers: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "customers", tuple(int(v) for v in self.customers))
        if not self.customers:
            raise ValueError("route needs at least one customer")
        if len(set(self.customers)) != len(self.customers):
            raise ValueError("route repeats a customer")
        if any(v < 1 for v in self.customers):
            raise ValueError("route contains the depot or an invalid vertex")

    def __len__(self) -> int:
        return len(self.customers)

    def reverse(self) -> "Route":
        return Route(tuple(reversed(self.customers)))

    def customer_set(self) -> frozenset[int]:
        return frozenset(self.customers)

    def edge_multiplicities(self) -> dict[Edge, int]:
        """Edge usage counts; a single-customer route uses its depot edge twice."""
        seq = (0,) + self.customers + (0,)
        mult: dict[Edge, int] = {}
        for a, b in zip(seq[:-1], seq[1:]):
            e = edge(a, b)
            mult[e] = mult.get(e, 0) + 1
        return mult

    def interior_edges(self) -> list[Edge]:
        """Customer-customer edges of the route (no depot edges)."""
        cs = self.customers
        return [edge(a, b) for a, b in zip(cs[:-1], cs[1:])]

    def cost(self, inst: Instance) -> int:
        seq = (0,) + self.customers + (0,)
        return sum(inst.cost[a][b] for a, b in zip(seq[:-1], seq[1:]))

    def spans(self) -> Iterator[tuple[int, int]]:
        """All contiguous index spans (i, j), 0-based inclusive."""
        n = len(self.customers)
        for i in range(n):
            for j in range(i, n):
                yield (i, j)

    def subroute(self, i: int, j: int) -> "Route":
        return Route(self.customers[i : j + 1])


@dataclass(frozen=True)
class RoutingPlan:
    """A set of routes whose customer sets partition the customers."""

    routes: tuple[Route, ...]

    def __post_init__(self):
        seen: set[int] = set()
        for r in self.routes:
            cs = r.customer_set()
            if seen & cs:
                raise ValueError("routes share a customer")
            seen |= cs

    def customer_set(self) -> frozenset[int]:
        out: set[int] = set()
        for r in self.routes:
            out |= r.customer_set()
        return frozenset(out)

    def edge_multiplicities(self) -> dict[Edge, int]:
        mult: dict[Edge, int] = {}
        for r in self.routes:
            for e, m in r.edge_multiplicities().items():
                mult[e] = mult.get(e, 0) + m
        return mult

    def cost(self, inst: Instance) -> int:
        return sum(r.cost(inst) for r in self.routes)


def routes_of(x: Mapping[Edge, int], n_customers: int) -> RoutingPlan:
    """Decompose an integer edge vector into its routes.

    Requires degree 2 at every customer and depot connectivity; a depot-free
    cycle raises DepotFreeCycleError carrying the offending customer set so
    the caller can emit the missing subtour cut.
    """
    adj: dict[int, list[int]] = {v: [] for v in range(n_customers + 1)}
    for (u, v), m in x.items():
        if m not in (0, 1, 2):
            raise ValueError(f"edge multiplicity {m} outside {{0,1,2}} on {(u, v)}")
        if m == 2 and u != 0:
            raise ValueError(f"multiplicity 2 on customer edge {(u, v)}")
        for _ in range(m):
            adj[u].append(v)
            adj[v].append(u)
    for c in range(1, n_customers + 1):
        if len(adj[c]) != 2:
            raise ValueError(f"customer {c} has degree {len(adj[c])}, expected 2")

    used: dict[Edge, int] = {}
    visited: set[int] = set()
    routes: list[Route] = []

    def take(a: int, b: int) -> None:
        e = edge(a, b)
        used[e] = used.get(e, 0) + 1

    def available(a: int, b: int) -> bool:
        e = edge(a, b)
        return used.get(e, 0) < x.get(e, 0)

    for start in sorted(adj[0]):
        if not available(0, start):
            continue
        take(0, start)
        seq = [start]
        visited.add(start)
        cur, prev = start, 0
        while True:
            nxt = None
            for cand in sorted(adj[cur]):
                if available(cur, cand):
                    nxt = cand
                    break
            if nxt is None:
                raise ValueError(f"route walk stuck at customer {cur}")
            take(cur, nxt)
            if nxt == 0:
                break
            seq.append(nxt)
            visited.add(nxt)
            prev, cur = cur, nxt
        routes.append(Route(tuple(seq)))

    leftover = {c for c in range(1, n_customers + 1) if c not in visited and adj[c]}
    if leftover:
        # isolate one connected leftover component for the error payload
        start = min(leftover)
        comp = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w != 0 and w not in comp:
                    comp.add(w)
                    stack.append(w)
        raise DepotFreeCycleError(frozenset(comp))
    return RoutingPlan(tuple(routes))


@dataclass(frozen=True)
class PartialRoute:
    """Ordered disjoint customer sets; encodes all routes visiting them in order.

    No two consecutive sets may both have more than one element.
    """

    sets: tuple[frozenset[int], ...]

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(frozenset(s) for s in self.sets))
        if not self.sets:
            raise ValueError("partial route needs at least one set")
        seen: set[int] = set()
        for s in self.sets:
            if not s:
                raise ValueError("empty set in partial route")
            if seen & s:
                raise ValueError("partial route sets must be disjoint")
            seen |= s
        for a, b in zip(self.sets[:-1], self.sets[1:]):
            if len(a) > 1 and len(b) > 1:
                raise ValueError("two consecutive non-singleton sets")

    def __len__(self) -> int:
        return len(self.sets)

    def customers(self) -> frozenset[int]:
        out: set[int] = set()
        for s in self.sets:
            out |= s
        return frozenset(out)

    @property
    def all_singletons(self) -> bool:
        return all(len(s) == 1 for s in self.sets)

    @classmethod
    def from_route(cls, route: Route) -> "PartialRoute":
        return cls(tuple(frozenset((v,)) for v in route.customers))

    def spans(self) -> Iterator[tuple[int, int]]:
        n = len(self.sets)
        for i in range(n):
            for j in range(i, n):
                yield (i, j)

    def span_customers(self, i: int, j: int) -> frozenset[int]:
        out: set[int] = set()
        for s in self.sets[i : j + 1]:
            out |= s
        return frozenset(out)


def adheres(r: Route, H: PartialRoute) -> bool:
    """True iff the route visits exactly H's customers in H's set order.

    Order within a set is free; both traversal directions are accepted.
    """
    if r.customer_set() != H.customers():
        return False

    def factors(seq: tuple[int, ...]) -> bool:
        idx = 0
        remaining = set(H.sets[0])
        for v in seq:
            while not remaining:
                idx += 1
                if idx >= len(H.sets):
                    return False
                remaining = set(H.sets[idx])
            if v not in remaining:
                return False
            remaining.discard(v)
        return idx == len(H.sets) - 1 and not remaining

    return factors(r.customers) or factors(tuple(reversed(r.customers)))


# -- instance file schema --------------------------------------------------

_HEADER_KEYS = {"NAME", "N_CUSTOMERS", "CAPACITY", "FLEET_SIZE", "N_SCENARIOS"}
_SECTION_KEYS = {"COST_MATRIX", "COORDS", "PROB", "DEMANDS"}


def _euclidean_costs(coords: Sequence[tuple[int, int]]) -> list[list[int]]:
    n1 = len(coords)
    cost = [[0] * n1 for _ in range(n1)]
    for i in range(n1):
        for j in range(i + 1, n1):
            dx = coords[i][0] - coords[j][0]
            dy = coords[i][1] - coords[j][1]
            c = int(math.sqrt(dx * dx + dy * dy) + 0.5)
            cost[i][j] = cost[j][i] = c
    return cost


def _cost_from_lower_triangle(rows: list[list[int]], n: int) -> list[list[int]]:
    if len(rows) != n:
        raise InstanceError(f"COST_MATRIX needs {n} lower-triangle rows, got {len(rows)}")
    cost = [[0] * (n + 1) for _ in range(n + 1)]
    for i, row in enumerate(rows, start=1):
        if len(row) != i:
            raise InstanceError(f"COST_MATRIX row for vertex {i} needs {i} entries")
        for j, c in enumerate(row):
            cost[i][j] = cost[j][i] = c
    return cost


def _parse_fraction(tok: str) -> Fraction:
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError) as exc:
        raise InstanceError(f"bad probability {tok!r}") from exc


def parse_instance(text: str) -> Instance:
    """Parse an instance from the text schema or its JSON object form.

    Text schema (order free; '#' starts a comment)::

        NAME: tiny
        N_CUSTOMERS: 3
        CAPACITY: 10
        FLEET_SIZE: 2            # optional
        COST_MATRIX:             # n lower-triangle rows (vertex 1..n), or COORDS
        3
        4 5
        6 7 8
        N_SCENARIOS: 2
        PROB: 1/2 1/2
        DEMANDS:                 # one row per scenario, n integers each
        5 5 5
        6 6 6

    COORDS replaces COST_MATRIX with n+1 integer points (depot first); costs
    are Euclidean distances rounded to the nearest integer.
    """
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return _parse_json_instance(stripped)

    header: dict[str, str] = {}
    sections: dict[str, list[list[str]]] = {}
    current: Optional[str] = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        key_u = key.strip().upper()
        if sep and key_u in _HEADER_KEYS:
            current = None
            header[key_u] = rest.strip()
            continue
        if key_u in _SECTION_KEYS:
            current = key_u
            sections[current] = []
            rest = rest.strip()
            if rest:
                sections[current].append(rest.split())
            continue
        if current is None:
            raise InstanceError(f"unexpected line outside any section: {raw!r}")
        sections[current].append(line.split())

    def require(key: str) -> str:
        if key not in header:
            raise InstanceError(f"missing {key}")
        return header[key]

    try:
        n = int(require("N_CUSTOMERS"))
        capacity = int(require("CAPACITY"))
    except ValueError as exc:
        raise InstanceError(str(exc)) from exc
    fleet = int(header["FLEET_SIZE"]) if "FLEET_SIZE" in header else None
    name = header.get("NAME", "")

    if "COST_MATRIX" in sections:
        try:
            rows = [[int(t) for t in row] for row in sections["COST_MATRIX"]]
        except ValueError as exc:
            raise InstanceError(f"bad COST_MATRIX entry: {exc}") from exc
        cost = _cost_from_lower_triangle(rows, n)
    elif "COORDS" in sections:
        pts = []
        for row in sections["COORDS"]:
            if len(row) != 2:
                raise InstanceError("each COORDS line needs two integers")
            pts.append((int(row[0]), int(row[1])))
        if len(pts) != n + 1:
            raise InstanceError(f"COORDS needs {n + 1} points (depot first)")
        cost = _euclidean_costs(pts)
    else:
        raise InstanceError("missing COST_MATRIX or COORDS")

    if "PROB" not in sections:
        raise InstanceError("missing PROB")
    prob_tokens = [t for row in sections["PROB"] for t in row]
    probabilities = tuple(_parse_fraction(t) for t in prob_tokens)
    if "N_SCENARIOS" in header and int(header["N_SCENARIOS"]) != len(probabilities):
        raise InstanceError("N_SCENARIOS does not match PROB length")

    if "DEMANDS" not in sections:
        raise InstanceError("missing DEMANDS")
    try:
        demand_rows = [[int(t) for t in row] for row in sections["DEMANDS"]]
    except ValueError as exc:
        raise InstanceError(f"bad DEMANDS entry: {exc}") from exc
    if len(demand_rows) != len(probabilities):
        raise InstanceError("DEMANDS needs one row per scenario")

    return Instance(
        n_customers=n,
        cost=tuple(tuple(row) for row in cost),
        capacity=capacity,
        scenarios=tuple(tuple(row) for row in demand_rows),
        probabilities=probabilities,
        fleet_size=fleet,
        name=name,
    )


def _parse_json_instance(text: str) -> Instance:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"bad JSON instance: {exc}") from exc
    try:
        n = int(obj["n_customers"])
        capacity = int(obj["capacity"])
        probabilities = tuple(_parse_fraction(str(p)) for p in obj["probabilities"])
        demands = tuple(tuple(int(x) for x in row) for row in obj["demands"])
    except KeyError as exc:
        raise InstanceError(f"missing field {exc}") from exc
    if "cost_matrix" in obj:
        rows = obj["cost_matrix"]
        if len(rows) == n + 1 and all(len(r) == n + 1 for r in rows):
            cost = [[int(c) for c in row] for row in rows]
        else:
            cost = _cost_from_lower_triangle([[int(c) for c in row] for row in rows], n)
    elif "coords" in obj:
        pts = [(int(p[0]), int(p[1])) for p in obj["coords"]]
        if len(pts) != n + 1:
            raise InstanceError(f"coords needs {n + 1} points")
        cost = _euclidean_costs(pts)
    else:
        raise InstanceError("missing cost_matrix or coords")
    fleet = obj.get("fleet_size")
    return Instance(
        n_customers=n,
        cost=tuple(tuple(row) for row in cost),
        capacity=capacity,
        scenarios=demands,
        probabilities=probabilities,
        fleet_size=int(fleet) if fleet is not None else None,
        name=str(obj.get("name", "")),
    )


def format_instance(inst: Instance) -> str:
    """Render an instance in the text schema; parse_instance round-trips it."""
    lines = []
    if inst.name:
        lines.append(f"NAME: {inst.name}")
    lines.append(f"N_CUSTOMERS: {inst.n_customers}")
    lines.append(f"CAPACITY: {inst.capacity}")
    if inst.fleet_size is not None:
        lines.append(f"FLEET_SIZE: {inst.fleet_size}")
    lines.append("COST_MATRIX:")
    for i in range(1, inst.n_customers + 1):
        lines.append(" ".join(str(inst.cost[i][j]) for j in range(i)))
    lines.append(f"N_SCENARIOS: {inst.n_scenarios}")
    lines.append("PROB: " + " ".join(str(p) for p in inst.probabilities))
    lines.append("DEMANDS:")
    for row in inst.scenarios:
        lines.append(" ".join(str(x) for x in row))
    return "\n".join(lines) + "\n"


def generate_instance(
    n: int,
    n_scenarios: int,
    capacity: int,
    seed: int,
    grid: int = 100,
    demand_mean: Optional[int] = None,
    demand_spread: Optional[int] = None,
    fleet_size: Optional[int] = None,
    name: str = "",
) -> Instance:
    """Deterministic random instance: grid coordinates, rounded Euclidean costs,
    uniform scenario probabilities, demands spread around a mean."""
    if n < 1 or n_scenarios < 1 or capacity < 1:
        raise ValueError("sizes must be positive")
    rng = random.Random(seed)
    pts: list[tuple[int, int]] = [(grid // 2, grid // 2)]
    taken = {pts[0]}
    while len(pts) < n + 1:
        p = (rng.randrange(grid + 1), rng.randrange(grid + 1))
        if p not in taken:
            taken.add(p)
            pts.append(p)
    cost = _euclidean_costs(pts)
    mean = demand_mean if demand_mean is not None else max(1, capacity // max(2, n // 2))
    spread = demand_spread if demand_spread is not None else max(1, mean // 2)
    scenarios = []
    for _ in range(n_scenarios):
        row = []
        for _ in range(n):
            d = mean + rng.randint(-spread, spread)
            row.append(max(0, min(capacity, d)))
        scenarios.append(tuple(row))
    probabilities = tuple(Fraction(1, n_scenarios) for _ in range(n_scenarios))
    return Instance(
        n_customers=n,
        cost=tuple(tuple(row) for row in cost),
        capacity=capacity,
        scenarios=tuple(scenarios),
        probabilities=probabilities,
        fleet_size=fleet_size,
        name=name or f"gen-n{n}-N{n_scenarios}-s{seed}",
    )
