"""Formation topology: a DAG with typed X+ and Y edges.

Every follower has exactly one X+ edge (longitudinal spacing with headway)
and one Y edge (fixed lateral spacing). The leader has no outgoing edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter

from .controller import EdgeControlParams, check_feasibility
from .estimator import EstimatorGains

LEADER = "leader"
FOLLOWER = "follower"


@dataclass(frozen=True)
class Edge:
    follower: str
    predecessor: str
    params: EdgeControlParams


@dataclass(frozen=True)
class FormationGraph:
    roles: dict[str, str]
    x_edges: tuple[Edge, ...] = ()
    y_edges: tuple[Edge, ...] = ()

    @property
    def nodes(self) -> list[str]:
        return sorted(self.roles)

    @property
    def leader(self) -> str | None:
        leaders = [n for n, r in self.roles.items() if r == LEADER]
        return leaders[0] if len(leaders) == 1 else None

    def followers(self) -> list[str]:
        return sorted(n for n, r in self.roles.items() if r == FOLLOWER)

    def dependencies(self) -> dict[str, set[str]]:
        deps: dict[str, set[str]] = {n: set() for n in self.roles}
        for e in self.x_edges + self.y_edges:
            deps.setdefault(e.follower, set()).add(e.predecessor)
        return deps


class GraphValidationError(ValueError):
    def __init__(self, report: "ValidationReport"):
        super().__init__("formation graph is invalid:\n  " + "\n  ".join(report.errors))
        self.report = report


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    order: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def topological_order(graph: FormationGraph) -> list[str]:
    """Predecessors before followers; ties broken by node id.

    Raises:
        graphlib.CycleError: the edge set has a cycle.
    """
    ts = TopologicalSorter()
    deps = graph.dependencies()
    for node in sorted(deps):
        ts.add(node, *sorted(deps[node]))
    ts.prepare()
    order: list[str] = []
    while ts.is_active():
        ready = sorted(ts.get_ready())
        order.extend(ready)
        ts.done(*ready)
    return order


def validate(graph: FormationGraph, gains: EstimatorGains | None = None) -> ValidationReport:
    """Structural and (with ``gains``) per-edge feasibility report."""
    rep = ValidationReport()
    roles = graph.roles
    for node, role in sorted(roles.items()):
        if role not in (LEADER, FOLLOWER):
            rep.errors.append(f"node {node!r}: unknown role {role!r}")
    leaders = sorted(n for n, r in roles.items() if r == LEADER)
    if len(leaders) != 1:
        rep.errors.append(f"exactly one leader required, found {len(leaders)}: {leaders}")

    for kind, edges in (("X+", graph.x_edges), ("Y", graph.y_edges)):
        for e in edges:
            for end in (e.follower, e.predecessor):
                if end not in roles:
                    rep.errors.append(f"{kind} edge {e.follower}->{e.predecessor}: unknown node {end!r}")
            if e.follower == e.predecessor:
                rep.errors.append(f"{kind} edge {e.follower}->{e.predecessor}: self loop")
            if roles.get(e.follower) == LEADER:
                rep.errors.append(f"leader {e.follower!r} must not have outgoing edges ({kind} edge to {e.predecessor!r})")

    for f in graph.followers():
        nx = [e for e in graph.x_edges if e.follower == f]
        ny = [e for e in graph.y_edges if e.follower == f]
        if not nx:
            rep.errors.append(f"follower {f!r} has no outgoing X+ edge")
        if not ny:
            rep.errors.append(f"follower {f!r} has no outgoing Y edge")
        if len(nx) > 1:
            rep.errors.append(f"follower {f!r} has {len(nx)} X+ edges; combining several X+ commands is not supported")
        if len(ny) > 1:
            rep.errors.append(f"follower {f!r} has {len(ny)} Y edges; combining several Y commands is not supported")

    try:
        rep.order = topological_order(graph)
    except CycleError as exc:
        cyc = " -> ".join(str(n) for n in exc.args[1]) if len(exc.args) > 1 else "?"
        rep.errors.append(f"edges contain a cycle: {cyc}")

    if gains is not None:
        for kind, edges in (("X+", graph.x_edges), ("Y", graph.y_edges)):
            for e in edges:
                p = e.params
                if kind == "X+" and p.d_star_x is None:
                    rep.errors.append(f"X+ edge {e.follower}->{e.predecessor}: missing d_star_x")
                    continue
                if kind == "Y" and p.d_star_y is None:
                    rep.errors.append(f"Y edge {e.follower}->{e.predecessor}: missing d_star_y")
                    continue
                for chk in check_feasibility(p, gains).checks:
                    line = f"{kind} edge {e.follower}->{e.predecessor}: {chk.message}"
                    (rep.notes if chk.ok else rep.errors).append(line)
    return rep


@dataclass(frozen=True)
class EstimatorSlot:
    index: int
    follower: str
    target: str


@dataclass(frozen=True)
class FollowerPlan:
    follower: str
    x_edge: Edge
    y_edge: Edge
    x_slot: int
    y_slot: int


@dataclass(frozen=True)
class RuntimePlan:
    order: tuple[str, ...]
    estimators: tuple[EstimatorSlot, ...]
    followers: tuple[FollowerPlan, ...]

    def slots_of(self, follower: str) -> list[int]:
        return sorted({fp.x_slot for fp in self.followers if fp.follower == follower}
                      | {fp.y_slot for fp in self.followers if fp.follower == follower})


def wire(graph: FormationGraph, gains: EstimatorGains | None = None) -> RuntimePlan:
    """Allocate one estimator per distinct (follower, predecessor) pair.

    The X+ edge estimator feeds the longitudinal law and the Y edge estimator
    the lateral law; when both edges point at the same predecessor a single
    estimator serves both.

    Raises:
        GraphValidationError: the graph fails :func:`validate`.
    """
    rep = validate(graph, gains)
    if not rep.ok:
        raise GraphValidationError(rep)
    slots: dict[tuple[str, str], int] = {}
    estimators: list[EstimatorSlot] = []
    followers: list[FollowerPlan] = []

    def slot(f: str, t: str) -> int:
        key = (f, t)
        if key not in slots:
            slots[key] = len(estimators)
            estimators.append(EstimatorSlot(slots[key], f, t))
        return slots[key]

    for node in rep.order:
        if graph.roles[node] != FOLLOWER:
            continue
        xe = next(e for e in graph.x_edges if e.follower == node)
        ye = next(e for e in graph.y_edges if e.follower == node)
        xs = slot(node, xe.predecessor)
        ys = slot(node, ye.predecessor)
        followers.append(FollowerPlan(node, xe, ye, xs, ys))
    return RuntimePlan(tuple(rep.order), tuple(estimators), tuple(followers))
