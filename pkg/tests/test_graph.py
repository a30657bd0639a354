import pytest

from nhformation.controller import EdgeControlParams
from nhformation.estimator import derive_gains
from nhformation.graph import (
    FOLLOWER,
    LEADER,
    Edge,
    FormationGraph,
    GraphValidationError,
    topological_order,
    validate,
    wire,
)

G15 = derive_gains(-15.0)
G6 = derive_gains(-6.0)


def xe(f, p, d_star=0.45):
    return Edge(f, p, EdgeControlParams(d_s=0.3, T=0.2, d_star_x=d_star, E_u=1.4))


def ye(f, p, d_star, d_s):
    return Edge(f, p, EdgeControlParams(d_s=d_s, d_star_y=d_star, E_omega=1.4))


def diamond() -> FormationGraph:
    roles = {"L": LEADER, "F1": FOLLOWER, "F2": FOLLOWER, "F3": FOLLOWER}
    return FormationGraph(
        roles,
        x_edges=(xe("F1", "L"), xe("F2", "L", 0.85), xe("F3", "F2")),
        y_edges=(ye("F1", "L", -0.4, -0.3), ye("F2", "F1", 0.8, 0.3), ye("F3", "F1", 0.4, 0.3)),
    )


def triangle() -> FormationGraph:
    roles = {"L": LEADER, "F1": FOLLOWER, "F2": FOLLOWER}
    x = EdgeControlParams(d_s=0.2, T=0.2, d_star_x=0.4, E_u=0.4)
    return FormationGraph(
        roles,
        x_edges=(Edge("F1", "L", x), Edge("F2", "L", x)),
        y_edges=(Edge("F1", "L", EdgeControlParams(d_s=0.2, d_star_y=0.3, E_omega=0.4)),
                 Edge("F2", "L", EdgeControlParams(d_s=-0.2, d_star_y=-0.3, E_omega=0.4))),
    )


@pytest.mark.parametrize("graph, gains", [(diamond(), G15), (triangle(), G6)])
def test_reference_formations_are_valid(graph, gains):
    rep = validate(graph, gains)
    assert rep.ok, rep.errors
    assert rep.order[0] == "L"
    assert len(rep.notes) == 2 * len(graph.followers())


def test_missing_y_edge_is_named():
    g = diamond()
    g = FormationGraph(g.roles, g.x_edges, g.y_edges[:2])
    rep = validate(g)
    assert rep.errors == ["follower 'F3' has no outgoing Y edge"]


def test_cycle_detected():
    roles = {"L": LEADER, "A": FOLLOWER, "B": FOLLOWER}
    g = FormationGraph(roles, x_edges=(xe("A", "B"), xe("B", "A")),
                       y_edges=(ye("A", "L", 0.4, 0.3), ye("B", "L", -0.4, -0.3)))
    rep = validate(g)
    assert any("cycle" in e for e in rep.errors)
    with pytest.raises(GraphValidationError, match="cycle"):
        wire(g)


def test_multiple_x_edges_rejected():
    g = diamond()
    g = FormationGraph(g.roles, g.x_edges + (xe("F3", "L"),), g.y_edges)
    rep = validate(g)
    assert any("'F3' has 2 X+ edges" in e for e in rep.errors)


def test_leader_out_edge_rejected():
    g = diamond()
    g = FormationGraph(g.roles, g.x_edges + (xe("L", "F1"),), g.y_edges)
    assert any("leader 'L' must not have outgoing" in e for e in validate(g).errors)


def test_unknown_node_and_leader_count():
    g = diamond()
    g = FormationGraph(g.roles, g.x_edges + (xe("F1", "ghost"),), g.y_edges)
    assert any("unknown node 'ghost'" in e for e in validate(g).errors)
    two = FormationGraph({"L": LEADER, "M": LEADER})
    assert any("exactly one leader" in e for e in validate(two).errors)


def test_infeasible_edge_reported_with_name():
    g = diamond()
    bad = (xe("F1", "L", 0.39),) + g.x_edges[1:]
    rep = validate(FormationGraph(g.roles, bad, g.y_edges), G15)
    assert len(rep.errors) == 1
    assert rep.errors[0].startswith("X+ edge F1->L") and "0.393333" in rep.errors[0]


def test_wire_triangle_one_estimator_per_follower():
    plan = wire(triangle(), G6)
    assert len(plan.estimators) == 2
    for fp in plan.followers:
        assert fp.x_slot == fp.y_slot


def test_wire_diamond_allocates_per_distinct_predecessor():
    plan = wire(diamond(), G15)
    assert [(s.follower, s.target) for s in plan.estimators] == [
        ("F1", "L"), ("F2", "L"), ("F2", "F1"), ("F3", "F2"), ("F3", "F1")]
    assert len(plan.slots_of("F3")) == 2
    assert len(plan.slots_of("F1")) == 1


def test_wire_is_deterministic_and_topological():
    a, b = wire(diamond(), G15), wire(diamond(), G15)
    assert a == b
    pos = {n: i for i, n in enumerate(a.order)}
    for f, deps in diamond().dependencies().items():
        for d in deps:
            assert pos[d] < pos[f]


def test_topological_ties_broken_by_id():
    assert topological_order(triangle()) == ["L", "F1", "F2"]
