from __future__ import annotations

import math

import numpy as np
import pytest

from master_str.errors import BadDomain, NotAStar, TooManyInternalSites
from master_str.lattice import (
    Edge,
    LatticeGraph,
    Site,
    assign_alphas,
    check_sum_rule,
    partition_function,
    square_lattice,
    star_graph,
    star_triangle_move,
)
from master_str.master_weights import QuadratureControl, WeightSpec, weight_W
from master_str.special_fn import EllipticParams

P_I = EllipticParams(1j, 1j)
P_II = EllipticParams(0.2 + 0.9j, -0.2 + 0.9j)
CTL = QuadratureControl(points=64, rel_tol=1e-11)


def with_extra(g: LatticeGraph, sites=(), edges=(), internal=()) -> LatticeGraph:
    """Add sites/edges to a graph and turn the listed boundary sites internal."""
    old = tuple(Site(s.id, False, s.spin) if s.id in internal else s for s in g.sites)
    return LatticeGraph(old + tuple(sites), g.edges + tuple(edges))


def z_invariance_graphs() -> list[tuple[LatticeGraph, EllipticParams]]:
    """Five graphs with a star at site ``d``, used for the Z-invariance check."""
    e1, e2 = P_I.eta.real, P_II.eta.real
    g1 = star_graph(e1 / 4, e1 / 4)
    g2 = star_graph(0.2 * e1, 0.35 * e1, spins=(0.4, 2.3, 4.9), r=0.1)
    g3 = star_graph(0.3 * e2, 0.25 * e2, spins=(1.1, 3.0, 5.5))
    # site a becomes internal and hangs on two extra boundary sites
    g4 = with_extra(star_graph(0.25 * e1, 0.3 * e1, spins=(0.0, 1.2, 2.5)),
                    sites=(Site("e", True, 0.7), Site("f", True, 3.3)),
                    edges=(Edge("a", "e", "first", 0.4 * e1, 0.0), Edge("a", "f", "second", 0.3 * e1, 0.0)),
                    internal=("a",))
    # two internal outer sites a and b joined by an extra edge
    g5 = with_extra(star_graph(0.2 * e2, 0.3 * e2, spins=(0.0, 0.0, 2.0)),
                    sites=(Site("e", True, 1.5),),
                    edges=(Edge("a", "e", "first", 0.35 * e2, 0.0), Edge("b", "e", "second", 0.5 * e2, 0.0),
                           Edge("a", "b", "first", 0.6 * e2, 0.1 * e2)),
                    internal=("a", "b"))
    return [(g1, P_I), (g2, P_I), (g3, P_II), (g4, P_I), (g5, P_II)]


@pytest.mark.parametrize("k", range(5))
def test_z_invariance(k):
    g, P = z_invariance_graphs()[k]
    tri = star_triangle_move(g, "d")
    assert tri.M == g.M - 1
    z_star = partition_function(g, P, CTL)
    z_tri = partition_function(tri, P, CTL)
    assert abs(z_star / z_tri - 1) < 1e-7


def test_move_produces_expected_alphas():
    eta = P_I.eta.real
    a1, a3 = 0.2 * eta, 0.3 * eta
    tri = star_triangle_move(star_graph(a1, a3), "d")
    alphas = sorted(x.real for x in assign_alphas(tri, P_I).alphas)
    assert np.allclose(alphas, sorted([a1, a3, eta - a1 - a3]), atol=1e-14)


def test_move_rejects_non_stars():
    g = square_lattice(1, 1, 0.5 * P_I.eta.real, 0.0)
    with pytest.raises(NotAStar):
        star_triangle_move(g, "s0_0")
    with pytest.raises(NotAStar):
        star_triangle_move(star_graph(1.0, 1.0), "a")
    # three legs with a wrong type pattern
    bad = LatticeGraph((Site("a", True), Site("b", True), Site("c", True), Site("d")),
                       (Edge("d", "a", "first", 1.0, 0.0), Edge("d", "b", "first", 2.0, 0.0),
                        Edge("d", "c", "second", 1.0, 0.0)))
    with pytest.raises(NotAStar):
        star_triangle_move(bad, "d")


def test_assign_alphas_definitions():
    eta = P_I.eta.real
    g = LatticeGraph((Site("a", True), Site("b", True)),
                     (Edge("a", "b", "first", eta / 3, 0.0), Edge("a", "b", "second", eta / 3, 0.0)))
    a = assign_alphas(g, P_I).alphas
    assert abs(a[0] - eta / 3) < 1e-14 and abs(a[1] - 2 * eta / 3) < 1e-14


def test_assign_alphas_physical_domain():
    g = LatticeGraph((Site("a", True), Site("b", True)), (Edge("a", "b", "first", 0.0, 1.0),))
    with pytest.raises(BadDomain):
        assign_alphas(g, P_I)
    assert assign_alphas(g, P_I, physical=False).alphas[0] == -1


def test_square_lattice_alphas_and_sum_rule():
    eta = P_I.eta.real
    g = square_lattice(2, 2, 0.3 * eta, 0.0)
    a = assign_alphas(g, P_I)
    types = {e.type for e in g.edges}
    assert types == {"first", "second"}
    for e, al in zip(g.edges, a.alphas):
        want = 0.3 * eta if e.type == "first" else 0.7 * eta
        assert abs(al - want) < 1e-14
    assert max(check_sum_rule(g, a).values()) < 1e-13


def test_sum_rule_degree_six():
    eta = P_I.eta.real
    u1, u2, u3 = 0.0, 0.2 * eta, 0.5 * eta
    outer = [Site(f"o{k}", True) for k in range(6)]
    pattern = [("first", u2, u1), ("first", u3, u2), ("second", u3, u1)] * 2
    edges = [Edge("c", f"o{k}", t, p, q) for k, (t, p, q) in enumerate(pattern)]
    g = LatticeGraph(tuple(outer) + (Site("c"),), tuple(edges))
    assert check_sum_rule(g, assign_alphas(g, P_I))["c"] < 1e-13


def test_sum_rule_negative_control():
    eta = P_I.eta.real
    g = square_lattice(1, 1, 0.3 * eta, 0.0)
    edges = list(g.edges)
    e = edges[0]
    edges[0] = Edge(e.a, e.b, e.type, e.p + 0.1, e.q)
    bad = LatticeGraph(g.sites, tuple(edges))
    assert check_sum_rule(bad, assign_alphas(bad, P_I))["s0_0"] > 0.05


def test_no_internal_sites_is_product():
    eta = P_I.eta.real
    g = LatticeGraph((Site("a", True, 0.3), Site("b", True, 1.4)),
                     (Edge("a", "b", "first", 0.3 * eta, 0.0), Edge("a", "b", "second", 0.2 * eta, 0.0)))
    want = weight_W(WeightSpec(P_I, 0.3 * eta), 0.3, 1.4) * weight_W(WeightSpec(P_I, 0.8 * eta), 0.3, 1.4)
    assert abs(partition_function(g, P_I) / want - 1) < 1e-14


def test_homogeneous_cross_is_stable_and_positive():
    eta = P_I.eta.real
    g = square_lattice(1, 1, eta / 2, 0.0)
    trace: list = []
    z = partition_function(g, P_I, QuadratureControl(points=32, rel_tol=1e-12), trace=trace)
    assert abs(z.imag) < 1e-12 * abs(z) and z.real > 0
    (n1, v1), (n2, v2) = trace[-2:]
    assert n2 == 2 * n1 and abs(v2 / v1 - 1) < 1e-8


def test_too_many_internal_sites():
    g = square_lattice(1, 5, 0.5 * P_I.eta.real, 0.0)
    assert g.M == 5
    with pytest.raises(TooManyInternalSites):
        partition_function(g, P_I)


def test_json_round_trip():
    g, _ = z_invariance_graphs()[3]
    back = LatticeGraph.from_json(g.to_json())
    assert back == g


def test_graph_validation():
    with pytest.raises(ValueError):
        LatticeGraph((Site("a"), Site("a")), ())
    with pytest.raises(ValueError):
        LatticeGraph((Site("a", True),), (Edge("a", "z", "first", 1.0, 0.0),))
    with pytest.raises(ValueError):
        LatticeGraph((Site("a"),), ())
    with pytest.raises(ValueError):
        Edge("a", "b", "third", 1.0, 0.0)
