import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pimet.rational import Q
from pimet.space import (
    AmbiguousGeodesicError,
    CylinderRxS1,
    InvalidPointError,
    MetricComplex,
    PuncturedPlane,
    SpaceError,
    circle,
    subdivide,
    systole,
    wedge_of_circles,
)

TRIANGLE = MetricComplex(3, ((0, 1, Q(1)), (1, 2, Q(1)), (2, 0, Q(1))))


def _simple_path_lengths(cx, u, v):
    """All simple vertex paths from u to v (brute force)."""
    adj = {x: [] for x in range(cx.num_vertices)}
    for a, b, length in cx.edges:
        adj[a].append((b, length))
        adj[b].append((a, length))
    out = []

    def walk(x, seen, total):
        if x == v:
            out.append(total)
            return
        for y, length in adj[x]:
            if y not in seen:
                walk(y, seen | {y}, total + length)

    walk(u, {u}, Q(0))
    return out


def points(cx):
    """Vertices plus a few interior points on every edge."""
    pts = [cx.vertex_point(v) for v in range(cx.num_vertices)]
    for e in range(len(cx.edges)):
        pts += [cx.edge_point(e, Q(k, 5)) for k in (1, 2, 4)]
    return pts


def test_distance_to_self_is_zero(wedge2):
    for p in points(wedge2):
        assert wedge2.distance(p, p) == 0


def test_triangle_distance_takes_short_side():
    assert TRIANGLE.distance(TRIANGLE.vertex_point(0), TRIANGLE.vertex_point(1)) == 1
    assert min(_simple_path_lengths(TRIANGLE, 0, 1)) == 1


def test_vertex_distances_match_brute_force():
    cx = MetricComplex(5, ((0, 1, Q(1)), (1, 2, Q(2)), (2, 3, Q(1, 2)), (3, 0, Q(3)), (1, 4, Q(1)), (4, 3, Q(1, 3))))
    for u, v in itertools.combinations(range(5), 2):
        assert cx.distance(cx.vertex_point(u), cx.vertex_point(v)) == min(_simple_path_lengths(cx, u, v))


def test_interior_points_on_the_same_edge():
    c = circle(1, 3)
    p, q = c.edge_point(0, Q(1, 10)), c.edge_point(0, Q(9, 10))
    assert c.distance(p, q) == Q(8, 30)
    # going around the other way is longer: 2/30 + 2/3
    assert c.distance(p, q) < Q(2, 30) + Q(2, 3)


def test_metric_axioms_exhaustive(wedge2):
    pts = points(wedge2)[::2]
    for p, q, r in itertools.product(pts, repeat=3):
        d = wedge2.distance
        assert d(p, q) == d(q, p)
        assert d(p, r) <= d(p, q) + d(q, r)
        assert (d(p, q) == 0) == (p == q)


def test_invalid_points_rejected(wedge2):
    with pytest.raises(InvalidPointError):
        wedge2.vertex_point(99)
    with pytest.raises(InvalidPointError):
        wedge2.edge_point(0, Q(3, 2))
    with pytest.raises(InvalidPointError):
        PuncturedPlane().distance((0.0, 0.0), (1.0, 0.0))


def test_complex_invariants():
    with pytest.raises(SpaceError):
        MetricComplex(2, ((0, 1, Q(0)),))
    with pytest.raises(SpaceError):
        MetricComplex(3, ((0, 1, Q(1)),))
    with pytest.raises(SpaceError):
        MetricComplex(2, ((0, 0, Q(1)),))


def test_punctured_plane_distance_through_puncture():
    plane = PuncturedPlane()
    assert plane.distance((1.0, 0.0), (-1.0, 0.0)) == pytest.approx(2.0, abs=1e-12)
    assert plane.segment_hits_puncture((1.0, 0.0), (-1.0, 0.0))


def test_cylinder_distance_is_product():
    cyl = CylinderRxS1(2 * math.pi)
    assert cyl.distance((0.0, 0.0), (0.0, math.pi)) == pytest.approx(math.pi)
    assert cyl.distance((0.0, 0.1), (0.0, 2 * math.pi - 0.1)) == pytest.approx(0.2)
    assert cyl.distance((4.0, 0.0), (0.0, 3.0)) == pytest.approx(5.0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=3, max_size=3))
def test_analytic_triangle_inequality(pts):
    cyl = CylinderRxS1(1.0)
    p, q, r = pts
    assert cyl.distance(p, r) <= cyl.distance(p, q) + cyl.distance(q, r) + 1e-12
    assert cyl.distance(p, q) == pytest.approx(cyl.distance(q, p), abs=1e-12)


def test_geodesic_endpoints_and_midpoints():
    p = TRIANGLE.vertex_point(0)
    q = TRIANGLE.edge_point(0, Q(1, 2))
    assert TRIANGLE.geodesic_point(p, q, 0) == p
    assert TRIANGLE.geodesic_point(p, q, 1) == q
    assert TRIANGLE.geodesic_point(p, q, Q(1, 2)) == TRIANGLE.edge_point(0, Q(1, 4))


def test_geodesic_on_wedge_circle():
    w = wedge_of_circles([1, 1])
    # circle 1 is edges 0,1,2 of length 1/3; offsets 0.1 and 0.3 of the circle
    p, q = w.edge_point(0, Q(3, 10)), w.edge_point(0, Q(9, 10))
    assert w.geodesic_point(p, q, Q(1, 2)) == w.edge_point(0, Q(6, 10))


def test_geodesic_outside_uniqueness_window_raises(unit_circle):
    p = unit_circle.vertex_point(0)
    q = unit_circle.vertex_point(2)
    with pytest.raises(AmbiguousGeodesicError):
        unit_circle.geodesic_point(p, q, Q(1, 2))


def test_systole_examples(unit_circle):
    tree = MetricComplex(3, ((0, 1, Q(1)), (1, 2, Q(1))))
    assert systole(tree) == math.inf
    assert systole(unit_circle) == 1
    assert systole(wedge_of_circles([1, Q(1, 2)])) == Q(1, 2)


def test_filled_triangle_has_no_essential_cycle():
    filled = MetricComplex(3, TRIANGLE.edges, ((0, 1, 2),))
    assert systole(filled) == math.inf
    assert filled.systole(essential=False) == 3


def _simple_cycle_lengths(cx):
    """Lengths of all simple cycles, by enumerating edge subsets (small graphs)."""
    out = []
    m = len(cx.edges)
    for mask in range(1, 2 ** m):
        chosen = [cx.edges[i] for i in range(m) if mask >> i & 1]
        deg = {}
        for u, v, _ in chosen:
            deg[u] = deg.get(u, 0) + 1
            deg[v] = deg.get(v, 0) + 1
        if any(d != 2 for d in deg.values()):
            continue
        # connected 2-regular edge set = one simple cycle
        start = chosen[0][0]
        seen, stack = {start}, [start]
        while stack:
            x = stack.pop()
            for u, v, _ in chosen:
                for a, b in ((u, v), (v, u)):
                    if a == x and b not in seen:
                        seen.add(b)
                        stack.append(b)
        if len(seen) == len(deg):
            out.append(sum(w for _, _, w in chosen))
    return out


def test_systole_equals_shortest_enumerated_cycle():
    cx = MetricComplex(5, ((0, 1, Q(1)), (1, 2, Q(2)), (2, 3, Q(1, 2)), (3, 0, Q(3)), (1, 4, Q(1)), (4, 3, Q(1, 3)),
                           (0, 2, Q(5, 2))))
    cycles = _simple_cycle_lengths(cx)
    assert len(cx.edges) <= 12 and cycles
    assert systole(cx) == min(cycles)


def test_subdivide_examples():
    one = MetricComplex(2, ((0, 1, Q(1)),))
    sub = subdivide(one, Q(1, 2))
    assert [e[2] for e in sub.complex.edges] == [Q(1, 2), Q(1, 2)]
    same = subdivide(one, 2)
    assert same.complex.edges == one.edges
    tri = subdivide(TRIANGLE, Q(2, 5))
    assert len(tri.complex.edges) == 9
    assert sum(e[2] for e in tri.complex.edges) == 3


def test_subdivision_preserves_distances(wedge2):
    sub = subdivide(wedge2, Q(1, 10))
    pts = points(wedge2)
    for p, q in itertools.combinations(pts[::3], 2):
        assert sub.complex.distance(sub.map_point(p), sub.map_point(q)) == wedge2.distance(p, q)


def test_json_round_trip(wedge2):
    again = MetricComplex.from_json(wedge2.to_json())
    assert again.edges == wedge2.edges and again.basepoint == wedge2.basepoint


def test_lengths_parsed_from_decimal_strings():
    cx = MetricComplex.from_json({"vertices": 3, "edges": [[0, 1, "0.25"], [1, 2, "1/3"], [2, 0, "1"]],
                                  "triangles": [], "basepoint": 0})
    assert cx.edges[0][2] == Q(1, 4)
    assert cx.edges[1][2] == Q(1, 3)
