import json
import random

import pytest

from pimet.group import is_trivial, presentation, reduce
from pimet.limitsys import (
    InverseSystem,
    LimitPoint,
    SystemError_,
    Thread,
    hawaiian_earring,
    kernel_generators,
    level_model,
    limit_distance,
    load_system,
    project,
    psi,
    sample_kernel_element,
    shrinking_wedge,
    tail_bound,
)
from pimet.rational import Q
from pimet.space import MetricComplex, circle


def _random_top_point(system, rng):
    top = system.top
    if rng.random() < 0.3:
        return top.vertex_point(rng.randrange(top.num_vertices))
    return top.edge_point(rng.randrange(len(top.edges)), Q(rng.randint(1, 15), 16))


def test_sections_split_bondings(hawaiian):
    for r, s in zip(hawaiian.bondings, hawaiian.sections):
        assert all(r.vertex_map[s.vertex_map[v]] == v for v in range(s.domain.num_vertices))


def test_bad_retraction_rejected():
    c1 = circle(1, 3)
    c2 = shrinking_wedge([c1, c1]).top
    with pytest.raises(SystemError_):
        InverseSystem.build([c1, c2], [[0, 1, 2, 0, 0]], [[0, 2, 1]])


def test_composite_sections_commute_with_retractions(hawaiian):
    # r_i o t_j equals the section chain X_j -> X_i, for j <= i
    for j in range(1, hawaiian.depth + 1):
        t_j = hawaiian.section_map(j)
        for i in range(j, hawaiian.depth + 1):
            chain = list(range(hawaiian.level(j).num_vertices))
            for step in range(j - 1, i - 1):
                chain = [hawaiian.sections[step].vertex_map[v] for v in chain]
            r_i = hawaiian.retraction_map(i)
            assert [r_i[t_j[v]] for v in range(len(t_j))] == chain


def test_limit_distance_identical_points(hawaiian6):
    x = LimitPoint.from_top(hawaiian6, hawaiian6.top.vertex_point(2))
    d = limit_distance(hawaiian6, x, x)
    assert d.lo == 0 and d.hi == 0


def test_limit_distance_antipode_of_first_circle(hawaiian6):
    antipode = hawaiian6.top.edge_point(1, Q(1, 2))
    x = LimitPoint.from_top(hawaiian6, hawaiian6.top.base)
    y = LimitPoint.from_top(hawaiian6, antipode)
    d = limit_distance(hawaiian6, x, y)
    assert d.lo == Q(1, 2) * (1 - Q(1, 2 ** 6))
    assert d.hi - d.lo <= Q(1, 2 ** 6)


def test_limit_distance_is_a_metric(hawaiian6):
    rng = random.Random(4)
    pts = [LimitPoint.from_top(hawaiian6, _random_top_point(hawaiian6, rng)) for _ in range(12)]
    d = lambda a, b: limit_distance(hawaiian6, a, b).lo
    for a in pts:
        for b in pts:
            assert d(a, b) == d(b, a)
            assert (d(a, b) == 0) == (a == b)
            for c in pts[:4]:
                assert d(a, c) <= d(a, b) + d(b, c)


def test_retraction_moves_points_less_than_tail(hawaiian):
    rng = random.Random(9)
    space = hawaiian.space
    for _ in range(50):
        p = _random_top_point(hawaiian, rng)
        for k in range(1, hawaiian.depth + 1):
            q = project(hawaiian, k).embedded(p)
            assert space.distance_bounds(p, q)[1] <= tail_bound(hawaiian, k)
            if k < hawaiian.depth:
                assert space.distance_bounds(p, q)[1] < tail_bound(hawaiian, k)


def test_projection_lipschitz_certificate(hawaiian):
    rng = random.Random(10)
    for _ in range(100):
        p, q = _random_top_point(hawaiian, rng), _random_top_point(hawaiian, rng)
        k = rng.randint(1, hawaiian.depth)
        assert project(hawaiian, k).lipschitz_holds(p, q)


def test_projection_of_generators(hawaiian):
    assert project(hawaiian, hawaiian.depth).hom((5,)) == (5,)
    assert hawaiian.r_sharp(2)((3,)) == ()
    assert hawaiian.r_sharp(3)((3,)) == (3,)


def test_tail_bound_values(hawaiian):
    assert tail_bound(hawaiian, 1) == Q(1, 2)
    assert tail_bound(hawaiian, 4) == Q(1, 16)
    for k in range(1, hawaiian.depth):
        assert tail_bound(hawaiian, k + 1) == tail_bound(hawaiian, k) / 2
    with pytest.raises(SystemError_):
        tail_bound(hawaiian, hawaiian.depth + 1)


def test_shrinking_wedge_levels_are_free(hawaiian):
    for k in range(1, hawaiian.depth + 1):
        p = presentation(hawaiian.level(k))
        assert p.rank == k and p.relators == ()


def test_single_piece_system():
    s = shrinking_wedge([circle(1, 3)])
    assert s.depth == 1 and presentation(s.top).rank == 1


def test_circle_then_filled_triangle():
    tri = MetricComplex(3, ((0, 1, Q(1, 3)), (1, 2, Q(1, 3)), (2, 0, Q(1, 3))), ((0, 1, 2),))
    s = shrinking_wedge([circle(1, 3), tri])
    p = presentation(s.level(2))
    assert p.rank == 2 and len(p.relators) == 1
    simplified = [g for g in (1, 2) if is_trivial((g,), p) is False]
    assert len(simplified) == 1


def test_threads_and_psi(hawaiian):
    e = Thread.from_top(hawaiian, ())
    assert psi(hawaiian, e).shape_trivial
    g2 = psi(hawaiian, Thread.from_top(hawaiian, (2,)))
    assert g2.first_nontrivial_level == 2
    assert g2.verdicts[0] is True and all(v is False for v in g2.verdicts[1:])
    for j in range(2, 6):
        rep = psi(hawaiian, Thread.from_top(hawaiian, (1, j, -1, -j)))
        assert rep.first_nontrivial_level == j


def test_incompatible_thread_rejected(hawaiian):
    words = list(Thread.from_top(hawaiian, (3,)).words)
    words[0] = (1,)
    with pytest.raises(SystemError_):
        psi(hawaiian, Thread(tuple(words)))


def test_stabilization_index(hawaiian):
    assert Thread.from_top(hawaiian, (3, -1)).stabilization_index(hawaiian) == 3
    assert Thread.from_top(hawaiian, ()).stabilization_index(hawaiian) == 1


def test_kernel_sampling(hawaiian):
    rng = random.Random(0)
    assert kernel_generators(hawaiian, 3) == [4, 5, 6, 7, 8]
    for k in range(1, hawaiian.depth):
        for _ in range(20):
            w = sample_kernel_element(hawaiian, k, rng)
            assert hawaiian.r_sharp(k)(w) == ()
            assert w == reduce(w)


def test_level_model_dominates_limit_metric(hawaiian):
    model = level_model(hawaiian, hawaiian.depth)
    rng = random.Random(6)
    for _ in range(40):
        p, q = _random_top_point(hawaiian, rng), _random_top_point(hawaiian, rng)
        assert hawaiian.space.distance_bounds(p, q)[1] <= model.distance(p, q)


def test_load_system_shortcut_and_explicit(tmp_path, hawaiian):
    s = load_system({"shrinking_wedge": [{"circle": "1", "segments": 3}], "depth": 3})
    assert s.depth == 3
    explicit = {
        "levels": [lvl.to_json() for lvl in s.levels],
        "bondings": [list(r.vertex_map) for r in s.bondings],
        "sections": [list(x.vertex_map) for x in s.sections],
    }
    path = tmp_path / "sys.json"
    path.write_text(json.dumps(explicit))
    again = load_system(str(path))
    assert [lvl.edges for lvl in again.levels] == [lvl.edges for lvl in s.levels]


def test_levels_are_diameter_normalized():
    big = circle(4, 4)
    s = shrinking_wedge([big, big])
    assert all(lvl.diameter() <= 1 for lvl in s.levels)
    assert s.scales[0] == Q(1, 2)
