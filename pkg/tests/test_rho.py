import math
import random

import pytest

from pimet.group import inverse, is_trivial, loop_to_word, multiply, presentation, reduce, word_to_loop
from pimet.limitsys import Thread
from pimet.loop import DiscreteLoop, uniform_distance
from pimet.rational import Q
from pimet.rho import (
    IN,
    OUT,
    UNKNOWN,
    Budget,
    ClassError,
    ball_membership,
    lipschitz_constants,
    metric_independence_check,
    random_word,
    rho,
    rho_lower,
    rho_upper,
    verify_lemma_chain,
    witness_loops,
)
from pimet.space import CylinderRxS1, PuncturedPlane, wedge_of_circles


def test_equal_classes_have_zero_interval(wedge2, hawaiian):
    for space in (wedge2, hawaiian):
        iv = rho(space, (1, 2), (1, 2))
        assert iv.lower == 0 and iv.upper == 0 and iv.verdict == "zero"


def test_wedge_generator_interval(wedge2):
    iv = rho(wedge2, (1,), ())
    assert iv.lower == Q(1, 2)
    assert iv.upper == Q(1, 2)
    assert iv.verdict == "positive"


def test_nontrivial_classes_on_wedge_have_systole_margin(wedge3):
    rng = random.Random(1)
    for _ in range(30):
        a, b = reduce(random_word(rng, 3, 4)), reduce(random_word(rng, 3, 4))
        lo, _ = rho_lower(wedge3, a, b)
        up, _ = rho_upper(wedge3, a, b)
        assert lo <= up
        if a != b:
            assert lo == wedge3.systole() / 2


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_hawaiian_generator_series(hawaiian, k):
    iv = rho(hawaiian, (k,), ())
    assert iv.lower == Q(1, 2 ** (k + 1))
    assert iv.upper <= Q(1, 2 ** k)
    assert iv.lower_witness["level"] == k


def test_upper_witness_straightens_to_the_classes(wedge2):
    rng = random.Random(7)
    for _ in range(20):
        a, b = reduce(random_word(rng, 2, 4)), reduce(random_word(rng, 2, 4))
        up, w = rho_upper(wedge2, a, b)
        alpha, beta = witness_loops(wedge2, w)
        assert loop_to_word(wedge2, alpha) == a
        assert loop_to_word(wedge2, beta) == b
        assert uniform_distance(alpha, beta).upper == up


def test_hawaiian_witness_straightens_at_top(hawaiian):
    top = hawaiian.top
    as_top = lambda loop: DiscreteLoop(top, loop.samples, loop.times)
    for a in [(3,), (1, 4, -1), (2, -5)]:
        _, w = rho_upper(hawaiian, a, ())
        alpha, beta = witness_loops(hawaiian, w)
        core = hawaiian.s_sharp(w.level)(hawaiian.r_sharp(w.level)(w.u)) if w.level else ()
        assert loop_to_word(top, as_top(alpha)) == a
        assert loop_to_word(top, as_top(beta)) == reduce(multiply(w.c, core, inverse(w.c)))


def test_punctured_plane_upper_bound():
    plane = PuncturedPlane()
    for n in (1, 4, 16, 64):
        up, w = rho_upper(plane, (1,), (), Budget(plane_depth=n))
        assert up <= 2 / n + 0.01
    assert rho_lower(plane, (1,), ())[0] == 0


def test_cylinder_lower_bound():
    cyl = CylinderRxS1(2 * math.pi)
    iv = rho(cyl, (1,), ())
    assert iv.lower >= math.pi - 0.01
    assert rho(cyl, (1, 1), (1, 1)).upper == 0


def test_threads_are_accepted(hawaiian):
    t = Thread.from_top(hawaiian, (2,))
    assert rho(hawaiian, t, ()).lower == Q(1, 8)


def test_bad_classes_raise(wedge2):
    with pytest.raises(ClassError):
        rho(wedge2, (3,), ())
    with pytest.raises(ClassError):
        rho(wedge2, "not a word", ())


def test_membership_examples(hawaiian):
    assert ball_membership(hawaiian, (), Q(1, 1000)) == IN
    assert ball_membership(hawaiian, (3,), Q(1, 4)) == IN
    assert ball_membership(hawaiian, (1,), Q(1, 8)) == OUT


def test_membership_normality_and_out_soundness(hawaiian):
    rng = random.Random(3)
    pres = presentation(hawaiian.top)
    for _ in range(40):
        a = reduce(random_word(rng, 8, 5))
        c = reduce(random_word(rng, 8, 3))
        for r in (Q(1, 2), Q(1, 8), Q(1, 32)):
            v = ball_membership(hawaiian, a, r)
            if v == OUT:
                assert is_trivial(a, pres) is False
            for other in (inverse(a), multiply(c, a, inverse(c))):
                v2 = ball_membership(hawaiian, other, r)
                if UNKNOWN not in (v, v2):
                    assert v == v2


def test_finer_grid_never_loosens(wedge2):
    rng = random.Random(5)
    for _ in range(10):
        a = reduce(random_word(rng, 2, 4))
        coarse = rho(wedge2, a, (), Budget(samples_per_unit_length=16))
        fine = rho(wedge2, a, (), Budget(samples_per_unit_length=64))
        assert fine.upper <= coarse.upper
        assert fine.lower >= coarse.lower


def test_lemma_chain_identity_sample(wedge2):
    results = verify_lemma_chain(wedge2, samples=10, seed=0, max_len=0)
    assert [r.name for r in results] == ["inverse", "translation", "triangle", "ultrametric"]
    assert all(r.failed == 0 and r.passed == 10 for r in results)


def test_lemma_chain_wedge(wedge2):
    assert all(r.failed == 0 for r in verify_lemma_chain(wedge2, samples=50, seed=4))


def test_lemma_chain_hawaiian(hawaiian6):
    assert all(r.failed == 0 for r in verify_lemma_chain(hawaiian6, samples=20, seed=4))


def test_continuity_of_the_class_map(wedge2):
    rng = random.Random(8)
    alpha = word_to_loop(wedge2, (1, -2), 32)
    for step in range(1, 6):
        jiggled = []
        for p in alpha.samples:
            if p.is_vertex:
                jiggled.append(p)
            else:
                off = p.offset + Q(rng.choice((-1, 1)), 4 * 2 ** step)
                jiggled.append(wedge2.edge_point(p.edge, min(max(off, Q(1, 100)), Q(99, 100))))
        beta = DiscreteLoop(wedge2, tuple(jiggled), alpha.times)
        assert uniform_distance(alpha, beta).upper < wedge2.systole() / 2
        assert rho_upper(wedge2, loop_to_word(wedge2, beta), loop_to_word(wedge2, alpha))[0] == 0


def test_metric_independence_identical_metrics(wedge2):
    lengths = [e[2] for e in wedge2.edges]
    rep = metric_independence_check(wedge2, lengths, lengths, samples=30, seed=1)
    assert rep.L == 1 and rep.L_prime == 1
    assert rep.disagreements == 0 and rep.transported.failed == 0


def test_metric_independence_stretched_circle(wedge2):
    l1 = [Q(1, 3)] * 6
    l2 = [Q(2, 3)] * 3 + [Q(1, 3)] * 3
    rep = metric_independence_check(wedge2, l1, l2, samples=60, seed=2)
    assert rep.L == 2 and rep.L_prime == 1
    assert rep.disagreements == 0 and rep.decided > 0
    cx1, cx2 = wedge2.with_lengths(l1), wedge2.with_lengths(l2)
    for name in (rho_lower, rho_upper):
        v1, v2 = name(cx1, (1,), ())[0], name(cx2, (1,), ())[0]
        assert v1 / 2 <= v2 <= 2 * v1


def test_scaling_the_metric_scales_rho(wedge2):
    big = wedge2.scaled(3)
    assert lipschitz_constants(wedge2, big) == (3, Q(1, 3))
    rng = random.Random(6)
    for _ in range(15):
        a, b = reduce(random_word(rng, 2, 4)), reduce(random_word(rng, 2, 4))
        small_iv, big_iv = rho(wedge2, a, b), rho(big, a, b)
        assert big_iv.lower == 3 * small_iv.lower
        assert big_iv.upper == 3 * small_iv.upper
