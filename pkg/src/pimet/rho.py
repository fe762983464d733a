"""Certified two-sided bounds for the pseudometric rho on pi_1.

rho(a, b) is the infimum of the uniform distance over loops representing a
and b.  Upper bounds come from explicit loop pairs (witnesses), lower bounds
from systole margins, possibly after projecting to a level of a system.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from .rational import Q
from typing import Any, Sequence

from .group import (
    Word,
    cyclic_reduce,
    inverse,
    is_trivial,
    multiply,
    parse_word,
    presentation,
    reduce,
    word_to_loop,
)
from .limitsys import InverseSystem, SystemSpace, Thread
from .loop import DiscreteLoop, DiscretePath, MuInterval, concatenate, uniform_distance
from .space import CylinderRxS1, MetricComplex, PuncturedPlane, fraction_str

IN, OUT, UNKNOWN = "In", "Out", "Unknown"


class ClassError(ValueError):
    """A class specification does not fit the space."""


def num_str(x) -> str:
    if isinstance(x, Q):
        return fraction_str(x)
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


@dataclass(frozen=True)
class Budget:
    extra_length: int = 4
    translations: int = 16
    samples_per_unit_length: int = 64
    plane_depth: int = 64

    def to_json(self):
        return {
            "extra_length": self.extra_length,
            "translations": self.translations,
            "samples_per_unit_length": self.samples_per_unit_length,
            "plane_depth": self.plane_depth,
        }


DEFAULT_BUDGET = Budget()


@dataclass(frozen=True)
class RhoInterval:
    lower: Any
    upper: Any
    lower_witness: dict = field(default_factory=dict)
    upper_witness: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        if self.upper == 0:
            return "zero"
        if self.lower > 0:
            return "positive"
        return "unknown"

    def to_json(self):
        return {
            "lower": num_str(self.lower),
            "upper": num_str(self.upper),
            "lower_witness": self.lower_witness,
            "upper_witness": self.upper_witness,
            "verdict": self.verdict,
        }


# -- classes ------------------------------------------------------------------

def _system(space) -> InverseSystem | None:
    if isinstance(space, InverseSystem):
        return space
    if isinstance(space, SystemSpace):
        return space.system
    return None


def as_class(space, a) -> Word:
    """Normalize a class specification (word, text, thread) to a reduced word."""
    if isinstance(a, Thread):
        sysm = _system(space)
        if sysm is None:
            raise ClassError("threads need an inverse system")
        a.check(sysm)
        a = a.top
    elif isinstance(a, str):
        try:
            a = parse_word(a)
        except ValueError as exc:
            raise ClassError(str(exc)) from exc
    try:
        w = tuple(int(x) for x in a)
    except (TypeError, ValueError) as exc:
        raise ClassError(f"not a word: {a!r}") from exc
    sysm = _system(space)
    if isinstance(space, MetricComplex):
        rank = presentation(space).rank
    elif sysm is not None:
        rank = sysm.presentation().rank
    elif isinstance(space, (PuncturedPlane, CylinderRxS1)):
        rank = 1
    else:
        raise ClassError(f"unsupported space {type(space).__name__}")
    for x in w:
        if x == 0 or abs(x) > rank:
            raise ClassError(f"letter {x} is not a generator (rank {rank})")
    return reduce(w)


def _winding(word: Word) -> int:
    return sum(1 if x > 0 else -1 for x in word)


# -- loops --------------------------------------------------------------------

def class_loop(space, word: Word, spl: int = 64) -> DiscreteLoop:
    """Canonical representative of a class."""
    sysm = _system(space)
    if isinstance(space, MetricComplex):
        key = ("loop", word, spl)
        if key not in space._cache:
            space._cache[key] = word_to_loop(space, word, spl)
        return space._cache[key]
    if sysm is not None:
        key = ("sysloop", word, spl)
        if key not in sysm._cache:
            top = word_to_loop(sysm.top, word, spl)
            sysm._cache[key] = DiscreteLoop(sysm.space, top.samples, top.times)
        return sysm._cache[key]
    if isinstance(space, PuncturedPlane):
        return _plane_circle(space, _winding(word), 1.0, spl)
    if isinstance(space, CylinderRxS1):
        return _cylinder_loop(space, _winding(word), spl)
    raise ClassError(f"unsupported space {type(space).__name__}")


def _plane_circle(space: PuncturedPlane, m: int, shrink: float, spl: int) -> DiscreteLoop:
    """Circle around the puncture through the point at distance |base|/shrink
    in the basepoint direction, traversed m times."""
    cx, cy = space.puncture
    bx, by = space.base[0] - cx, space.base[1] - cy
    r0 = math.hypot(bx, by)
    theta0 = math.atan2(by, bx)
    radius = r0 / shrink
    start = (cx + radius * math.cos(theta0), cy + radius * math.sin(theta0))
    if m == 0:
        return DiscreteLoop.constant(space, start, 1)
    per = max(8, 1 << max(0, math.ceil(2 * math.pi * radius * spl) - 1).bit_length())
    n = per * abs(m)
    sign = 1 if m > 0 else -1
    pts = [start]
    for i in range(1, n):
        ang = theta0 + sign * 2 * math.pi * i / per
        pts.append((cx + radius * math.cos(ang), cy + radius * math.sin(ang)))
    pts.append(start)
    return DiscreteLoop.uniform(space, pts)


def _cylinder_loop(space: CylinderRxS1, m: int, spl: int) -> DiscreteLoop:
    h, s = space.base
    if m == 0:
        return DiscreteLoop.constant(space, space.base, 1)
    c = space.circumference
    per = max(8, 1 << max(0, math.ceil(c * spl) - 1).bit_length())
    n = per * abs(m)
    sign = 1 if m > 0 else -1
    pts = [space.base] + [(h, math.fmod(s + sign * c * i / per, c)) for i in range(1, n)] + [space.base]
    return DiscreteLoop.uniform(space, pts)


def _collapse_loop(sysm: InverseSystem, alpha: DiscreteLoop, k: int) -> DiscreteLoop:
    """s_k o r_k applied pointwise; k = 0 gives the constant loop."""
    if k == 0:
        return DiscreteLoop(alpha.space, tuple(alpha.space.base for _ in alpha.samples), alpha.times)
    key = ("collapse", k)
    if key not in sysm._cache:
        sysm._cache[key] = sysm.retraction(k).compose(sysm.section(k))
    f = sysm._cache[key]
    return alpha.map(f.map_point)


# -- upper bounds -------------------------------------------------------------

@dataclass(frozen=True)
class UpperWitness:
    """Loop pair (L(c) alpha L(c)^-1 L(b), L(c) beta L(c)^-1 L(b)) built from
    a core pair (alpha, beta) representing (u, e) with a b^-1 = c u c^-1."""

    c: Word
    u: Word
    b: Word
    level: int | None
    mu: MuInterval
    kind: str
    shrink: int | None = None

    def to_json(self):
        out = {
            "kind": self.kind,
            "conjugator": list(self.c),
            "core": list(self.u),
            "translate": list(self.b),
            "mu": {"lower": num_str(self.mu.lower), "upper": num_str(self.mu.upper),
                   "grid_max": num_str(self.mu.grid_max), "grid_size": self.mu.size},
        }
        if self.level is not None:
            out["collapse_level"] = self.level
        if self.shrink is not None:
            out["shrink"] = self.shrink
        return out


def _core_pair(space, w: UpperWitness, spl: int):
    if isinstance(space, PuncturedPlane):
        return _plane_pair(space, _winding(w.u), w.shrink, spl)
    alpha = class_loop(space, w.u, spl)
    sysm = _system(space)
    if sysm is not None:
        return alpha, _collapse_loop(sysm, alpha, w.level or 0)
    return alpha, DiscreteLoop(alpha.space, tuple(alpha.space.base for _ in alpha.samples), alpha.times)


def _plane_pair(space: PuncturedPlane, m: int, n: int, spl: int):
    """(gamma_n * alpha_n, gamma_n * c_n): a small circle near the puncture
    reached along the basepoint ray, against the constant loop there."""
    circ = _plane_circle(space, m, float(n), spl * n)
    start = circ.base
    if n == 1:
        return circ, DiscreteLoop.constant(space, start, circ.times)
    steps = 8
    gamma = DiscretePath.uniform(space, [space.interpolate(space.base, start, Q(i, steps))
                                         for i in range(steps + 1)])
    from .loop import path_conjugate

    const = DiscreteLoop.constant(space, start, circ.times)
    return path_conjugate(gamma, circ), path_conjugate(gamma, const)


def witness_loops(space, w: UpperWitness, spl: int = 64):
    """Full loop pair of an upper witness.

    Both loops share every piece except the core, so their uniform distance
    equals that of the core pair at grid level.
    """
    alpha, beta = _core_pair(space, w, spl)
    if w.c:
        lc, lci = class_loop(space, w.c, spl), class_loop(space, inverse(w.c), spl)
        alpha = concatenate(concatenate(lc, alpha), lci)
        beta = concatenate(concatenate(lc, beta), lci)
    if w.b:
        lb = class_loop(space, w.b, spl)
        alpha, beta = concatenate(alpha, lb), concatenate(beta, lb)
    return alpha, beta


def _kernel_levels(sysm: InverseSystem, u: Word) -> list[int]:
    return [k for k in range(1, sysm.depth) if not sysm.r_sharp(k)(u)]


def rho_upper(space, a, b, budget: Budget = DEFAULT_BUDGET) -> tuple[Any, UpperWitness]:
    """Best upper bound over the budgeted witness family."""
    a, b = as_class(space, a), as_class(space, b)
    w = reduce(multiply(a, inverse(b)))
    spl = budget.samples_per_unit_length
    zero = Q(0)
    if isinstance(space, (PuncturedPlane, CylinderRxS1)):
        m = _winding(w)
        if m == 0:
            return _zero_witness(b, 0.0)
        if isinstance(space, CylinderRxS1):
            alpha = class_loop(space, w, spl)
            mu = uniform_distance(alpha, DiscreteLoop.constant(space, space.base, alpha.times))
            return mu.upper, UpperWitness((), w, b, None, mu, "constant")
        best = None
        for n in range(1, budget.plane_depth + 1):
            cand = plane_upper(space, m, n, spl)
            if best is None or cand.mu.upper < best.mu.upper:
                best = cand
        best = UpperWitness((), best.u, b, None, best.mu, best.kind, best.shrink)
        return best.mu.upper, best
    if not w:
        return _zero_witness(b, zero)
    sysm = _system(space)
    pres = presentation(space) if isinstance(space, MetricComplex) else sysm.presentation()
    if isinstance(space, MetricComplex) and is_trivial(w, pres) is True:
        return _zero_witness(b, zero, kind="homotopic")
    variants = []
    c, u = cyclic_reduce(w)
    variants.append((c, u))
    if c:
        variants.append(((), w))
    best: UpperWitness | None = None
    for c, u in variants[: budget.translations]:
        if len(u) > len(a) + len(b) + budget.extra_length:
            continue
        levels = [0]
        if sysm is not None:
            ker = _kernel_levels(sysm, u)
            if ker:
                levels.append(ker[-1])
        for k in levels:
            probe = UpperWitness(c, u, b, k if sysm is not None else None, None, "collapse" if k else "constant")
            alpha, beta = _core_pair(space, probe, spl)
            mu = uniform_distance(alpha, beta)
            if best is None or mu.upper < best.mu.upper:
                best = UpperWitness(c, u, b, probe.level, mu, probe.kind)
    return best.mu.upper, best


def _zero_witness(b: Word, zero, kind: str = "identical"):
    mu = MuInterval(zero, zero, zero, 1)
    return zero, UpperWitness((), (), b, None, mu, kind)


def plane_upper(space: PuncturedPlane, m: int, n: int, spl: int = 64) -> UpperWitness:
    alpha, beta = _plane_pair(space, m, n, spl)
    mu = uniform_distance(alpha, beta)
    return UpperWitness((), (1,) * m if m > 0 else (-1,) * (-m), (), None, mu, "puncture", n)


# -- lower bounds -------------------------------------------------------------

def rho_lower(space, a, b) -> tuple[Any, dict]:
    a, b = as_class(space, a), as_class(space, b)
    w = reduce(multiply(a, inverse(b)))
    if not w:
        return Q(0), {"reason": "equal classes"}
    if isinstance(space, PuncturedPlane):
        return 0.0, {"reason": "no separating projection"}
    if isinstance(space, CylinderRxS1):
        if _winding(w) == 0:
            return 0.0, {"reason": "equal winding numbers"}
        return space.circumference / 2, {"projection": "circle", "margin": num_str(space.circumference / 2)}
    sysm = _system(space)
    if isinstance(space, MetricComplex):
        verdict = is_trivial(w, presentation(space))
        if verdict is False:
            sys = space.systole()
            return sys / 2, {"level": None, "margin": num_str(sys / 2), "slack": "0"}
        return Q(0), {"reason": "trivial" if verdict else "undecided"}
    best = Q(0)
    wit: dict = {"reason": f"not separated up to depth {sysm.depth}"}
    for k in range(1, sysm.depth + 1):
        lvl = sysm.level(k)
        img = sysm.r_sharp(k)(w)
        if not img or is_trivial(img, presentation(lvl)) is not False:
            continue
        sys = lvl.systole()
        value = sys / 2 / 2 ** k
        if value > best:
            best = value
            wit = {"level": k, "margin": num_str(sys / 2), "lipschitz": 2 ** k, "slack": "0"}
    return best, wit


def rho(space, a, b, budget: Budget = DEFAULT_BUDGET) -> RhoInterval:
    lo, lw = rho_lower(space, a, b)
    hi, uw = rho_upper(space, a, b, budget)
    if lo > hi:
        raise AssertionError(f"lower bound {lo} exceeds upper bound {hi}")
    return RhoInterval(lo, hi, lw, uw.to_json())


def ball_membership(space, a, radius, budget: Budget = DEFAULT_BUDGET) -> str:
    """In if rho(a, e) < r is certified, Out if rho(a, e) >= r is, else Unknown."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    hi, _ = rho_upper(space, a, (), budget)
    if hi < radius:
        return IN
    lo, _ = rho_lower(space, a, ())
    if lo >= radius:
        return OUT
    return UNKNOWN


# -- lemma chain --------------------------------------------------------------

def random_word(rng: random.Random, rank: int, max_len: int) -> Word:
    out: list[int] = []
    for _ in range(rng.randint(0, max_len)):
        choices = [x for s in (1, -1) for x in range(s, s * (rank + 1), s) if not out or x != -out[-1]]
        out.append(rng.choice(choices))
    return tuple(out)


@dataclass
class CheckResult:
    name: str
    passed: int = 0
    failed: int = 0
    counterexamples: list = field(default_factory=list)

    def record(self, ok: bool, data):
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            if len(self.counterexamples) < 5:
                self.counterexamples.append(data)

    def to_json(self):
        return {"name": self.name, "passed": self.passed, "failed": self.failed,
                "counterexamples": self.counterexamples}


def _grid_key(mu: MuInterval):
    return (mu.lower, mu.grid_max)


def verify_lemma_chain(space, samples: int = 50, seed: int = 0, max_len: int = 6,
                       budget: Budget = DEFAULT_BUDGET) -> list[CheckResult]:
    """Constructive checks of inversion and translation invariance, the
    ultrametric law, and the interval triangle inequality on random triples."""
    rng = random.Random(seed)
    sysm = _system(space)
    rank = presentation(space).rank if isinstance(space, MetricComplex) else (
        sysm.presentation().rank if sysm else 1)
    spl = budget.samples_per_unit_length
    checks = {n: CheckResult(n) for n in ("inverse", "translation", "ultrametric", "triangle")}
    for _ in range(samples):
        a, b, c = (reduce(random_word(rng, rank, max_len)) for _ in range(3))
        triple = {"a": list(a), "b": list(b), "c": list(c)}
        up_ab, w_ab = rho_upper(space, a, b, budget)
        alpha, beta = witness_loops(space, w_ab, spl)
        mu = uniform_distance(alpha, beta)
        mu_rev = uniform_distance(alpha.reversed(), beta.reversed())
        checks["inverse"].record(_grid_key(mu) == _grid_key(mu_rev) and mu.upper == mu_rev.upper, triple)
        gamma = class_loop(space, c, spl)
        right = uniform_distance(concatenate(alpha, gamma), concatenate(beta, gamma))
        left = uniform_distance(concatenate(gamma, alpha), concatenate(gamma, beta))
        checks["translation"].record(_grid_key(right) == _grid_key(mu) == _grid_key(left), triple)
        _, wa = rho_upper(space, a, (), budget)
        _, wb = rho_upper(space, b, (), budget)
        a1, e1 = witness_loops(space, wa, spl)
        b1, e2 = witness_loops(space, wb, spl)
        mua, mub = uniform_distance(a1, e1), uniform_distance(b1, e2)
        mux = uniform_distance(concatenate(a1, b1), concatenate(e1, e2))
        checks["ultrametric"].record(
            mux.grid_max == max(mua.grid_max, mub.grid_max) and mux.lower == max(mua.lower, mub.lower), triple)
        up_bc, _ = rho_upper(space, b, c, budget)
        lo_ac, _ = rho_lower(space, a, c)
        lo_ab, _ = rho_lower(space, a, b)
        checks["triangle"].record(lo_ac <= up_ab + up_bc and lo_ab <= up_ab, triple)
    return [checks[k] for k in sorted(checks)]


# -- metric independence ------------------------------------------------------

def lipschitz_constants(cx1: MetricComplex, cx2: MetricComplex) -> tuple[Q, Q]:
    """(L, L') with d2 <= L d1 and d1 <= L' d2 (edge-length ratio extremes)."""
    if len(cx1.edges) != len(cx2.edges):
        raise ValueError("complexes differ")
    L = max(e2[2] / e1[2] for e1, e2 in zip(cx1.edges, cx2.edges))
    Lp = max(e1[2] / e2[2] for e1, e2 in zip(cx1.edges, cx2.edges))
    return L, Lp


def transport_upper(cx2: MetricComplex, cx1: MetricComplex, w: UpperWitness, spl: int = 64) -> MuInterval:
    """The metric-1 witness read on metric 2 (same sample locations)."""
    alpha, beta = witness_loops(cx1, w, spl)
    a2 = DiscreteLoop(cx2, alpha.samples, alpha.times)
    b2 = DiscreteLoop(cx2, beta.samples, beta.times)
    return uniform_distance(a2, b2)


@dataclass
class IndependenceReport:
    L: Q
    L_prime: Q
    transported: CheckResult
    verdicts: CheckResult
    decided: int

    @property
    def disagreements(self) -> int:
        return self.verdicts.failed

    def to_json(self):
        return {
            "L": num_str(self.L),
            "L_prime": num_str(self.L_prime),
            "transport": self.transported.to_json(),
            "verdicts": self.verdicts.to_json(),
            "decided": self.decided,
        }


def metric_independence_check(cx: MetricComplex, lengths1: Sequence, lengths2: Sequence,
                              samples: int = 100, seed: int = 0, radii: Sequence = None,
                              max_len: int = 4, budget: Budget = DEFAULT_BUDGET) -> IndependenceReport:
    """Compare rho bounds and ball verdicts for two edge-length assignments."""
    cx1 = cx.with_lengths(lengths1)
    cx2 = cx.with_lengths(lengths2)
    L, Lp = lipschitz_constants(cx1, cx2)
    radii = [Q(x) for x in (radii or ("1/8", "1/4", "1/2", "3/4", "1", "3/2"))]
    rng = random.Random(seed)
    rank = presentation(cx1).rank
    spl = budget.samples_per_unit_length
    transported = CheckResult("transport")
    verdicts = CheckResult("verdicts")
    decided = 0
    for _ in range(samples):
        a = reduce(random_word(rng, rank, max_len))
        up1, w1 = rho_upper(cx1, a, (), budget)
        lo1, _ = rho_lower(cx1, a, ())
        mu2 = transport_upper(cx2, cx1, w1, spl)
        transported.record(mu2.upper <= L * up1, {"a": list(a)})
        up2 = min(rho_upper(cx2, a, (), budget)[0], mu2.upper)
        lo2, _ = rho_lower(cx2, a, ())
        for r in radii:
            v1 = IN if up1 < r else OUT if lo1 >= r else UNKNOWN
            if v1 == IN:
                v2 = IN if up2 < L * r else OUT if lo2 >= L * r else UNKNOWN
                ok = v2 == IN
            elif v1 == OUT:
                v2 = IN if up2 < r / Lp else OUT if lo2 >= r / Lp else UNKNOWN
                ok = v2 == OUT
            else:
                continue
            decided += 1
            verdicts.record(ok, {"a": list(a), "radius": num_str(r), "metric1": v1, "metric2": v2})
    return IndependenceReport(L, Lp, transported, verdicts, decided)
