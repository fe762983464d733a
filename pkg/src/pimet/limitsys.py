"""Inverse systems of finite complexes with retraction bonding maps.

A system is truncated at depth J.  Points of the truncated limit are the
points of the top level X_J, identified with stabilized threads through the
composite sections.  The limit metric is the weighted sum of the level
metrics with weights 2^-j; each level metric is rescaled to diameter <= 1.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from .rational import Q
from pathlib import Path
from typing import Sequence

from .group import (
    Homomorphism,
    SimplicialMap,
    Word,
    induced_hom,
    inverse,
    is_trivial,
    multiply,
    presentation,
    reduce,
)
from .space import MetricComplex, PointLocation, fraction_str, wedge


class SystemError_(ValueError):
    pass


InverseSystemError = SystemError_


@dataclass(frozen=True)
class Interval:
    lo: Q
    hi: Q

    def to_json(self):
        return {"lo": fraction_str(self.lo), "hi": fraction_str(self.hi)}


def _normalize(cx: MetricComplex) -> tuple[MetricComplex, Q]:
    diam = cx.diameter()
    if diam <= 1:
        return cx, Q(1)
    scale = 1 / diam
    return cx.scaled(scale), scale


@dataclass(eq=False)
class InverseSystem:
    """Levels X_1..X_J (diameter-normalized), bondings r_{j+1,j}, sections s_{j,j+1}.

    ``bondings[i]`` maps level i+2 onto level i+1 (0-based lists).  When
    ``nonexpanding_tail`` is set, the (unseen) sections beyond depth J are
    known not to expand distances, which bounds the truncation tail of a
    stabilized pair by d_J(x, y) 2^-J instead of 2^-J.
    """

    levels: tuple[MetricComplex, ...]
    bondings: tuple[SimplicialMap, ...]
    sections: tuple[SimplicialMap, ...]
    scales: tuple[Q, ...]
    nonexpanding_tail: bool = False
    description: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.levels:
            raise SystemError_("a system needs at least one level")
        if len(self.bondings) != len(self.levels) - 1 or len(self.sections) != len(self.levels) - 1:
            raise SystemError_("one bonding and one section per consecutive pair of levels")
        for i, (r, s) in enumerate(zip(self.bondings, self.sections)):
            lo, hi = self.levels[i], self.levels[i + 1]
            if r.domain is not hi or r.codomain is not lo or s.domain is not lo or s.codomain is not hi:
                raise SystemError_(f"maps between levels {i + 1} and {i + 2} have wrong endpoints")
            if any(r.vertex_map[s.vertex_map[v]] != v for v in range(lo.num_vertices)):
                raise SystemError_(f"bonding {i + 2}->{i + 1} is not a retraction onto its section")
            if not (r.basepoint_preserving and s.basepoint_preserving):
                raise SystemError_("bondings and sections must preserve basepoints")

    @classmethod
    def build(cls, levels: Sequence[MetricComplex], bondings: Sequence[Sequence[int]],
              sections: Sequence[Sequence[int]], nonexpanding_tail=False, description=None):
        scaled = []
        scales = []
        for cx in levels:
            s_cx, s = _normalize(cx)
            scaled.append(s_cx)
            scales.append(s)
        r = tuple(SimplicialMap(scaled[i + 1], scaled[i], tuple(vm)) for i, vm in enumerate(bondings))
        s = tuple(SimplicialMap(scaled[i], scaled[i + 1], tuple(vm)) for i, vm in enumerate(sections))
        return cls(tuple(scaled), r, s, tuple(scales), nonexpanding_tail, description or {})

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def top(self) -> MetricComplex:
        return self.levels[-1]

    def level(self, k: int) -> MetricComplex:
        self._check_level(k)
        return self.levels[k - 1]

    def _check_level(self, k: int):
        if not 1 <= k <= self.depth:
            raise SystemError_(f"level {k} outside 1..{self.depth}")

    def retraction_map(self, k: int) -> tuple[int, ...]:
        """Vertex map X_J -> X_k (composite bonding)."""
        self._check_level(k)
        key = ("r", k)
        if key not in self._cache:
            vm = tuple(range(self.top.num_vertices))
            for i in range(self.depth - 2, k - 2, -1):
                r = self.bondings[i].vertex_map
                vm = tuple(r[v] for v in vm)
            self._cache[key] = vm
        return self._cache[key]

    def section_map(self, k: int) -> tuple[int, ...]:
        """Vertex map X_k -> X_J (composite section)."""
        self._check_level(k)
        key = ("s", k)
        if key not in self._cache:
            vm = tuple(range(self.levels[k - 1].num_vertices))
            for i in range(k - 1, self.depth - 1):
                s = self.sections[i].vertex_map
                vm = tuple(s[v] for v in vm)
            self._cache[key] = vm
        return self._cache[key]

    def retraction(self, k: int) -> SimplicialMap:
        key = ("rmap", k)
        if key not in self._cache:
            self._cache[key] = SimplicialMap(self.top, self.level(k), self.retraction_map(k))
        return self._cache[key]

    def section(self, k: int) -> SimplicialMap:
        key = ("smap", k)
        if key not in self._cache:
            self._cache[key] = SimplicialMap(self.level(k), self.top, self.section_map(k))
        return self._cache[key]

    def r_sharp(self, k: int) -> Homomorphism:
        key = ("rhom", k)
        if key not in self._cache:
            self._cache[key] = induced_hom(self.retraction(k), presentation(self.top), presentation(self.level(k)))
        return self._cache[key]

    def s_sharp(self, k: int) -> Homomorphism:
        key = ("shom", k)
        if key not in self._cache:
            self._cache[key] = induced_hom(self.section(k), presentation(self.level(k)), presentation(self.top))
        return self._cache[key]

    def image_lengths(self, k: int) -> tuple[Q, ...]:
        """Per top-level edge: length of its image edge in X_k (0 if collapsed)."""
        key = ("imglen", k)
        if key not in self._cache:
            vm = self.retraction_map(k)
            lvl = self.level(k)
            out = []
            for u, v, _ in self.top.edges:
                a, b = vm[u], vm[v]
                out.append(Q(0) if a == b else lvl.edges[lvl.edge_between(a, b)][2])
            self._cache[key] = tuple(out)
        return self._cache[key]

    @property
    def space(self) -> "SystemSpace":
        if "space" not in self._cache:
            self._cache["space"] = SystemSpace(self)
        return self._cache["space"]

    def presentation(self):
        return presentation(self.top)

    def to_json(self) -> dict:
        if self.description:
            return dict(self.description)
        return {
            "levels": [cx.to_json() for cx in self.levels],
            "bondings": [list(r.vertex_map) for r in self.bondings],
            "sections": [list(s.vertex_map) for s in self.sections],
        }


class SystemSpace:
    """The truncated limit as a metric space whose points are points of X_J."""

    def __init__(self, system: InverseSystem):
        self.system = system
        self._dist: dict = {}
        self._len: dict = {}

    @property
    def base(self) -> PointLocation:
        return self.system.top.base

    @property
    def top(self) -> MetricComplex:
        return self.system.top

    def check_point(self, p):
        self.top.check_point(p)

    def coordinate(self, p: PointLocation, k: int) -> PointLocation:
        return self.system.retraction(k).map_point(p)

    def partial_sum(self, p, q) -> Q:
        total = Q(0)
        for k in range(1, self.system.depth + 1):
            lvl = self.system.level(k)
            r = self.system.retraction(k)
            total += lvl.distance(r.map_point(p), r.map_point(q)) / 2 ** k
        return total

    def tail(self, p, q) -> Q:
        if p == q:
            return Q(0)
        J = self.system.depth
        if self.system.nonexpanding_tail:
            return self.top.distance(p, q) / 2 ** J
        return Q(1, 2 ** J)

    def distance_bounds(self, p, q):
        key = (p, q)
        hit = self._dist.get(key)
        if hit is None:
            s = self.partial_sum(p, q)
            hit = (s, s + self.tail(p, q))
            if len(self._dist) > 1_000_000:
                self._dist.clear()
            self._dist[key] = hit
            self._dist[(q, p)] = hit
        return hit

    def distance(self, p, q) -> Q:
        return self.distance_bounds(p, q)[1]

    def bounds_many(self, ps, qs) -> list:
        memo = self._dist
        out = []
        for p, q in zip(ps, qs):
            if p is q or p == q:
                out.append(None)
                continue
            hit = memo.get((p, q))
            out.append(hit if hit is not None else self.distance_bounds(p, q))
        return out

    def lengths_along(self, samples) -> list:
        memo = self._len
        out = []
        for p, q in zip(samples, samples[1:]):
            hit = memo.get((p, q))
            out.append(hit if hit is not None else self.path_length(p, q))
        return out

    @property
    def edge_weights(self) -> tuple[Q, ...]:
        """Per top edge: sum over levels of its image length times 2^-k."""
        sysm = self.system
        if "weights" not in sysm._cache:
            J = sysm.depth
            sysm._cache["weights"] = tuple(
                sum((sysm.image_lengths(k)[e] / 2 ** k for k in range(1, J + 1)), Q(0))
                for e in range(len(self.top.edges)))
        return sysm._cache["weights"]

    def path_length(self, p, q) -> Q:
        """Limit-metric length of the X_J geodesic from ``p`` to ``q``."""
        if p == q:
            return Q(0)
        hit = self._len.get((p, q))
        if hit is None:
            w = self.edge_weights
            hit = sum((abs(f - s) * w[e] for e, s, f in self.top.route_pieces(p, q)), Q(0))
            hit += self.tail(p, q)
            if len(self._len) > 1_000_000:
                self._len.clear()
            self._len[(p, q)] = hit
            self._len[(q, p)] = hit
        return hit

    def interpolate(self, p, q, t):
        return self.top.geodesic_point(p, q, t)

    def to_json(self):
        return {"system": self.system.to_json()}


# -- points of the limit ------------------------------------------------------

@dataclass(frozen=True)
class LimitPoint:
    coordinates: tuple[PointLocation, ...]

    @classmethod
    def from_top(cls, system: InverseSystem, p: PointLocation) -> "LimitPoint":
        return cls(tuple(system.retraction(k).map_point(p) for k in range(1, system.depth + 1)))

    @classmethod
    def embed(cls, system: InverseSystem, k: int, p: PointLocation) -> "LimitPoint":
        """The stabilized point x_j = x_k (j >= k) through the sections."""
        return cls.from_top(system, system.section(k).map_point(p))

    def check(self, system: InverseSystem) -> None:
        if len(self.coordinates) != system.depth:
            raise SystemError_("one coordinate per level is required")
        for i, r in enumerate(system.bondings):
            if r.map_point(self.coordinates[i + 1]) != self.coordinates[i]:
                raise SystemError_(f"coordinates at levels {i + 1},{i + 2} are incompatible")


def limit_distance(system: InverseSystem, x: LimitPoint, y: LimitPoint) -> Interval:
    """Weighted level sum plus the certified truncation tail."""
    x.check(system)
    y.check(system)
    s = sum((system.levels[j].distance(x.coordinates[j], y.coordinates[j]) / 2 ** (j + 1)
             for j in range(system.depth)), Q(0))
    space = system.space
    return Interval(s, s + space.tail(x.coordinates[-1], y.coordinates[-1]))


def tail_bound(system: InverseSystem, k: int) -> Q:
    """Sum over j > k of 2^-j: the largest distance between a point and its
    level-k retraction."""
    if k < 0 or k > system.depth:
        raise SystemError_(f"level {k} outside 0..{system.depth}")
    return Q(1, 2 ** k)


@dataclass(frozen=True)
class Projection:
    level: int
    map: SimplicialMap
    hom: Homomorphism
    system: InverseSystem

    def point(self, p: PointLocation) -> PointLocation:
        return self.map.map_point(p)

    def embedded(self, p: PointLocation) -> PointLocation:
        """r_k as a self-map of the limit: retract to X_k, include back."""
        return self.system.section(self.level).map_point(self.map.map_point(p))

    def lipschitz_holds(self, p: PointLocation, q: PointLocation) -> bool:
        lvl = self.system.level(self.level)
        lhs = lvl.distance(self.point(p), self.point(q))
        return lhs <= 2 ** self.level * self.system.space.distance_bounds(p, q)[0]


def project(system: InverseSystem, k: int) -> Projection:
    return Projection(k, system.retraction(k), system.r_sharp(k), system)


# -- threads and the shape map ------------------------------------------------

@dataclass(frozen=True)
class Thread:
    words: tuple[Word, ...]

    @classmethod
    def from_top(cls, system: InverseSystem, word: Sequence[int]) -> "Thread":
        presentation(system.top).check_word(word)
        w = reduce(word)
        return cls(tuple(system.r_sharp(k)(w) for k in range(1, system.depth + 1)))

    @property
    def top(self) -> Word:
        return self.words[-1]

    def check(self, system: InverseSystem) -> None:
        if len(self.words) != system.depth:
            raise SystemError_("one word per level is required")
        for i in range(system.depth - 1):
            r = induced_hom(system.bondings[i], presentation(system.levels[i + 1]), presentation(system.levels[i]))
            if r(self.words[i + 1]) != reduce(self.words[i]):
                raise SystemError_(f"thread words at levels {i + 1},{i + 2} are incompatible")

    def stabilization_index(self, system: InverseSystem) -> int | None:
        """Smallest k whose word, pushed up by sections, gives every later word."""
        for k in range(1, system.depth + 1):
            ok = True
            for j in range(k + 1, system.depth + 1):
                s_kj = _section_hom(system, k, j)
                if s_kj(self.words[k - 1]) != reduce(self.words[j - 1]):
                    ok = False
                    break
            if ok:
                return k
        return None

    def to_json(self):
        return {"words": [list(w) for w in self.words]}


def _section_hom(system: InverseSystem, k: int, j: int) -> Homomorphism:
    key = ("sec", k, j)
    if key not in system._cache:
        vm = tuple(range(system.levels[k - 1].num_vertices))
        for i in range(k - 1, j - 1):
            s = system.sections[i].vertex_map
            vm = tuple(s[v] for v in vm)
        m = SimplicialMap(system.level(k), system.level(j), vm)
        system._cache[key] = induced_hom(m, presentation(system.level(k)), presentation(system.level(j)))
    return system._cache[key]


@dataclass(frozen=True)
class PsiReport:
    verdicts: tuple[bool | None, ...]

    @property
    def shape_trivial(self) -> bool:
        return all(v is True for v in self.verdicts)

    @property
    def first_nontrivial_level(self) -> int | None:
        for k, v in enumerate(self.verdicts, start=1):
            if v is False:
                return k
        return None

    def to_json(self):
        names = {True: "trivial", False: "nontrivial", None: "unknown"}
        return {
            "levels": [names[v] for v in self.verdicts],
            "shape_trivial_at_depth": self.shape_trivial,
            "first_nontrivial_level": self.first_nontrivial_level,
        }


def psi(system: InverseSystem, thread: Thread) -> PsiReport:
    thread.check(system)
    return PsiReport(tuple(is_trivial(w, presentation(system.level(k)))
                           for k, w in enumerate(thread.words, start=1)))


# -- builders -----------------------------------------------------------------

def shrinking_wedge(pieces: Sequence[MetricComplex], depth: int | None = None) -> InverseSystem:
    """Partial wedges X_k of the pieces; r_{k+1,k} collapses the newest piece.

    With ``depth`` larger than the number of pieces, the piece list repeats.
    Wedge inclusions never shorten paths, so the tail bound is nonexpanding.
    """
    pieces = list(pieces)
    if not pieces:
        raise SystemError_("at least one piece is required")
    depth = depth or len(pieces)
    seq = [pieces[i % len(pieces)] for i in range(depth)]
    levels = [wedge(seq[:k])[0] for k in range(1, depth + 1)]
    bondings, sections = [], []
    for k in range(1, depth):
        lo, hi = levels[k - 1], levels[k]
        bondings.append([v if v < lo.num_vertices else 0 for v in range(hi.num_vertices)])
        sections.append(list(range(lo.num_vertices)))
    return InverseSystem.build(levels, bondings, sections, nonexpanding_tail=True)


def hawaiian_earring(depth: int = 8, segments: int = 3) -> InverseSystem:
    from .space import circle

    system = shrinking_wedge([circle(1, segments)], depth)
    system.description = {"shrinking_wedge": [{"circle": "1", "segments": segments}], "depth": depth}
    return system


def level_model(system: InverseSystem, k: int) -> MetricComplex:
    """X_k with edge lengths bounding the limit-metric length of each edge.

    Its path metric dominates the limit metric on the embedded copy of X_k,
    so balls of the model sit inside limit balls of the same radius.
    """
    if not system.nonexpanding_tail:
        raise SystemError_("level models need a nonexpanding tail")
    lvl = system.level(k)
    s = system.section_map(k)
    J = system.depth
    lengths = []
    for u, v, length in lvl.edges:
        e = system.top.edge_between(s[u], s[v])
        total = sum((system.image_lengths(j)[e] / 2 ** j for j in range(1, J + 1)), Q(0))
        total += system.top.edges[e][2] / 2 ** J
        lengths.append(total)
    return lvl.with_lengths(lengths)


def kernel_generators(system: InverseSystem, k: int) -> list[int]:
    r = system.r_sharp(k)
    return [g for g in range(1, system.presentation().rank + 1) if not r((g,))]


def sample_kernel_element(system: InverseSystem, k: int, rng: random.Random, max_len: int = 4) -> Word:
    """Product of conjugates of words in generators killed by r_k#."""
    gens = kernel_generators(system, k)
    rank = system.presentation().rank
    if not gens:
        return ()
    out: Word = ()
    for _ in range(rng.randint(1, 2)):
        u = tuple(rng.choice(gens) * rng.choice((1, -1)) for _ in range(rng.randint(1, max_len)))
        c = tuple(rng.randint(1, rank) * rng.choice((1, -1)) for _ in range(rng.randint(0, 2)))
        out = multiply(out, c, u, inverse(c))
    return out


# -- serialization ------------------------------------------------------------

def load_system(source, base_dir=None) -> InverseSystem:
    """Read the system JSON format (explicit levels or the wedge shortcut)."""
    if isinstance(source, (str, Path)) and not str(source).lstrip().startswith("{"):
        path = Path(source)
        data = json.loads(path.read_text())
        base_dir = path.parent
    elif isinstance(source, dict):
        data = source
    else:
        data = json.loads(source)
    base_dir = Path(base_dir or ".")

    def complex_of(item):
        if isinstance(item, str):
            return MetricComplex.load(base_dir / item)
        if "circle" in item:
            from .space import circle

            return circle(Q(str(item["circle"])), int(item.get("segments", 3)))
        return MetricComplex.from_json(item)

    if "shrinking_wedge" in data:
        pieces = [complex_of(p) for p in data["shrinking_wedge"]]
        system = shrinking_wedge(pieces, data.get("depth"))
        system.description = data
        return system
    levels = [complex_of(x) for x in data["levels"]]
    return InverseSystem.build(levels, data["bondings"], data["sections"],
                               bool(data.get("nonexpanding_tail", False)), data)
