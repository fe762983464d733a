"""Finite ball covers of metric complexes, their nerves, and canonical maps.

Ball membership on an edge is a union of open offset intervals, so coverage,
intersections and containments are all decided exactly in rationals.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from .rational import Q
from typing import Sequence

from .group import (
    Homomorphism,
    SimplicialMap,
    Word,
    induced_hom,
    inverse,
    multiply,
    presentation,
    reduce,
    walk_word,
)
from .space import MetricComplex, PointLocation, Subdivision, as_fraction, fraction_str, subdivide

NEG = Q(-1)
POS = Q(2)


class CoverError(ValueError):
    pass


class RefinementFailure(CoverError):
    pass


@dataclass(frozen=True)
class Ball:
    center: PointLocation
    radius: Q

    def to_json(self):
        c = self.center.vertex if self.center.is_vertex else self.center.to_json()
        return {"center": c, "radius": fraction_str(self.radius)}


def _ball_intervals(cx: MetricComplex, ball: Ball) -> dict[int, list[tuple[Q, Q]]]:
    """Per edge, open offset intervals (possibly overhanging [0, 1]) inside the ball."""
    r = ball.radius
    c = ball.center
    out: dict[int, list] = {}
    for e, (u, v, length) in enumerate(cx.edges):
        du = cx.distance(c, cx.vertex_point(u))
        dv = cx.distance(c, cx.vertex_point(v))
        ivs = []
        if du < r:
            ivs.append((NEG, (r - du) / length))
        if dv < r:
            ivs.append((1 - (r - dv) / length, POS))
        if not c.is_vertex and c.edge == e:
            ivs.append((c.offset - r / length, c.offset + r / length))
        if ivs:
            out[e] = ivs
    return out


def _covers(ivs, lo=Q(0), hi=Q(1)) -> bool:
    """Do the open intervals cover the closed interval [lo, hi]?"""
    cur = lo
    while True:
        best = None
        for a, b in ivs:
            if a < cur < b and (best is None or b > best):
                best = b
        if best is None:
            return False
        if best > hi:
            return True
        cur = best


def _meet(*groups) -> bool:
    """Is there a point of [0, 1] in one interval from each group?"""
    for combo in itertools.product(*groups):
        a = max(x for x, _ in combo)
        b = min(y for _, y in combo)
        if a < b and a < 1 and b > 0:
            return True
    return False


@dataclass(eq=False)
class Cover:
    """A finite cover of ``complex`` by open balls.

    ``source`` is the complex the cover was requested for; ``complex`` is its
    subdivision carrying the ball centres (same metric space).
    """

    complex: MetricComplex
    balls: tuple[Ball, ...]
    distinguished: int = 0
    source: MetricComplex | None = None
    subdivision: Subdivision | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.source is None:
            self.source = self.complex
        if not self.balls:
            raise CoverError("a cover needs at least one element")
        for b in self.balls:
            self.complex.check_point(b.center)
            if b.radius <= 0:
                raise CoverError("ball radii must be positive")
        if not self.contains_point(self.distinguished, self.complex.base):
            raise CoverError("distinguished element does not contain the basepoint")
        gap = self.coverage_gap()
        if gap is not None:
            raise CoverError(f"elements do not cover edge {gap}")

    def __len__(self):
        return len(self.balls)

    @property
    def intervals(self) -> list[dict[int, list]]:
        if "iv" not in self._cache:
            self._cache["iv"] = [_ball_intervals(self.complex, b) for b in self.balls]
        return self._cache["iv"]

    def contains_point(self, i: int, p: PointLocation) -> bool:
        return self.complex.distance(self.balls[i].center, p) < self.balls[i].radius

    def coverage_gap(self) -> int | None:
        cx = self.complex
        if not cx.edges:
            return None if any(self.contains_point(i, cx.base) for i in range(len(self.balls))) else -1
        for e in range(len(cx.edges)):
            ivs = [iv for per in self.intervals for iv in per.get(e, ())]
            if not _covers(ivs):
                return e
        return None

    def contains_segment(self, i: int, e: int, lo: Q, hi: Q) -> bool:
        return _covers(self.intervals[i].get(e, ()), min(lo, hi), max(lo, hi))

    def contains_edge(self, i: int, e: int) -> bool:
        return self.contains_segment(i, e, Q(0), Q(1))

    def elements_on_edge(self, e: int) -> list[int]:
        return [i for i, per in enumerate(self.intervals) if e in per]

    def intersect(self, members: Sequence[int]) -> bool:
        """Exact nonemptiness of the intersection of the listed elements."""
        cx = self.complex
        if not cx.edges:
            return True
        for e in range(len(cx.edges)):
            groups = [self.intervals[i].get(e) for i in members]
            if all(groups) and _meet(*groups):
                return True
        return False

    def to_json(self):
        return {"balls": [b.to_json() for b in self.balls], "distinguished": self.distinguished}

    @classmethod
    def from_json(cls, cx: MetricComplex, data: dict) -> "Cover":
        balls = []
        for item in data["balls"]:
            c = item["center"]
            center = cx.vertex_point(c) if isinstance(c, int) else cx.edge_point(c["edge"], Q(str(c["offset"])))
            balls.append(Ball(center, as_fraction(str(item["radius"]))))
        return cls(cx, tuple(balls), int(data.get("distinguished", 0)))


def ball_cover(cx: MetricComplex, radius, centers: str = "all") -> Cover:
    """Balls of the given radius at the vertices of a subdivision of mesh
    <= radius/2.  ``centers="net"`` keeps a greedy radius/2-net of them."""
    radius = as_fraction(radius)
    if radius <= 0:
        raise CoverError("radius must be positive")
    sub = subdivide(cx, radius / 2)
    scx = sub.complex
    order = [scx.basepoint] + [v for v in range(scx.num_vertices) if v != scx.basepoint]
    if centers == "all":
        chosen = order
    elif centers == "net":
        chosen = []
        for v in order:
            if all(scx.vertex_distance(v, c) >= radius / 2 for c in chosen):
                chosen.append(v)
    else:
        raise CoverError(f"unknown centre policy {centers!r}")
    balls = tuple(Ball(scx.vertex_point(v), radius) for v in chosen)
    return Cover(scx, balls, 0, cx, sub)


@dataclass(eq=False)
class NerveComplex:
    cover: Cover
    complex: MetricComplex
    simplices: dict

    @property
    def edges(self):
        return self.simplices[1]

    @property
    def triangles(self):
        return self.simplices[2]


def nerve(cover) -> NerveComplex:
    """Nerve up to dimension 2, with unit edge lengths."""
    if "nerve" in cover._cache:
        return cover._cache["nerve"]
    if isinstance(cover, StarCover):
        return _star_nerve(cover)
    n = len(cover.balls)
    cx = cover.complex
    pairs: set[tuple[int, int]] = set()
    triples: set[tuple[int, int, int]] = set()
    for e in range(max(1, len(cx.edges))):
        members = cover.elements_on_edge(e) if cx.edges else list(range(n))
        for i, j in itertools.combinations(members, 2):
            if (i, j) not in pairs and (not cx.edges or _meet(cover.intervals[i][e], cover.intervals[j][e])):
                pairs.add((i, j))
        for i, j, k in itertools.combinations(members, 3):
            if (i, j, k) in triples:
                continue
            if not cx.edges or _meet(cover.intervals[i][e], cover.intervals[j][e], cover.intervals[k][e]):
                triples.add((i, j, k))
    edges = tuple(sorted(pairs))
    tris = tuple(sorted(triples))
    ncx = MetricComplex(n, tuple((i, j, Q(1)) for i, j in edges), tris, cover.distinguished)
    result = NerveComplex(cover, ncx, {0: tuple(range(n)), 1: edges, 2: tris})
    cover._cache["nerve"] = result
    return result


@dataclass(frozen=True, eq=False)
class ComposedMap:
    """Composite of edge-path maps, applied left to right."""

    maps: tuple

    @property
    def domain(self):
        return self.maps[0].domain

    @property
    def codomain(self):
        return self.maps[-1].codomain

    def image_walk(self, walk):
        for m in self.maps:
            walk = m.image_walk(walk)
        return walk


@dataclass(eq=False)
class CanonicalMap:
    """Simplicial approximation of the canonical map to the nerve.

    ``map`` sends each vertex of ``subdivided`` to an element containing its
    closed star.
    """

    source: MetricComplex
    subdivided: MetricComplex
    steps: tuple
    map: SimplicialMap
    nerve: NerveComplex

    def __iter__(self):
        return iter((self.map, self.subdivided))

    @property
    def walk_map(self) -> ComposedMap:
        from .group import SubdivisionMap

        return ComposedMap(tuple(SubdivisionMap(s) for s in self.steps) + (self.map,))


def _chain_index(sub: Subdivision) -> dict[int, tuple[int, int, int]]:
    idx = {}
    for pe, chain in enumerate(sub.edge_chains):
        for i, e in enumerate(chain):
            idx[e] = (pe, i, len(chain))
    return idx


def _star_elements(cover: Cover, sub: Subdivision | None, v: int) -> list[int]:
    """Elements containing the closed star of vertex ``v`` of the subdivision."""
    base = cover.complex
    scx = sub.complex if sub else base
    pieces = []
    for _, e in scx.adjacency[v]:
        if sub is None:
            pieces.append((e, Q(0), Q(1)))
            continue
        pe, i, k = _chain_index(sub)[e]
        pieces.append((pe, Q(i, k), Q(i + 1, k)))
    out = []
    for idx in range(len(cover.balls)):
        if not pieces:
            if cover.contains_point(idx, scx.vertex_point(v)):
                out.append(idx)
        elif all(cover.contains_segment(idx, pe, lo, hi) for pe, lo, hi in pieces):
            out.append(idx)
    return out


def canonical_map(cx: MetricComplex, cover, prefer: str = "first", max_depth: int = 8) -> CanonicalMap:
    """Subdivide until every closed vertex star lies in an element; map each
    vertex to such an element (the distinguished one at the basepoint)."""
    if isinstance(cover, StarCover):
        return _star_canonical_map(cx, cover, prefer)
    if cx is not cover.source and cx is not cover.complex:
        raise CoverError("cover was built for a different complex")
    steps = [cover.subdivision] if (cx is cover.source and cover.subdivision is not None) else []
    base = cover.complex
    nv = nerve(cover)
    min_r = min(b.radius for b in cover.balls)
    longest = max((length for _, _, length in base.edges), default=Q(1))
    for depth in range(max_depth + 1):
        if depth == 0:
            sub = None
        else:
            sub = subdivide(base, min(longest, min_r) / 2 ** depth)
        scx = sub.complex if sub else base
        vm = []
        ok = True
        for v in range(scx.num_vertices):
            cands = _star_elements(cover, sub, v)
            if v == scx.basepoint:
                if cover.distinguished not in cands:
                    ok = False
                    break
                vm.append(cover.distinguished)
                continue
            if not cands:
                ok = False
                break
            vm.append(cands[0] if prefer == "first" else cands[-1])
        if ok:
            smap = SimplicialMap(scx, nv.complex, tuple(vm))
            return CanonicalMap(cx, scx, tuple(steps + ([sub] if sub else [])), smap, nv)
    raise RefinementFailure(f"no subdivision up to depth {max_depth} puts every star inside an element")


def p_sharp(cmap: CanonicalMap, complex: MetricComplex | None = None, nerve_: NerveComplex | None = None) -> Homomorphism:
    """Induced homomorphism pi_1(source) -> pi_1(nerve)."""
    if complex is not None and complex is not cmap.source:
        raise CoverError("canonical map was built for a different complex")
    if nerve_ is not None and nerve_ is not cmap.nerve:
        raise CoverError("canonical map targets a different nerve")
    return induced_hom(cmap.walk_map, presentation(cmap.source), presentation(cmap.nerve.complex))


def refinement_map(fine: Cover, coarse: Cover) -> SimplicialMap:
    """p_{UV}: nerve(fine) -> nerve(coarse), each fine element to a coarse
    element containing it.  Both covers must live on the same complex."""
    if fine.complex is not coarse.complex:
        raise CoverError("refinement maps need covers on one complex")
    cx = fine.complex
    vm = []
    for i in range(len(fine.balls)):
        choice = None
        for j in range(len(coarse.balls)):
            if i == fine.distinguished and j != coarse.distinguished:
                continue
            if _ball_inside(fine, i, coarse, j, cx):
                choice = j
                break
        if choice is None:
            raise CoverError(f"element {i} lies in no coarse element")
        vm.append(choice)
    return SimplicialMap(nerve(fine).complex, nerve(coarse).complex, tuple(vm))


def _ball_inside(fine: Cover, i: int, coarse: Cover, j: int, cx: MetricComplex) -> bool:
    bi, bj = fine.balls[i], coarse.balls[j]
    if cx.distance(bi.center, bj.center) + bi.radius <= bj.radius:
        return True
    for e, ivs in fine.intervals[i].items():
        for a, b in ivs:
            lo, hi = max(a, Q(0)), min(b, Q(1))
            if lo < hi and not coarse.contains_segment(j, e, lo, hi):
                return False
    return cx.edges != () or coarse.contains_point(j, bi.center)


def refine_cover(cx: MetricComplex, coarse: Cover, factor: int = 2) -> Cover:
    """Ball cover on the same subdivision with radius divided by ``factor``."""
    r = min(b.radius for b in coarse.balls) / factor
    scx = coarse.complex
    sub = subdivide(scx, r / 2)
    if sub.complex.num_vertices != scx.num_vertices:
        raise CoverError("refinement would need a finer subdivision; build both covers on one complex")
    balls = tuple(Ball(scx.vertex_point(v), r) for v in
                  [scx.basepoint] + [v for v in range(scx.num_vertices) if v != scx.basepoint])
    return Cover(scx, balls, 0, coarse.source, coarse.subdivision)


# -- open star-unions ---------------------------------------------------------

@dataclass(eq=False)
class StarCover:
    """Cover by unions of open vertex stars: element i is the union of the
    open stars of the vertices in ``stars[i]``."""

    complex: MetricComplex
    stars: tuple[frozenset, ...]
    distinguished: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.stars = tuple(frozenset(s) for s in self.stars)
        if not self.stars:
            raise CoverError("a cover needs at least one element")
        seen = set().union(*self.stars)
        if any(not 0 <= v < self.complex.num_vertices for v in seen):
            raise CoverError("star set names a missing vertex")
        if len(seen) != self.complex.num_vertices:
            raise CoverError("some vertex star lies in no element")
        if self.complex.basepoint not in self.stars[self.distinguished]:
            raise CoverError("distinguished element does not contain the basepoint")

    @property
    def source(self):
        return self.complex

    def __len__(self):
        return len(self.stars)

    def members(self, v: int) -> list[int]:
        if "members" not in self._cache:
            idx: list[list[int]] = [[] for _ in range(self.complex.num_vertices)]
            for i, s in enumerate(self.stars):
                for x in s:
                    idx[x].append(i)
            self._cache["members"] = idx
        return self._cache["members"][v]

    def cells(self):
        """Vertex sets of all cells; a cell's interior meets exactly the
        elements containing one of its vertices."""
        cx = self.complex
        yield from ((v,) for v in range(cx.num_vertices))
        yield from ((u, v) for u, v, _ in cx.edges)
        yield from cx.faces

    def to_json(self):
        return {"stars": [sorted(s) for s in self.stars], "distinguished": self.distinguished}


def _star_nerve(cover: StarCover) -> NerveComplex:
    pairs: set = set()
    triples: set = set()
    for cell in cover.cells():
        elems = sorted({i for v in cell for i in cover.members(v)})
        pairs.update(itertools.combinations(elems, 2))
        triples.update(itertools.combinations(elems, 3))
    edges = tuple(sorted(pairs))
    tris = tuple(sorted(triples))
    n = len(cover.stars)
    ncx = MetricComplex(n, tuple((i, j, Q(1)) for i, j in edges), tris, cover.distinguished)
    result = NerveComplex(cover, ncx, {0: tuple(range(n)), 1: edges, 2: tris})
    cover._cache["nerve"] = result
    return result


def _star_canonical_map(cx: MetricComplex, cover: StarCover, prefer: str) -> CanonicalMap:
    if cx is not cover.complex:
        raise CoverError("cover was built for a different complex")
    nv = nerve(cover)
    vm = []
    for v in range(cx.num_vertices):
        if v == cx.basepoint:
            vm.append(cover.distinguished)
            continue
        cands = cover.members(v)
        vm.append(cands[0] if prefer == "first" else cands[-1])
    return CanonicalMap(cx, cx, (), SimplicialMap(cx, nv.complex, tuple(vm)), nv)


def proximity_cover(cx: MetricComplex, dist, radius, order: Sequence[int] | None = None) -> StarCover:
    """Star-union cover from an auxiliary vertex distance ``dist(u, v)``:
    greedy centres at spacing >= radius/2, each element the stars of the
    vertices closer than ``radius`` to its centre."""
    order = list(order) if order is not None else list(range(cx.num_vertices))
    if order[0] != cx.basepoint:
        order.remove(cx.basepoint)
        order.insert(0, cx.basepoint)
    centres: list[int] = []
    for v in order:
        if all(dist(v, c) >= radius / 2 for c in centres):
            centres.append(v)
    stars = [frozenset(w for w in range(cx.num_vertices) if dist(c, w) < radius) for c in centres]
    return StarCover(cx, tuple(stars), 0)


# -- Spanier generators -------------------------------------------------------

def element_subcomplex_edges(cover: Cover, i: int) -> list[int]:
    return [e for e in range(len(cover.complex.edges)) if cover.contains_edge(i, e)]


def _fundamental_cycles(cx: MetricComplex, edges: Sequence[int], root: int) -> list[list[int]]:
    """Closed vertex walks at ``root``, one per non-tree edge of the
    component of ``root`` in the edge subset."""
    adj: dict[int, list[tuple[int, int]]] = {}
    for e in edges:
        u, v, _ = cx.edges[e]
        adj.setdefault(u, []).append((v, e))
        adj.setdefault(v, []).append((u, e))
    parent = {root: None}
    tree = set()
    queue = [root]
    for x in queue:
        for y, e in sorted(adj.get(x, [])):
            if y not in parent:
                parent[y] = x
                tree.add(e)
                queue.append(y)

    def path(v):
        out = [v]
        while parent[out[-1]] is not None:
            out.append(parent[out[-1]])
        return out[::-1]

    cycles = []
    for e in edges:
        u, v, _ = cx.edges[e]
        if e in tree or u not in parent:
            continue
        cycles.append(path(u) + path(v)[::-1])
    return cycles


def desubdivide_walk(sub: Subdivision, walk: Sequence[int]) -> list[int]:
    """A subdivided vertex walk as a homotopic walk in the original complex."""
    n0 = sub.original.num_vertices
    owner = {}
    for pe, chain in enumerate(sub.edge_chains):
        for e in chain:
            for x in sub.complex.edges[e][:2]:
                if x >= n0:
                    owner[x] = pe
    anchors = [x if x < n0 else sub.original.edges[owner[x]][0] for x in walk]
    out = [anchors[0]]
    for a in anchors[1:]:
        if a != out[-1]:
            out.append(a)
    return out


def spanier_generators(cx: MetricComplex, cover: Cover, seed: int, count: int,
                       max_word_length: int = 6) -> list[Word]:
    """Pseudorandom path-conjugates of loops lying inside single elements,
    as words over ``presentation(cx)``."""
    rng = random.Random(seed)
    scx = cover.complex
    spres = presentation(scx)
    pres = presentation(cx)
    inner = [element_subcomplex_edges(cover, i) for i in range(len(cover.balls))]
    out = []
    for _ in range(count):
        i = rng.randrange(len(cover.balls))
        edges = inner[i]
        if not edges:
            out.append(())
            continue
        verts = sorted({x for e in edges for x in scx.edges[e][:2]})
        root = rng.choice(verts)
        cycles = _fundamental_cycles(scx, edges, root)
        if not cycles:
            out.append(())
            continue
        loop_walk = [root]
        for _ in range(rng.randint(1, max_word_length)):
            c = rng.choice(cycles)
            if rng.random() < 0.5:
                c = c[::-1]
            loop_walk.extend(c[1:])
        prefix = tuple(rng.randint(1, pres.rank) * rng.choice((1, -1))
                       for _ in range(rng.randint(0, 2))) if pres.rank else ()
        to_root = spres.tree_path(root)
        walk = to_root + loop_walk[1:] + to_root[::-1][1:]
        if cx is not scx:
            if cover.subdivision is None or cover.subdivision.original is not cx:
                raise CoverError("cover does not belong to this complex")
            walk = desubdivide_walk(cover.subdivision, walk)
        core = walk_word(pres if cx is not scx else spres, walk)
        out.append(multiply(prefix, core, inverse(prefix)))
    return out
