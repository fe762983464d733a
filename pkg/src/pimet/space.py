"""Compact metric spaces: finite metric complexes and two analytic models.

Finite complexes carry the path metric of their 1-skeleton, computed in exact
rational arithmetic.  Points live on the 1-skeleton only; 2-cells are used as
relators for the fundamental group and never carry points.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from .rational import Q
from pathlib import Path
from typing import Iterable, Sequence


ROUTE_MEMO_LIMIT = 1_000_000


class SpaceError(ValueError):
    pass


class InvalidPointError(SpaceError):
    pass


class AmbiguousGeodesicError(SpaceError):
    pass


def as_fraction(value) -> Q:
    if isinstance(value, Q):
        return value
    if isinstance(value, float):
        return Q(repr(value))
    return Q(value)


def fraction_str(value: Q) -> str:
    value = Q(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True, eq=False)
class PointLocation:
    """A point of a complex: a vertex, or an edge plus an offset in (0, 1).

    Vertex points use ``edge=None`` and offset 0.  Build them through
    :meth:`MetricComplex.vertex_point` and :meth:`MetricComplex.edge_point`,
    which canonicalize edge offsets 0 and 1 to vertex points.
    """

    vertex: int | None = None
    edge: int | None = None
    offset: Q = Q(0)

    def __post_init__(self):
        key = (self.vertex, self.edge, self.offset)
        object.__setattr__(self, "_key", key)
        object.__setattr__(self, "_hash", hash(key))

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, PointLocation):
            return NotImplemented
        return self._hash == other._hash and self._key == other._key

    def __hash__(self):
        return self._hash

    @property
    def is_vertex(self) -> bool:
        return self.edge is None

    def to_json(self):
        if self.is_vertex:
            return {"vertex": self.vertex}
        return {"edge": self.edge, "offset": fraction_str(self.offset)}


@dataclass(frozen=True)
class Subdivision:
    """Provenance of a subdivision: old vertices keep their index."""

    original: "MetricComplex"
    complex: "MetricComplex"
    edge_chains: tuple[tuple[int, ...], ...]

    def map_point(self, p: PointLocation) -> PointLocation:
        if p.is_vertex:
            return p
        chain = self.edge_chains[p.edge]
        k = len(chain)
        pos = p.offset * k
        i = min(int(pos), k - 1)
        return self.complex.edge_point(chain[i], pos - i)

    def vertex_walk(self, edge: int, forward: bool = True) -> list[int]:
        """Vertices of the subdivided edge, in traversal order."""
        u, v, _ = self.original.edges[edge]
        walk = [u]
        for e in self.edge_chains[edge]:
            a, b, _ = self.complex.edges[e]
            walk.append(b if a == walk[-1] else a)
        return walk if forward else walk[::-1]


@dataclass(frozen=True, eq=False)
class MetricComplex:
    """Finite 2-dimensional complex with positive rational edge lengths.

    ``faces`` are closed vertex cycles (triangles in input files; subdivision
    turns them into polygons).  Instances are immutable; shortest-path data is
    memoized per instance.
    """

    num_vertices: int
    edges: tuple[tuple[int, int, Q], ...]
    faces: tuple[tuple[int, ...], ...] = ()
    basepoint: int = 0
    labels: tuple[str, ...] | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        edges = tuple((int(u), int(v), as_fraction(length)) for u, v, length in self.edges)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "faces", tuple(tuple(int(x) for x in f) for f in self.faces))
        seen = set()
        for u, v, length in edges:
            if u == v:
                raise SpaceError(f"edge endpoints must be distinct: ({u}, {v})")
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise SpaceError(f"edge ({u}, {v}) references a missing vertex")
            if length <= 0:
                raise SpaceError(f"edge ({u}, {v}) has non-positive length {length}")
            key = frozenset((u, v))
            if key in seen:
                raise SpaceError(f"parallel edge ({u}, {v})")
            seen.add(key)
        for face in self.faces:
            if len(face) < 3:
                raise SpaceError(f"face {face} has fewer than three vertices")
            for a, b in zip(face, face[1:] + face[:1]):
                if frozenset((a, b)) not in seen:
                    raise SpaceError(f"face {face} is missing edge ({a}, {b})")
        if not 0 <= self.basepoint < self.num_vertices:
            raise SpaceError("basepoint is not a vertex")
        if self.num_vertices > 1 and len(self._component(self.basepoint)) != self.num_vertices:
            raise SpaceError("1-skeleton is not connected")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_cycles(cls, cycles: Sequence[Sequence], basepoint: int = 0, faces=()) -> "MetricComplex":
        """Complex from a vertex count implied by edges ``[(u, v, length), ...]``."""
        edges = [tuple(e) for e in cycles]
        n = 1 + max((max(u, v) for u, v, _ in edges), default=basepoint)
        return cls(n, tuple(edges), tuple(faces), basepoint)

    @property
    def triangles(self) -> tuple[tuple[int, ...], ...]:
        return self.faces

    @property
    def edge_lookup(self) -> dict[frozenset, int]:
        if "lookup" not in self._cache:
            self._cache["lookup"] = {frozenset((u, v)): i for i, (u, v, _) in enumerate(self.edges)}
        return self._cache["lookup"]

    def edge_between(self, u: int, v: int) -> int | None:
        return self.edge_lookup.get(frozenset((u, v)))

    @property
    def adjacency(self) -> list[list[tuple[int, int]]]:
        """Per vertex: (neighbour, edge index), ordered by edge index."""
        if "adj" not in self._cache:
            adj = [[] for _ in range(self.num_vertices)]
            for i, (u, v, _) in enumerate(self.edges):
                adj[u].append((v, i))
                adj[v].append((u, i))
            self._cache["adj"] = adj
        return self._cache["adj"]

    def _component(self, start: int) -> set[int]:
        adj = [[] for _ in range(self.num_vertices)]
        for u, v, _ in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        seen = {start}
        stack = [start]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        return seen

    def with_lengths(self, lengths: Iterable) -> "MetricComplex":
        lengths = list(lengths)
        if len(lengths) != len(self.edges):
            raise SpaceError("one length per edge is required")
        edges = tuple((u, v, as_fraction(length)) for (u, v, _), length in zip(self.edges, lengths))
        return MetricComplex(self.num_vertices, edges, self.faces, self.basepoint, self.labels)

    def scaled(self, factor) -> "MetricComplex":
        factor = as_fraction(factor)
        return self.with_lengths(length * factor for _, _, length in self.edges)

    # -- points ---------------------------------------------------------------

    def vertex_point(self, v: int) -> PointLocation:
        if not 0 <= v < self.num_vertices:
            raise InvalidPointError(f"no vertex {v}")
        pts = self._cache.get("vpts")
        if pts is None:
            pts = self._cache["vpts"] = [PointLocation(vertex=x) for x in range(self.num_vertices)]
        return pts[v]

    def edge_point(self, e: int, offset) -> PointLocation:
        if not 0 <= e < len(self.edges):
            raise InvalidPointError(f"no edge {e}")
        offset = as_fraction(offset)
        if not 0 <= offset <= 1:
            raise InvalidPointError(f"offset {offset} outside [0, 1]")
        u, v, _ = self.edges[e]
        if offset == 0:
            return self.vertex_point(u)
        if offset == 1:
            return self.vertex_point(v)
        return PointLocation(edge=e, offset=offset)

    @property
    def base(self) -> PointLocation:
        return self.vertex_point(self.basepoint)

    def check_point(self, p: PointLocation) -> None:
        if not isinstance(p, PointLocation):
            raise InvalidPointError(f"not a point location: {p!r}")
        if p.is_vertex:
            if p.vertex is None or not 0 <= p.vertex < self.num_vertices:
                raise InvalidPointError(f"no vertex {p.vertex}")
        elif not (0 <= p.edge < len(self.edges) and 0 < p.offset < 1):
            raise InvalidPointError(f"invalid edge point {p}")

    def ends(self, p: PointLocation) -> list[tuple[int, Q]]:
        """Vertices reachable from ``p`` along its carrier, with the distance."""
        if p.is_vertex:
            return [(p.vertex, Q(0))]
        u, v, length = self.edges[p.edge]
        return [(u, p.offset * length), (v, (1 - p.offset) * length)]

    # -- shortest paths -------------------------------------------------------

    def _dijkstra(self, source: int, skip_edge: int | None = None):
        dist: dict[int, Q] = {source: Q(0)}
        pred: dict[int, tuple[int, int]] = {}
        heap = [(Q(0), source)]
        done = set()
        adj = self.adjacency
        while heap:
            d, x = heapq.heappop(heap)
            if x in done:
                continue
            done.add(x)
            for y, e in adj[x]:
                if e == skip_edge:
                    continue
                nd = d + self.edges[e][2]
                if y not in dist or nd < dist[y]:
                    dist[y] = nd
                    pred[y] = (x, e)
                    heapq.heappush(heap, (nd, y))
        return dist, pred

    def shortest_tree(self, source: int):
        key = ("sp", source)
        if key not in self._cache:
            self._cache[key] = self._dijkstra(source)
        return self._cache[key]

    def vertex_distance(self, u: int, v: int) -> Q:
        return self.shortest_tree(u)[0][v]

    def vertex_path(self, u: int, v: int) -> list[int]:
        """Deterministic shortest vertex path from ``u`` to ``v``."""
        _, pred = self.shortest_tree(u)
        path = [v]
        while path[-1] != u:
            path.append(pred[path[-1]][0])
        return path[::-1]

    def route(self, p: PointLocation, q: PointLocation):
        """Shortest route from ``p`` to ``q``.

        Returns ``(length, None)`` when the route runs along the common edge,
        else ``(length, (a, b))`` where the route leaves ``p`` through vertex
        ``a``, follows :meth:`vertex_path` to ``b`` and enters ``q``.
        """
        memo = self._cache.get("route")
        if memo is None or len(memo) > ROUTE_MEMO_LIMIT:
            memo = self._cache["route"] = {}
        hit = memo.get((p, q))
        if hit is not None:
            return hit
        best = None
        if not p.is_vertex and p.edge == q.edge:
            best = (abs(p.offset - q.offset) * self.edges[p.edge][2], None)
        for a, da in self.ends(p):
            for b, db in self.ends(q):
                d = da + self.vertex_distance(a, b) + db
                if best is None or d < best[0]:
                    best = (d, (a, b))
        memo[(p, q)] = best
        return best

    def distance(self, p: PointLocation, q: PointLocation) -> Q:
        memo = self._cache.get("dist")
        if memo is not None:
            hit = memo.get((p, q))
            if hit is not None:
                return hit
        else:
            memo = self._cache["dist"] = {}
        self.check_point(p)
        self.check_point(q)
        if p == q:
            return Q(0)
        d = self.route(p, q)[0]
        if len(memo) > ROUTE_MEMO_LIMIT:
            memo.clear()
        memo[(p, q)] = memo[(q, p)] = d
        return d

    def distance_bounds(self, p, q):
        d = self.distance(p, q)
        return d, d

    def path_length(self, p, q) -> Q:
        return self.distance(p, q)

    def bounds_many(self, ps, qs) -> list:
        """Distance bounds of paired samples; ``None`` marks equal points."""
        memo = self._cache.setdefault("dist", {})
        out = []
        for p, q in zip(ps, qs):
            if p is q or p == q:
                out.append(None)
                continue
            d = memo.get((p, q))
            if d is None:
                d = self.distance(p, q)
            out.append((d, d))
        return out

    def lengths_along(self, samples) -> list:
        return [Q(0) if b is None else b[1] for b in self.bounds_many(samples, samples[1:])]

    def route_pieces(self, p: PointLocation, q: PointLocation):
        """The geodesic from ``p`` to ``q`` as ``(edge, start, end)`` offset pieces."""
        length, via = self.route(p, q)
        if via is None:
            return [(p.edge, p.offset, q.offset)] if p != q else []
        a, b = via
        pieces = []
        if not p.is_vertex:
            pieces.append((p.edge, p.offset, Q(0) if self.edges[p.edge][0] == a else Q(1)))
        path = self.vertex_path(a, b)
        for x, y in zip(path, path[1:]):
            e = self.edge_between(x, y)
            forward = self.edges[e][0] == x
            pieces.append((e, Q(0) if forward else Q(1), Q(1) if forward else Q(0)))
        if not q.is_vertex:
            pieces.append((q.edge, Q(0) if self.edges[q.edge][0] == b else Q(1), q.offset))
        return pieces

    def geodesic_point(self, p: PointLocation, q: PointLocation, t) -> PointLocation:
        """Point at fraction ``t`` along the unique geodesic from ``p`` to ``q``."""
        t = as_fraction(t)
        d = self.distance(p, q)
        if d >= self.systole(essential=False) / 2:
            raise AmbiguousGeodesicError(
                f"distance {d} is outside the uniqueness window (graph systole / 2)"
            )
        return self._walk(p, q, t)

    def _walk(self, p, q, t):
        if t == 0 or p == q:
            return p
        if t == 1:
            return q
        remaining = t * self.route(p, q)[0]
        for e, s, f in self.route_pieces(p, q):
            piece = abs(f - s) * self.edges[e][2]
            if remaining <= piece:
                frac = remaining / self.edges[e][2]
                return self.edge_point(e, s + frac if f > s else s - frac)
            remaining -= piece
        return q

    def interpolate(self, p, q, t):
        return self.geodesic_point(p, q, t)

    # -- global invariants ----------------------------------------------------

    def diameter(self) -> Q:
        """Diameter of the path metric over all points of the 1-skeleton."""
        if "diam" in self._cache:
            return self._cache["diam"]
        best = Q(0)
        edges = self.edges
        if not edges:
            self._cache["diam"] = best
            return best
        for i, (u, v, a) in enumerate(edges):
            for j, (x, y, b) in enumerate(edges):
                if j < i:
                    continue
                if i == j:
                    other = self._dijkstra(u, skip_edge=i)[0].get(v)
                    cand = a if other is None else min(a, (a + other) / 2)
                    best = max(best, cand)
                    continue
                best = max(best, self._edge_pair_diameter(u, v, a, x, y, b))
        self._cache["diam"] = best
        return best

    def _edge_pair_diameter(self, u, v, a, x, y, b):
        du, dv = self.shortest_tree(u)[0], self.shortest_tree(v)[0]
        a1, b1 = du[x], dv[x]
        a2, b2 = du[y], dv[y]
        cands = {Q(0), Q(1)}
        for p_, q_ in ((a1, b1), (a2, b2)):
            lam = (a + q_ - p_) / (2 * a)
            if 0 < lam < 1:
                cands.add(lam)

        def g(lam):
            dx = min(lam * a + a1, (1 - lam) * a + b1)
            dy = min(lam * a + a2, (1 - lam) * a + b2)
            return (b + dx + dy) / 2

        return max(g(lam) for lam in cands)

    def systole(self, essential: bool = True) -> Q | float:
        """Shortest cycle of the 1-skeleton; if ``essential``, shortest cycle
        that is not nullhomotopic across the 2-cells.  ``inf`` if none."""
        key = ("systole", essential)
        if key in self._cache:
            return self._cache[key]
        value = _systole(self, essential)
        self._cache[key] = value
        return value

    # -- serialization --------------------------------------------------------

    def to_json(self) -> dict:
        data = {
            "vertices": list(self.labels) if self.labels else self.num_vertices,
            "edges": [[u, v, fraction_str(length)] for u, v, length in self.edges],
            "triangles": [list(f) for f in self.faces],
            "basepoint": self.basepoint,
        }
        return data

    @classmethod
    def from_json(cls, data: dict) -> "MetricComplex":
        verts = data["vertices"]
        labels = None
        if isinstance(verts, int):
            n = verts
        else:
            labels = tuple(str(x) for x in verts)
            n = len(labels)
        index = {label: i for i, label in enumerate(labels)} if labels else {}

        def vid(x):
            if isinstance(x, int):
                return x
            if x in index:
                return index[x]
            raise SpaceError(f"unknown vertex {x!r}")

        edges = tuple((vid(u), vid(v), as_fraction(str(length))) for u, v, length in data["edges"])
        faces = tuple(tuple(vid(x) for x in f) for f in data.get("triangles", []))
        return cls(n, edges, faces, vid(data.get("basepoint", 0)), labels)

    @classmethod
    def load(cls, path) -> "MetricComplex":
        return cls.from_json(json.loads(Path(path).read_text()))


def distance(space, p, q):
    return space.distance(p, q)


def geodesic_point(space, p, q, t):
    return space.geodesic_point(p, q, t)


def systole(complex: MetricComplex) -> Q | float:
    return complex.systole(essential=True)


def _systole(cx: MetricComplex, essential: bool):
    """Fundamental cycles of every shortest-path tree; the shortest essential
    cycle is always among them because essential cycles satisfy the 3-path
    condition."""
    if essential and cx.faces:
        from .group import presentation, is_trivial, walk_word

        pres = presentation(cx)
    best: Q | float = math.inf
    for root in range(cx.num_vertices):
        dist, pred = cx.shortest_tree(root)
        tree_edges = {pe for _, pe in pred.values()}
        for e, (x, y, length) in enumerate(cx.edges):
            if e in tree_edges:
                continue
            total = dist[x] + length + dist[y]
            if total >= best:
                continue
            if essential and cx.faces:
                walk = cx.vertex_path(root, x) + cx.vertex_path(y, root)
                if is_trivial(walk_word(pres, walk), pres) is True:
                    continue
            best = total
    return best


def subdivide(cx: MetricComplex, max_edge_length) -> Subdivision:
    """Split every edge longer than ``max_edge_length`` into equal pieces."""
    max_edge_length = as_fraction(max_edge_length)
    if max_edge_length <= 0:
        raise SpaceError("max_edge_length must be positive")
    n = cx.num_vertices
    edges: list[tuple[int, int, Q]] = []
    chains = []
    interior: dict[int, list[int]] = {}
    for i, (u, v, length) in enumerate(cx.edges):
        k = max(1, math.ceil(length / max_edge_length))
        verts = [u] + list(range(n, n + k - 1)) + [v]
        n += k - 1
        interior[i] = verts
        chain = []
        for a, b in zip(verts, verts[1:]):
            chain.append(len(edges))
            edges.append((a, b, length / k))
        chains.append(tuple(chain))
    faces = []
    for face in cx.faces:
        cycle = []
        for a, b in zip(face, face[1:] + face[:1]):
            e = cx.edge_between(a, b)
            verts = interior[e]
            if verts[0] != a:
                verts = verts[::-1]
            cycle.extend(verts[:-1])
        faces.append(tuple(cycle))
    labels = None
    if cx.labels:
        labels = cx.labels + tuple(f"s{j}" for j in range(cx.num_vertices, n))
    new = MetricComplex(n, tuple(edges), tuple(faces), cx.basepoint, labels)
    return Subdivision(cx, new, tuple(chains))


# -- analytic model spaces ----------------------------------------------------

TOL = 1e-12


@dataclass(frozen=True)
class PuncturedPlane:
    """The plane minus one puncture, with the restricted Euclidean metric.

    The distance is Euclidean even when the segment meets the puncture; in
    that case the infimum over detours is not attained.
    """

    puncture: tuple[float, float] = (0.0, 0.0)
    basepoint: tuple[float, float] = (1.0, 0.0)
    model: str = "PuncturedPlane"
    convex_distance = True

    def __post_init__(self):
        self.check_point(self.basepoint)

    @property
    def base(self):
        return self.basepoint

    def check_point(self, p):
        if len(p) != 2 or not all(math.isfinite(c) for c in p):
            raise InvalidPointError(f"not a planar point: {p!r}")
        if math.hypot(p[0] - self.puncture[0], p[1] - self.puncture[1]) <= TOL:
            raise InvalidPointError("point coincides with the puncture")

    def distance(self, p, q) -> float:
        self.check_point(p)
        self.check_point(q)
        return math.hypot(p[0] - q[0], p[1] - q[1])

    def distance_bounds(self, p, q):
        d = self.distance(p, q)
        return d, d

    def path_length(self, p, q) -> float:
        return self.distance(p, q)

    def segment_hits_puncture(self, p, q) -> bool:
        px, py = p[0] - self.puncture[0], p[1] - self.puncture[1]
        dx, dy = q[0] - p[0], q[1] - p[1]
        denom = dx * dx + dy * dy
        if denom == 0:
            return False
        s = -(px * dx + py * dy) / denom
        s = min(1.0, max(0.0, s))
        return math.hypot(px + s * dx, py + s * dy) <= TOL

    def geodesic_point(self, p, q, t):
        if self.segment_hits_puncture(p, q):
            raise AmbiguousGeodesicError("segment passes through the puncture")
        t = float(t)
        return (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))

    def interpolate(self, p, q, t):
        return self.geodesic_point(p, q, t)

    def to_json(self):
        return {"model": self.model, "puncture": list(self.puncture), "basepoint": list(self.basepoint)}


@dataclass(frozen=True)
class CylinderRxS1:
    """The cylinder R x S^1; points are ``(height, arc position)``.

    The metric is the Euclidean product of the line with the circle's
    arc-length metric.
    """

    circumference: float = 2 * math.pi
    basepoint: tuple[float, float] = (0.0, 0.0)
    model: str = "CylinderRxS1"

    def __post_init__(self):
        if not self.circumference > 0:
            raise SpaceError("circumference must be positive")
        self.check_point(self.basepoint)

    @property
    def base(self):
        return self.basepoint

    def check_point(self, p):
        if len(p) != 2 or not all(math.isfinite(c) for c in p):
            raise InvalidPointError(f"not a cylinder point: {p!r}")

    def arc_delta(self, s: float, t: float) -> float:
        """Signed shortest arc displacement from ``s`` to ``t``."""
        c = self.circumference
        delta = math.fmod(t - s, c)
        if delta > c / 2:
            delta -= c
        elif delta < -c / 2:
            delta += c
        return delta

    def distance(self, p, q) -> float:
        self.check_point(p)
        self.check_point(q)
        return math.hypot(q[0] - p[0], self.arc_delta(p[1], q[1]))

    def distance_bounds(self, p, q):
        d = self.distance(p, q)
        return d, d

    def path_length(self, p, q) -> float:
        return self.distance(p, q)

    def geodesic_point(self, p, q, t):
        delta = self.arc_delta(p[1], q[1])
        if abs(abs(delta) - self.circumference / 2) <= TOL:
            raise AmbiguousGeodesicError("antipodal arc positions")
        t = float(t)
        return (p[0] + t * (q[0] - p[0]), math.fmod(p[1] + t * delta, self.circumference))

    def interpolate(self, p, q, t):
        return self.geodesic_point(p, q, t)

    def project_circle(self, p) -> float:
        return p[1]

    def to_json(self):
        return {"model": self.model, "circumference": self.circumference, "basepoint": list(self.basepoint)}


AnalyticSpace = (PuncturedPlane, CylinderRxS1)


# -- builders -----------------------------------------------------------------

def circle(circumference=1, segments: int = 3) -> MetricComplex:
    """A subdivided circle based at vertex 0."""
    circumference = as_fraction(circumference)
    edges = [(i, (i + 1) % segments, circumference / segments) for i in range(segments)]
    return MetricComplex(segments, tuple(edges), (), 0)


def wedge(pieces: Sequence[MetricComplex]) -> tuple[MetricComplex, list[list[int]]]:
    """Wedge of based complexes at their basepoints.

    Returns the wedge and, per piece, the map from piece vertices to wedge
    vertices.  The common basepoint is vertex 0; pieces appear in order.
    """
    edges = []
    faces = []
    maps = []
    n = 1
    for piece in pieces:
        vmap = []
        for v in range(piece.num_vertices):
            if v == piece.basepoint:
                vmap.append(0)
            else:
                vmap.append(n)
                n += 1
        edges.extend((vmap[u], vmap[v], length) for u, v, length in piece.edges)
        faces.extend(tuple(vmap[x] for x in f) for f in piece.faces)
        maps.append(vmap)
    return MetricComplex(n, tuple(edges), tuple(faces), 0), maps


def wedge_of_circles(circumferences: Sequence, segments: int = 3) -> MetricComplex:
    return wedge([circle(c, segments) for c in circumferences])[0]
