"""Edge-path presentations of fundamental groups and free-word arithmetic.

Words are tuples of non-zero integers: ``k`` is the k-th generator (1-based),
``-k`` its inverse.  Generators of a complex are the edges outside a
breadth-first spanning tree rooted at the basepoint.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from .rational import Q
from typing import Iterable, Sequence

from .loop import DiscreteLoop
from .space import MetricComplex, PointLocation, SpaceError

Word = tuple


class GroupError(ValueError):
    pass


class MarginViolationError(GroupError):
    pass


def reduce(word: Iterable[int]) -> Word:
    """Free reduction (single stack pass)."""
    out: list[int] = []
    for x in word:
        if x == 0:
            raise GroupError("0 is not a generator letter")
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def inverse(word: Sequence[int]) -> Word:
    return tuple(-x for x in reversed(word))


def multiply(*words: Sequence[int]) -> Word:
    out: list[int] = []
    for w in words:
        out.extend(w)
    return reduce(out)


def conjugate(word, by) -> Word:
    return multiply(by, word, inverse(by))


def commutator(a, b) -> Word:
    return multiply(a, b, inverse(a), inverse(b))


def cyclic_reduce(word: Sequence[int]) -> tuple[Word, Word]:
    """Split a reduced word as ``c u c^-1`` with ``u`` cyclically reduced.

    Returns ``(c, u)``.
    """
    w = reduce(word)
    i = 0
    while i < len(w) // 2 and w[i] == -w[len(w) - 1 - i]:
        i += 1
    return w[:i], w[i:len(w) - i]


def parse_word(text: str) -> Word:
    import json

    data = json.loads(text)
    if not isinstance(data, list) or not all(isinstance(x, int) and x != 0 for x in data):
        raise GroupError(f"a word is a JSON array of non-zero integers, got {text!r}")
    return tuple(data)


@dataclass(eq=False)
class Presentation:
    """Edge-path presentation of pi_1(complex, basepoint)."""

    complex: MetricComplex
    tree_edges: frozenset
    parent: dict
    generators: tuple[int, ...]
    relators: tuple[Word, ...]
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def basepoint(self) -> int:
        return self.complex.basepoint

    @property
    def gen_of_edge(self) -> dict[int, int]:
        if "gen" not in self._cache:
            self._cache["gen"] = {e: i + 1 for i, e in enumerate(self.generators)}
        return self._cache["gen"]

    def tree_path(self, v: int) -> list[int]:
        """Vertices from the basepoint to ``v`` in the spanning tree."""
        path = [v]
        while path[-1] != self.basepoint:
            path.append(self.parent[path[-1]])
        return path[::-1]

    def generator_walk(self, letter: int) -> list[int]:
        e = self.generators[abs(letter) - 1]
        x, y, _ = self.complex.edges[e]
        walk = self.tree_path(x) + self.tree_path(y)[::-1]
        return walk if letter > 0 else walk[::-1]

    def word_walk(self, word: Sequence[int]) -> list[int]:
        walk = [self.basepoint]
        for letter in word:
            walk.extend(self.generator_walk(letter)[1:])
        return walk

    def check_word(self, word: Sequence[int]) -> None:
        for x in word:
            if x == 0 or abs(x) > self.rank:
                raise GroupError(f"letter {x} is not a generator of a rank-{self.rank} presentation")

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "generators": [
                {"index": i + 1, "edge": e, "from": self.complex.edges[e][0], "to": self.complex.edges[e][1]}
                for i, e in enumerate(self.generators)
            ],
            "relators": [list(r) for r in self.relators],
            "spanning_tree": sorted(self.tree_edges),
            "basepoint": self.basepoint,
        }


def presentation(cx: MetricComplex) -> Presentation:
    """BFS spanning tree from the basepoint, neighbours in edge-index order."""
    if "presentation" in cx._cache:
        return cx._cache["presentation"]
    parent: dict[int, int] = {}
    tree: set[int] = set()
    seen = {cx.basepoint}
    queue = deque([cx.basepoint])
    while queue:
        x = queue.popleft()
        for y, e in cx.adjacency[x]:
            if y not in seen:
                seen.add(y)
                parent[y] = x
                tree.add(e)
                queue.append(y)
    if len(seen) != cx.num_vertices:
        raise GroupError("complex is disconnected")
    gens = tuple(e for e in range(len(cx.edges)) if e not in tree)
    pres = Presentation(cx, frozenset(tree), parent, gens, ())
    relators = []
    for face in cx.faces:
        r = walk_word(pres, list(face) + [face[0]])
        relators.append(r)
    pres.relators = tuple(relators)
    cx._cache["presentation"] = pres
    return pres


def walk_word(pres: Presentation, walk: Sequence[int]) -> Word:
    """Word of a vertex walk; tree closures telescope away."""
    gen = pres.gen_of_edge
    cx = pres.complex
    out = []
    for x, y in zip(walk, walk[1:]):
        if x == y:
            continue
        e = cx.edge_between(x, y)
        if e is None:
            raise GroupError(f"walk step ({x}, {y}) is not an edge")
        g = gen.get(e)
        if g is not None:
            out.append(g if cx.edges[e][0] == x else -g)
    return reduce(out)


# -- homomorphisms ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SimplicialMap:
    domain: MetricComplex
    codomain: MetricComplex
    vertex_map: tuple[int, ...]

    def __post_init__(self):
        vm = tuple(int(v) for v in self.vertex_map)
        object.__setattr__(self, "vertex_map", vm)
        if len(vm) != self.domain.num_vertices:
            raise GroupError("vertex map must cover every domain vertex")
        for v in vm:
            if not 0 <= v < self.codomain.num_vertices:
                raise GroupError(f"vertex map hits missing vertex {v}")
        for u, v, _ in self.domain.edges:
            a, b = vm[u], vm[v]
            if a != b and self.codomain.edge_between(a, b) is None:
                raise GroupError(f"edge ({u}, {v}) maps to non-edge ({a}, {b})")
        cod_faces = {frozenset(f) for f in self.codomain.faces if len(f) == 3}
        for face in self.domain.faces:
            if len(face) != 3:
                continue
            image = frozenset(vm[x] for x in face)
            if len(image) == 3 and image not in cod_faces:
                raise GroupError(f"triangle {face} maps to non-simplex {sorted(image)}")

    @property
    def basepoint_preserving(self) -> bool:
        return self.vertex_map[self.domain.basepoint] == self.codomain.basepoint

    def image_walk(self, walk: Sequence[int]) -> list[int]:
        return [self.vertex_map[v] for v in walk]

    def map_point(self, p: PointLocation) -> PointLocation:
        if p.is_vertex:
            return self.codomain.vertex_point(self.vertex_map[p.vertex])
        u, v, _ = self.domain.edges[p.edge]
        a, b = self.vertex_map[u], self.vertex_map[v]
        if a == b:
            return self.codomain.vertex_point(a)
        e = self.codomain.edge_between(a, b)
        off = p.offset if self.codomain.edges[e][0] == a else 1 - p.offset
        return self.codomain.edge_point(e, off)

    def compose(self, after: "SimplicialMap") -> "SimplicialMap":
        """``after`` applied to the image of this map."""
        return SimplicialMap(self.domain, after.codomain, tuple(after.vertex_map[v] for v in self.vertex_map))

    @classmethod
    def identity(cls, cx: MetricComplex) -> "SimplicialMap":
        return cls(cx, cx, tuple(range(cx.num_vertices)))


@dataclass(frozen=True, eq=False)
class SubdivisionMap:
    """The identity of a space, from a complex to its subdivision."""

    subdivision: object

    @property
    def domain(self):
        return self.subdivision.original

    @property
    def codomain(self):
        return self.subdivision.complex

    def image_walk(self, walk: Sequence[int]) -> list[int]:
        out = [walk[0]]
        for x, y in zip(walk, walk[1:]):
            if x == y:
                continue
            e = self.domain.edge_between(x, y)
            forward = self.domain.edges[e][0] == x
            out.extend(self.subdivision.vertex_walk(e, forward)[1:])
        return out


@dataclass(frozen=True, eq=False)
class Homomorphism:
    domain: Presentation
    codomain: Presentation
    images: tuple[Word, ...]
    obligations: tuple[Word, ...] = ()

    def __call__(self, word: Sequence[int]) -> Word:
        out = []
        for x in word:
            img = self.images[abs(x) - 1]
            out.extend(img if x > 0 else inverse(img))
        return reduce(out)

    def compose(self, after: "Homomorphism") -> "Homomorphism":
        """``after`` applied after this homomorphism."""
        return Homomorphism(self.domain, after.codomain, tuple(after(img) for img in self.images))

    def kernel_contains(self, word) -> bool | None:
        return is_trivial(self(word), self.codomain)


def induced_hom(f, dom: Presentation, cod: Presentation) -> Homomorphism:
    """Homomorphism induced by a basepoint-preserving map that sends edge
    paths to edge paths (simplicial maps, subdivisions)."""
    if f.domain is not dom.complex or f.codomain is not cod.complex:
        raise GroupError("map does not match the presentations' complexes")
    if f.image_walk([dom.basepoint])[0] != cod.basepoint:
        raise GroupError("map does not preserve the basepoint")
    images = tuple(walk_word(cod, f.image_walk(dom.generator_walk(g))) for g in range(1, dom.rank + 1))
    hom = Homomorphism(dom, cod, images)
    pending = []
    for r in dom.relators:
        verdict = is_trivial(hom(r), cod)
        if verdict is False:
            raise GroupError(f"relator {r} does not map to the identity")
        if verdict is None:
            pending.append(r)
    return Homomorphism(dom, cod, images, tuple(pending))


# -- triviality ---------------------------------------------------------------

@dataclass(frozen=True)
class Simplified:
    """Result of Tietze elimination: each original generator as a word in
    the surviving generators, plus leftover relators (empty means free)."""

    substitution: tuple[Word, ...]
    relators: tuple[Word, ...]

    @property
    def free(self) -> bool:
        return not self.relators

    def rewrite(self, word: Sequence[int]) -> Word:
        out = []
        for x in word:
            img = self.substitution[abs(x) - 1]
            out.extend(img if x > 0 else inverse(img))
        return reduce(out)


def _cyclic(word: Word) -> Word:
    return cyclic_reduce(word)[1]


def simplify(pres: Presentation) -> Simplified:
    """Eliminate generators that occur exactly once in some relator."""
    if "simplified" in pres._cache:
        return pres._cache["simplified"]
    subst: list[Word] = [(g,) for g in range(1, pres.rank + 1)]
    relators = [r for r in (_cyclic(r) for r in pres.relators) if r]
    progress = True
    while relators and progress:
        progress = False
        relators.sort(key=len)
        for idx, r in enumerate(relators):
            counts: dict[int, int] = {}
            for x in r:
                counts[abs(x)] = counts.get(abs(x), 0) + 1
            once = [g for g, c in counts.items() if c == 1]
            if not once:
                continue
            g = min(once)
            pos = next(i for i, x in enumerate(r) if abs(x) == g)
            before, after = r[:pos], r[pos + 1:]
            # r = A g^e B = 1  =>  g^e = A^-1 B^-1
            value = multiply(inverse(before), inverse(after))
            if r[pos] < 0:
                value = inverse(value)

            def sub(word, g=g, value=value):
                out = []
                for x in word:
                    if abs(x) == g:
                        out.extend(value if x > 0 else inverse(value))
                    else:
                        out.append(x)
                return reduce(out)

            subst = [sub(w) for w in subst]
            relators = [w for w in (_cyclic(sub(w)) for j, w in enumerate(relators) if j != idx) if w]
            progress = True
            break
    result = Simplified(tuple(subst), tuple(relators))
    pres._cache["simplified"] = result
    return result


def is_trivial(word: Sequence[int], pres: Presentation) -> bool | None:
    """True/False when decided; None (unknown) if relators survive Tietze
    elimination and the rewritten word is not freely trivial."""
    w = reduce(word)
    if not w:
        return True
    if not pres.relators:
        return False
    s = simplify(pres)
    if not s.rewrite(w):
        return True
    return False if s.free else None


def equal_in(u, v, pres: Presentation) -> bool | None:
    return is_trivial(multiply(u, inverse(v)), pres)


# -- loops and words ----------------------------------------------------------

def _anchor(cx: MetricComplex, p: PointLocation) -> int:
    return p.vertex if p.is_vertex else cx.edges[p.edge][0]


def loop_to_word(cx: MetricComplex, loop: DiscreteLoop) -> Word:
    """Edge-path word of a sampled loop on the 1-skeleton.

    Each sample is tied to an anchor vertex of its carrier; consecutive
    samples are joined by their geodesic, which is rewritten as a vertex walk
    between anchors.  Requires mesh below half the systole, where the
    geodesic class is forced.
    """
    if loop.space is not cx:
        raise GroupError("loop does not live on this complex")
    if loop.base != cx.base:
        raise GroupError("loop is not based at the complex basepoint")
    sys = cx.systole()
    if loop.mesh >= sys / 2:
        raise MarginViolationError(f"mesh {loop.mesh} is not below systole/2 = {sys / 2}")
    pres = presentation(cx)
    walk = [cx.basepoint]
    for p, q in zip(loop.samples, loop.samples[1:]):
        if p == q:
            continue
        ap, aq = _anchor(cx, p), _anchor(cx, q)
        _, via = cx.route(p, q)
        if via is None:
            continue
        a, b = via
        piece = [ap]
        if a != ap:
            piece.append(a)
        piece.extend(cx.vertex_path(a, b)[1:])
        if aq != b:
            piece.append(aq)
        walk.extend(piece[1:])
    return walk_word(pres, walk)


def _next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def word_to_loop(cx: MetricComplex, word: Sequence[int], samples_per_unit_length: int = 64) -> DiscreteLoop:
    """Constant-speed loop along the edge walk of ``word``.

    The number of segments is a power of two so that grids of different loops
    nest.
    """
    pres = presentation(cx)
    pres.check_word(word)
    walk = pres.word_walk(word)
    edges = []
    for x, y in zip(walk, walk[1:]):
        e = cx.edge_between(x, y)
        edges.append((e, cx.edges[e][0] == x, cx.edges[e][2]))
    total = sum((length for _, _, length in edges), Q(0))
    if total == 0:
        return DiscreteLoop.constant(cx, cx.base, 1)
    n = _next_pow2(max(1, math.ceil(total * samples_per_unit_length)))
    samples = [cx.base]
    k = 0
    start = Q(0)
    for i in range(1, n):
        s = total * Q(i, n)
        while start + edges[k][2] < s:
            start += edges[k][2]
            k += 1
        e, forward, length = edges[k]
        frac = (s - start) / length
        samples.append(cx.edge_point(e, frac if forward else 1 - frac))
    samples.append(cx.base)
    return DiscreteLoop.uniform(cx, samples)


def path_to_vertex(cx: MetricComplex, target: int, samples_per_unit_length: int = 64, prefix: Sequence[int] = ()):
    """Sampled path from the basepoint: the loop of ``prefix`` followed by the
    tree path to ``target``."""
    from .loop import DiscretePath

    pres = presentation(cx)
    walk = pres.word_walk(prefix) + pres.tree_path(target)[1:]
    if len(walk) == 1:
        return DiscretePath(cx, (cx.base, cx.base), (Q(0), Q(1)))
    pts = []
    lengths = []
    for x, y in zip(walk, walk[1:]):
        e = cx.edge_between(x, y)
        lengths.append(cx.edges[e][2])
    total = sum(lengths, Q(0))
    n = _next_pow2(max(1, math.ceil(total * samples_per_unit_length)))
    pts = [cx.vertex_point(walk[0])]
    k, start = 0, Q(0)
    for i in range(1, n):
        s = total * Q(i, n)
        while start + lengths[k] < s:
            start += lengths[k]
            k += 1
        x, y = walk[k], walk[k + 1]
        e = cx.edge_between(x, y)
        frac = (s - start) / lengths[k]
        pts.append(cx.edge_point(e, frac if cx.edges[e][0] == x else 1 - frac))
    pts.append(cx.vertex_point(walk[-1]))
    return DiscretePath.uniform(cx, pts)
