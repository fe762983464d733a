"""Finite polyhedral models used by the scenarios."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .group import Word, presentation, walk_word
from .rational import Q
from .space import MetricComplex, as_fraction


@dataclass(eq=False)
class CylinderModel:
    """Truncated sine-curve cylinder with an attached arc.

    ``positions[v]`` is ``(x, y, theta)`` in the ambient product of the plane
    with the circle; ``theta`` is ``None`` for the collapsed circle.
    """

    complex: MetricComplex
    positions: tuple
    circumference: Q
    arc_length: Q
    cylinder_vertices: tuple[int, ...]
    generator: Word
    truncation: int

    def ambient(self, u: int, v: int) -> float:
        x1, y1, t1 = self.positions[u]
        x2, y2, t2 = self.positions[v]
        circ = 0.0
        if t1 is not None and t2 is not None:
            c = float(self.circumference)
            d = abs(t1 - t2) % c
            circ = min(d, c - d)
        return math.hypot(math.hypot(x1 - x2, y1 - y2), circ)

    def cylinder_subcomplex(self) -> MetricComplex:
        keep = self.cylinder_vertices
        index = {v: i for i, v in enumerate(keep)}
        cx = self.complex
        edges = tuple((index[u], index[v], length) for u, v, length in cx.edges if u in index and v in index)
        faces = tuple(tuple(index[x] for x in f) for f in cx.faces if all(x in index for x in f))
        return MetricComplex(len(keep), edges, faces, index[cx.basepoint])


def _seg(p, q) -> Q:
    return as_fraction(math.hypot(q[0] - p[0], q[1] - p[1]))


def cylinder_model(m: int, circumference=1, segments: int = 6, height_pieces: int = 4,
                   arc_piece: float = 0.5) -> CylinderModel:
    """Model with the sine curve truncated after ``m`` half-oscillations
    past its first extremum: curve vertices at x = 2/(k pi), k = 2..2m+2."""
    if m < 1:
        raise ValueError("truncation must be at least 1")
    c = as_fraction(circumference)
    ring = c / segments
    thetas = [float(c) * i / segments for i in range(segments)]
    positions: list = []
    edges: list = []
    faces: list = []

    def add(pos) -> int:
        positions.append(pos)
        return len(positions) - 1

    # cylinder A_0 x S^1, top ring first so the basepoint is vertex 0
    cyl = [[add((0.0, 1 - 2 * j / height_pieces, t)) for t in thetas] for j in range(height_pieces + 1)]
    vert = Q(2, height_pieces)
    for j, row in enumerate(cyl):
        for i in range(segments):
            edges.append((row[i], row[(i + 1) % segments], ring))
            if j + 1 < len(cyl):
                edges.append((row[i], cyl[j + 1][i], vert))
                faces.append((row[i], row[(i + 1) % segments], cyl[j + 1][(i + 1) % segments], cyl[j + 1][i]))
    cylinder_vertices = tuple(v for row in cyl for v in row)

    # truncated sine curve times the circle, its first circle collapsed
    K = 2 * m + 2
    pts = {k: (2 / (k * math.pi), math.sin(k * math.pi / 2)) for k in range(2, K + 1)}
    cone = add((pts[2][0], pts[2][1], None))
    rings = {}
    for k in range(3, K + 1):
        rings[k] = [add((pts[k][0], pts[k][1], t)) for t in thetas]
        for i in range(segments):
            edges.append((rings[k][i], rings[k][(i + 1) % segments], ring))
    first = _seg(pts[2], pts[3])
    for i in range(segments):
        edges.append((cone, rings[3][i], first))
        faces.append((cone, rings[3][i], rings[3][(i + 1) % segments]))
    for k in range(3, K):
        radial = _seg(pts[k], pts[k + 1])
        for i in range(segments):
            edges.append((rings[k][i], rings[k + 1][i], radial))
            faces.append((rings[k][i], rings[k][(i + 1) % segments],
                          rings[k + 1][(i + 1) % segments], rings[k + 1][i]))

    # the arc from the basepoint to the collapsed circle, in the theta_0 slice
    corners = [(0.0, 1.0), (0.0, 2.0), (1 / math.pi, 2.0), pts[2]]
    arc_pts = [corners[0]]
    for p, q in zip(corners, corners[1:]):
        n = max(1, math.ceil(math.hypot(q[0] - p[0], q[1] - p[1]) / arc_piece))
        arc_pts.extend((p[0] + (q[0] - p[0]) * s / n, p[1] + (q[1] - p[1]) * s / n) for s in range(1, n + 1))
    prev = cyl[0][0]
    arc_length = Q(0)
    for idx, p in enumerate(arc_pts[1:], start=1):
        v = cone if idx == len(arc_pts) - 1 else add((p[0], p[1], thetas[0]))
        length = _seg(arc_pts[idx - 1], p)
        edges.append((prev, v, length))
        arc_length += length
        prev = v

    cx = MetricComplex(len(positions), tuple(edges), tuple(faces), 0)
    walk = list(cyl[0]) + [cyl[0][0]]
    gen = walk_word(presentation(cx), walk)
    return CylinderModel(cx, tuple(positions), c, arc_length, cylinder_vertices, gen, m)
