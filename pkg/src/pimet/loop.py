"""Discretized paths and based loops with the uniform metric.

A loop is the piecewise-geodesic interpolant of its samples over an explicit
rational time grid.  The uniform distance between two such interpolants is
returned as a certified interval: the lower end is the largest sampled
distance, the upper end bounds every time between samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from .rational import Q
from typing import Any, Callable, Sequence


class LoopError(ValueError):
    pass


def _same_point(space, p, q) -> bool:
    if isinstance(p, tuple) and p and isinstance(p[0], float):
        return space.distance(p, q) <= 1e-12
    return p == q


@dataclass(frozen=True, eq=False)
class DiscretePath:
    space: Any
    samples: tuple
    times: tuple[Q, ...]
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        samples = tuple(self.samples)
        times = tuple(Q(t) for t in self.times)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "times", times)
        if len(samples) < 2:
            raise LoopError("a discrete path needs at least two samples")
        if len(times) != len(samples):
            raise LoopError("one time per sample is required")
        if times[0] != 0 or times[-1] != 1:
            raise LoopError("time grid must start at 0 and end at 1")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise LoopError("time grid must be strictly increasing")

    @classmethod
    def uniform(cls, space, samples: Sequence):
        n = len(samples) - 1
        return cls(space, tuple(samples), tuple(Q(i, n) for i in range(n + 1)))

    @property
    def n(self) -> int:
        return len(self.samples) - 1

    @property
    def start(self):
        return self.samples[0]

    @property
    def end(self):
        return self.samples[-1]

    @property
    def steps(self) -> tuple:
        if "steps" not in self._cache:
            bulk = getattr(self.space, "lengths_along", None)
            if bulk is not None:
                self._cache["steps"] = tuple(bulk(self.samples))
            else:
                pl = self.space.path_length
                self._cache["steps"] = tuple(pl(p, q) for p, q in zip(self.samples, self.samples[1:]))
        return self._cache["steps"]

    @property
    def mesh(self):
        """Largest interpolation step; bounds the distance between neighbours."""
        return max(self.steps)

    def at(self, t):
        """Point of the interpolant at time ``t``."""
        t = Q(t)
        times = self.times
        lo, hi = 0, len(times) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if times[mid] <= t:
                lo = mid
            else:
                hi = mid
        if times[lo] == t:
            return self.samples[lo]
        if times[hi] == t:
            return self.samples[hi]
        lam = (t - times[lo]) / (times[hi] - times[lo])
        return self.space.interpolate(self.samples[lo], self.samples[hi], lam)

    def refined(self, times: Sequence[Q]):
        """The same interpolant sampled on a grid containing this one."""
        own = set(self.times)
        if all(t in own for t in times) and len(times) == len(self.times):
            return self
        missing = set(self.times) - set(times)
        if missing:
            raise LoopError("refinement must contain the original grid")
        samples = []
        i = 0
        for t in times:
            while self.times[i] < t and self.times[i + 1] <= t:
                i += 1
            if self.times[i] == t:
                samples.append(self.samples[i])
            else:
                lam = (t - self.times[i]) / (self.times[i + 1] - self.times[i])
                samples.append(self.space.interpolate(self.samples[i], self.samples[i + 1], lam))
        return type(self)(self.space, tuple(samples), tuple(times))

    def reversed(self):
        return type(self)(self.space, self.samples[::-1], tuple(1 - t for t in self.times[::-1]))

    def map(self, func: Callable, space=None):
        """Pointwise image under ``func``, sharing the time grid."""
        return type(self)(space if space is not None else self.space,
                          tuple(func(p) for p in self.samples), self.times)

    def to_json(self, point_json: Callable | None = None):
        enc = point_json or (lambda p: p.to_json() if hasattr(p, "to_json") else list(p))
        return {
            "samples": [enc(p) for p in self.samples],
            "times": [f"{t.numerator}/{t.denominator}" for t in self.times],
        }


class DiscreteLoop(DiscretePath):
    """A path whose first and last samples coincide (its basepoint)."""

    def __post_init__(self):
        super().__post_init__()
        if not _same_point(self.space, self.samples[0], self.samples[-1]):
            raise LoopError("loop is not closed at its basepoint")

    @property
    def base(self):
        return self.samples[0]

    @classmethod
    def constant(cls, space, point=None, times: Sequence[Q] | int = 1):
        point = space.base if point is None else point
        if isinstance(times, int):
            times = [Q(i, times) for i in range(times + 1)]
        return cls(space, tuple(point for _ in times), tuple(times))


@dataclass(frozen=True)
class MuInterval:
    """Certified enclosure of the uniform distance of two interpolants."""

    lower: Any
    upper: Any
    grid_max: Any
    size: int

    @property
    def slack(self):
        return self.upper - self.grid_max

    def contains(self, value, tol=0) -> bool:
        return self.lower - tol <= value <= self.upper + tol

    def key(self):
        return (self.lower, self.upper)


def align(alpha: DiscretePath, beta: DiscretePath):
    if alpha.times == beta.times:
        return alpha, beta
    grid = tuple(sorted(set(alpha.times) | set(beta.times)))
    return alpha.refined(grid), beta.refined(grid)


def uniform_distance(alpha: DiscretePath, beta: DiscretePath) -> MuInterval:
    """Enclosure of sup_t d(alpha(t), beta(t)).

    Between grid times the interpolants move along paths of length at most
    the step lengths, so on a segment the distance is at most the average of
    its endpoint values plus half the combined steps.  Segments where both
    interpolants follow the same geodesic contribute exactly zero.
    """
    if alpha.space is not beta.space and alpha.space != beta.space:
        raise LoopError("loops live on different spaces")
    a, b = align(alpha, beta)
    space = a.space
    bulk = getattr(space, "bounds_many", None)
    if bulk is not None:
        raw = bulk(a.samples, b.samples)
    else:
        raw = [None if (p is q or p == q) else space.distance_bounds(p, q)
               for p, q in zip(a.samples, b.samples)]
    zero = None
    bounds = []
    for item in raw:
        if item is None:
            if zero is None:
                zero = space.distance_bounds(a.samples[0], a.samples[0])
            item = zero
        bounds.append(item)
    lower = max(lo for lo, _ in bounds)
    grid_max = max(hi for _, hi in bounds)
    upper = grid_max
    if getattr(space, "convex_distance", False):
        # linear interpolants in a normed plane: the distance is convex in t
        return MuInterval(lower, upper, grid_max, a.n)
    pl = space.path_length
    sa, sb = a._cache.get("steps"), b._cache.get("steps")
    xs, ys = a.samples, b.samples
    for i in range(a.n):
        if bounds[i] is zero and bounds[i + 1] is zero:
            continue
        h0, h1 = bounds[i][1], bounds[i + 1][1]
        step_a = sa[i] if sa is not None else pl(xs[i], xs[i + 1])
        step_b = sb[i] if sb is not None else pl(ys[i], ys[i + 1])
        seg = (h0 + h1 + step_a + step_b) / 2
        if seg > upper:
            upper = seg
    return MuInterval(lower, upper, grid_max, a.n)


def concatenate(alpha: DiscretePath, beta: DiscretePath):
    """``alpha`` on the first half of the time interval, ``beta`` on the second."""
    if alpha.space is not beta.space and alpha.space != beta.space:
        raise LoopError("paths live on different spaces")
    if not _same_point(alpha.space, alpha.end, beta.start):
        raise LoopError("endpoint mismatch in concatenation")
    half = Q(1, 2)
    times = tuple(t * half for t in alpha.times) + tuple(half + t * half for t in beta.times[1:])
    samples = alpha.samples + beta.samples[1:]
    cls = DiscreteLoop if _same_point(alpha.space, samples[0], samples[-1]) else DiscretePath
    return cls(alpha.space, samples, times)


def reverse(alpha: DiscretePath):
    return alpha.reversed()


def path_conjugate(gamma: DiscretePath, alpha: DiscreteLoop) -> DiscreteLoop:
    """gamma, then alpha, then gamma backwards, on the fixed time split
    (1/4, 1/2, 1/4)."""
    if not _same_point(gamma.space, gamma.end, alpha.base):
        raise LoopError("path does not end at the loop's basepoint")
    q, h = Q(1, 4), Q(1, 2)
    back = gamma.reversed()
    times = (tuple(t * q for t in gamma.times)
             + tuple(q + t * h for t in alpha.times[1:])
             + tuple(3 * q + t * q for t in back.times[1:]))
    samples = gamma.samples + alpha.samples[1:] + back.samples[1:]
    return DiscreteLoop(gamma.space, samples, times)


def distance_matrix(loops: Sequence[DiscretePath]) -> list[list[MuInterval]]:
    return [[uniform_distance(a, b) for b in loops] for a in loops]
