"""Exact model of SL(2,Z) acting on the Farey graph.

Slopes are the vertices of the Farey graph (simple closed curves on the
torus); two slopes are adjacent when their intersection number is 1.
Distances are computed exactly.  ``farey_distance`` runs a compressed
shortest-path recursion over the ladder of Farey triangles crossed by the
hyperbolic geodesic between the two slopes; ``farey_geodesic`` materialises
the same ladder and runs a plain BFS on it, and ``bfs_oracle`` searches a
denominator-bounded box of the whole graph without using any of that
structure.
"""

from __future__ import annotations

import math
import threading
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from hyplab import _pykernels, kernels

__all__ = [
    "Slope",
    "GroupElement",
    "FareyGeodesic",
    "INFINITY",
    "IDENTITY",
    "L",
    "R",
    "reduce",
    "parse_slope",
    "intersection_number",
    "mobius",
    "cutting_sequence",
    "farey_distance",
    "farey_geodesic",
    "bfs_oracle",
    "bfs_oracle_distances",
    "WordMetric",
    "word_length",
    "relative_length",
    "displacement",
    "BASEPOINT",
]


@dataclass(frozen=True, slots=True)
class Slope:
    """A vertex of the Farey graph, ``p/q`` in lowest terms with ``q >= 0``."""

    p: int
    q: int

    def __post_init__(self):
        if self.q < 0 or math.gcd(self.p, self.q) != 1 or (self.q == 0 and self.p != 1):
            raise ValueError(f"non-canonical slope {self.p}/{self.q}; use reduce()")

    def __str__(self):
        return f"{self.p}/{self.q}"

    @property
    def is_infinity(self) -> bool:
        return self.q == 0


def _canon(p: int, q: int) -> tuple[int, int]:
    g = math.gcd(p, q)
    if g == 0:
        raise ValueError("(0, 0) is not a slope")
    p //= g
    q //= g
    if q < 0 or (q == 0 and p < 0):
        p, q = -p, -q
    return p, q


def reduce(p: int, q: int) -> Slope:
    """Canonical slope for the projective class of ``(p, q)``."""
    return Slope(*_canon(int(p), int(q)))


def parse_slope(text: str) -> Slope:
    text = text.strip()
    if text in ("inf", "oo", "∞"):
        return INFINITY
    num, _, den = text.partition("/")
    return reduce(int(num), int(den) if den else 1)


INFINITY = Slope(1, 0)
BASEPOINT = INFINITY


class GroupElement:
    """An element of SL(2,Z), matrix ``[[a, b], [c, d]]`` with ``ad - bc = 1``."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a: int, b: int, c: int, d: int):
        a, b, c, d = int(a), int(b), int(c), int(d)
        if a * d - b * c != 1:
            raise ValueError(f"determinant of [[{a},{b}],[{c},{d}]] is not 1")
        self.a, self.b, self.c, self.d = a, b, c, d

    @classmethod
    def _unchecked(cls, a, b, c, d) -> "GroupElement":
        g = object.__new__(cls)
        g.a, g.b, g.c, g.d = a, b, c, d
        return g

    @classmethod
    def parse(cls, text: str) -> "GroupElement":
        digits = text.replace("[", " ").replace("]", " ").replace(",", " ").split()
        if len(digits) != 4:
            raise ValueError(f"cannot parse group element from {text!r}")
        return cls(*(int(x) for x in digits))

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        a, b, c, d = self.a, self.b, self.c, self.d
        e, f, g, h = other.a, other.b, other.c, other.d
        return GroupElement._unchecked(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def inverse(self) -> "GroupElement":
        return GroupElement._unchecked(self.d, -self.b, -self.c, self.a)

    def __pow__(self, k: int) -> "GroupElement":
        base = self if k >= 0 else self.inverse()
        k = abs(k)
        result = IDENTITY
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    @property
    def trace(self) -> int:
        return self.a + self.d

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    def is_identity(self) -> bool:
        return self.a == 1 and self.d == 1 and self.b == 0 and self.c == 0

    def __eq__(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        return self.as_tuple() == other.as_tuple()

    def __hash__(self):
        return hash(self.as_tuple())

    def __str__(self):
        return f"[[{self.a},{self.b}],[{self.c},{self.d}]]"

    def __repr__(self):
        return f"GroupElement({self.a}, {self.b}, {self.c}, {self.d})"


IDENTITY = GroupElement(1, 0, 0, 1)
L = GroupElement(1, 0, 1, 1)
R = GroupElement(1, 1, 0, 1)


@dataclass(frozen=True)
class FareyGeodesic:
    vertices: tuple[Slope, ...]

    @property
    def length(self) -> int:
        return len(self.vertices) - 1


def intersection_number(s: Slope, t: Slope) -> int:
    return abs(s.p * t.q - s.q * t.p)


def mobius(g: GroupElement, s: Slope) -> Slope:
    return Slope(*_canon(g.a * s.p + g.b * s.q, g.c * s.p + g.d * s.q))


def _to_infinity(s: Slope) -> GroupElement:
    """An element sending ``s`` to 1/0."""
    if s.q == 0:
        return IDENTITY
    x, y = _ext_gcd(s.p, s.q)  # p*x + q*y == 1
    return GroupElement._unchecked(x, y, -s.q, s.p)


def _ext_gcd(a: int, b: int) -> tuple[int, int]:
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r:
        k = old_r // r
        old_r, r = r, old_r - k * r
        old_x, x = x, old_x - k * x
        old_y, y = y, old_y - k * y
    if old_r < 0:
        old_x, old_y = -old_x, -old_y
    return old_x, old_y


def _displacement_from_infinity(p: int, q: int) -> int:
    """Farey distance from 1/0 to the canonical slope ``p/q``.

    Walks the Euclidean algorithm on the intersection numbers of the target
    with the two ends of the current crossed edge; each quotient is one fan
    of the ladder and the distances along a fan are ``min(d_pivot + 1,
    d_start + j)``.
    """
    if q == 0:
        return 0
    if q == 1:
        return 1
    limit = kernels.LADDER_LIMIT
    if limit is not None and -limit < p < limit and q < limit:
        return kernels.farey_ladder(p, q)
    return _pykernels.farey_ladder(p, q)


def farey_distance(s: Slope, t: Slope) -> int:
    if s == t:
        return 0
    g = _to_infinity(s)
    p, q = _canon(g.a * t.p + g.b * t.q, g.c * t.p + g.d * t.q)
    return _displacement_from_infinity(p, q)


def displacement(p: int, q: int) -> int:
    """Farey distance from 1/0 to the slope of the integer vector (p, q)."""
    return _displacement_from_infinity(*_canon(p, q))


def relative_length(g: GroupElement) -> int:
    """Displacement of the basepoint 1/0 under ``g`` (farey-displacement metric)."""
    return displacement(g.a, g.c)


def _ladder_vertices(p: int, q: int, max_vertices: int):
    """Vertices and edges of the Farey triangles crossed going from 1/0 to p/q."""
    inf = (1, 0)
    if q == 1:
        return [inf, (p, q)], [(0, 1)]
    a0 = p // q
    verts = [inf, (a0, 1), (a0 + 1, 1)]
    edges = [(0, 1), (0, 2), (1, 2)]
    li, ri = 1, 2
    while True:
        (lp, lq), (rp, rq) = verts[li], verts[ri]
        m = (lp + rp, lq + rq)
        verts.append(m)
        mi = len(verts) - 1
        edges += [(li, mi), (ri, mi)]
        if len(verts) > max_vertices:
            raise ValueError(f"cutting sequence exceeds {max_vertices} vertices")
        # sign of p/q - m
        side = p * m[1] - q * m[0]
        if side == 0:
            return verts, edges
        if side < 0:
            ri = mi
        else:
            li = mi


def cutting_sequence(s: Slope, t: Slope, max_vertices: int = 100_000) -> list[Slope]:
    """Vertices of every Farey triangle crossed by the geodesic from s to t.

    Ordered by first appearance along the geodesic; starts with ``s`` and
    ends with ``t``.
    """
    return list(_cutting_ladder(s, t, max_vertices)[0])


def _cutting_ladder(s: Slope, t: Slope, max_vertices: int):
    if s == t:
        raise ValueError("cutting sequence needs two distinct slopes")
    g = _to_infinity(s)
    p, q = _canon(g.a * t.p + g.b * t.q, g.c * t.p + g.d * t.q)
    verts, edges = _ladder_vertices(p, q, max_vertices)
    h = g.inverse()
    return [mobius(h, Slope(*v)) for v in verts], edges


def farey_geodesic(s: Slope, t: Slope, max_vertices: int = 100_000) -> FareyGeodesic:
    """A shortest Farey path, found by BFS inside the cutting-sequence ladder."""
    if s == t:
        return FareyGeodesic((s,))
    verts, edges = _cutting_ladder(s, t, max_vertices)
    adj: list[list[int]] = [[] for _ in verts]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    target = len(verts) - 1
    prev = {0: -1}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        if u == target:
            break
        for v in sorted(adj[u]):
            if v not in prev:
                prev[v] = u
                queue.append(v)
    path = []
    u = target
    while u != -1:
        path.append(verts[u])
        u = prev[u]
    return FareyGeodesic(tuple(reversed(path)))


def bfs_oracle(s: Slope, t: Slope, denom_bound: int) -> int | None:
    """BFS distance inside the box ``|p| <= bound, 0 <= q <= bound``; None if unreachable."""
    return bfs_oracle_distances(s, [t], denom_bound)[0]


def bfs_oracle_distances(s: Slope, targets: Iterable[Slope], denom_bound: int) -> list[int | None]:
    n = int(denom_bound)
    targets = list(targets)
    for v in [s, *targets]:
        if abs(v.p) > n or v.q > n:
            raise ValueError(f"slope {v} lies outside the box of bound {n}")
    dist = _box_bfs(s.p, s.q, n)
    out = []
    for t in targets:
        d = int(dist[(t.p + n) * (n + 1) + t.q])
        out.append(None if d < 0 else d)
    return out


@lru_cache(maxsize=4)
def _box_bfs(p: int, q: int, n: int):
    return kernels.farey_box_bfs(p, q, n)


class WordMetric:
    """Word length in SL(2,Z) for a finite generating set, by meet-in-the-middle BFS.

    The generating set is closed under inverses before use.  Spheres around the
    identity are grown lazily up to ``radius`` and cached, so lengths up to
    ``2 * radius`` are exact.
    """

    def __init__(self, gens: Sequence[GroupElement], radius: int = 8):
        closed = []
        for g in gens:
            for h in (g, g.inverse()):
                if not h.is_identity() and h not in closed:
                    closed.append(h)
        self.gens = tuple(closed)
        self.radius = radius
        self._ball = {IDENTITY: 0}
        self._sphere = [IDENTITY]
        self._grown = 0
        self._lock = threading.Lock()

    def _grow(self, r: int):
        while self._grown < r:
            nxt = []
            for x in self._sphere:
                for s in self.gens:
                    y = x * s
                    if y not in self._ball:
                        self._ball[y] = self._grown + 1
                        nxt.append(y)
            self._sphere = nxt
            self._grown += 1

    def length(self, g: GroupElement) -> int:
        with self._lock:
            self._grow(self.radius)
        if g in self._ball:
            return self._ball[g]
        # Elements of the sphere of radius j around g that miss the ball are
        # more than `radius` from the identity, so a candidate through layer j
        # is optimal once it is at most radius + j + 1.
        seen = {g}
        layer = [g]
        best = None
        for j in range(1, self.radius + 1):
            nxt = []
            for y in layer:
                for s in self.gens:
                    z = y * s
                    if z not in seen:
                        seen.add(z)
                        nxt.append(z)
            hits = [self._ball[z] for z in nxt if z in self._ball]
            if hits:
                cand = min(hits) + j
                best = cand if best is None else min(best, cand)
                if best <= self.radius + j + 1:
                    return best
            layer = nxt
        raise ValueError(f"{g} lies beyond search radius {2 * self.radius}")


_metric_cache: dict[tuple, WordMetric] = {}
_metric_lock = threading.Lock()


def word_length(g: GroupElement, gens: Sequence[GroupElement], radius: int = 8) -> int:
    key = (tuple(h.as_tuple() for h in gens), radius)
    with _metric_lock:
        metric = _metric_cache.get(key)
        if metric is None:
            metric = _metric_cache[key] = WordMetric(gens, radius)
    return metric.length(g)
