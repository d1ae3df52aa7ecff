"""Coarse geometry on finite unit-length graphs.

A :class:`FiniteSpace` carries the distance table, canonical geodesics
(breadth-first predecessor with smallest-index tie-break) and geodesic
intervals ``I(x, y) = {v : d(x, v) + d(v, y) = d(x, y)}``. Everything heavier
than the distance table is built on first use and then shared read-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator

import networkx as nx
import numpy as np

from hyplab import kernels

Number = int | float | Fraction


class FiniteSpace:
    """Connected graph with unit edges; vertex 0 is the basepoint."""

    def __init__(self, n: int, edges: Iterable[tuple[int, int]], space_id: str = ""):
        if n < 1:
            raise ValueError("a space needs at least one vertex")
        pairs = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            if u != v:
                pairs.add((min(u, v), max(u, v)))
        self.n = n
        self.edges = frozenset(pairs)
        self.space_id = space_id
        nbrs: list[list[int]] = [[] for _ in range(n)]
        for u, v in sorted(pairs):
            nbrs[u].append(v)
            nbrs[v].append(u)
        counts = np.array([len(a) for a in nbrs], dtype=np.int32)
        self.indptr = np.zeros(n + 1, dtype=np.int32)
        np.cumsum(counts, out=self.indptr[1:])
        self.indices = np.array([v for a in nbrs for v in sorted(a)], dtype=np.int32)
        D = kernels.bfs_all_pairs(n, self.indptr, self.indices)
        if (D < 0).any():
            raise ValueError(f"space {space_id or '?'} is not connected")
        D.setflags(write=False)
        self.D = D

    def __repr__(self) -> str:
        return f"FiniteSpace({self.space_id or '?'}, n={self.n}, m={len(self.edges)})"

    # -- loaders -----------------------------------------------------------
    @classmethod
    def from_edge_list(cls, text: str, space_id: str = "") -> "FiniteSpace":
        """Parse ``"n m"`` followed by ``m`` lines ``"u v"`` (0-based)."""
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows or len(rows[0]) != 2:
            raise ValueError("edge list must start with a line 'n m'")
        n, m = int(rows[0][0]), int(rows[0][1])
        body = rows[1:]
        if len(body) != m:
            raise ValueError(f"header promises {m} edges, found {len(body)}")
        return cls(n, [(int(a), int(b)) for a, b in body], space_id)

    @classmethod
    def load(cls, path: str | Path) -> "FiniteSpace":
        path = Path(path)
        return cls.from_edge_list(path.read_text(), space_id=path.stem)

    def to_edge_list(self) -> str:
        lines = [f"{self.n} {len(self.edges)}"] + [f"{u} {v}" for u, v in sorted(self.edges)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_networkx(cls, g: nx.Graph, space_id: str = "") -> "FiniteSpace":
        g = nx.convert_node_labels_to_integers(g, ordering="sorted")
        return cls(g.number_of_nodes(), g.edges(), space_id)

    def relabel(self, perm: np.ndarray, space_id: str | None = None) -> "FiniteSpace":
        """Isomorphic copy with vertex ``v`` renamed ``perm[v]``."""
        return FiniteSpace(self.n, [(perm[u], perm[v]) for u, v in self.edges], space_id or self.space_id)

    # -- basic geometry ----------------------------------------------------
    @property
    def has_cycle(self) -> bool:
        return len(self.edges) >= self.n

    def interval(self, x: int, y: int) -> frozenset[int]:
        D = self.D
        return frozenset(np.flatnonzero(D[x] + D[y] == D[x, y]).tolist())

    @cached_property
    def pred(self) -> np.ndarray:
        """``pred[x, v]``: predecessor of v on the canonical geodesic from x (-1 at v = x)."""
        P = kernels.canonical_predecessors(self.D, self.indptr, self.indices)
        P.setflags(write=False)
        return P

    def geodesic(self, x: int, y: int) -> list[int]:
        """Canonical geodesic from x to y as a vertex list."""
        out = [y]
        while out[-1] != x:
            out.append(int(self.pred[x, out[-1]]))
        return out[::-1]

    def _build_path_tables(self) -> None:
        n, D, P = self.n, self.D, self.pred
        on = np.zeros((n, n, n), dtype=bool)
        dist = np.empty((n, n, n), dtype=np.int16)
        xs = np.arange(n)
        on[xs, xs, xs] = True
        dist[xs, xs] = D.astype(np.int16)
        for level in range(1, int(D.max()) + 1):
            x, v = np.nonzero(D == level)
            u = P[x, v]
            on[x, v] = on[x, u]
            on[x, v, v] = True
            dist[x, v] = np.minimum(dist[x, u], D[v])
        on.setflags(write=False)
        dist.setflags(write=False)
        self.__dict__["path_mask"] = on
        self.__dict__["path_dist"] = dist

    @cached_property
    def path_mask(self) -> np.ndarray:
        """``path_mask[x, y, v]``: v lies on the canonical geodesic from x to y."""
        self._build_path_tables()
        return self.__dict__["path_mask"]

    @cached_property
    def path_dist(self) -> np.ndarray:
        """``path_dist[x, y, v] = d(v, canonical geodesic x -> y)``."""
        self._build_path_tables()
        return self.__dict__["path_dist"]

    @cached_property
    def interval_dist(self) -> np.ndarray:
        """``interval_dist[x, y, v] = d(v, I(x, y))``."""
        T = kernels.interval_distance_table(self.D)
        T.setflags(write=False)
        return T

    # -- hyperbolicity constants -------------------------------------------
    @cached_property
    def delta_four_point(self) -> float:
        return float(kernels.delta_four_point(self.D))

    @cached_property
    def delta_interval_slim(self) -> float:
        return float(kernels.delta_interval_slim(self.D, self.interval_dist))

    @cached_property
    def delta(self) -> float:
        """Working constant used by the proposition verifiers.

        The larger of the two discrete constants, floored at 1/2 when the graph
        has a cycle: vertex-only constants vanish on block graphs such as
        triangles, whose metric realisation is not 0-hyperbolic.
        """
        d = max(self.delta_four_point, self.delta_interval_slim)
        if self.has_cycle:
            d = max(d, 0.5)
        return d

    # -- projections and halfspaces ----------------------------------------
    def nearest_point_projection(self, z: int, S: Iterable[int]) -> frozenset[int]:
        S = np.fromiter(set(S), dtype=np.int64)
        if S.size == 0:
            raise ValueError("cannot project onto an empty set")
        d = self.D[z, S]
        return frozenset(S[d == d.min()].tolist())

    def halfspace(self, a: int, b: int, C: int = 0) -> "Halfspace":
        members = np.flatnonzero(self.D[:, b] <= self.D[:, a] + C)
        return Halfspace(a, b, C, frozenset(members.tolist()))

    def equidistant_set(self, a: int, b: int) -> frozenset[int]:
        if a == b:
            raise ValueError("equidistant set needs distinct points")
        return frozenset(np.flatnonzero(self.D[:, a] == self.D[:, b]).tolist())


@dataclass(frozen=True)
class Halfspace:
    """Points at most ``C`` further from ``target`` than from ``anchor``."""

    anchor: int
    target: int
    C: int
    members: frozenset[int]

    def __contains__(self, v: int) -> bool:
        return v in self.members


def delta_four_point(space: FiniteSpace) -> float:
    return space.delta_four_point


def delta_interval_slim(space: FiniteSpace) -> float:
    return space.delta_interval_slim


def nearest_point_projection(space: FiniteSpace, z: int, S: Iterable[int]) -> frozenset[int]:
    return space.nearest_point_projection(z, S)


def halfspace(space: FiniteSpace, a: int, b: int, C: int = 0) -> Halfspace:
    return space.halfspace(a, b, C)


def equidistant_set(space: FiniteSpace, a: int, b: int) -> frozenset[int]:
    return space.equidistant_set(a, b)


# -- constants ------------------------------------------------------------
@dataclass(frozen=True)
class ConstantsLedger:
    delta: Number
    K1: Number
    K2: Number
    K3: Number
    K4: Number
    K5: Number
    K6: Number
    K7: Number
    K8: Number | None = None
    K9: Number | None = None
    K10: Number | None = None

    def as_dict(self) -> dict[str, Number | None]:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def constants(delta: Number, axis_distance: Number | None = None, k: int = 1) -> ConstantsLedger:
    """Constants of the halfspace estimates at hyperbolicity ``delta``.

    ``axis_distance`` is the distance from the basepoint to the axis segment of
    a Schottky pair; without it the pair-dependent constants stay ``None``.
    ``k`` is the spacing multiplier of a nested halfspace family.
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if k < 1:
        raise ValueError("k must be at least 1")
    K1 = 7 * delta
    K2 = 27 * delta
    K3 = 18 * delta
    K4 = 2 * K2 + K3 + 42 * delta
    K5 = 24 * delta
    K7 = 98 * delta + 2 * K1
    K6 = 2 * K7 + 6 * delta
    K8 = K9 = K10 = None
    if axis_distance is not None:
        K8 = 2 * axis_distance + K5
        K9 = k * (2 * K8 + K6)
        K10 = K6 + 2 * K8 + K9
    return ConstantsLedger(delta, K1, K2, K3, K4, K5, K6, K7, K8, K9, K10)


# -- test spaces ------------------------------------------------------------
def path_graph(n: int) -> FiniteSpace:
    return FiniteSpace(n, [(i, i + 1) for i in range(n - 1)], f"path{n}")


def cycle_graph(n: int) -> FiniteSpace:
    return FiniteSpace(n, [(i, (i + 1) % n) for i in range(n)], f"cycle{n}")


def complete_graph(n: int) -> FiniteSpace:
    return FiniteSpace(n, [(i, j) for i in range(n) for j in range(i + 1, n)], f"K{n}")


def all_trees(max_vertices: int) -> Iterator[FiniteSpace]:
    """Every tree on 1..max_vertices vertices up to isomorphism."""
    yield FiniteSpace(1, [], "tree1-0")
    for n in range(2, max_vertices + 1):
        for i, t in enumerate(nx.nonisomorphic_trees(n)):
            yield FiniteSpace.from_networkx(t, f"tree{n}-{i}")


def random_connected(n: int, extra_edges: int, seed: int, space_id: str | None = None) -> FiniteSpace:
    """Uniform random labelled tree plus ``extra_edges`` random chords."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    edges = {(int(order[i]), int(order[rng.integers(0, i)])) for i in range(1, n)}
    edges = {(min(e), max(e)) for e in edges}
    all_pairs = n * (n - 1) // 2
    target = min(all_pairs, len(edges) + extra_edges)
    while len(edges) < target:
        u, v = (int(t) for t in rng.integers(0, n, size=2))
        if u != v:
            edges.add((min(u, v), max(u, v)))
    return FiniteSpace(n, edges, space_id or f"random-n{n}-s{seed}")


def random_suite(count: int = 200, max_vertices: int = 30, seed: int = 20240611) -> list[FiniteSpace]:
    """Seeded family of connected graphs with 4..max_vertices vertices."""
    rng = np.random.default_rng(seed)
    spaces = []
    for i in range(count):
        n = int(rng.integers(4, max_vertices + 1))
        extra = int(rng.integers(0, n + 1))
        spaces.append(random_connected(n, extra, seed=int(rng.integers(2**31)), space_id=f"random{i:03d}"))
    return spaces


def farey_ball(bound: int) -> FiniteSpace:
    """Farey graph on the slopes in [0, 1] with denominator at most ``bound``, plus 1/0.

    Vertex 0 is 1/0; the rest follow the Farey sequence order.
    """
    from hyplab.torus import Slope

    fracs = [(0, 1)]
    a, b, c, d = 0, 1, 1, bound
    while c <= bound:
        fracs.append((c, d))
        k = (bound + b) // d
        a, b, c, d = c, d, k * c - a, k * d - b
    verts = [(1, 0)] + fracs
    index = {v: i for i, v in enumerate(verts)}
    edges = []
    for i, (p, q) in enumerate(verts):
        for j in range(i + 1, len(verts)):
            r, s = verts[j]
            if abs(p * s - q * r) == 1:
                edges.append((i, j))
    space = FiniteSpace(len(verts), edges, f"farey{bound}")
    space.slopes = [Slope(p, q) for p, q in verts]  # type: ignore[attr-defined]
    space.slope_index = index  # type: ignore[attr-defined]
    return space
