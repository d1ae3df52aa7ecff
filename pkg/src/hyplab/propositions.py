"""Executable checks of the halfspace estimates on a finite space.

Every check instantiates the geodesics it mentions with canonical geodesics
and quantifies over *all* nearest-point choices. Conclusions about
neighbourhoods of a geodesic between two points are evaluated against the
interval of those points; hypotheses use the canonical geodesic itself.
Small spaces are checked exhaustively, larger ones on a seeded sample of
outer tuples (the inner quantifiers are always exhausted).

Counts in a record are instances whose hypotheses held, so a vacuous check
reports ``checked == 0``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from itertools import product
from typing import Callable, Iterable, Iterator

import numpy as np

from hyplab.hyperbolic import FiniteSpace, constants

PROPOSITIONS = (
    "bounded",
    "projection",
    "npp",
    "double",
    "stability",
    "close",
    "half",
    "fellow",
    "disjoint",
    "nested",
    "coarse",
)

_BIG = 1 << 20


@dataclass
class PropositionRecord:
    space_id: str
    proposition: str
    delta: float
    checked: int = 0
    violations: int = 0
    witness: dict | None = None
    mode: str = "exhaustive"

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class _Tally:
    checked: int = 0
    violations: int = 0
    evaluated: int = 0
    witness: dict | None = field(default=None)

    def add(self, checked: int, bad: np.ndarray, witness: Callable[[tuple], dict], evaluated: int | None = None):
        self.checked += int(checked)
        self.evaluated += int(checked if evaluated is None else evaluated)
        nbad = int(np.count_nonzero(bad))
        if nbad:
            self.violations += nbad
            if self.witness is None:
                idx = tuple(int(i) for i in np.argwhere(bad)[0])
                self.witness = _plain(witness(idx))


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


class Verifier:
    """Runs the proposition checks on one space.

    ``exhaustive_limit``: spaces with more vertices are sampled.
    ``samples``: target number of evaluated instances in sampled mode.
    ``basepoint_limit``: spaces this small use every vertex as basepoint.
    """

    def __init__(
        self,
        space: FiniteSpace,
        *,
        exhaustive_limit: int = 40,
        samples: int = 100_000,
        min_outer: int = 50,
        max_outer: int = 20_000,
        basepoint_limit: int = 12,
        seed: int = 0,
    ):
        self.S = space
        self.n = space.n
        self.D = space.D.astype(np.int64)
        self.delta = space.delta
        self.K = constants(self.delta)
        self.exhaustive = space.n <= exhaustive_limit
        self.samples = samples
        self.min_outer = min_outer
        self.max_outer = max_outer
        self.basepoints = list(range(space.n)) if space.n <= basepoint_limit else [0]
        self.seed = seed
        self._paths: dict[tuple[int, int], np.ndarray] = {}
        self._profiles: dict[tuple[int, int], tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        self._hits: dict[int, np.ndarray] = {}

    # -- shared geometry -----------------------------------------------------
    def path(self, x: int, y: int) -> np.ndarray:
        """Canonical geodesic x -> y; the index of a vertex is its distance from x."""
        key = (x, y)
        p = self._paths.get(key)
        if p is None:
            verts = np.flatnonzero(self.S.path_mask[x, y])
            p = verts[np.argsort(self.D[x, verts], kind="stable")]
            self._paths[key] = p
        return p

    def profile(self, x: int, y: int):
        """Distance to the geodesic x -> y and lowest/highest nearest position, per vertex."""
        key = (x, y)
        prof = self._profiles.get(key)
        if prof is None:
            Dv = self.D[:, self.path(x, y)]
            m = Dv.min(axis=1)
            eq = Dv == m[:, None]
            idx = np.arange(Dv.shape[1])
            lo = np.where(eq, idx, _BIG).min(axis=1)
            hi = np.where(eq, idx, -1).max(axis=1)
            prof = (m, lo, hi)
            if self.exhaustive:
                self._profiles[key] = prof
        return prof

    def nearest_mask(self, x: int, y: int) -> np.ndarray:
        """``N[z, k]``: the k-th vertex of the geodesic x -> y is nearest to z."""
        Dv = self.D[:, self.path(x, y)]
        return Dv == Dv.min(axis=1, keepdims=True)

    def hits(self, o: int) -> np.ndarray:
        """``hits[c, c']``: H(o, c) and H(o, c') share a vertex."""
        h = self._hits.get(o)
        if h is None:
            H = (self.D <= self.D[o][None, :]).astype(np.int32)
            h = (H @ H.T) > 0
            self._hits[o] = h
        return h

    def at_least(self, lhs, base, k: float):
        """Hypothesis ``lhs >= base + k*delta``, read as ``delta -> 0+`` on 0-hyperbolic spaces.

        A 0-hyperbolic space is delta-hyperbolic for every delta > 0, so at
        delta = 0 a margin ``k*delta`` with k > 0 becomes a strict inequality.
        """
        if self.delta == 0 and k > 0:
            return lhs > base
        return lhs >= base + k * self.delta

    # -- driver ------------------------------------------------------------
    def _outer(self, kind: str, rng: np.random.Generator) -> Iterator[tuple[int, ...]]:
        n = self.n
        if self.exhaustive:
            if kind == "pair":
                yield from product(range(n), repeat=2)
            elif kind == "based":
                for o in self.basepoints:
                    for x in range(n):
                        yield (o, x)
            else:
                for o in self.basepoints:
                    for x, y in product(range(n), repeat=2):
                        yield (o, x, y)
            return
        width = {"pair": 2, "based": 1, "based_pair": 2}[kind]
        while True:
            t = tuple(int(v) for v in rng.integers(0, n, size=width))
            yield t if kind == "pair" else (0, *t)

    def run(self, propositions: Iterable[str] | None = None) -> list[PropositionRecord]:
        names = list(propositions) if propositions is not None else list(PROPOSITIONS)
        records = []
        for name in names:
            if name not in PROPOSITIONS:
                raise ValueError(f"unknown proposition {name!r}")
            records.append(self.check(name))
        return records

    def check(self, name: str) -> PropositionRecord:
        kind, fn = _CHECKS[name]
        rng = np.random.default_rng([self.seed, PROPOSITIONS.index(name)])
        tally = _Tally()
        count = 0
        for t in self._outer(kind, rng):
            fn(self, tally, *t)
            count += 1
            if not self.exhaustive and (
                count >= self.max_outer
                or (count >= self.min_outer and max(tally.evaluated, count * self.n) >= self.samples)
            ):
                break
        return PropositionRecord(
            self.S.space_id,
            name,
            self.delta,
            tally.checked,
            tally.violations,
            tally.witness,
            "exhaustive" if self.exhaustive else "sampled",
        )

    # -- individual checks ----------------------------------------------------
    def _bounded(self, t: _Tally, a: int, b: int) -> None:
        X = self.path(a, b)
        dX = self.S.path_dist[a, b].astype(np.int64)
        N = self.nearest_mask(a, b)  # (z, p)
        to_zp = self.S.path_dist[:, X, :]  # (z, p, v): d(v, [z, p])
        dp = self.D[X]  # (p, v)
        for K in (1, 2, 3):
            bad = N[:, :, None] & (dX <= K)[None, None, :] & (to_zp <= K) & (dp > 3 * K)[None]
            bad = bad.any(axis=2)
            t.add(N.sum(), bad, lambda i, K=K: {"a": a, "b": b, "z": i[0], "p": X[i[1]], "K": K})

    def _projection(self, t: _Tally, x: int, y: int) -> None:
        d3 = 3 * self.delta
        P = self.path(x, y)
        N = self.nearest_mask(x, y)
        m = self.D[:, P].min(axis=1)
        k = np.arange(len(P))
        dxz = self.D[x]
        ineq = (k[None, :] + m[:, None] - 6 * self.delta) > dxz[:, None]
        meets = (self.S.path_dist[x][:, P] > d3) | (self.S.path_dist[:, x][:, P] > d3)
        union = self.S.path_mask[x, P][None, :, :] | self.S.path_mask[P].transpose(1, 0, 2)  # (z, p, v)
        outside = union & (self.S.interval_dist[x][:, None, :] > d3)
        bad = N & (ineq | meets | outside.any(axis=2))
        t.add(
            N.sum(),
            bad,
            lambda i: {
                "x": x, "y": y, "z": i[0], "p": P[i[1]],
                "inequality": bool(ineq[i]), "geodesic_misses": bool(meets[i]),
                "union_outside": bool(outside[i].any()),
            },
        )

    def _npp(self, t: _Tally, x: int, y: int) -> None:
        _, lo, hi = self.profile(x, y)
        bad = (hi - lo) > 6 * self.delta
        P = self.path(x, y)
        t.add(self.n, bad, lambda i: {"x": x, "y": y, "z": i[0], "p": P[lo[i[0]]], "q": P[hi[i[0]]]})

    def _double(self, t: _Tally, x: int, y: int) -> None:
        m, lo, hi = self.profile(x, y)
        gap = np.maximum(hi[None, :] - lo[:, None], hi[:, None] - lo[None, :])
        hyp = gap > 14 * self.delta
        rhs = m[:, None] + gap + m[None, :] - 24 * self.delta
        bad = hyp & (self.D < rhs)
        t.add(hyp.sum(), bad, lambda i: {"x": x, "y": y, "a": i[0], "b": i[1], "gap": gap[i], "d_ab": self.D[i]})

    def _stability(self, t: _Tally, a: int, b: int) -> None:
        P = self.path(a, b)
        L1 = len(P)
        _, lo1, hi1 = self.profile(a, b)
        idx = np.arange(L1, dtype=np.int64)[:, None]
        Dv = self.D[P]  # (position, x)
        key_lo = Dv * _BIG + idx
        key_hi = Dv * _BIG + (_BIG - 1 - idx)
        K1 = self.K.K1
        for i in range(L1):
            lo2 = np.minimum.accumulate(key_lo[i:], axis=0) % _BIG
            hi2 = _BIG - 1 - np.minimum.accumulate(key_hi[i:], axis=0) % _BIG
            js = np.arange(i, L1)[:, None]
            c1 = np.clip(lo1[None, :], i, js)
            c2 = np.clip(hi1[None, :], i, js)
            spread = np.maximum(hi2 - c1, c2 - lo2)
            bad = spread > K1
            t.add(
                bad.size,
                bad,
                lambda w, i=i: {"a": a, "b": b, "c": P[i], "d": P[i + w[0]], "x": w[1], "spread": spread[w]},
            )

    def _close(self, t: _Tally, x: int, y: int) -> None:
        P = self.path(x, y)
        N1 = self.nearest_mask(x, y)  # (z, p)
        F = np.where(N1[:, :, None], self.D[P][None, :, :], -1).max(axis=1)  # (z, q)
        routes = [np.concatenate([self.path(x, w), self.path(w, y)[1:]]) for w in range(self.n)]
        Lg = max(len(r) for r in routes)
        G = np.zeros((self.n, Lg), dtype=np.int64)
        valid = np.zeros((self.n, Lg), dtype=bool)
        for w, r in enumerate(routes):
            G[w, : len(r)] = r
            valid[w, : len(r)] = True
        Kw = np.where(valid, self.S.path_dist[x, y][G], 0).max(axis=1)
        Dg = np.where(valid[None], self.D[:, G], _BIG).transpose(1, 0, 2)  # (w, z, k)
        N2 = Dg == Dg.min(axis=2, keepdims=True)
        val = np.where(N2, F[:, G].transpose(1, 0, 2), -1).max(axis=2)  # (w, z)
        bound = 3 * Kw[:, None] + 6 * self.delta
        bad = val > bound
        t.add(bad.size, bad, lambda i: {"x": x, "y": y, "w": i[0], "z": i[1], "K": Kw[i[0]], "d_pq": val[i]})

    def _half(self, t: _Tally, x: int, y: int) -> None:
        L = self.D[x, y]
        _, lo, hi = self.profile(x, y)
        inH = self.D[:, y] <= self.D[:, x]
        claim = inH & ((L - lo) > L / 2 + 3 * self.delta)
        conv_hyp = (L - hi) <= L / 2 - 3 * self.delta
        converse = conv_hyp & ~inH
        t.add(inH.sum(), claim, lambda i: {"x": x, "y": y, "z": i[0], "part": "claim"})
        t.add(conv_hyp.sum(), converse, lambda i: {"x": x, "y": y, "z": i[0], "part": "converse"})

    def _fellow(self, t: _Tally, x: int, y: int) -> None:
        L = self.D[x, y]
        _, _, hi = self.profile(x, y)
        zs = np.flatnonzero(self.at_least(hi, L / 2, 27))
        inH = self.D[:, x] <= self.D[:, y]
        for z in zs:
            _, _, hi_z = self.profile(x, int(z))
            bad = inH & (hi_z > L / 2 + self.K.K3)
            t.add(inH.sum(), bad, lambda i, z=z: {"x": x, "y": y, "z": z, "a": i[0], "proj": hi_z[i[0]]})

    def _disjoint(self, t: _Tally, o: int, x: int, y: int) -> None:
        r = int(self.S.path_dist[x, y, o])
        if not (self.at_least(self.D[o, x], 2 * r, 114) and self.at_least(self.D[o, y], 2 * r, 114)):
            return
        hyp = self.at_least(self.D[o], 2 * r, 24)
        h = self.hits(o)
        bad = hyp & h[:, x] & h[:, y]
        t.add(hyp.sum(), bad, lambda i: {"basepoint": o, "x": x, "y": y, "z": i[0], "axis_distance": r})

    def _nested(self, t: _Tally, o: int, x: int) -> None:
        K6, K7 = self.K.K6, self.K.K7
        X = self.D[o, x]
        if X < K6 + 2:
            return
        P = self.path(o, x)
        D = self.D
        Hx = D[:, x] <= D[:, o]
        for twoA in range(1, int(math.floor((X - K6) / 2)) + 1):
            A = twoA / 2
            ypos = X - 2 * K7 - twoA
            if ypos != int(ypos):
                continue
            y = int(P[int(ypos)])
            Hy = D[:, y] <= D[:, o]
            Hy1 = D[:, o] <= D[:, y]
            nest = Hx & ~Hy
            t.add(1, np.array([nest.any()]), lambda i: {"basepoint": o, "x": x, "y": y, "A": A, "part": "nesting"})
            # (a, b) with H(1,x) inside H(a,b): every member v has d(v,b) <= d(v,a)
            cover_ab = ~(Hx[None, None, :] & (D[None, :, :] > D[:, None, :])).any(axis=2)  # [a, b]
            far = D >= twoA
            ok_a = (cover_ab & far & Hx[None, :]).any(axis=1)
            bad_a = Hy1 & ~ok_a
            t.add(Hy1.sum(), bad_a, lambda i: {"basepoint": o, "x": x, "y": y, "A": A, "a": i[0], "part": "forward"})
            # (b, a) with H(y,1) inside H(b,a): every member v has d(v,a) <= d(v,b)
            cover_ba = ~(Hy1[None, None, :] & (D[None, :, :] > D[:, None, :])).any(axis=2)  # [b, a]
            ok_b = (cover_ba & far & Hy1[None, :]).any(axis=1)
            bad_b = Hx & ~ok_b
            t.add(Hx.sum(), bad_b, lambda i: {"basepoint": o, "x": x, "y": y, "A": A, "b": i[0], "part": "backward"})

    def _coarse(self, t: _Tally, o: int, x: int) -> None:
        X = self.D[o, x]
        top = X - 9 * self.delta
        if top < 0:
            return
        P = self.path(o, x)
        _, lo, _ = self.profile(o, x)
        for C in range(int(math.floor(top)) + 1):
            inHC = self.D[:, x] <= self.D[:, o] + C
            proj = inHC & ((X - lo) > X / 2 + C / 2 + 3 * self.delta)
            t.add(inHC.sum(), proj, lambda i, C=C: {"basepoint": o, "x": x, "C": C, "z": i[0], "part": "projection"})
            y = int(P[int(math.floor(X - C - 9 * self.delta))])
            outside = inHC & (self.D[:, y] > self.D[:, o])
            t.add(inHC.sum(), outside, lambda i, C=C, y=y: {"basepoint": o, "x": x, "C": C, "y": y, "z": i[0], "part": "containment"})


_CHECKS: dict[str, tuple[str, Callable]] = {
    "bounded": ("pair", Verifier._bounded),
    "projection": ("pair", Verifier._projection),
    "npp": ("pair", Verifier._npp),
    "double": ("pair", Verifier._double),
    "stability": ("pair", Verifier._stability),
    "close": ("pair", Verifier._close),
    "half": ("pair", Verifier._half),
    "fellow": ("pair", Verifier._fellow),
    "disjoint": ("based_pair", Verifier._disjoint),
    "nested": ("based", Verifier._nested),
    "coarse": ("based", Verifier._coarse),
}


def verify_propositions(space: FiniteSpace, propositions: Iterable[str] | None = None, **options) -> list[PropositionRecord]:
    """One record per proposition; violations carry the first witness found."""
    return Verifier(space, **options).run(propositions)
