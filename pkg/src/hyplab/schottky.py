"""Hyperbolic elements of SL(2,Z), their fixed slopes, and ping-pong certificates.

Everything here is exact. Fixed points are quadratic irrationals
``(u + v*sqrt(D)) / w`` and certificates use closed arcs of the projective
line with rational endpoints. An arc ``[lo, hi]`` runs in the increasing
direction from ``lo`` to ``hi``, passing through ``1/0`` when ``hi < lo``.
Determinant-one Moebius maps preserve orientation, so the image of
``[lo, hi]`` is ``[g(lo), g(hi)]``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from hyplab.torus import IDENTITY, GroupElement, Slope, mobius, parse_slope, reduce


def is_hyperbolic(g: GroupElement) -> bool:
    return abs(g.trace) > 2


def _require_hyperbolic(*gs: GroupElement) -> None:
    for g in gs:
        if not is_hyperbolic(g):
            raise ValueError(f"{g} is not hyperbolic (|trace| = {abs(g.trace)} <= 2)")


def _sign_surd(u: int, v: int, D: int) -> int:
    """Sign of ``u + v*sqrt(D)`` for integers, ``D > 0`` not a square."""
    if v == 0:
        return (u > 0) - (u < 0)
    if u == 0:
        return 1 if v > 0 else -1
    if (u > 0) == (v > 0):
        return 1 if u > 0 else -1
    # opposite signs: the larger magnitude decides; equality is impossible for non-square D
    big = u * u - v * v * D
    return (1 if u > 0 else -1) if big > 0 else (1 if v > 0 else -1)


@dataclass(frozen=True)
class QuadraticIrrational:
    """The real number ``(u + v*sqrt(D)) / w`` with ``w > 0``."""

    u: int
    v: int
    w: int
    D: int

    def __post_init__(self):
        if self.w <= 0 or self.D <= 0 or math.isqrt(self.D) ** 2 == self.D:
            raise ValueError("need w > 0 and D a positive non-square")

    @classmethod
    def make(cls, u: int, v: int, w: int, D: int) -> "QuadraticIrrational":
        if w < 0:
            u, v, w = -u, -v, -w
        g = math.gcd(math.gcd(u, v), w)
        return cls(u // g, v // g, w // g, D)

    def __float__(self) -> float:
        return (self.u + self.v * math.sqrt(self.D)) / self.w

    def compare(self, x: Fraction | int) -> int:
        """Sign of ``self - x``."""
        x = Fraction(x)
        return _sign_surd(self.u * x.denominator - x.numerator * self.w, self.v * x.denominator, self.D)

    def floor(self) -> int:
        t = math.isqrt(self.v * self.v * self.D)
        k = (self.u + (t if self.v >= 0 else -t)) // self.w
        while self.compare(k) < 0:
            k -= 1
        while self.compare(k + 1) >= 0:
            k += 1
        return k

    def reciprocal_after(self, a: int) -> "QuadraticIrrational":
        """``1 / (self - a)``."""
        p = self.u - a * self.w
        den = p * p - self.v * self.v * self.D
        return QuadraticIrrational.make(self.w * p, -self.w * self.v, den, self.D)

    def convergents(self) -> Iterable[Fraction]:
        """Continued-fraction convergents; they alternate sides of the value."""
        x = self
        h0, h1, k0, k1 = 0, 1, 1, 0
        while True:
            a = x.floor()
            h0, h1 = h1, a * h1 + h0
            k0, k1 = k1, a * k1 + k0
            yield Fraction(h1, k1)
            x = x.reciprocal_after(a)

    def __str__(self):
        return f"({self.u} + {self.v}*sqrt({self.D}))/{self.w}"


@dataclass(frozen=True)
class FixedPointData:
    """Fixed slopes of a hyperbolic element.

    ``coefficients`` is the primitive quadratic ``A x^2 + B x + C`` with
    ``A > 0`` whose roots are the fixed slopes.
    """

    coefficients: tuple[int, int, int]
    discriminant: int
    attracting: QuadraticIrrational
    repelling: QuadraticIrrational

    def roots(self) -> tuple[QuadraticIrrational, QuadraticIrrational]:
        return self.attracting, self.repelling

    def transported(self, h: GroupElement) -> tuple[int, int, int]:
        """Quadratic whose roots are the ``h``-images of these roots."""
        A, B, C = self.coefficients
        k = h.inverse()
        # Q(k.X) homogenised: A(aX+b)^2 + B(aX+b)(cX+d) + C(cX+d)^2
        a, b, c, d = k.a, k.b, k.c, k.d
        return _normalise_quadratic(
            A * a * a + B * a * c + C * c * c,
            2 * A * a * b + B * (a * d + b * c) + 2 * C * c * d,
            A * b * b + B * b * d + C * d * d,
        )


def _normalise_quadratic(A: int, B: int, C: int) -> tuple[int, int, int]:
    g = math.gcd(math.gcd(A, B), C)
    A, B, C = A // g, B // g, C // g
    if A < 0 or (A == 0 and B < 0):
        A, B, C = -A, -B, -C
    return A, B, C


def fixed_points(g: GroupElement) -> FixedPointData:
    """Fixed-slope quadratic and the attracting/repelling roots of ``g``.

    A root ``x`` is attracting when the Moebius derivative ``1/(cx+d)^2`` is
    below one there, decided exactly from ``|cx + d| > 1``.
    """
    _require_hyperbolic(g)
    a, b, c, d = g.as_tuple()
    coeffs = _normalise_quadratic(c, d - a, -b)
    A, B, C = coeffs
    disc = B * B - 4 * A * C
    roots = [QuadraticIrrational.make(-B, s, 2 * A, disc) for s in (1, -1)]

    def expanding(x: QuadraticIrrational) -> bool:
        # c*x + d = (c*u + d*w + c*v*sqrt(D)) / w, compared against +-1
        base = c * x.u + d * x.w
        return _sign_surd(base - x.w, c * x.v, x.D) > 0 or _sign_surd(base + x.w, c * x.v, x.D) < 0

    att = [x for x in roots if expanding(x)]
    if len(att) != 1:
        raise ArithmeticError(f"could not separate the fixed points of {g}")
    rep = roots[1] if att[0] is roots[0] else roots[0]
    return FixedPointData(coeffs, disc, att[0], rep)


def independent(f: GroupElement, g: GroupElement) -> bool:
    """True when ``f`` and ``g`` share no fixed slope."""
    _require_hyperbolic(f, g)
    p, q = fixed_points(f).coefficients, fixed_points(g).coefficients
    if p == q:
        return False
    # resultant of two quadratics; zero iff a common root
    a2, a1, a0 = p
    b2, b1, b0 = q
    res = (a2 * b0 - a0 * b2) ** 2 - (a2 * b1 - a1 * b2) * (a1 * b0 - a0 * b1)
    return res != 0


# -- arcs of the projective line ------------------------------------------------------
def _less(s: Slope, t: Slope) -> bool:
    return s.p * t.q < t.p * s.q


def _le(s: Slope, t: Slope) -> bool:
    return s.p * t.q <= t.p * s.q


@dataclass(frozen=True)
class Arc:
    lo: Slope
    hi: Slope

    def contains(self, x: Slope) -> bool:
        lo, hi = self.lo, self.hi
        if x == lo or x == hi:
            return True
        if x.is_infinity:
            return lo.is_infinity or hi.is_infinity or _less(hi, lo)
        if lo.is_infinity:
            return _le(x, hi)
        if hi.is_infinity:
            return _le(lo, x)
        if _le(lo, hi):
            return _le(lo, x) and _le(x, hi)
        return _le(lo, x) or _le(x, hi)

    def __contains__(self, x: Slope) -> bool:
        return self.contains(x)

    def contains_arc(self, other: "Arc") -> bool:
        return other.lo in self and other.hi in self and other.hi in Arc(other.lo, self.hi)

    def disjoint(self, other: "Arc") -> bool:
        return not (self.lo in other or self.hi in other or other.lo in self or other.hi in self)

    def image(self, g: GroupElement) -> "Arc":
        return Arc(mobius(g, self.lo), mobius(g, self.hi))

    def complement_closure(self) -> "Arc":
        return Arc(self.hi, self.lo)

    def contains_columns(self, a: np.ndarray, c: np.ndarray) -> np.ndarray:
        """Membership of the slopes ``a/c`` (the orbit points ``g.oo``)."""
        return np.fromiter((reduce(int(p), int(q)) in self for p, q in zip(a, c)), dtype=bool, count=len(a))

    def to_json(self) -> list[str]:
        return [str(self.lo), str(self.hi)]

    @classmethod
    def from_json(cls, pair: Sequence[str]) -> "Arc":
        return cls(parse_slope(pair[0]), parse_slope(pair[1]))

    def __str__(self):
        return f"[{self.lo}, {self.hi}]"


def _slope(x: Fraction) -> Slope:
    return reduce(x.numerator, x.denominator)


def brackets(x: QuadraticIrrational, rounds: int) -> list[Arc]:
    """Arcs between consecutive convergents of ``x``; they shrink toward ``x``."""
    conv = list(itertools.islice(x.convergents(), rounds + 1))
    out = []
    for p, q in zip(conv, conv[1:]):
        lo, hi = min(p, q), max(p, q)
        out.append(Arc(_slope(lo), _slope(hi)))
    return out


# -- certificates ---------------------------------------------------------------------------
LABELS = ("A+", "A-", "B+", "B-")


@dataclass(frozen=True)
class PingPongCertificate:
    a: GroupElement
    b: GroupElement
    p: int
    q: int
    intervals: tuple[Arc, Arc, Arc, Arc]

    @property
    def regions(self) -> dict[str, Arc]:
        return dict(zip(LABELS, self.intervals))

    def failures(self) -> list[str]:
        """Every certificate condition that does not hold (empty when valid)."""
        bad = []
        for (i, s), (j, t) in itertools.combinations(enumerate(self.intervals), 2):
            if not s.disjoint(t):
                bad.append(f"{LABELS[i]} meets {LABELS[j]}")
        Ap, Am, Bp, Bm = self.intervals
        for name, g, src, dst in (
            ("a^p", self.a**self.p, Am, Ap),
            ("a^-p", self.a ** (-self.p), Ap, Am),
            ("b^q", self.b**self.q, Bm, Bp),
            ("b^-q", self.b ** (-self.q), Bp, Bm),
        ):
            if not dst.contains_arc(src.complement_closure().image(g)):
                bad.append(f"{name} does not map the complement of its source into its target")
        return bad

    def verify(self) -> bool:
        return not self.failures()

    def generators(self) -> tuple[GroupElement, GroupElement]:
        return self.a**self.p, self.b**self.q

    def to_json(self) -> dict:
        return {
            "a": list(self.a.as_tuple()),
            "b": list(self.b.as_tuple()),
            "p": self.p,
            "q": self.q,
            "intervals": [arc.to_json() for arc in self.intervals],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, rec: dict) -> "PingPongCertificate":
        arcs = tuple(Arc.from_json(x) for x in rec["intervals"])
        if len(arcs) != 4:
            raise ValueError("a certificate has exactly four intervals")
        return cls(GroupElement(*rec["a"]), GroupElement(*rec["b"]), int(rec["p"]), int(rec["q"]), arcs)

    @classmethod
    def loads(cls, text: str) -> "PingPongCertificate":
        return cls.from_json(json.loads(text))


@dataclass
class CertificationResult:
    certificate: PingPongCertificate | None
    transcript: list[dict] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.certificate is not None


def power_order(max_power: int) -> list[tuple[int, int]]:
    pairs = [(p, q) for p in range(1, max_power + 1) for q in range(1, max_power + 1)]
    return sorted(pairs, key=lambda pq: (pq[0] + pq[1], pq[0]))


def certify_schottky(a: GroupElement, b: GroupElement, max_power: int = 10, rounds: int = 8) -> CertificationResult:
    """First certificate in ``(p + q, p)`` order, trying shrinking brackets each time."""
    _require_hyperbolic(a, b)
    if not independent(a, b):
        raise ValueError("the pair shares a fixed slope")
    fa, fb = fixed_points(a), fixed_points(b)
    arcs = [brackets(x, rounds) for x in (fa.attracting, fa.repelling, fb.attracting, fb.repelling)]
    transcript = []
    for p, q in power_order(max_power):
        for r in range(rounds):
            cert = PingPongCertificate(a, b, p, q, tuple(arc[r] for arc in arcs))
            bad = cert.failures()
            if not bad:
                transcript.append({"p": p, "q": q, "round": r, "result": "certified"})
                return CertificationResult(cert, transcript)
            transcript.append({"p": p, "q": q, "round": r, "result": bad[0]})
    return CertificationResult(None, transcript)


@dataclass
class FreeGroupAudit:
    max_len: int
    words: int
    counts: dict[int, int]
    identities: list[str]
    non_hyperbolic: list[str]

    @property
    def passed(self) -> bool:
        return not self.identities and not self.non_hyperbolic

    def record(self) -> dict:
        return {
            "max_len": self.max_len,
            "words": self.words,
            "counts": self.counts,
            "identities": self.identities,
            "non_hyperbolic": self.non_hyperbolic,
            "passed": self.passed,
        }


def free_group_audit(cert: PingPongCertificate, max_len: int = 6) -> FreeGroupAudit:
    """Evaluate every reduced non-empty word in the certified generators."""
    x, y = cert.generators()
    gens = [x, x.inverse(), y, y.inverse()]
    names = ["A", "a", "B", "b"]
    inverse = [1, 0, 3, 2]
    counts: dict[int, int] = {}
    ids: list[str] = []
    non_hyp: list[str] = []
    stack = [((i,), gens[i]) for i in range(4)]
    while stack:
        word, g = stack.pop()
        k = len(word)
        counts[k] = counts.get(k, 0) + 1
        label = "".join(names[i] for i in word)
        if g.is_identity():
            ids.append(label)
        if not is_hyperbolic(g):
            non_hyp.append(label)
        if k < max_len:
            for i in range(4):
                if i != inverse[word[-1]]:
                    stack.append((word + (i,), g * gens[i]))
    return FreeGroupAudit(max_len, sum(counts.values()), dict(sorted(counts.items())), ids, non_hyp)


@dataclass
class SchottkySearch:
    pair: tuple[GroupElement, GroupElement] | None
    words: tuple[tuple[int, ...], tuple[int, ...]] | None
    certificate: PingPongCertificate | None
    tried: int


def find_schottky_pair(
    support: Sequence[GroupElement], max_len: int = 4, max_power: int = 4, rounds: int = 6
) -> SchottkySearch:
    """Search positive words in ``support`` for a certifiable pair.

    Words are taken shortest first; the first certified pair is the witness.
    """
    words: list[tuple[tuple[int, ...], GroupElement]] = []
    seen: set[GroupElement] = set()
    for k in range(1, max_len + 1):
        for w in itertools.product(range(len(support)), repeat=k):
            g = IDENTITY
            for i in w:
                g = g * support[i]
            if is_hyperbolic(g) and g not in seen:
                seen.add(g)
                words.append((w, g))
    tried = 0
    for (w1, f), (w2, g) in itertools.combinations(words, 2):
        if not independent(f, g):
            continue
        tried += 1
        res = certify_schottky(f, g, max_power, rounds)
        if res.found:
            return SchottkySearch((f, g), (w1, w2), res.certificate, tried)
    return SchottkySearch(None, None, None, tried)


def schottky_regions(cert: PingPongCertificate) -> dict[str, Arc]:
    """The four certified arcs, usable as regions for endpoint frequencies."""
    return cert.regions
