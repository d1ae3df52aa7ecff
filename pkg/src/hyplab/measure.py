"""Halfspace measures for random walks on SL(2,Z).

Halfspaces live in the group through the action on slopes:
``g`` is in ``H(u, v; C)`` when ``d(g.oo, v.oo) <= d(g.oo, u.oo) + C`` in the
Farey metric. Boundary measures are replaced by the law of the walk at a
finite horizon, always reported together with the same estimate at twice the
horizon; runs whose two estimates disagree are rejected by the stability gate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Protocol, Sequence

import numpy as np
from scipy import stats

from hyplab.hyperbolic import constants
from hyplab.torus import IDENTITY, L, R, GroupElement, displacement, relative_length
from hyplab.walks import (
    StepDistribution,
    WalkPath,
    _Batch,
    convolution,
    replica_letters,
)


class Region(Protocol):
    def contains_columns(self, a: np.ndarray, c: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class HalfspaceQuery:
    """``H(anchor, target; C)`` pulled back to the group."""

    target: GroupElement
    C: int = 0
    anchor: GroupElement = IDENTITY

    def _dist(self, h: GroupElement, a: int, c: int) -> int:
        hi = h.inverse()
        return displacement(hi.a * a + hi.b * c, hi.c * a + hi.d * c)

    def contains(self, g: GroupElement) -> bool:
        return self._dist(self.target, g.a, g.c) <= self._dist(self.anchor, g.a, g.c) + self.C

    def __contains__(self, g: GroupElement) -> bool:
        return self.contains(g)

    def contains_columns(self, a: np.ndarray, c: np.ndarray) -> np.ndarray:
        return np.fromiter(
            (self._dist(self.target, int(p), int(q)) <= self._dist(self.anchor, int(p), int(q)) + self.C for p, q in zip(a, c)),
            dtype=bool,
            count=len(a),
        )

    def opposite(self) -> "HalfspaceQuery":
        return HalfspaceQuery(self.anchor, self.C, self.target)

    @property
    def radius(self) -> int:
        """Relative length of the centre as seen from the anchor."""
        return relative_length(self.anchor.inverse() * self.target)


def word_ball(radius: int, gens: Sequence[GroupElement] = (L, R)) -> list[GroupElement]:
    """All elements of word length at most ``radius`` in the given generators and inverses."""
    gens = list(gens) + [g.inverse() for g in gens]
    ball = {IDENTITY}
    layer = [IDENTITY]
    for _ in range(radius):
        nxt = []
        for g in layer:
            for s in gens:
                h = g * s
                if h not in ball:
                    ball.add(h)
                    nxt.append(h)
        layer = nxt
    return sorted(ball, key=lambda g: g.as_tuple())


# -- nested families ------------------------------------------------------------
@dataclass
class NestedFamily:
    direction: GroupElement
    spacing: int
    exponents: list[int]
    elements: list[GroupElement]
    lengths: list[int]
    checked: int
    violations: list[dict] = field(default_factory=list)

    def halfspaces(self) -> list[HalfspaceQuery]:
        return [HalfspaceQuery(x) for x in self.elements]


def nested_family(
    a: GroupElement, spacing: int, count: int, ball: Sequence[GroupElement] | None = None, max_exponent: int = 10_000
) -> NestedFamily:
    """Powers ``a^c_i`` with relative lengths at least ``spacing`` apart.

    Exponents are the smallest that realise the gaps. Nesting
    ``H(1, x_{i+1}) subset H(1, x_i)`` is checked on ``ball`` (default: word
    length <= 6 in L, R) and every failure is listed.
    """
    if abs(a.trace) <= 2:
        raise ValueError(f"{a} is not hyperbolic (|trace| <= 2)")
    if spacing < 1 or count < 2:
        raise ValueError("need spacing >= 1 and count >= 2")
    exps, lens = [], []
    c, g = 0, IDENTITY
    while len(exps) < count:
        c += 1
        g = g * a
        if c > max_exponent:
            raise ValueError("relative length does not grow; spacing unreachable")
        r = relative_length(g)
        if not lens or r >= lens[-1] + spacing:
            exps.append(c)
            lens.append(r)
    elements = [a**k for k in exps]
    ball = word_ball(6) if ball is None else ball
    queries = [HalfspaceQuery(x) for x in elements]
    violations = []
    for i in range(count - 1):
        for g in ball:
            if g in queries[i + 1] and g not in queries[i]:
                violations.append({"index": i, "element": str(g)})
    return NestedFamily(a, spacing, exps, elements, lens, len(ball) * (count - 1), violations)


# -- estimates ---------------------------------------------------------------------
@dataclass
class MeasureEstimate:
    n: int
    count: int
    replicas: int
    estimate: float
    stderr: float
    exact: Fraction | None = None

    @property
    def upper_bound(self) -> float:
        """Clopper-Pearson 95% upper bound, meaningful when the count is small."""
        return clopper_pearson_upper(self.count, self.replicas)


def clopper_pearson_upper(k: int, n: int, level: float = 0.95) -> float:
    if k >= n:
        return 1.0
    return float(stats.beta.ppf(level, k + 1, n - k))


def _binomial(count: int, replicas: int) -> tuple[float, float]:
    p = count / replicas
    return p, math.sqrt(p * (1 - p) / replicas)


def _endpoints(mu: StepDistribution, horizons: Sequence[int], replicas: int, seed: int) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    hs = sorted(set(horizons))
    batch = _Batch(mu, replica_letters(mu, hs[-1], replicas, seed))
    out = {}
    for h in hs:
        batch.advance(h)
        out[h] = (batch.a.copy(), batch.c.copy())
    return out


def mu_n_halfspace(
    mu: StepDistribution, n: int, H: Region, replicas: int, seed: int, exact: bool = False
) -> MeasureEstimate:
    """Fraction of walks with ``w_n`` in H; with ``exact`` also the convolution value."""
    if n < 1:
        raise ValueError("n must be at least 1")
    a, c = _endpoints(mu, [n], replicas, seed)[n]
    count = int(H.contains_columns(a, c).sum())
    est, se = _binomial(count, replicas)
    ex = None
    if exact:
        table = convolution(mu, n)
        keys = list(table.entries)
        inside = H.contains_columns(np.array([g.a for g in keys], dtype=object), np.array([g.c for g in keys], dtype=object))
        ex = sum((table.entries[g] for g, hit in zip(keys, inside) if hit), Fraction(0))
    return MeasureEstimate(n, count, replicas, est, se, ex)


@dataclass
class HarmonicEstimate:
    horizon: int
    replicas: int
    count: int
    estimate: float
    stderr: float
    count2: int
    estimate2: float
    stderr2: float

    @property
    def gap(self) -> float:
        """Horizon difference in units of the combined standard error."""
        comb = math.hypot(self.stderr, self.stderr2)
        diff = abs(self.estimate - self.estimate2)
        if comb == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / comb

    @property
    def accepted(self) -> bool:
        return self.gap < 3

    @property
    def upper_bound(self) -> float:
        return clopper_pearson_upper(self.count2, self.replicas)

    def record(self) -> dict:
        return {
            "horizon": self.horizon,
            "replicas": self.replicas,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "estimate_2N": self.estimate2,
            "stderr_2N": self.stderr2,
            "horizon_gap": self.gap,
            "accepted": self.accepted,
            "caveat": "finite-horizon proxy; mass on the region boundary is not separated",
        }


def harmonic_regions(
    mu: StepDistribution, regions: Sequence[Region], horizon: int, replicas: int, seed: int
) -> list[HarmonicEstimate]:
    """Endpoint frequencies at horizons N and 2N, on one shared set of paths."""
    ends = _endpoints(mu, [horizon, 2 * horizon], replicas, seed)
    out = []
    for H in regions:
        k1 = int(H.contains_columns(*ends[horizon]).sum())
        k2 = int(H.contains_columns(*ends[2 * horizon]).sum())
        e1, s1 = _binomial(k1, replicas)
        e2, s2 = _binomial(k2, replicas)
        out.append(HarmonicEstimate(horizon, replicas, k1, e1, s1, k2, e2, s2))
    return out


def harmonic_halfspace(mu: StepDistribution, H: Region, horizon: int, replicas: int, seed: int) -> HarmonicEstimate:
    return harmonic_regions(mu, [H], horizon, replicas, seed)[0]


def default_horizon(H: HalfspaceQuery, factor: int = 20) -> int:
    return max(1, factor * H.radius)


def ledger_spacing(delta: float, axis_distance: float) -> float:
    """Family spacing ``2*K8 + K6`` from the constant ledger."""
    k = constants(delta, axis_distance)
    return 2 * k.K8 + k.K6


# -- first hits ------------------------------------------------------------------
def first_hit(path: WalkPath, H: HalfspaceQuery) -> tuple[int, GroupElement] | None:
    for k, w in enumerate(path.positions):
        if w in H:
            return k, w
    return None


@dataclass
class ConditionalDecay:
    index: int
    hits: int
    landed: int
    fraction: float
    stderr: float


def conditional_decay(
    mu: StepDistribution, family: Sequence[HalfspaceQuery], horizon: int, replicas: int, seed: int
) -> list[ConditionalDecay]:
    """Among walks that enter ``H_i`` before the horizon, the share ending in ``H_{i+1}``."""
    batch = _Batch(mu, replica_letters(mu, horizon, replicas, seed))
    hit = np.zeros((len(family), replicas), dtype=bool)
    for k in range(horizon + 1):
        batch.advance(k)
        for i, H in enumerate(family[:-1]):
            todo = ~hit[i]
            if todo.any():
                hit[i, todo] |= H.contains_columns(batch.a[todo], batch.c[todo])
    out = []
    for i in range(len(family) - 1):
        idx = np.flatnonzero(hit[i])
        landed = int(family[i + 1].contains_columns(batch.a[idx], batch.c[idx]).sum()) if idx.size else 0
        frac, se = _binomial(landed, idx.size) if idx.size else (math.nan, math.nan)
        out.append(ConditionalDecay(i, int(idx.size), landed, frac, se))
    return out


# -- decay fits ---------------------------------------------------------------------
@dataclass
class DecayReport:
    points: list[tuple[float, float, float]]
    below_resolution: list[dict]
    slope: float
    slope_se: float
    slope_ci_low: float
    slope_ci_high: float
    intercept: float
    intercept_se: float
    L_hat: float
    Q_hat: float | None
    non_decaying: bool
    non_monotone: bool
    level: float
    weighted: bool

    def record(self, horizon_gap: float | None = None) -> dict:
        return {
            "L_hat": self.L_hat,
            "Q_hat": self.Q_hat,
            "slope": self.slope,
            "slope_ci_low": self.slope_ci_low,
            "slope_ci_high": self.slope_ci_high,
            "horizon_gap": horizon_gap,
            "non_decaying": self.non_decaying,
            "non_monotone": self.non_monotone,
            "below_resolution": self.below_resolution,
        }


def decay_fit(points: Sequence[Sequence[float]], epsilon: float | None = None, level: float = 0.95) -> DecayReport:
    """Least squares of ``log(estimate)`` on ``r``.

    Points are ``(r, estimate, stderr)`` with an optional replica count.
    Weights come from the delta method, ``var(log p) ~ (se / p)^2``; if any
    standard error is zero the fit is unweighted with residual errors.
    Zero estimates are set aside as below resolution with a Clopper-Pearson
    bound when the replica count is known. ``Q_hat = exp(intercept) / epsilon``.
    """
    usable, below = [], []
    for pt in points:
        r, est, se = float(pt[0]), float(pt[1]), float(pt[2])
        if est <= 0:
            entry = {"r": r, "estimate": est}
            if len(pt) > 3:
                entry["upper_bound"] = clopper_pearson_upper(0, int(pt[3]))
            below.append(entry)
        else:
            usable.append((r, est, se))
    if len(usable) < 3 or len({r for r, _, _ in usable}) < 3:
        raise ValueError("need at least three positive estimates at distinct r")
    usable.sort()
    r = np.array([p[0] for p in usable])
    y = np.log([p[1] for p in usable])
    se = np.array([p[2] for p in usable])
    X = np.column_stack([np.ones_like(r), r])
    weighted = bool(np.all(se > 0))
    if weighted:
        w = (np.array([p[1] for p in usable]) / se) ** 2
        XtW = X.T * w
        cov = np.linalg.inv(XtW @ X)
        beta = cov @ XtW @ y
        crit = stats.norm.ppf(0.5 + level / 2)
    else:
        beta, *_ = np.linalg.lstsq(X, y, rcond=None)
        resid = y - X @ beta
        dof = len(r) - 2
        s2 = float(resid @ resid) / dof if dof > 0 else 0.0
        cov = s2 * np.linalg.inv(X.T @ X)
        crit = stats.t.ppf(0.5 + level / 2, max(dof, 1))
    intercept, slope = float(beta[0]), float(beta[1])
    slope_se = float(math.sqrt(max(cov[1, 1], 0.0)))
    intercept_se = float(math.sqrt(max(cov[0, 0], 0.0)))
    ests = [p[1] for p in usable]
    non_monotone = any(b > a for a, b in zip(ests, ests[1:]))
    crit = float(crit)
    lo, hi = slope - crit * slope_se, slope + crit * slope_se
    Q = math.exp(intercept) / epsilon if epsilon else None
    return DecayReport(
        usable, below, slope, slope_se, lo, hi, intercept, intercept_se,
        math.exp(slope), Q, not hi < 0, non_monotone, level, weighted,
    )


# -- the decay experiment ---------------------------------------------------------------
@dataclass
class MuNCheck:
    n: int
    index: int
    r: int
    estimate: float
    stderr: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.estimate <= self.bound + 3 * self.stderr


@dataclass
class DecayExperiment:
    family: NestedFamily
    harmonic: list[HarmonicEstimate]
    fit: DecayReport
    epsilon: float
    mu_n: list[MuNCheck]
    monotone_violations: list[int]

    @property
    def gate_passed(self) -> bool:
        return all(h.accepted for h in self.harmonic)

    @property
    def max_gap(self) -> float:
        return max(h.gap for h in self.harmonic)

    @property
    def mu_n_passed(self) -> bool:
        return bool(self.mu_n) and all(c.passed for c in self.mu_n)

    def fit_record(self) -> dict:
        rec = self.fit.record(self.max_gap)
        rec["epsilon_hat"] = self.epsilon
        rec["gate_passed"] = self.gate_passed
        return rec


def decay_experiment(
    mu: StepDistribution,
    direction: GroupElement,
    spacing: int,
    count: int,
    replicas: int,
    seed: int,
    horizon: int | None = None,
    ns: Sequence[int] = (10, 20, 40),
) -> DecayExperiment:
    """Harmonic estimates along a nested family, their decay fit and the convolution bound.

    ``epsilon`` is one minus the largest upper 3-sigma harmonic estimate over
    the family; the fit uses the horizon-2N estimates.
    """
    fam = nested_family(direction, spacing, count)
    queries = fam.halfspaces()
    N = horizon or max(default_horizon(H) for H in queries)
    harm = harmonic_regions(mu, queries, N, replicas, seed)
    eps = 1.0 - max(min(1.0, h.estimate2 + 3 * h.stderr2) for h in harm)
    pts = [(r, h.estimate2, h.stderr2, replicas) for r, h in zip(fam.lengths, harm)]
    fit = decay_fit(pts, epsilon=eps if eps > 0 else None)
    mono = [
        i
        for i in range(len(harm) - 1)
        if harm[i + 1].estimate2 - harm[i].estimate2 > 3 * math.hypot(harm[i].stderr2, harm[i + 1].stderr2)
    ]
    checks = []
    if fit.Q_hat is not None:
        for j, n in enumerate(ns):
            ends = _endpoints(mu, [n], replicas, seed + 1 + j)[n]
            for i, (H, r) in enumerate(zip(queries, fam.lengths)):
                k = int(H.contains_columns(*ends).sum())
                est, se = _binomial(k, replicas)
                checks.append(MuNCheck(n, i, r, est, se, fit.Q_hat * fit.L_hat**r))
    return DecayExperiment(fam, harm, fit, eps, checks, mono)
