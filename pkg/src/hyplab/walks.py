"""Random walks on SL(2,Z): step distributions, sample paths, exact
convolutions, drift estimates and the progress experiment.

Randomness contract: a walk with seed ``s`` draws its increments from
``numpy.random.default_rng(s)``; replica ``r`` of an experiment with seed ``s``
uses the walk seed :func:`child_seed` ``(s, r)``. Replica sets are therefore
reproducible and independent of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats

from hyplab.torus import IDENTITY, L, R, GroupElement, displacement

METRICS = ("farey-displacement", "word")


class BudgetExceeded(RuntimeError):
    """Exact enumeration would exceed the configured table budget."""

    def __init__(self, required: int, budget: int):
        super().__init__(f"exact enumeration needs up to {required} entries; budget is {budget}")
        self.required = required
        self.budget = budget


def child_seed(seed: int, replica: int) -> int:
    """64-bit walk seed of ``replica``: first word of ``SeedSequence([seed, replica])``."""
    return int(np.random.SeedSequence([seed, replica]).generate_state(1, np.uint64)[0])


class StepDistribution:
    """Finitely supported probability measure on SL(2,Z) with exact weights."""

    def __init__(self, atoms: Iterable[tuple[GroupElement, Fraction | int | str]]):
        merged: dict[GroupElement, Fraction] = {}
        for g, w in atoms:
            w = Fraction(w)
            if w <= 0:
                raise ValueError(f"weight of {g} must be positive, got {w}")
            merged[g] = merged.get(g, Fraction(0)) + w
        if not merged:
            raise ValueError("a step distribution needs at least one atom")
        total = sum(merged.values())
        if total != 1:
            raise ValueError(f"weights sum to {total}, not 1")
        self.elements: tuple[GroupElement, ...] = tuple(merged)
        self.weights: tuple[Fraction, ...] = tuple(merged.values())
        self.denominator = math.lcm(*(w.denominator for w in self.weights))
        self.numerators = tuple(int(w * self.denominator) for w in self.weights)
        self._cum = np.cumsum(np.array(self.numerators, dtype=object)).astype(np.int64) if self.denominator < 2**62 else None
        inv = {g: i for i, g in enumerate(self.elements)}
        self.inverse_index = tuple(inv.get(g.inverse(), -1) for g in self.elements)

    @classmethod
    def uniform(cls, elements: Sequence[GroupElement]) -> "StepDistribution":
        w = Fraction(1, len(elements))
        return cls((g, w) for g in elements)

    @property
    def atoms(self) -> list[tuple[GroupElement, Fraction]]:
        return list(zip(self.elements, self.weights))

    def __len__(self) -> int:
        return len(self.elements)

    def __eq__(self, other) -> bool:
        return isinstance(other, StepDistribution) and dict(self.atoms) == dict(other.atoms)

    def __repr__(self) -> str:
        body = ", ".join(f"{g}:{w}" for g, w in self.atoms)
        return f"StepDistribution({body})"

    def reflected(self) -> "StepDistribution":
        return StepDistribution((g.inverse(), w) for g, w in self.atoms)

    def draw(self, n: int, seed: int) -> np.ndarray:
        """Indices of ``n`` independent atoms, exact in the rational weights."""
        if self._cum is None:
            raise ValueError("weights need a common denominator below 2**62 for sampling")
        u = np.random.default_rng(seed).integers(0, self.denominator, size=n, dtype=np.int64)
        return np.searchsorted(self._cum, u, side="right")

    def to_text(self) -> str:
        return ";".join(f"{g}:{w}" for g, w in self.atoms)


def parse_distribution(text: str) -> StepDistribution:
    """Named distribution or an explicit atom list ``"[[a,b],[c,d]]:w;..."``.

    Names: ``uniform-LR`` (L, R and inverses), ``sanov`` (L^2, R^2 and
    inverses), ``identity``.
    """
    name = text.strip()
    if name in NAMED:
        return NAMED[name]()
    atoms = []
    for part in name.split(";"):
        if not part.strip():
            continue
        mat, _, w = part.rpartition(":")
        if not mat:
            raise ValueError(f"atom {part!r} needs the form MATRIX:WEIGHT")
        atoms.append((GroupElement.parse(mat), Fraction(w.strip())))
    return StepDistribution(atoms)


def uniform_lr() -> StepDistribution:
    return StepDistribution.uniform([L, L.inverse(), R, R.inverse()])


def sanov() -> StepDistribution:
    a, b = L * L, R * R
    return StepDistribution.uniform([a, a.inverse(), b, b.inverse()])


NAMED: dict[str, Callable[[], StepDistribution]] = {
    "uniform-LR": uniform_lr,
    "sanov": sanov,
    "identity": lambda: StepDistribution([(IDENTITY, 1)]),
}


# -- sample paths -----------------------------------------------------------
@dataclass(frozen=True)
class WalkPath:
    seed: int
    increments: tuple[GroupElement, ...]
    positions: tuple[GroupElement, ...]
    letters: tuple[int, ...] = field(default=(), compare=False)

    def __len__(self) -> int:
        return len(self.increments)

    def shift(self, k: int = 1) -> "WalkPath":
        """Drop the first ``k`` increments; positions restart at the identity."""
        if k < 0 or k > len(self.increments):
            raise ValueError("cannot shift past the end of the path")
        if k == 0:
            return self
        head_inv = self.positions[k].inverse()
        return WalkPath(
            self.seed,
            self.increments[k:],
            tuple(head_inv * w for w in self.positions[k:]),
            self.letters[k:],
        )


def sample_path(mu: StepDistribution, n: int, seed: int) -> WalkPath:
    if n < 0:
        raise ValueError("step count must be non-negative")
    idx = mu.draw(n, seed)
    incs = tuple(mu.elements[i] for i in idx)
    pos = [IDENTITY]
    for g in incs:
        pos.append(pos[-1] * g)
    return WalkPath(seed, incs, tuple(pos), tuple(int(i) for i in idx))


def shift(path: WalkPath, k: int = 1) -> WalkPath:
    if not path.increments:
        raise ValueError("cannot shift an empty path")
    return path.shift(k)


def replica_letters(mu: StepDistribution, n: int, replicas: int, seed: int) -> np.ndarray:
    """``(replicas, n)`` atom indices, row r drawn with :func:`child_seed` ``(seed, r)``."""
    out = np.empty((replicas, n), dtype=np.int64)
    for r in range(replicas):
        out[r] = mu.draw(n, child_seed(seed, r))
    return out


# -- lengths ----------------------------------------------------------------
def farey_length(g: GroupElement) -> int:
    return displacement(g.a, g.c)


def reduced_length(letters: Sequence[int], inverse_index: Sequence[int]) -> int:
    """Length after free cancellation of letter/inverse-letter pairs."""
    stack: list[int] = []
    for s in letters:
        if stack and inverse_index[stack[-1]] == s:
            stack.pop()
        else:
            stack.append(s)
    return len(stack)


class _Batch:
    """Positions of many walks advanced in lockstep (object arrays of big ints)."""

    def __init__(self, mu: StepDistribution, letters: np.ndarray):
        self.mu = mu
        self.letters = letters
        R = letters.shape[0]
        el = mu.elements
        self.ea = np.array([g.a for g in el], dtype=object)
        self.eb = np.array([g.b for g in el], dtype=object)
        self.ec = np.array([g.c for g in el], dtype=object)
        self.ed = np.array([g.d for g in el], dtype=object)
        one = np.ones(R, dtype=object)
        zero = np.zeros(R, dtype=object)
        self.a, self.b, self.c, self.d = one.copy(), zero.copy(), zero.copy(), one.copy()
        self.k = 0
        self.stacks: list[list[int]] | None = None

    def advance(self, upto: int) -> None:
        while self.k < upto:
            col = self.letters[:, self.k]
            e, f, g, h = self.ea[col], self.eb[col], self.ec[col], self.ed[col]
            a, b, c, d = self.a, self.b, self.c, self.d
            self.a, self.b = a * e + b * g, a * f + b * h
            self.c, self.d = c * e + d * g, c * f + d * h
            self.k += 1

    def farey_lengths(self) -> np.ndarray:
        return np.array([displacement(int(a), int(c)) for a, c in zip(self.a, self.c)], dtype=np.int64)

    def word_lengths(self, upto: int) -> np.ndarray:
        inv = self.mu.inverse_index
        if self.stacks is None:
            self.stacks = [[] for _ in range(self.letters.shape[0])]
            self._wk = 0
        for r, st in enumerate(self.stacks):
            for s in self.letters[r, self._wk : upto].tolist():
                if st and inv[st[-1]] == s:
                    st.pop()
                else:
                    st.append(s)
        self._wk = upto
        return np.array([len(st) for st in self.stacks], dtype=np.int64)

    def lengths(self, metric: str, upto: int) -> np.ndarray:
        if metric == "word":
            return self.word_lengths(upto)
        self.advance(upto)
        return self.farey_lengths()

    def elements(self) -> list[GroupElement]:
        return [GroupElement._unchecked(int(a), int(b), int(c), int(d)) for a, b, c, d in zip(self.a, self.b, self.c, self.d)]


def lengths_at(
    mu: StepDistribution, metric: str, checkpoints: Sequence[int], replicas: int, seed: int
) -> dict[int, np.ndarray]:
    """Per-replica ``|w_k|`` for every checkpoint k, on shared paths."""
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    pts = sorted(set(int(k) for k in checkpoints))
    letters = replica_letters(mu, pts[-1] if pts else 0, replicas, seed)
    batch = _Batch(mu, letters)
    return {k: batch.lengths(metric, k) for k in pts}


# -- drift --------------------------------------------------------------------
def _interval(values: np.ndarray, level: float) -> tuple[float, float, float, float]:
    m = float(np.mean(values))
    k = len(values)
    se = float(np.std(values, ddof=1) / math.sqrt(k)) if k > 1 else 0.0
    q = 0.5 + level / 2
    crit = stats.t.ppf(q, k - 1) if k < 30 else stats.norm.ppf(q)
    return m, se, m - crit * se, m + crit * se


@dataclass
class DriftReport:
    metric: str
    n: int
    replicas: int
    seed: int
    estimate: float
    stderr: float
    ci_low: float
    ci_high: float
    level: float
    terminal: list[int]
    curve: dict[int, float] = field(default_factory=dict)

    def record(self) -> dict:
        return {
            "experiment": "drift",
            "metric": self.metric,
            "n": self.n,
            "m": None,
            "replicas": self.replicas,
            "seed": self.seed,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
        }


def drift_estimate(
    mu: StepDistribution,
    metric: str,
    n: int,
    replicas: int,
    seed: int,
    level: float = 0.99,
    checkpoints: Sequence[int] = (),
) -> DriftReport:
    """Mean of ``|w_n| / n`` over replicas with a normal (Student below 30) interval."""
    if n < 1 or replicas < 2:
        raise ValueError("need n >= 1 and at least two replicas")
    pts = sorted(set(int(k) for k in checkpoints if 0 < k < n)) + [n]
    lens = lengths_at(mu, metric, pts, replicas, seed)
    term = lens[n]
    est, se, lo, hi = _interval(term / n, level)
    curve = {k: float(np.mean(v)) for k, v in lens.items()}
    return DriftReport(metric, n, replicas, seed, est, se, lo, hi, level, term.tolist(), curve)


# -- exact convolutions -------------------------------------------------------
@dataclass
class ConvolutionTable:
    n: int
    entries: dict[GroupElement, Fraction]

    def __getitem__(self, g: GroupElement) -> Fraction:
        return self.entries.get(g, Fraction(0))

    def __len__(self) -> int:
        return len(self.entries)

    def total(self) -> Fraction:
        return sum(self.entries.values(), Fraction(0))

    def expectation(self, f: Callable[[GroupElement], float | int]) -> Fraction:
        return sum((p * f(g) for g, p in self.entries.items()), Fraction(0))


DEFAULT_BUDGET = 2_000_000


def _integer_convolution(mu: StepDistribution, n: int, budget: int) -> dict[GroupElement, int]:
    required = len(mu) ** n
    if required > budget:
        raise BudgetExceeded(required, budget)
    table = {IDENTITY: 1}
    for _ in range(n):
        nxt: dict[GroupElement, int] = {}
        for g, p in table.items():
            for h, q in zip(mu.elements, mu.numerators):
                gh = g * h
                nxt[gh] = nxt.get(gh, 0) + p * q
        table = nxt
    return table


def convolution(mu: StepDistribution, n: int, budget: int = DEFAULT_BUDGET) -> ConvolutionTable:
    """Exact law of ``w_n`` (weights are integers over ``denominator**n`` internally)."""
    if n < 0:
        raise ValueError("step count must be non-negative")
    table = _integer_convolution(mu, n, budget)
    den = mu.denominator**n
    return ConvolutionTable(n, {g: Fraction(p, den) for g, p in table.items()})


# -- progress increments --------------------------------------------------------
@dataclass
class DeltaEstimate:
    n: int
    m: int
    replicas: int
    seed: int
    estimate: float
    stderr: float

    def record(self, level: float = 0.99) -> dict:
        z = stats.norm.ppf(0.5 + level / 2)
        return {
            "experiment": "delta-nm",
            "metric": "farey-displacement",
            "n": self.n,
            "m": self.m,
            "replicas": self.replicas,
            "seed": self.seed,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "ci_low": self.estimate - z * self.stderr,
            "ci_high": self.estimate + z * self.stderr,
        }


def delta_nm(mu: StepDistribution, n: int, m: int, replicas: int, seed: int) -> DeltaEstimate:
    """Monte Carlo estimate of ``E(|w_{n+m}| - |w_n|)`` in the farey-displacement metric."""
    lens = lengths_at(mu, "farey-displacement", [n, n + m], replicas, seed)
    diff = (lens[n + m] - lens[n]).astype(float)
    se = float(np.std(diff, ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.0
    return DeltaEstimate(n, m, replicas, seed, float(diff.mean()), se)


def delta_nm_exact(mu: StepDistribution, n: int, m: int, budget: int = DEFAULT_BUDGET) -> Fraction:
    """``sum_x mu_n(x) sum_y mu_m(y) (|xy| - |x|)`` by enumeration."""
    required = len(mu) ** n * len(mu) ** m
    if required > budget:
        raise BudgetExceeded(required, budget)
    tn = _integer_convolution(mu, n, budget)
    tm = _integer_convolution(mu, m, budget)
    total = 0
    for x, p in tn.items():
        lx = farey_length(x)
        for y, q in tm.items():
            total += p * q * (farey_length(x * y) - lx)
    return Fraction(total, mu.denominator ** (n + m))


@dataclass
class ProgressScan:
    n: int
    ms: list[int]
    estimates: list[float]
    stderrs: list[float]
    replicas: int
    seed: int
    onset: int | None
    delta0: float | None
    z: float


def scan_delta_nm(
    mu: StepDistribution, n: int, ms: Sequence[int], replicas: int, seed: int, level: float = 0.99
) -> ProgressScan:
    """Estimates of the progress increment over a range of m on shared paths.

    The onset is the smallest scanned m from which every lower confidence
    bound is positive; ``delta0`` is the smallest of those lower bounds.
    """
    ms = sorted(set(int(m) for m in ms))
    lens = lengths_at(mu, "farey-displacement", [n] + [n + m for m in ms], replicas, seed)
    z = float(stats.norm.ppf(0.5 + level / 2))
    ests, ses = [], []
    for m in ms:
        diff = (lens[n + m] - lens[n]).astype(float)
        ests.append(float(diff.mean()))
        ses.append(float(diff.std(ddof=1) / math.sqrt(replicas)))
    lower = [e - z * s for e, s in zip(ests, ses)]
    onset = None
    for i in range(len(ms) - 1, -1, -1):
        if lower[i] > 0:
            onset = ms[i]
        else:
            break
    delta0 = min(lo for m, lo in zip(ms, lower) if m >= onset) if onset is not None else None
    return ProgressScan(n, ms, ests, ses, replicas, seed, onset, delta0, z)


# -- pathwise subadditivity ----------------------------------------------------
@dataclass
class SubadditivityReport:
    metric: str
    paths: int
    pairs: list[tuple[int, int]]
    violations: int
    min_slack: dict[tuple[int, int], int]
    witnesses: list[dict]

    @property
    def passed(self) -> bool:
        return self.violations == 0


def subadditivity_audit(
    paths: Sequence[WalkPath], metric: str, pairs: Sequence[tuple[int, int]], mu: StepDistribution | None = None
) -> SubadditivityReport:
    """Check ``|w_{n+k}| <= |w_n| + |(U^n w)_k|`` on every path and pair.

    The word metric needs ``mu`` to pair letters with their inverses.
    """
    if metric == "word" and mu is None:
        raise ValueError("the word metric needs the step distribution")

    def size(path: WalkPath, k: int) -> int:
        if metric == "word":
            return reduced_length(path.letters[:k], mu.inverse_index)
        return farey_length(path.positions[k])

    slack: dict[tuple[int, int], int] = {}
    witnesses: list[dict] = []
    violations = 0
    for path in paths:
        for n, k in pairs:
            if n + k > len(path):
                raise ValueError(f"pair ({n}, {k}) exceeds path length {len(path)}")
            tail = path.shift(n) if n else path
            s = size(path, n) + size(tail, k) - size(path, n + k)
            key = (n, k)
            slack[key] = min(slack.get(key, s), s)
            if s < 0:
                violations += 1
                if len(witnesses) < 5:
                    witnesses.append({"seed": path.seed, "n": n, "k": k, "slack": s})
    return SubadditivityReport(metric, len(paths), list(pairs), violations, slack, witnesses)


# -- half-rate heuristic ----------------------------------------------------------
@dataclass
class HalfRate:
    n: int
    replicas: int
    seed: int
    frequency: float
    stderr: float


def halfrate_statistic(n: int, replicas: int, seed: int) -> HalfRate:
    """Frequency of turn changes of the non-backtracking walk on the trivalent tree.

    Entering a triangle of the Farey tessellation through one side, the walk
    leaves through the left or the right side with equal probability; a turn
    that differs from the previous one moves to a new fan.
    """
    if n < 2:
        raise ValueError("need at least two steps")
    changes = np.empty(replicas)
    for r in range(replicas):
        turns = np.random.default_rng(child_seed(seed, r)).integers(0, 2, size=n, dtype=np.int8)
        changes[r] = np.count_nonzero(turns[1:] != turns[:-1]) / (n - 1)
    se = float(changes.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.5 / math.sqrt(n - 1)
    return HalfRate(n, replicas, seed, float(changes.mean()), se)
