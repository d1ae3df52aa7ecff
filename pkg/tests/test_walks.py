from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyplab.torus import IDENTITY, INFINITY, L, R, GroupElement, bfs_oracle_distances, farey_distance, mobius, reduce
from hyplab.walks import (
    BudgetExceeded,
    StepDistribution,
    child_seed,
    convolution,
    delta_nm,
    delta_nm_exact,
    drift_estimate,
    farey_length,
    halfrate_statistic,
    parse_distribution,
    sample_path,
    sanov,
    scan_delta_nm,
    shift,
    subadditivity_audit,
    uniform_lr,
)

LR = StepDistribution.uniform([L, R])


def test_weights_exact_and_validated():
    mu = StepDistribution([(L, "1/3"), (R, Fraction(2, 3))])
    assert sum(w for _, w in mu.atoms) == 1
    with pytest.raises(ValueError):
        StepDistribution([(L, "1/2"), (R, "1/3")])
    with pytest.raises(ValueError):
        StepDistribution([(L, 0), (R, 1)])


def test_reflection_involution():
    mu = StepDistribution([(L, "1/3"), (R * L, "1/6"), (R, "1/2")])
    assert mu.reflected().reflected() == mu
    assert dict(mu.reflected().atoms)[L.inverse()] == Fraction(1, 3)


def test_parse_distribution():
    assert parse_distribution("uniform-LR") == uniform_lr()
    mu = parse_distribution("[[1,0],[1,1]]:1/4; [[1,1],[0,1]]:3/4")
    assert dict(mu.atoms) == {L: Fraction(1, 4), R: Fraction(3, 4)}
    with pytest.raises(ValueError):
        parse_distribution("bogus")


def test_child_seed_deterministic():
    assert child_seed(7, 3) == child_seed(7, 3)
    assert child_seed(7, 3) != child_seed(7, 4)


def test_sample_path_basics():
    p0 = sample_path(uniform_lr(), 0, 1)
    assert p0.positions == (IDENTITY,)
    a, b = sample_path(uniform_lr(), 50, 9), sample_path(uniform_lr(), 50, 9)
    assert a == b
    for k in range(1, 51):
        assert a.positions[k] == a.positions[k - 1] * a.increments[k - 1]


def test_one_step_frequencies():
    mu = StepDistribution([(L, "1/8"), (R, "3/8"), (L.inverse(), "1/2")])
    idx = mu.draw(100_000, 5)
    for i, w in enumerate(mu.weights):
        p = float(w)
        freq = np.mean(idx == i)
        assert abs(freq - p) <= 4 * np.sqrt(p * (1 - p) / 100_000)


def test_shift_definition():
    g, h = L, R
    mu = StepDistribution.uniform([g, h])
    path = sample_path(mu, 2, 0)
    s = shift(path)
    assert s.positions == (IDENTITY, path.increments[1])
    assert len(path.shift(2)) == 0
    with pytest.raises(ValueError):
        shift(sample_path(mu, 0, 0))
    with pytest.raises(ValueError):
        path.shift(3)


@settings(max_examples=20)
@given(st.integers(0, 10**6), st.integers(0, 20), st.integers(0, 20))
def test_shift_left_invariance(seed, n, k):
    path = sample_path(uniform_lr(), n + k, seed)
    tail = path.shift(n)
    assert len(tail) == k
    d1 = farey_length(tail.positions[k])
    d2 = farey_distance(mobius(path.positions[n], INFINITY), mobius(path.positions[n + k], INFINITY))
    assert d1 == d2


def test_convolution_examples():
    two = convolution(LR, 2)
    assert two[L * R] == Fraction(1, 4)
    assert len(two) == 4 and set(two.entries.values()) == {Fraction(1, 4)}
    zero = convolution(uniform_lr(), 0)
    assert zero.entries == {IDENTITY: Fraction(1)}


def test_convolution_budget():
    with pytest.raises(BudgetExceeded) as err:
        convolution(uniform_lr(), 12, budget=1000)
    assert err.value.budget == 1000 and err.value.required == 4**12


@pytest.mark.parametrize("n", range(0, 6))
def test_convolution_exact_and_consistent(n):
    mu = StepDistribution([(L, "1/5"), (R, "2/5"), (R.inverse(), "2/5")])
    t = convolution(mu, n)
    assert t.total() == 1
    assert len(t) <= len(mu) ** n
    nxt = convolution(mu, n + 1)
    manual = {}
    for g, p in t.entries.items():
        for h, q in mu.atoms:
            manual[g * h] = manual.get(g * h, 0) + p * q
    assert manual == nxt.entries
    refl = convolution(mu.reflected(), n)
    for g, p in t.entries.items():
        assert refl[g.inverse()] == p


def test_drift_point_mass():
    rep = drift_estimate(parse_distribution("identity"), "farey-displacement", 50, 5, 1)
    assert rep.estimate == 0 and rep.ci_low <= rep.estimate <= rep.ci_high


def test_drift_report_invariants():
    rep = drift_estimate(uniform_lr(), "farey-displacement", 200, 40, 2, checkpoints=[50, 100])
    assert rep.estimate >= 0 and rep.ci_low <= rep.estimate <= rep.ci_high
    assert len(rep.terminal) == 40 and set(rep.curve) == {50, 100, 200}
    again = drift_estimate(uniform_lr(), "farey-displacement", 200, 40, 2, checkpoints=[50, 100])
    assert again.record() == rep.record()
    with pytest.raises(ValueError):
        drift_estimate(uniform_lr(), "farey-displacement", 0, 40, 2)


def test_word_metric_drift_on_free_pair():
    rep = drift_estimate(sanov(), "word", 2000, 50, 4)
    assert abs(rep.estimate - 0.5) < 0.05


def test_expected_length_subadditive_exactly():
    mu = uniform_lr()
    E = {n: convolution(mu, n).expectation(farey_length) for n in range(0, 6)}
    for n in range(0, 6):
        for k in range(0, 6 - n):
            assert E[n + k] <= E[n] + E[k]


def _oracle_delta(mu, n, m):
    """Average of |w_{n+m}| - |w_n| over all equally likely words, lengths from box BFS."""
    k = len(mu)
    targets = {}
    for word in product(range(k), repeat=n + m):
        g = IDENTITY
        for i in word[:n]:
            g = g * mu.elements[i]
        x = g
        for i in word[n:]:
            g = g * mu.elements[i]
        targets[word] = (x, g)
    slopes = sorted({mobius(h, INFINITY) for pair in targets.values() for h in pair}, key=lambda s: (s.q, s.p))
    dist = dict(zip(slopes, bfs_oracle_distances(INFINITY, slopes, 60)))
    total = sum(dist[mobius(g, INFINITY)] - dist[mobius(x, INFINITY)] for x, g in targets.values())
    return Fraction(total, k ** (n + m))


def test_delta_exact_matches_independent_oracle():
    mu = uniform_lr()
    assert delta_nm_exact(mu, 2, 2) == _oracle_delta(mu, 2, 2) == Fraction(21, 64)
    assert delta_nm_exact(mu, 1, 3) == _oracle_delta(mu, 1, 3)


def test_delta_trivial_cases():
    mu = uniform_lr()
    assert delta_nm_exact(mu, 3, 0) == 0
    e3 = convolution(mu, 3).expectation(farey_length)
    assert delta_nm_exact(mu, 0, 3) == e3 >= 0


def test_delta_monte_carlo_agrees():
    mu = uniform_lr()
    mc = delta_nm(mu, 2, 2, 20_000, 17)
    assert abs(mc.estimate - 21 / 64) <= 3 * mc.stderr


def test_delta_budget():
    with pytest.raises(BudgetExceeded):
        delta_nm_exact(uniform_lr(), 6, 6, budget=10_000)


def test_scan_reports_onset():
    scan = scan_delta_nm(uniform_lr(), 20, range(1, 11), 2000, 3)
    assert scan.onset is not None and scan.delta0 > 0
    i = scan.ms.index(scan.onset)
    for e, s in zip(scan.estimates[i:], scan.stderrs[i:]):
        assert e - scan.z * s >= scan.delta0 - 1e-12


def test_subadditivity_audit():
    paths = [sample_path(uniform_lr(), 30, s) for s in range(50)]
    pairs = [(n, k) for n in (0, 3, 10) for k in (0, 5, 20)]
    rep = subadditivity_audit(paths, "farey-displacement", pairs)
    assert rep.passed and rep.paths == 50
    for k in (0, 5, 20):
        assert rep.min_slack[(0, k)] == 0
    word = subadditivity_audit([sample_path(sanov(), 30, s) for s in range(20)], "word", pairs, mu=sanov())
    assert word.passed
    with pytest.raises(ValueError):
        subadditivity_audit(paths, "farey-displacement", [(20, 20)])


def test_halfrate():
    h = halfrate_statistic(2, 1, 0)
    assert h.frequency in (0.0, 1.0)
    big = halfrate_statistic(20_000, 5, 1)
    assert abs(big.frequency - 0.5) < 4 * big.stderr + 1e-9
    with pytest.raises(ValueError):
        halfrate_statistic(1, 1, 0)
