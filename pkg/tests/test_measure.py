import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyplab.measure import (
    HalfspaceQuery,
    clopper_pearson_upper,
    conditional_decay,
    decay_fit,
    first_hit,
    harmonic_halfspace,
    mu_n_halfspace,
    nested_family,
    word_ball,
)
from hyplab.torus import IDENTITY, INFINITY, L, R, GroupElement, farey_distance, mobius, relative_length
from hyplab.walks import StepDistribution, sample_path, uniform_lr

A = GroupElement(2, 1, 1, 1)
GENS = [L, L.inverse(), R, R.inverse()]
words = st.lists(st.integers(0, 3), max_size=8).map(lambda w: _prod(w))


def _prod(w):
    g = IDENTITY
    for i in w:
        g = g * GENS[i]
    return g


@given(words, words, st.integers(-2, 2))
def test_membership_rule(g, x, C):
    H = HalfspaceQuery(x, C)
    d_x = farey_distance(mobius(g, INFINITY), mobius(x, INFINITY))
    d_1 = farey_distance(mobius(g, INFINITY), INFINITY)
    assert H.contains(g) == (d_x <= d_1 + C)
    cols = H.contains_columns(np.array([g.a], dtype=object), np.array([g.c], dtype=object))
    assert bool(cols[0]) == H.contains(g)


@given(words, words)
def test_halfspaces_cover(g, x):
    H = HalfspaceQuery(x)
    assert g in H or g in H.opposite()


def test_word_ball_size():
    # SL(2,Z) ball sizes in L, R and inverses
    assert len(word_ball(0)) == 1
    assert len(word_ball(1)) == 5
    assert len(word_ball(2)) == len({a * b for a in GENS + [IDENTITY] for b in GENS + [IDENTITY]})


def test_nested_family_small():
    fam = nested_family(A, 1, 2)
    assert len(fam.elements) == 2
    assert fam.lengths[1] - fam.lengths[0] >= 1
    assert fam.lengths == [relative_length(x) for x in fam.elements]


def test_nested_family_no_violations():
    fam = nested_family(A, 1, 5, ball=word_ball(7))
    assert fam.lengths == sorted(set(fam.lengths))
    assert fam.violations == [] and fam.checked > 0


def test_nested_family_spacing_two():
    fam = nested_family(GroupElement(1, 1, 1, 2), 2, 3)
    assert all(b - a >= 2 for a, b in zip(fam.lengths, fam.lengths[1:]))
    assert fam.exponents == sorted(fam.exponents)


def test_nested_family_rejects_non_hyperbolic():
    with pytest.raises(ValueError):
        nested_family(R, 1, 3)
    with pytest.raises(ValueError):
        nested_family(GroupElement(0, -1, 1, 0), 1, 3)
    with pytest.raises(ValueError):
        nested_family(A, 0, 3)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_mu_n_exact_vs_monte_carlo(n):
    est = mu_n_halfspace(uniform_lr(), n, HalfspaceQuery(A), 20_000, 100 + n, exact=True)
    assert abs(est.estimate - float(est.exact)) <= 3 * est.stderr


def test_mu_n_far_halfspace_is_small():
    far = HalfspaceQuery(A**40)
    est = mu_n_halfspace(uniform_lr(), 5, far, 2000, 1)
    assert est.estimate == 0 and est.upper_bound < 0.01


def test_mu_n_covering():
    H = HalfspaceQuery(A**2)
    a = mu_n_halfspace(uniform_lr(), 10, H, 5000, 8)
    b = mu_n_halfspace(uniform_lr(), 10, H.opposite(), 5000, 8)
    assert a.estimate + b.estimate >= 1 - 3 * max(a.stderr, b.stderr)


def test_mu_n_requires_steps():
    with pytest.raises(ValueError):
        mu_n_halfspace(uniform_lr(), 0, HalfspaceQuery(A), 10, 0)


def test_harmonic_two_horizons():
    h = harmonic_halfspace(uniform_lr(), HalfspaceQuery(A), 40, 4000, 2)
    rec = h.record()
    assert {"estimate", "estimate_2N", "horizon_gap", "accepted", "caveat"} <= set(rec)
    assert h.accepted


def test_first_hit():
    mu = uniform_lr()
    path = sample_path(mu, 30, 4)
    H0 = HalfspaceQuery(A, 100)  # contains everything at this scale
    assert first_hit(path, H0) == (0, IDENTITY)
    assert first_hit(path, HalfspaceQuery(A**60)) is None
    hit = first_hit(path, HalfspaceQuery(A))
    if hit is not None:
        k, g = hit
        assert g == path.positions[k] and g in HalfspaceQuery(A)
        assert all(w not in HalfspaceQuery(A) for w in path.positions[:k])


def test_conditional_decay_bounded():
    fam = nested_family(A, 1, 3)
    rows = conditional_decay(uniform_lr(), fam.halfspaces(), 60, 3000, 5)
    assert len(rows) == 2
    for r in rows:
        assert r.hits > 0 and 0 <= r.fraction < 1


def test_fit_geometric():
    rep = decay_fit([(1, 0.5, 0.0), (2, 0.25, 0.0), (3, 0.125, 0.0)])
    assert rep.L_hat == pytest.approx(0.5, abs=1e-12)
    assert rep.slope_se == pytest.approx(0, abs=1e-12)
    assert not rep.non_decaying and not rep.non_monotone


def test_fit_constant():
    rep = decay_fit([(1, 0.3, 0.0), (2, 0.3, 0.0), (3, 0.3, 0.0)])
    assert rep.L_hat == pytest.approx(1.0)
    assert rep.non_decaying


def test_fit_weighted_and_flags():
    pts = [(1, 0.4, 0.01), (2, 0.21, 0.01), (3, 0.22, 0.01), (4, 0.05, 0.005), (5, 0.0, 0.0, 1000)]
    rep = decay_fit(pts, epsilon=0.5)
    assert rep.weighted and rep.non_monotone
    assert rep.below_resolution == [{"r": 5.0, "estimate": 0.0, "upper_bound": clopper_pearson_upper(0, 1000)}]
    assert rep.Q_hat == pytest.approx(math.exp(rep.intercept) / 0.5)
    assert rep.slope_ci_low < rep.slope < rep.slope_ci_high


def test_fit_needs_three_points():
    with pytest.raises(ValueError):
        decay_fit([(1, 0.5, 0.1), (1, 0.4, 0.1), (2, 0.2, 0.1)])


def test_clopper_pearson_zero_count():
    # closed form for k = 0: 1 - (1 - level)^(1/n)
    assert clopper_pearson_upper(0, 1000) == pytest.approx(1 - 0.05 ** (1 / 1000))
