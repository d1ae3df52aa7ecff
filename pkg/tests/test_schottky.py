import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyplab.schottky import (
    Arc,
    PingPongCertificate,
    certify_schottky,
    find_schottky_pair,
    fixed_points,
    free_group_audit,
    independent,
    is_hyperbolic,
    power_order,
)
from hyplab.torus import IDENTITY, INFINITY, L, R, GroupElement, Slope, mobius, reduce

A = GroupElement(2, 1, 1, 1)
B = GroupElement(1, 1, 1, 2)
GENS = [L, L.inverse(), R, R.inverse()]


def _prod(w):
    g = IDENTITY
    for i in w:
        g = g * GENS[i]
    return g


words = st.lists(st.integers(0, 3), min_size=1, max_size=8).map(_prod)


def test_is_hyperbolic():
    assert is_hyperbolic(A)
    assert not is_hyperbolic(R)
    assert not is_hyperbolic(GroupElement(0, -1, 1, 0))


def _residual(g, x):
    """c x^2 + (d - a) x - b at x = (u + v sqrt D)/w, as (rational part, sqrt part) times w^2."""
    u, v, w, D = x.u, x.v, x.w, x.D
    sq_rat, sq_irr = u * u + v * v * D, 2 * u * v
    rat = g.c * sq_rat + (g.d - g.a) * u * w - g.b * w * w
    irr = g.c * sq_irr + (g.d - g.a) * v * w
    return rat, irr


def test_golden_fixed_points():
    fp = fixed_points(A)
    assert fp.coefficients == (1, -1, -1)
    for x in fp.roots():
        assert _residual(A, x) == (0, 0)
    assert float(fp.attracting) == pytest.approx((1 + 5**0.5) / 2)
    assert float(fp.repelling) == pytest.approx((1 - 5**0.5) / 2)


@given(words)
def test_fixed_points_satisfy_identity(g):
    if not is_hyperbolic(g):
        return
    fp = fixed_points(g)
    assert fp.discriminant > 0
    for x in fp.roots():
        assert _residual(g, x) == (0, 0)
    assert fixed_points(g * g) == fp
    assert fixed_points(g.inverse()).attracting == fp.repelling


@given(words, words)
def test_conjugate_transports_quadratic(g, h):
    if not is_hyperbolic(g):
        return
    assert fixed_points(h * g * h.inverse()).coefficients == fixed_points(g).transported(h)


def test_attracting_root_attracts():
    fp = fixed_points(A)
    s = Slope(0, 1)
    for _ in range(12):
        s = mobius(A, s)
    assert abs(Fraction(s.p, s.q) - Fraction(float(fp.attracting))) < Fraction(1, 10**6)


def test_independence():
    assert independent(A, B)
    assert not independent(A, A**3)
    h = GroupElement(1, 2, 0, 1)
    assert independent(A, h * A * h.inverse())
    with pytest.raises(ValueError):
        independent(A, R)


def test_convergents_bracket_root():
    x = fixed_points(A).attracting
    conv = []
    it = x.convergents()
    for _ in range(10):
        conv.append(next(it))
    assert conv[:6] == [1, 2, Fraction(3, 2), Fraction(5, 3), Fraction(8, 5), Fraction(13, 8)]
    for c, d in zip(conv, conv[1:]):
        assert x.compare(c) * x.compare(d) < 0


def test_arc_membership_and_wrap():
    arc = Arc(Slope(1, 1), Slope(-1, 1))  # passes through 1/0
    assert INFINITY in arc and Slope(5, 1) in arc and Slope(-3, 1) in arc
    assert Slope(0, 1) not in arc
    inner = Arc(Slope(2, 1), Slope(-2, 1))
    assert arc.contains_arc(inner) and not inner.contains_arc(arc)
    assert arc.disjoint(Arc(Slope(-1, 2), Slope(1, 2)))


@given(words, st.integers(-9, 9), st.integers(1, 9), st.integers(-9, 9), st.integers(1, 9))
def test_arc_image_orientation(g, p1, q1, p2, q2):
    lo, hi = reduce(p1, q1), reduce(p2, q2)
    if lo == hi:
        return
    arc = Arc(lo, hi)
    img = arc.image(g)
    # sample interior points: the mediant of the endpoints lies in exactly one of the two arcs
    for s in [reduce(p1 + p2, q1 + q2), reduce(p1 - p2, q1 - q2) if (p1 - p2, q1 - q2) != (0, 0) else lo]:
        assert (s in arc) == (mobius(g, s) in img)


def test_certificate_found_and_valid():
    res = certify_schottky(A, B, 10)
    cert = res.certificate
    assert cert is not None and cert.p <= 10 and cert.q <= 10
    assert cert.p == cert.q
    assert cert.verify()
    for i in range(4):
        for j in range(i + 1, 4):
            assert cert.intervals[i].disjoint(cert.intervals[j])
    # attracting and repelling points sit inside their arcs
    fa, fb = fixed_points(A), fixed_points(B)
    for arc, x in zip(cert.intervals, [fa.attracting, fa.repelling, fb.attracting, fb.repelling]):
        lo, hi = Fraction(arc.lo.p, arc.lo.q), Fraction(arc.hi.p, arc.hi.q)
        assert x.compare(lo) > 0 and x.compare(hi) < 0


def test_certificate_roundtrip_and_monotone():
    cert = certify_schottky(A, B, 10).certificate
    text = cert.dumps()
    rec = json.loads(text)
    assert set(rec) == {"a", "b", "p", "q", "intervals"}
    again = PingPongCertificate.loads(text)
    assert again == cert and again.verify()
    bigger = PingPongCertificate(A, B, cert.p + 1, cert.q, cert.intervals)
    assert bigger.verify()


def test_tampered_certificate_fails():
    cert = certify_schottky(A, B, 10).certificate
    bad = PingPongCertificate(A, B, 1, 1, cert.intervals)
    assert not bad.verify()
    overlap = PingPongCertificate(A, B, cert.p, cert.q, (cert.intervals[0], cert.intervals[0], *cert.intervals[2:]))
    assert any("meets" in f for f in overlap.failures())


def test_certify_rejects_dependent_pair():
    with pytest.raises(ValueError):
        certify_schottky(A, A**2)


def test_search_order():
    order = power_order(3)
    assert order[:4] == [(1, 1), (1, 2), (2, 1), (1, 3)]


def test_free_group_audit():
    cert = certify_schottky(A, B, 10).certificate
    audit = free_group_audit(cert, 6)
    assert audit.counts == {k: 4 * 3 ** (k - 1) for k in range(1, 7)}
    assert audit.words == 1456
    assert audit.passed


def test_semigroup_search():
    found = find_schottky_pair([L, R], max_len=3, max_power=4)
    assert found.certificate is not None and found.certificate.verify()
    f, g = found.pair
    assert is_hyperbolic(f) and is_hyperbolic(g) and independent(f, g)
