from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyplab.torus import (
    IDENTITY,
    INFINITY,
    L,
    R,
    GroupElement,
    Slope,
    WordMetric,
    bfs_oracle,
    bfs_oracle_distances,
    cutting_sequence,
    farey_distance,
    farey_geodesic,
    intersection_number,
    mobius,
    parse_slope,
    reduce,
    relative_length,
    word_length,
)

GENS = [L, L.inverse(), R, R.inverse()]


def random_word(indices):
    g = IDENTITY
    for i in indices:
        g = g * GENS[i]
    return g


words = st.lists(st.integers(0, 3), max_size=8).map(random_word)
small_slopes = st.tuples(st.integers(-12, 12), st.integers(0, 12)).filter(lambda pq: pq != (0, 0)).map(lambda pq: reduce(*pq))


def slopes_in_box(n):
    return sorted({reduce(p, q) for p in range(-n, n + 1) for q in range(0, n + 1) if (p, q) != (0, 0)}, key=lambda s: (s.q, s.p))


@pytest.mark.parametrize(
    "pq, expected",
    [((2, 4), (1, 2)), ((3, 0), (1, 0)), ((0, -5), (0, 1)), ((-3, -6), (1, 2)), ((-1, 0), (1, 0))],
)
def test_reduce_canonical(pq, expected):
    assert reduce(*pq) == Slope(*expected)


def test_reduce_rejects_zero():
    with pytest.raises(ValueError):
        reduce(0, 0)


def test_slope_rejects_noncanonical():
    with pytest.raises(ValueError):
        Slope(2, 4)
    with pytest.raises(ValueError):
        Slope(-1, 0)


def test_parse_and_format_roundtrip():
    for text in ["1/0", "0/1", "-5/8", "13/21"]:
        assert str(parse_slope(text)) == text
    assert parse_slope("oo") == INFINITY
    g = GroupElement(2, 1, 1, 1)
    assert GroupElement.parse(str(g)) == g


def test_determinant_enforced():
    with pytest.raises(ValueError):
        GroupElement(1, 1, 1, 1)


@given(words, words, words)
def test_group_laws(g, h, k):
    assert (g * h) * k == g * (h * k)
    assert g * g.inverse() == IDENTITY
    assert (g * h).inverse() == h.inverse() * g.inverse()


def test_powers():
    a = GroupElement(2, 1, 1, 1)
    assert a**3 == a * a * a
    assert a**-2 == (a * a).inverse()
    assert a**0 == IDENTITY


def test_intersection_number_examples():
    assert intersection_number(INFINITY, Slope(5, 3)) == 3
    assert intersection_number(Slope(0, 1), Slope(1, 1)) == 1
    assert intersection_number(Slope(3, 7), Slope(3, 7)) == 0


def test_mobius_examples():
    assert mobius(R, Slope(0, 1)) == Slope(1, 1)
    assert mobius(GroupElement(2, 1, 1, 1), INFINITY) == Slope(2, 1)
    assert mobius(IDENTITY, Slope(-4, 9)) == Slope(-4, 9)


@given(words, small_slopes, small_slopes)
def test_mobius_preserves_intersection(g, s, t):
    assert intersection_number(mobius(g, s), mobius(g, t)) == intersection_number(s, t)


def test_cutting_sequence_examples():
    assert cutting_sequence(INFINITY, Slope(0, 1)) == [INFINITY, Slope(0, 1)]
    seq = cutting_sequence(INFINITY, Slope(1, 2))
    assert Slope(0, 1) in seq and Slope(1, 1) in seq
    with pytest.raises(ValueError):
        cutting_sequence(INFINITY, INFINITY)


def _crossed_triangle_vertices(x: Fraction):
    """Triangles of the tessellation met by the vertical line from oo down to x in (0, 1).

    Brute force over Farey neighbours with denominators up to that of x:
    the triangle (a/b, c/d, (a+c)/(b+d)) is crossed when a/b < x < c/d.
    """
    out = {INFINITY, Slope(0, 1), Slope(1, 1)}
    qmax = x.denominator
    for b in range(1, qmax + 1):
        for a in range(0, b + 1):
            for d in range(1, qmax + 1):
                for c in range(0, d + 1):
                    if b * c - a * d == 1 and Fraction(a, b) <= x <= Fraction(c, d):
                        out.update({reduce(a, b), reduce(c, d), reduce(a + c, b + d)})
    return {s for s in out if s.q <= qmax}


@pytest.mark.parametrize("p,q", [(1, 2), (2, 5), (5, 8), (3, 7)])
def test_cutting_sequence_matches_bruteforce(p, q):
    got = set(cutting_sequence(INFINITY, Slope(p, q)))
    assert got == _crossed_triangle_vertices(Fraction(p, q))


def test_distance_examples():
    assert farey_distance(Slope(3, 7), Slope(3, 7)) == 0
    for n in range(-5, 6):
        assert farey_distance(INFINITY, Slope(n, 1)) == 1
    assert farey_distance(INFINITY, Slope(1, 2)) == 2


def test_distance_zero_to_five_eighths_matches_stable_oracle():
    a, b = Slope(0, 1), Slope(5, 8)
    o500, o1000 = bfs_oracle(a, b, 500), bfs_oracle(a, b, 1000)
    assert o500 == o1000 == 3  # frozen from the oracle
    assert farey_distance(a, b) == o500


def test_oracle_examples():
    assert bfs_oracle(INFINITY, Slope(2, 1), 10) == 1
    assert bfs_oracle(INFINITY, Slope(1, 2), 10) == 2
    with pytest.raises(ValueError):
        bfs_oracle(INFINITY, Slope(1, 20), 10)


def test_distance_matches_oracle_on_box():
    slopes = slopes_in_box(6)
    for s in [INFINITY, Slope(0, 1), Slope(-2, 5)]:
        oracle = bfs_oracle_distances(s, slopes, 200)
        assert oracle == bfs_oracle_distances(s, slopes, 300)
        assert [farey_distance(s, t) for t in slopes] == oracle


@given(small_slopes, small_slopes, small_slopes)
def test_metric_axioms(s, t, u):
    d = farey_distance
    assert d(s, t) == d(t, s)
    assert (d(s, t) == 0) == (s == t)
    assert d(s, u) <= d(s, t) + d(t, u)


@given(small_slopes, small_slopes)
def test_adjacency_is_intersection_one(s, t):
    assert (farey_distance(s, t) == 1) == (intersection_number(s, t) == 1)


@given(words, small_slopes, small_slopes)
def test_isometry(g, s, t):
    assert farey_distance(mobius(g, s), mobius(g, t)) == farey_distance(s, t)


@given(small_slopes, small_slopes)
def test_geodesic_is_a_shortest_path(s, t):
    geo = farey_geodesic(s, t)
    assert geo.vertices[0] == s and geo.vertices[-1] == t
    assert geo.length == farey_distance(s, t)
    for u, v in zip(geo.vertices, geo.vertices[1:]):
        assert intersection_number(u, v) == 1


def test_huge_slopes_use_exact_integers():
    # consecutive Fibonacci ratios: distance grows with the continued fraction
    fib = [1, 1]
    while len(fib) < 200:
        fib.append(fib[-1] + fib[-2])
    s = Slope(fib[-1], fib[-2])
    assert farey_distance(INFINITY, s) == farey_distance(mobius(L.inverse(), INFINITY), mobius(L.inverse(), s))
    assert farey_distance(INFINITY, s) > 0


def test_word_length_examples():
    assert word_length(IDENTITY, [L, R]) == 0
    for g in GENS:
        assert word_length(g, [L, R]) == 1
    # R*L = [[2,1],[1,1]] and no generator equals it
    assert R * L == GroupElement(2, 1, 1, 1)
    assert GroupElement(2, 1, 1, 1) not in GENS
    assert word_length(GroupElement(2, 1, 1, 1), [L, R]) == 2


def test_word_length_matches_plain_bfs():
    plain = WordMetric([L, R], radius=6)
    small = WordMetric([L, R], radius=3)
    for idx in product(range(4), repeat=5):
        g = random_word(idx)
        assert small.length(g) == plain.length(g)


def test_word_length_beyond_radius():
    metric = WordMetric([L, R], radius=1)
    with pytest.raises(ValueError):
        metric.length(R**5)


def test_relative_length_examples():
    assert relative_length(IDENTITY) == 0
    for k in range(-6, 7):
        assert relative_length(R**k) == 0
    assert relative_length(L) == 1


@given(words)
def test_relative_length_is_displacement(g):
    assert relative_length(g) == farey_distance(INFINITY, mobius(g, INFINITY))
    assert relative_length(g) <= word_length(g, [L, R])
