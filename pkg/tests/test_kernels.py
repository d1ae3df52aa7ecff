"""The compiled kernels and the Python fallback must agree exactly."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hyplab import _pykernels, kernels
from hyplab.hyperbolic import random_connected

try:
    from hyplab import _ckernels
except ImportError:  # pragma: no cover - build without a compiler
    _ckernels = None

needs_c = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")
    if _ckernels is not None:
        assert kernels.BACKEND == "cython"


def test_pure_backend_forced(monkeypatch):
    import importlib

    monkeypatch.setenv("HYPLAB_PURE", "1")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python"
        assert mod.farey_ladder is _pykernels.farey_ladder
    finally:
        monkeypatch.delenv("HYPLAB_PURE")
        importlib.reload(kernels)


@needs_c
@given(st.integers(-(10**15), 10**15), st.integers(2, 10**15))
def test_ladder_parity(p, q):
    import math

    if math.gcd(p, q) != 1:
        return
    assert _ckernels.farey_ladder(p, q) == _pykernels.farey_ladder(p, q)


@needs_c
@pytest.mark.parametrize("seed", range(6))
def test_graph_kernel_parity(seed):
    sp = random_connected(8 + 3 * seed, seed + 2, seed)
    D_c = _ckernels.bfs_all_pairs(sp.n, sp.indptr, sp.indices)
    D_p = _pykernels.bfs_all_pairs(sp.n, sp.indptr, sp.indices)
    np.testing.assert_array_equal(D_c, D_p)
    np.testing.assert_array_equal(
        _ckernels.canonical_predecessors(D_c, sp.indptr, sp.indices),
        _pykernels.canonical_predecessors(D_p, sp.indptr, sp.indices),
    )
    assert _ckernels.delta_four_point(D_c) == _pykernels.delta_four_point(D_p)
    T_c = _ckernels.interval_distance_table(D_c)
    T_p = _pykernels.interval_distance_table(D_p)
    np.testing.assert_array_equal(T_c, T_p)
    assert _ckernels.delta_interval_slim(D_c, T_c) == _pykernels.delta_interval_slim(D_p, T_p)


@needs_c
@pytest.mark.parametrize("source", [(1, 0), (0, 1), (3, 7), (-2, 5)])
def test_box_bfs_parity(source):
    np.testing.assert_array_equal(_ckernels.farey_box_bfs(*source, 40), _pykernels.farey_box_bfs(*source, 40))


@pytest.mark.parametrize("source", [(1, 0), (0, 1), (3, 7), (-2, 5)])
def test_ladder_matches_box_bfs(source):
    """Every slope in the box, measured from several sources, against plain BFS."""
    import math

    n = 40
    dist = kernels.farey_box_bfs(*source, n)
    sp, sq = source
    # move the source to 1/0 with an integer matrix, then use the ladder
    if sq == 0:
        g = (1, 0, 0, 1)
    else:
        x, y = _ext(sp, sq)
        g = (x, y, -sq, sp)
    for q in range(0, n + 1):
        for p in range(-n, n + 1):
            if math.gcd(p, q) != 1 or (q == 0 and p != 1):
                continue
            want = int(dist[(p + n) * (n + 1) + q])
            if want < 0:
                continue
            a, c = g[0] * p + g[1] * q, g[2] * p + g[3] * q
            if c < 0 or (c == 0 and a < 0):
                a, c = -a, -c
            got = 0 if c == 0 else 1 if c == 1 else _pykernels.farey_ladder(a, c)
            assert got == want, (source, p, q)


def _ext(a, b):
    old_r, r, old_s, s, old_t, t = a, b, 1, 0, 0, 1
    while r:
        k = old_r // r
        old_r, r = r, old_r - k * r
        old_s, s = s, old_s - k * s
        old_t, t = t, old_t - k * t
    if old_r < 0:
        old_s, old_t = -old_s, -old_t
    return old_s, old_t
