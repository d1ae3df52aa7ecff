"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 3]
"""

from __future__ import annotations

import argparse
import math
import random
import timeit

from hyplab import _pykernels
from hyplab.hyperbolic import farey_ball, random_connected

try:
    from hyplab import _ckernels
except ImportError:
    _ckernels = None


def cases():
    sp = random_connected(60, 40, 1)
    fb = farey_ball(20)
    D = _pykernels.bfs_all_pairs(sp.n, sp.indptr, sp.indices)
    Dfb = _pykernels.bfs_all_pairs(fb.n, fb.indptr, fb.indices)
    T = _pykernels.interval_distance_table(Dfb)
    rng = random.Random(0)
    slopes = []
    while len(slopes) < 2000:
        p, q = rng.randrange(-(10**12), 10**12), rng.randrange(2, 10**12)
        if math.gcd(p, q) == 1:
            slopes.append((p, q))

    def ladder(mod):
        return lambda: [mod.farey_ladder(p, q) for p, q in slopes]

    return [
        ("farey_ladder x2000", ladder),
        ("bfs_all_pairs n=60", lambda mod: lambda: mod.bfs_all_pairs(sp.n, sp.indptr, sp.indices)),
        ("canonical_predecessors n=60", lambda mod: lambda: mod.canonical_predecessors(D, sp.indptr, sp.indices)),
        ("delta_four_point n=60", lambda mod: lambda: mod.delta_four_point(D)),
        (f"interval_distance_table n={fb.n}", lambda mod: lambda: mod.interval_distance_table(Dfb)),
        (f"delta_interval_slim n={fb.n}", lambda mod: lambda: mod.delta_interval_slim(Dfb, T)),
        ("farey_box_bfs bound=300", lambda mod: lambda: mod.farey_box_bfs(3, 7, 300)),
    ]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled kernels not built; only the fallback is timed")
    print(f"{'kernel':34s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s}")
    for name, make in cases():
        tp = min(timeit.repeat(make(_pykernels), number=1, repeat=args.repeat))
        if _ckernels is None:
            print(f"{name:34s} {tp:11.4f} {'-':>11s} {'-':>8s}")
            continue
        tc = min(timeit.repeat(make(_ckernels), number=1, repeat=args.repeat))
        print(f"{name:34s} {tp:11.4f} {tc:11.4f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
