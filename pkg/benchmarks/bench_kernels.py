"""Time the numba and pure-numpy kernel paths against each other.

    python benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]

The path is switched through the AQDS_NO_NUMBA environment flag, the same
switch users set.  Each kernel is run once untimed per path so numba
compilation stays out of the numbers, and the two paths' outputs are
checked for equality.
"""

from __future__ import annotations

import argparse
import os
import time

import numpy as np

from aqds import kernels


def _cases(scale: float):
    rng = np.random.default_rng(0)
    k = max(1, int(20000 * scale))
    n = 32
    seeds = rng.integers(0, 1 << n, size=k, dtype=np.uint64)
    polys = kernels.derive_irreducible_batch(seeds, n)
    from aqds.messaging import reverse_bits

    masks = reverse_bits(polys & np.uint64((1 << n) - 1), n)
    states = rng.integers(0, 1 << n, size=k, dtype=np.uint64)
    msgs = rng.integers(0, 2, size=(k, 256), dtype=np.uint8)
    cand = rng.integers(0, 1 << n, size=k, dtype=np.uint64) | np.uint64(1 << n) | np.uint64(1)
    clicks = np.sort(rng.choice(int(200_000_000 * scale) + 10, size=int(2_000_000 * scale) + 2, replace=False))
    return {
        "hash_batch (k x 256 bits, n=32)": lambda: kernels.hash_batch(masks, states, msgs, n),
        "irreducible_batch (n=32)": lambda: kernels.irreducible_batch(cand, n),
        "derive_irreducible_batch (n=32)": lambda: kernels.derive_irreducible_batch(seeds, n),
        "pair_clicks (2e6 clicks)": lambda: kernels.pair_clicks(clicks, 100),
    }


def _run(fn, repeat: int) -> tuple[float, np.ndarray]:
    out = fn()  # warm-up (numba compile or cache load)
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0, help="problem-size multiplier")
    args = ap.parse_args()
    cases = _cases(args.scale)
    print(f"{'kernel':36s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}")
    saved = os.environ.get(kernels.NO_NUMBA_ENV)
    try:
        for name, fn in cases.items():
            os.environ[kernels.NO_NUMBA_ENV] = "0"
            t_nb, out_nb = _run(fn, args.repeat)
            os.environ[kernels.NO_NUMBA_ENV] = "1"
            t_np, out_np = _run(fn, args.repeat)
            if not np.array_equal(out_nb, out_np):
                raise SystemExit(f"{name}: numba and numpy paths disagree")
            print(f"{name:36s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:7.1f}x")
    finally:
        if saved is None:
            os.environ.pop(kernels.NO_NUMBA_ENV, None)
        else:
            os.environ[kernels.NO_NUMBA_ENV] = saved
    print("numba available:", kernels._HAVE_NUMBA)


if __name__ == "__main__":
    main()
