"""Time the compiled score-accumulation kernel against the numpy fallback.

Run:  python3 benchmarks/bench_kernels.py [trials] [atoms] [columns] [blocks]

Both paths perform one float64 addition per (trial, atom) pair per block, so
the speedup is pure overhead reduction (no temporary gather array in the
compiled path). Outputs are checked bit-identical before timing.
"""

from __future__ import annotations

import sys
import time

import numpy as np

from covertid.kernels import USING_ACCEL, _accumulate_gather_numpy, accumulate_gather


def bench(trials: int, atoms: int, columns: int, blocks: int, repeats: int = 5) -> None:
    rng = np.random.default_rng(0)
    vals = rng.standard_normal((trials, columns))
    cols = [
        np.ascontiguousarray(rng.integers(0, columns, size=atoms), dtype=np.intp)
        for _ in range(blocks)
    ]

    ref = np.zeros((trials, atoms))
    out = np.zeros((trials, atoms))
    for c in cols:
        _accumulate_gather_numpy(ref, vals, c)
        accumulate_gather(out, vals, c)
    identical = np.array_equal(ref, out)
    print(f"compiled path active: {USING_ACCEL}")
    print(f"outputs bit-identical: {identical}")
    if not identical:
        raise SystemExit("kernel mismatch")

    def time_path(fn) -> float:
        best = float("inf")
        for _ in range(repeats):
            scores = np.zeros((trials, atoms))
            t0 = time.perf_counter()
            for c in cols:
                fn(scores, vals, c)
            best = min(best, time.perf_counter() - t0)
        return best

    t_numpy = time_path(_accumulate_gather_numpy)
    print(f"numpy fallback: {t_numpy * 1e3:9.3f} ms")
    if USING_ACCEL:
        t_accel = time_path(accumulate_gather)
        print(f"compiled:       {t_accel * 1e3:9.3f} ms")
        print(f"speedup:        {t_numpy / t_accel:9.2f}x")
    else:
        print("compiled path unavailable (build the extension or unset COVERTID_NO_ACCEL)")


if __name__ == "__main__":
    args = [int(a) for a in sys.argv[1:]]
    trials, atoms, columns, blocks = (args + [4096, 256, 2816, 11])[:4]
    bench(trials, atoms, columns, blocks)
