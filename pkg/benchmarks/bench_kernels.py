"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--bits 20]

Prints one line per kernel with the best time of each backend and the speedup.
"""

import argparse
import timeit

import numpy as np

from mtcode import _fallback

try:
    from mtcode import _ckernels
except ImportError:
    _ckernels = None


def cases(bits: int, rng: np.random.Generator):
    rows = 8
    cols = rng.integers(0, 1 << rows, size=bits, dtype=np.int64)
    n = 1 << bits
    nkeys = 1 << (bits // 2)
    keys = rng.integers(0, nkeys, size=n, dtype=np.int64)
    values = rng.random(n)
    ranks = rng.permutation(n).astype(np.int64)
    mask = rng.random(n) < 0.3
    mat = rng.integers(0, 1 << 40, size=48, dtype=np.int64)
    return {
        "gf2_syndrome_table": lambda m: m.gf2_syndrome_table(cols, bits),
        "segment_max": lambda m: m.segment_max(keys, values, nkeys),
        "segment_argmax": lambda m: m.segment_argmax(keys, values, ranks, nkeys),
        "segment_argmin_masked": lambda m: m.segment_argmin_masked(keys, ranks, mask, nkeys),
        "gf2_rref": lambda m: m.gf2_rref(mat, 40, 40),
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--bits", type=int, default=20, help="log2 of the sweep size")
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    if _ckernels is None:
        print("compiled extension not available; timing the fallback only")
    print(f"{'kernel':24s} {'python [s]':>12s} {'cython [s]':>12s} {'speedup':>8s}")
    for name, fn in cases(args.bits, rng).items():
        t_py = min(timeit.repeat(lambda: fn(_fallback), number=1, repeat=args.repeat))
        if _ckernels is None:
            print(f"{name:24s} {t_py:12.5f} {'-':>12s} {'-':>8s}")
            continue
        a, b = fn(_fallback), fn(_ckernels)
        same = all(np.array_equal(np.asarray(x), np.asarray(y)) for x, y in zip(a, b)) if isinstance(a, tuple) else np.array_equal(a, b)
        t_c = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat))
        flag = "" if same else "  (outputs differ!)"
        print(f"{name:24s} {t_py:12.5f} {t_c:12.5f} {t_py / t_c:8.1f}x{flag}")


if __name__ == "__main__":
    main()
