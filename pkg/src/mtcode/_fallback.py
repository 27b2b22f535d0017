"""Pure numpy implementations of the enumeration kernels.

These are the reference versions; ``_ckernels`` (Cython) must agree with them
bit for bit. All inputs are 1-d numpy arrays.
"""

from __future__ import annotations

import numpy as np


def gf2_syndrome_table(cols: np.ndarray, nbits: int) -> np.ndarray:
    """Syndrome index of every vector in GF(2)^nbits.

    ``cols[b]`` is the packed syndrome contributed by bit ``b`` of the vector
    index (bit 0 is the least significant). Entry ``i`` of the result is the
    XOR of ``cols[b]`` over the set bits of ``i``.
    """
    cols = np.asarray(cols, dtype=np.uint64)
    out = np.zeros(1 << nbits, dtype=np.uint64)
    for b in range(nbits):
        half = 1 << b
        np.bitwise_xor(out[:half], cols[b], out=out[half : 2 * half])
    return out


def segment_max(keys: np.ndarray, values: np.ndarray, nkeys: int) -> np.ndarray:
    """Per-key maximum of ``values``; empty keys get -1.0."""
    out = np.full(nkeys, -1.0)
    np.maximum.at(out, keys, values)
    return out


def segment_argmax(
    keys: np.ndarray, values: np.ndarray, ranks: np.ndarray, nkeys: int
) -> np.ndarray:
    """Index of the largest value per key, ties broken by the smallest rank.

    Keys with no members get -1.
    """
    order = np.lexsort((ranks, -values, keys))
    sorted_keys = keys[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = sorted_keys[1:] != sorted_keys[:-1]
    out = np.full(nkeys, -1, dtype=np.int64)
    out[sorted_keys[first]] = order[first]
    return out


def segment_argmin_masked(
    keys: np.ndarray, ranks: np.ndarray, mask: np.ndarray, nkeys: int
) -> np.ndarray:
    """Index of the smallest-rank masked member per key, or -1."""
    idx = np.flatnonzero(mask)
    out = np.full(nkeys, -1, dtype=np.int64)
    if len(idx) == 0:
        return out
    k = keys[idx]
    order = np.lexsort((ranks[idx], k))
    sk = k[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = sk[1:] != sk[:-1]
    out[sk[first]] = idx[order[first]]
    return out


def gf2_rref(rows: np.ndarray, ncols: int, npivot: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of bit-packed GF(2) rows.

    Column ``k`` lives at bit ``ncols - 1 - k``. Only the leftmost ``npivot``
    columns may hold pivots (the rest is an augmented part). Pivot search
    takes the leftmost column with a nonzero entry and the first row at or
    below the current pivot row.
    """
    work = [int(r) for r in rows]
    pivots: list[int] = []
    r = 0
    for col in range(npivot):
        if r == len(work):
            break
        bit = 1 << (ncols - 1 - col)
        hit = None
        for i in range(r, len(work)):
            if work[i] & bit:
                hit = i
                break
        if hit is None:
            continue
        work[r], work[hit] = work[hit], work[r]
        for i in range(len(work)):
            if i != r and work[i] & bit:
                work[i] ^= work[r]
        pivots.append(col)
        r += 1
    return np.array(work, dtype=np.uint64), pivots
