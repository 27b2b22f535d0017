"""Multi-terminal source code: linear encoders and coset decoders.

Each source s is compressed to c_s = f_s z_s. Decoder j sees the codewords of
its decode set D_j and its side information block y_j, and searches the coset
{z_D : f_D z_D = c_D}. Three decoders are provided: the constrained random
number generator (sample from the posterior restricted to the coset), MAP,
and a typicality decoder. ``exact_error`` evaluates the block error
probability in closed form by sweeping every (z, y) block.

Block weights are computed from letter counts (the block type) so that blocks
of equal type get bit-identical probabilities; this keeps MAP tie-breaking
deterministic.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.stats import binomtest, chisquare

from . import kernels
from .gf import (
    DimensionError,
    EnsembleSpec,
    FieldMatrix,
    FieldVector,
    as_rng,
    check_budget,
    coset_ranks,
    mat_vec_mul,
    sample_matrix,
    solve_affine,
    syndrome_table,
)
from .probability import JointPMF, entropy, marginal, sample

DECODERS = ("crng", "map", "typical")


@dataclass(frozen=True)
class DecoderSpec:
    decode: tuple[str, ...]
    side: str | None = None

    def to_json(self) -> dict:
        return {"decode": list(self.decode), "side": self.side}


@dataclass(frozen=True, eq=False)
class SourceCodeSpec:
    """Block code for sources ``matrices.keys()`` drawn i.i.d. from ``model``."""

    model: JointPMF
    matrices: dict
    decoders: tuple[DecoderSpec, ...]
    n: int
    q: int = 2

    def __post_init__(self) -> None:
        object.__setattr__(self, "decoders", tuple(self.decoders))
        for s, f in self.matrices.items():
            if self.model.size_of(s) != self.q:
                raise ValueError(f"source {s!r} alphabet must be GF({self.q})")
            if f.q != self.q:
                raise ValueError(f"matrix for {s!r} is over GF({f.q})")
            if f.cols != self.n:
                raise DimensionError(f"matrix for {s!r} has {f.cols} columns, block length is {self.n}")
        if not self.decoders:
            raise ValueError("need at least one decoder")
        for d in self.decoders:
            if not d.decode:
                raise ValueError("decode sets must be nonempty")
            for s in d.decode:
                if s not in self.matrices:
                    raise KeyError(f"decoder references unknown source {s!r}")
            if d.side is not None:
                self.model.axis(d.side)
                if d.side in self.matrices:
                    raise ValueError("side information must not be a coded source")

    @property
    def sources(self) -> tuple[str, ...]:
        return tuple(n for n in self.model.names if n in self.matrices)

    @property
    def rates(self) -> dict[str, float]:
        return {s: self.matrices[s].rows / self.n * math.log2(self.q) for s in self.sources}

    def stacked(self, names: Sequence[str]) -> FieldMatrix:
        return FieldMatrix.block_diag([self.matrices[s] for s in names])

    def to_json(self) -> dict:
        return {
            "q": self.q,
            "n": self.n,
            "model": self.model.to_json(),
            "matrices": {s: self.matrices[s].to_json() for s in self.sources},
            "decoders": [d.to_json() for d in self.decoders],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SourceCodeSpec":
        return cls(
            JointPMF.from_json(obj["model"]),
            {s: FieldMatrix.from_json(m) for s, m in obj["matrices"].items()},
            tuple(DecoderSpec(tuple(d["decode"]), d.get("side")) for d in obj["decoders"]),
            int(obj["n"]),
            int(obj.get("q", 2)),
        )


@dataclass(frozen=True)
class DecodeResult:
    reproduction: dict
    failed: bool = False
    fallback: bool = False


def rows_for_rate(rate: float, n: int, q: int = 2) -> int:
    """Number of matrix rows l with (l/n) log2 q closest to ``rate``."""
    return int(round(rate * n / math.log2(q)))


def build_code(
    model: JointPMF,
    rates: dict[str, float],
    decoders: Sequence[DecoderSpec],
    n: int,
    ensemble: EnsembleSpec | None = None,
    rng=None,
    q: int = 2,
) -> SourceCodeSpec:
    """Draw one matrix per source from ``ensemble`` at the requested rates."""
    gen = as_rng(rng)
    ens = ensemble or EnsembleSpec("UniformLinear", q)
    mats = {}
    for s in [v for v in model.names if v in rates]:
        l = rows_for_rate(rates[s], n, q)
        mats[s] = FieldMatrix.zeros(0, n, q) if l == 0 else sample_matrix(ens, l, n, gen)
    return SourceCodeSpec(model, mats, tuple(decoders), n, q)


def encode(spec: SourceCodeSpec, z: dict) -> dict:
    return {s: mat_vec_mul(spec.matrices[s], z[s]) for s in spec.sources if s in z}


# --- single-letter tables ---------------------------------------------------


def _vars(spec: SourceCodeSpec, j: int) -> list[str]:
    d = spec.decoders[j]
    return list(d.decode) + ([d.side] if d.side is not None else [])


def _cell_probs(model: JointPMF, names: Sequence[str]) -> np.ndarray:
    """Flattened marginal over ``names`` (first name most significant)."""
    m = marginal(model, names).reorder(names)
    return m.probs.reshape(-1)


def _weights_from_counts(counts: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """prod_c probs[c] ** counts[:, c], multiplied in cell order."""
    w = np.ones(counts.shape[0])
    for c in range(len(probs)):
        w *= probs[c] ** counts[:, c]
    return w


def _cell_counts(cells: np.ndarray, ncells: int) -> np.ndarray:
    return np.stack([(cells == c).sum(axis=1) for c in range(ncells)], axis=1)


def _member_cells(spec: SourceCodeSpec, j: int, members: np.ndarray, y) -> np.ndarray:
    """Joint single-letter cell index for every member and coordinate."""
    n, q = spec.n, spec.q
    d = spec.decoders[j]
    k = len(d.decode)
    ysize = spec.model.size_of(d.side) if d.side is not None else 1
    cells = np.zeros((members.shape[0], n), dtype=np.int64)
    for i in range(k):
        cells = cells * q + members[:, i * n : (i + 1) * n]
    cells = cells * ysize
    if d.side is not None:
        cells = cells + np.asarray(y, dtype=np.int64)[None, :]
    return cells


def _coset(spec: SourceCodeSpec, j: int, c: dict):
    d = spec.decoders[j]
    f = spec.stacked(d.decode)
    cv = FieldVector(np.concatenate([np.asarray(c[s].elements if isinstance(c[s], FieldVector) else c[s]) for s in d.decode]).astype(np.int64), spec.q)
    return solve_affine(f, cv)


def _split(spec: SourceCodeSpec, j: int, z: np.ndarray) -> dict:
    d = spec.decoders[j]
    n = spec.n
    return {s: FieldVector(z[i * n : (i + 1) * n], spec.q) for i, s in enumerate(d.decode)}


def _posterior_weights(spec: SourceCodeSpec, j: int, members: np.ndarray, y) -> np.ndarray:
    names = _vars(spec, j)
    probs = _cell_probs(spec.model, names)
    cells = _member_cells(spec, j, members, y)
    return _weights_from_counts(_cell_counts(cells, len(probs)), probs)


def _failed(spec: SourceCodeSpec, j: int) -> DecodeResult:
    d = spec.decoders[j]
    return DecodeResult({s: None for s in d.decode}, failed=True)


def crng_decode(spec: SourceCodeSpec, j: int, c: dict, y=None, rng=None, budget: int | None = None) -> DecodeResult:
    """Draw z_D from the block posterior given y, restricted to the coset of c."""
    cs = _coset(spec, j, c)
    if cs.is_empty:
        return _failed(spec, j)
    members = cs.members(budget)
    w = _posterior_weights(spec, j, members, y)
    total = w.sum()
    gen = as_rng(rng)
    if total <= 0:
        pick = int(gen.integers(len(members)))
        return DecodeResult(_split(spec, j, members[pick]), fallback=True)
    pick = sample(w / total, gen)
    return DecodeResult(_split(spec, j, members[pick]))


def map_decode(spec: SourceCodeSpec, j: int, c: dict, y=None, budget: int | None = None) -> DecodeResult:
    """Most probable coset member; ties go to the earliest in enumeration order."""
    cs = _coset(spec, j, c)
    if cs.is_empty:
        return _failed(spec, j)
    members = cs.members(budget)
    w = _posterior_weights(spec, j, members, y)
    return DecodeResult(_split(spec, j, members[int(np.argmax(w))]))


def entropy_table(spec: SourceCodeSpec, j: int) -> dict:
    """Shannon H(Z_D' | Y, Z_{D minus D'}) for every nonempty D' of decoder j."""
    d = spec.decoders[j]
    side = [d.side] if d.side is not None else []
    out = {}
    for sub in _nonempty_subsets(d.decode):
        rest = [s for s in d.decode if s not in sub]
        out[frozenset(sub)] = entropy(spec.model, list(sub), side + rest)
    return out


def _nonempty_subsets(items: Sequence[str]):
    for r in range(1, len(items) + 1):
        yield from itertools.combinations(items, r)


def _info_terms(spec: SourceCodeSpec, j: int, counts: np.ndarray) -> dict:
    """Block conditional self-information for each D', from cell counts."""
    d = spec.decoders[j]
    names = _vars(spec, j)
    probs = _cell_probs(spec.model, names)
    sizes = [spec.model.size_of(v) for v in names]
    with np.errstate(divide="ignore"):
        logp = -np.log2(probs)
    grid = np.array(list(itertools.product(*[range(a) for a in sizes])), dtype=np.int64).reshape(-1, len(sizes))
    out = {}
    with np.errstate(invalid="ignore"):
        full = np.where(counts > 0, logp[None, :] * counts, 0.0).sum(axis=1)
    for sub in _nonempty_subsets(d.decode):
        keep = [v for v in names if v not in sub]
        if keep:
            kp = _cell_probs(spec.model, keep)
            kpos = [names.index(v) for v in keep]
            ksizes = [sizes[p] for p in kpos]
            kcell = np.zeros(len(grid), dtype=np.int64)
            for p, a in zip(kpos, ksizes):
                kcell = kcell * a + grid[:, p]
            with np.errstate(divide="ignore"):
                klog = -np.log2(kp)
            # counts of the marginal cells are sums of the joint cell counts
            kcounts = np.zeros((counts.shape[0], len(kp)), dtype=np.int64)
            for c in range(len(probs)):
                kcounts[:, kcell[c]] += counts[:, c]
            with np.errstate(invalid="ignore"):
                marg = np.where(kcounts > 0, klog[None, :] * kcounts, 0.0).sum(axis=1)
        else:
            marg = np.zeros(counts.shape[0])
        out[frozenset(sub)] = full - marg
    return out


def _typical_mask(spec: SourceCodeSpec, j: int, counts: np.ndarray, epsilon: float, table: dict | None) -> np.ndarray:
    table = entropy_table(spec, j) if table is None else table
    n = spec.n
    mask = np.ones(counts.shape[0], dtype=bool)
    for sub, info in _info_terms(spec, j, counts).items():
        mask &= info <= n * (table[sub] + epsilon) + 1e-9
    return mask


def typicality_decode(
    spec: SourceCodeSpec, j: int, c: dict, y=None, epsilon: float = 0.1, entropy_tab: dict | None = None,
    budget: int | None = None,
) -> DecodeResult:
    """First coset member (enumeration order) that is jointly typical with y."""
    cs = _coset(spec, j, c)
    if cs.is_empty:
        return _failed(spec, j)
    members = cs.members(budget)
    names = _vars(spec, j)
    ncells = len(_cell_probs(spec.model, names))
    counts = _cell_counts(_member_cells(spec, j, members, y), ncells)
    mask = _typical_mask(spec, j, counts, epsilon, entropy_tab)
    hit = np.flatnonzero(mask)
    if len(hit) == 0:
        return _failed(spec, j)
    return DecodeResult(_split(spec, j, members[hit[0]]))


def decode(spec: SourceCodeSpec, j: int, kind: str, c: dict, y=None, rng=None, epsilon: float = 0.1, entropy_tab=None):
    if kind == "crng":
        return crng_decode(spec, j, c, y, rng)
    if kind == "map":
        return map_decode(spec, j, c, y)
    if kind == "typical":
        return typicality_decode(spec, j, c, y, epsilon, entropy_tab)
    raise ValueError(f"unknown decoder {kind!r}")


def crng_chi_square(spec: SourceCodeSpec, j: int, c: dict, y, draws: int, seed: int = 0) -> dict:
    """Goodness of fit of repeated crng_decode draws against the closed-form posterior.

    Draw t uses trial_rng(seed, t). Cells with zero posterior mass must never
    be drawn; they are left out of the test.
    """
    cs = _coset(spec, j, c)
    if cs.is_empty:
        raise ValueError("empty coset")
    members = cs.members()
    w = _posterior_weights(spec, j, members, y)
    if w.sum() <= 0:
        raise ValueError("posterior has no mass on the coset")
    pos = {m.tobytes(): i for i, m in enumerate(members)}
    counts = np.zeros(len(members), dtype=np.int64)
    d = spec.decoders[j]
    for t in range(draws):
        rep = crng_decode(spec, j, c, y, trial_rng(seed, t)).reproduction
        z = np.concatenate([rep[s].elements for s in d.decode]).astype(members.dtype)
        counts[pos[z.tobytes()]] += 1
    support = w > 0
    if counts[~support].any():
        raise AssertionError("crng_decode drew a zero-probability member")
    expected = draws * w[support] / w[support].sum()
    if support.sum() == 1:
        return {"statistic": 0.0, "pvalue": 1.0, "cells": 1}
    stat, pval = chisquare(counts[support], expected)
    return {"statistic": float(stat), "pvalue": float(pval), "cells": int(support.sum())}


# --- block-space sweeps -----------------------------------------------------


class _BlockSpace:
    """All n-blocks of a list of variables; index is mixed radix, first variable most significant."""

    def __init__(self, names: Sequence[str], sizes: Sequence[int], n: int):
        self.names = list(names)
        self.sizes = [int(a) for a in sizes]
        self.n = n
        self.nblocks = [a**n for a in self.sizes]
        self.total = math.prod(self.nblocks)
        self.strides = [math.prod(self.nblocks[i + 1 :]) for i in range(len(self.names))]
        self.ncells = math.prod(self.sizes)

    def var_index(self, idx: np.ndarray, name: str) -> np.ndarray:
        i = self.names.index(name)
        return (idx // self.strides[i]) % self.nblocks[i]

    def types(self, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(inverse map into unique types, unique cell-count rows)."""
        n = self.n
        base = n + 1
        per_var = [self.var_index(idx, v) for v in self.names]
        use_code = self.ncells * math.log2(base) < 62
        if use_code:
            powers = np.array([base**c for c in range(self.ncells)], dtype=np.int64)
            code = np.zeros(len(idx), dtype=np.int64)
        else:
            counts = np.zeros((self.ncells, len(idx)), dtype=np.int16)
        for k in range(n):
            cell = np.zeros(len(idx), dtype=np.int64)
            for bv, a in zip(per_var, self.sizes):
                cell = cell * a + (bv // a ** (n - 1 - k)) % a
            if use_code:
                code += powers[cell]
            else:
                for c in range(self.ncells):
                    counts[c] += cell == c
        if use_code:
            ucode, inv = np.unique(code, return_inverse=True)
            ucounts = np.stack([(ucode // base**c) % base for c in range(self.ncells)], axis=1)
        else:
            ucols, inv = np.unique(counts, axis=1, return_inverse=True)
            ucounts = ucols.T.astype(np.int64)
        return inv.reshape(-1), ucounts


def _rank_table(spec: SourceCodeSpec, names: Sequence[str]) -> np.ndarray:
    f = spec.stacked(names)
    template = solve_affine(f, FieldVector.zeros(f.rows, spec.q))
    return coset_ranks(template)


@dataclass
class _DecoderSweep:
    """Per-decoder quantities over its own (z_D, y) block space."""

    space: _BlockSpace
    key: np.ndarray
    nkeys: int
    type_inv: np.ndarray
    type_counts: np.ndarray
    probs: np.ndarray
    zD: np.ndarray


def _sweep(spec: SourceCodeSpec, j: int, budget: int | None) -> _DecoderSweep:
    d = spec.decoders[j]
    names = _vars(spec, j)
    space = _BlockSpace(names, [spec.model.size_of(v) for v in names], spec.n)
    check_budget(space.total, budget, "block-space sweep")
    ny = spec.model.size_of(d.side) ** spec.n if d.side is not None else 1
    idx = np.arange(space.total, dtype=np.int64)
    zD = idx // ny
    f = spec.stacked(d.decode)
    syn = syndrome_table(f, budget)
    key = syn[zD] * ny + idx % ny
    inv, ucounts = space.types(idx)
    return _DecoderSweep(space, key, (spec.q**f.rows) * ny, inv, ucounts, _cell_probs(spec.model, names), zD)


def _correct_indicator(spec, j, sw: _DecoderSweep, kind, epsilon, table, w) -> np.ndarray:
    """P(decoder j is correct | its block) for every block of its space."""
    if kind == "crng":
        s1 = np.bincount(sw.key, weights=w, minlength=sw.nkeys)
        denom = s1[sw.key]
        return np.divide(w, denom, out=np.zeros_like(w), where=denom > 0)
    ranks = _rank_table(spec, spec.decoders[j].decode)[sw.zD]
    if kind == "map":
        chosen = kernels.segment_argmax(sw.key, w, ranks, sw.nkeys)
    elif kind == "typical":
        mask = _typical_mask(spec, j, sw.type_counts, epsilon, table)[sw.type_inv]
        chosen = kernels.segment_argmin_masked(sw.key, ranks, mask, sw.nkeys)
    else:
        raise ValueError(f"unknown decoder {kind!r}")
    corr = np.zeros(len(w))
    corr[chosen[chosen >= 0]] = 1.0
    return corr


def _exact_single(spec: SourceCodeSpec, kind: str, epsilon, table, budget) -> float:
    sw = _sweep(spec, 0, budget)
    wt = _weights_from_counts(sw.type_counts, sw.probs)
    w = wt[sw.type_inv]
    if kind == "map":
        mx = kernels.segment_max(sw.key, w, sw.nkeys)
        return 1.0 - float(mx[mx >= 0].sum())
    if kind == "crng":
        s1 = np.bincount(sw.key, weights=w, minlength=sw.nkeys)
        s2 = np.bincount(sw.key, weights=w * w, minlength=sw.nkeys)
        ok = s1 > 0
        return 1.0 - float((s2[ok] / s1[ok]).sum())
    corr = _correct_indicator(spec, 0, sw, kind, epsilon, table, w)
    return 1.0 - float((w * corr).sum())


def _exact_multi(spec: SourceCodeSpec, kind: str, epsilon, tables, budget) -> float:
    names: list[str] = []
    for j in range(len(spec.decoders)):
        for v in _vars(spec, j):
            if v not in names:
                names.append(v)
    names = [v for v in spec.model.names if v in names]
    full = _BlockSpace(names, [spec.model.size_of(v) for v in names], spec.n)
    check_budget(full.total, budget, "block-space sweep")
    idx = np.arange(full.total, dtype=np.int64)
    inv, ucounts = full.types(idx)
    w_full = _weights_from_counts(ucounts, _cell_probs(spec.model, names))[inv]
    del inv
    prod = np.ones(full.total)
    for j in range(len(spec.decoders)):
        sw = _sweep(spec, j, budget)
        wj = _weights_from_counts(sw.type_counts, sw.probs)[sw.type_inv]
        corr = _correct_indicator(spec, j, sw, kind, epsilon, tables[j], wj)
        sub = np.zeros(full.total, dtype=np.int64)
        for v in sw.space.names:
            sub = sub * (spec.model.size_of(v) ** spec.n) + full.var_index(idx, v)
        prod *= corr[sub]
    return 1.0 - float((w_full * prod).sum())


def _exact_rational(spec: SourceCodeSpec, kind: str, epsilon, table, budget) -> Fraction:
    """Single-decoder error with integer block weights (no rounding anywhere)."""
    sw = _sweep(spec, 0, budget)
    fr = [Fraction(float(p)) for p in sw.probs]
    den = 1
    for p in fr:
        den = den * p.denominator // math.gcd(den, p.denominator)
    nums = [int(p * den) for p in fr]
    wt = [math.prod(nums[c] ** int(k) for c, k in enumerate(row)) for row in sw.type_counts]
    total_den = den**spec.n
    big = total_den * total_den >= 2**62
    order = np.argsort(sw.key, kind="stable")
    keys = sw.key[order]
    starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
    wobj = np.array(wt, dtype=object)[sw.type_inv[order]]
    if not big:
        wint = wobj.astype(np.int64)
    if kind == "map":
        mx = np.maximum.reduceat(wint if not big else wobj, starts)
        correct = Fraction(int(sum(int(v) for v in mx)), total_den)
    elif kind == "crng":
        s1 = np.add.reduceat(wint if not big else wobj, starts)
        s2 = np.add.reduceat((wint * wint) if not big else wobj * wobj, starts)
        correct = Fraction(0)
        for a, b in zip(s2, s1):
            if b:
                correct += Fraction(int(a), int(b))
        correct /= total_den
    else:
        w = _weights_from_counts(sw.type_counts, sw.probs)[sw.type_inv]
        corr = _correct_indicator(spec, 0, sw, kind, epsilon, table, w)
        hit = np.flatnonzero(corr)
        wt_arr = np.array(wt, dtype=object)
        correct = Fraction(int(sum(wt_arr[sw.type_inv[hit]])), total_den)
    return 1 - correct


def additive_structure(spec: SourceCodeSpec):
    """Detect a single decoder of an additive pair.

    Returns (noise pmf over GF(q), f_A, f_B or None) when the model is
    Z_A = Z_B + N with Z_B uniform and N independent, and the decoder either
    decodes both (no side info) or decodes Z_A with side info Z_B.
    """
    if len(spec.decoders) != 1:
        return None
    d = spec.decoders[0]
    q = spec.q
    if d.side is None and len(d.decode) == 2:
        a, b = d.decode
    elif d.side is not None and len(d.decode) == 1 and spec.model.size_of(d.side) == q:
        a, b = d.decode[0], d.side
    else:
        return None
    tab = marginal(spec.model, [a, b]).reorder([a, b]).probs
    phi = np.array([q * tab[e % q, 0] for e in range(q)])
    expect = np.array([[phi[(x - y) % q] / q for y in range(q)] for x in range(q)])
    if not np.allclose(tab, expect, rtol=0, atol=1e-15):
        return None
    fb = spec.matrices[b] if d.side is None else None
    return phi, spec.matrices[a], fb


def _exact_additive(spec: SourceCodeSpec, kind: str, budget) -> float:
    """Error of an additive pair via the noise cosets of ker f_A + ker f_B.

    With K' = ker f_A + ker f_B and k = dim ker f_A + dim ker f_B, the
    probability of correct decoding is q^(k' - k) times a sum over the cosets
    E of K' of max_E phi (MAP) or sum_E phi^2 / sum_E phi (CRNG).
    """
    found = additive_structure(spec)
    if found is None:
        raise ValueError("model/decoder is not an additive pair")
    phi, fa, fb = found
    q, n = spec.q, spec.n
    check_budget(q**n, budget, "noise-space sweep")
    basis = list(solve_affine(fa, FieldVector.zeros(fa.rows, q)).kernel_basis)
    k = len(basis)
    if fb is not None:
        kb = list(solve_affine(fb, FieldVector.zeros(fb.rows, q)).kernel_basis)
        basis += kb
        k += len(kb)
    if basis:
        kmat = FieldMatrix(np.stack([b.elements for b in basis]), q)
        kprime = kmat.rank()
        perp = solve_affine(kmat, FieldVector.zeros(kmat.rows, q)).kernel_basis
        H = FieldMatrix(np.stack([b.elements for b in perp]), q) if perp else FieldMatrix.zeros(0, n, q)
    else:
        kprime = 0
        H = FieldMatrix.identity(n, q)
    keys = syndrome_table(H)
    nkeys = q**H.rows
    space = _BlockSpace(["N"], [q], n)
    inv, ucounts = space.types(np.arange(q**n, dtype=np.int64))
    w = _weights_from_counts(ucounts, phi)[inv]
    scale = float(q) ** (kprime - k)
    if kind == "map":
        mx = kernels.segment_max(keys, w, nkeys)
        return 1.0 - scale * float(mx[mx >= 0].sum())
    if kind == "crng":
        s1 = np.bincount(keys, weights=w, minlength=nkeys)
        s2 = np.bincount(keys, weights=w * w, minlength=nkeys)
        ok = s1 > 0
        return 1.0 - scale * float((s2[ok] / s1[ok]).sum())
    raise ValueError("the additive path supports the map and crng decoders")


def exact_error(
    spec: SourceCodeSpec,
    kind: str,
    epsilon: float = 0.1,
    entropy_tab=None,
    exact: bool = False,
    method: str = "auto",
    budget: int | None = None,
):
    """Probability that some decoder misreproduces some source in its decode set.

    ``exact=True`` returns a Fraction computed with integer block weights
    (single decoder only). ``method`` is "generic", "additive" or "auto"
    (additive whenever the model has that structure and the decoder is not
    typicality based, generic otherwise).
    """
    if kind not in DECODERS:
        raise ValueError(f"unknown decoder {kind!r}")
    if exact:
        if len(spec.decoders) != 1:
            raise ValueError("exact arithmetic is provided for a single decoder")
        return _exact_rational(spec, kind, epsilon, entropy_tab, budget)
    if method == "additive":
        return _exact_additive(spec, kind, budget)
    if method not in ("auto", "generic"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto" and kind != "typical" and additive_structure(spec) is not None:
        return _exact_additive(spec, kind, budget)
    if len(spec.decoders) == 1:
        return _exact_single(spec, kind, epsilon, entropy_tab, budget)
    tables = entropy_tab if entropy_tab is not None else [None] * len(spec.decoders)
    return _exact_multi(spec, kind, epsilon, tables, budget)


# --- Monte Carlo ------------------------------------------------------------


@dataclass(frozen=True)
class MCResult:
    estimate: float
    ci_low: float
    ci_high: float
    errors: int
    trials: int

    @property
    def ci95(self) -> tuple[float, float]:
        return self.ci_low, self.ci_high


def wilson_interval(errors: int, trials: int) -> tuple[float, float]:
    ci = binomtest(errors, trials).proportion_ci(0.95, method="wilson")
    return float(ci.low), float(ci.high)


def trial_rng(seed: int, t: int) -> np.random.Generator:
    """Per-trial generator; depends only on (seed, trial index)."""
    return np.random.default_rng([int(seed), int(t)])


def draw_blocks(spec: SourceCodeSpec, rng) -> dict:
    """One i.i.d. n-block of every model variable, as int arrays."""
    letters = sample(spec.model, rng, size=spec.n)
    return {v: letters[:, i] for i, v in enumerate(spec.model.names)}


def source_trial(spec: SourceCodeSpec, kind: str, rng, epsilon: float = 0.1, tables=None) -> bool:
    """Run one block through encoder and decoders; True on any error."""
    blocks = draw_blocks(spec, rng)
    z = {s: FieldVector(blocks[s], spec.q) for s in spec.sources}
    c = encode(spec, z)
    for j, d in enumerate(spec.decoders):
        y = blocks[d.side] if d.side is not None else None
        tab = tables[j] if tables is not None else None
        res = decode(spec, j, kind, c, y, rng, epsilon, tab)
        if res.failed or any(res.reproduction[s] != z[s] for s in d.decode):
            return True
    return False


def _mc_chunk(args) -> int:
    spec, kind, seed, start, stop, epsilon, tables = args
    return sum(source_trial(spec, kind, trial_rng(seed, t), epsilon, tables) for t in range(start, stop))


def run_chunks(fn, spec, kind, seed, trials, epsilon, tables, workers: int = 1, chunk: int = 256) -> int:
    jobs = [(spec, kind, seed, a, min(a + chunk, trials), epsilon, tables) for a in range(0, trials, chunk)]
    if workers <= 1 or len(jobs) == 1:
        return sum(fn(job) for job in jobs)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(fn, jobs))


def mc_error(
    spec: SourceCodeSpec, kind: str, trials: int, seed: int = 0, epsilon: float = 0.1, workers: int = 1
) -> MCResult:
    """Monte Carlo block error rate with a Wilson 95% interval."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if kind not in DECODERS:
        raise ValueError(f"unknown decoder {kind!r}")
    tables = [entropy_table(spec, j) for j in range(len(spec.decoders))] if kind == "typical" else None
    errors = run_chunks(_mc_chunk, spec, kind, seed, trials, epsilon, tables, workers)
    lo, hi = wilson_interval(errors, trials)
    return MCResult(errors / trials, lo, hi, errors, trials)
