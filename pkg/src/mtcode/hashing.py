"""Hash ensembles and exact checks of the (alpha, beta)-hash inequality.

Also verifies the multi-source balanced-coloring and collision-resistance
bounds by enumerating every member of every ensemble. All bound arithmetic is
done in ``Fraction`` so a reported violation is never a rounding artefact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .gf import (
    BudgetExceeded,
    EnsembleSpec,
    FieldVector,
    ModulusError,
    DimensionError,
    all_vectors,
    check_budget,
    sample_matrix,
)

ALPHA_GRID = (Fraction(1), Fraction(3, 2), Fraction(2), Fraction(4), Fraction(8))
DEFAULT_TUPLE_BUDGET = 1 << 20


@dataclass(frozen=True)
class HashProfile:
    alpha: Fraction
    beta: Fraction
    exact: bool = True

    def to_json(self) -> dict:
        return {"alpha": float(self.alpha), "beta": float(self.beta), "exact": self.exact}


def compose_profiles(profiles: Sequence[HashProfile]) -> HashProfile:
    """Profile of a product ensemble: alphas multiply, (beta + 1)s multiply."""
    alpha, b1 = Fraction(1), Fraction(1)
    for p in profiles:
        alpha *= p.alpha
        b1 *= p.beta + 1
    return HashProfile(alpha, b1 - 1, all(p.exact for p in profiles))


# --- collision probabilities -----------------------------------------------


def _sparse_column_dist(spec: EnsembleSpec) -> list[Fraction]:
    """Law of one sparse column over GF(q)^rows (indexed big-endian)."""
    q, rows, w = spec.q, spec.rows, spec.weight
    vecs = all_vectors(rows, q)
    ok = (vecs != 0).sum(axis=1) == w
    count = math.comb(rows, w) * (q - 1) ** w
    return [Fraction(1, count) if flag else Fraction(0) for flag in ok]


def _sparse_zero_probs(spec: EnsembleSpec) -> list[Fraction]:
    """P(F d = 0) for a difference d with support size k, for k = 0..cols."""
    q, rows = spec.q, spec.rows
    size = q**rows
    vecs = all_vectors(rows, q)
    weights = q ** np.arange(rows - 1, -1, -1, dtype=np.int64)
    add = ((vecs[:, None, :] + vecs[None, :, :]) % q) @ weights
    col = _sparse_column_dist(spec)
    support = [i for i, v in enumerate(col) if v]
    cur = [Fraction(0)] * size
    cur[0] = Fraction(1)
    out = [Fraction(1)]
    for _ in range(spec.cols):
        nxt = [Fraction(0)] * size
        for a, pa in enumerate(cur):
            if pa:
                for b in support:
                    nxt[add[a, b]] += pa * col[b]
        cur = nxt
        out.append(cur[0])
    return out


def _check_pair(spec: EnsembleSpec, z: FieldVector) -> None:
    if z.q != spec.q:
        raise ModulusError("modulus mismatch")
    if z.length != spec.cols:
        raise DimensionError(f"vector length {z.length} != ensemble cols {spec.cols}")


def collision_probability(spec: EnsembleSpec, z: FieldVector, z2: FieldVector) -> Fraction:
    """Exact P_F(F z = F z')."""
    _check_pair(spec, z)
    _check_pair(spec, z2)
    if z == z2:
        return Fraction(1)
    if spec.kind in ("UniformLinear", "RandomBinningTable"):
        return Fraction(1, spec.q**spec.rows)
    k = int(np.count_nonzero(z.elements != z2.elements))
    return _sparse_zero_probs(spec)[k]


def _collision_by_difference(spec: EnsembleSpec) -> tuple[np.ndarray, list[Fraction]]:
    """(support size of z' - z for every z', probability per support size).

    Valid for every z since all three ensembles are translation invariant.
    """
    vecs = all_vectors(spec.cols, spec.q)
    supp = (vecs != 0).sum(axis=1)
    if spec.kind == "SparseColumnWeight":
        probs = _sparse_zero_probs(spec)
    else:
        probs = [Fraction(1)] + [Fraction(1, spec.q**spec.rows)] * spec.cols
    return supp, probs


def hash_lhs(spec: EnsembleSpec, alpha, z: FieldVector | None = None, budget: int | None = None) -> Fraction:
    """Left side of the hash inequality at z (sum of collision probabilities above alpha/|Im F|)."""
    check_budget(spec.domain_size, budget, "hash inequality domain")
    z = FieldVector.zeros(spec.cols, spec.q) if z is None else z
    _check_pair(spec, z)
    thresh = Fraction(alpha) / spec.image_size
    vecs = all_vectors(spec.cols, spec.q)
    diff = (vecs - z.elements[None, :]) % spec.q
    supp = (diff != 0).sum(axis=1)
    _, probs = _collision_by_difference(spec)
    counts = np.bincount(supp, minlength=spec.cols + 1)
    total = Fraction(0)
    for k in range(1, spec.cols + 1):
        if counts[k] and probs[k] > thresh:
            total += counts[k] * probs[k]
    return total


def verify_hash_inequality(spec: EnsembleSpec, alpha, beta, z: FieldVector, budget: int | None = None) -> dict:
    lhs = hash_lhs(spec, alpha, z, budget)
    return {"holds": lhs <= Fraction(beta), "lhs": lhs}


def profile_ensemble(spec: EnsembleSpec, budget: int | None = None) -> HashProfile:
    """Smallest (beta, alpha) in lexicographic order over ALPHA_GRID."""
    best = None
    for alpha in ALPHA_GRID:
        beta = hash_lhs(spec, alpha, None, budget)
        if best is None or (beta, alpha) < (best.beta, best.alpha):
            best = HashProfile(alpha, beta, True)
    return best


# --- ensemble enumeration --------------------------------------------------


def ensemble_size(spec: EnsembleSpec) -> int:
    q, r, c = spec.q, spec.rows, spec.cols
    if spec.kind == "UniformLinear":
        return q ** (r * c)
    if spec.kind == "SparseColumnWeight":
        return (math.comb(r, spec.weight) * (q - 1) ** spec.weight) ** c
    return (q**r) ** (q**c)


def _sparse_columns(spec: EnsembleSpec) -> np.ndarray:
    q, rows, w = spec.q, spec.rows, spec.weight
    cols = []
    for pos in itertools.combinations(range(rows), w):
        for vals in itertools.product(range(1, q), repeat=w):
            v = np.zeros(rows, dtype=np.int64)
            v[list(pos)] = vals
            cols.append(v)
    return np.array(cols)


def member_tables(spec: EnsembleSpec, budget: int | None = None) -> np.ndarray:
    """Bin index of every z for every ensemble member: shape (members, q**cols).

    Members are listed once each and are equiprobable.
    """
    q, rows, cols = spec.q, spec.rows, spec.cols
    m, d = ensemble_size(spec), spec.domain_size
    check_budget(m * d, budget, "ensemble enumeration")
    if spec.kind == "RandomBinningTable":
        base = q**rows
        idx = np.arange(m, dtype=np.int64)
        return np.stack([(idx // base ** (d - 1 - k)) % base for k in range(d)], axis=1)
    if spec.kind == "UniformLinear":
        entries = all_vectors(rows * cols, q).reshape(m, rows, cols)
    else:
        options = _sparse_columns(spec)
        choice = all_vectors(cols, len(options)) if len(options) > 1 else np.zeros((1, cols), dtype=np.int64)
        entries = np.transpose(options[choice], (0, 2, 1))
    zs = all_vectors(cols, q)
    syn = np.einsum("mrc,dc->mdr", entries, zs) % q
    weights = q ** np.arange(rows - 1, -1, -1, dtype=np.int64)
    return syn @ weights


def enumerate_members(spec: EnsembleSpec, budget: int | None = None):
    """Every ensemble member as a FieldMatrix (linear kinds only)."""
    from .gf import FieldMatrix

    if not spec.is_linear:
        raise ValueError("table ensemble members are not matrices")
    q, rows, cols = spec.q, spec.rows, spec.cols
    check_budget(ensemble_size(spec), budget, "ensemble enumeration")
    if spec.kind == "UniformLinear":
        for v in all_vectors(rows * cols, q):
            yield FieldMatrix(v.reshape(rows, cols), q)
    else:
        options = _sparse_columns(spec)
        for combo in itertools.product(range(len(options)), repeat=cols):
            yield FieldMatrix(options[list(combo)].T, q, storage="sparse")


# --- multi-source lemmas ---------------------------------------------------


def _as_int_weights(Q) -> tuple[np.ndarray, int]:
    """Scale a nonnegative table to integers; returns (ints, denominator)."""
    flat = [Fraction(v) if not isinstance(v, float) else Fraction(v) for v in np.asarray(Q, dtype=object).reshape(-1)]
    if any(v < 0 for v in flat):
        raise ValueError("Q must be nonnegative")
    den = 1
    for v in flat:
        den = den * v.denominator // math.gcd(den, v.denominator)
    ints = np.array([int(v * den) for v in flat], dtype=object).reshape(np.shape(Q))
    return ints, den


def _subsets(k: int):
    for r in range(1, k + 1):
        yield from itertools.combinations(range(k), r)


def _restricted_max_sum(W: np.ndarray, keep: tuple[int, ...]) -> int:
    """max over z_keep (with positive support) of the sum of W over the other axes."""
    other = tuple(a for a in range(W.ndim) if a not in keep)
    sums = W.sum(axis=other) if other else W
    return max(int(v) for v in np.asarray(sums, dtype=object).reshape(-1))


def _check_lemma_inputs(specs: Sequence[EnsembleSpec], shape) -> None:
    if not 1 <= len(specs) <= 3:
        raise ValueError("need 1 to 3 sources")
    want = tuple(s.domain_size for s in specs)
    if tuple(shape) != want:
        raise DimensionError(f"table shape {tuple(shape)} != product domain {want}")


def _tuple_budget(specs, budget) -> None:
    total = 1
    for s in specs:
        total *= ensemble_size(s)
    limit = DEFAULT_TUPLE_BUDGET if budget is None else budget
    if total > limit:
        raise BudgetExceeded(f"{total} function tuples exceed budget {limit}")


def _image_positions(spec: EnsembleSpec) -> tuple[np.ndarray, int]:
    """Map from codomain index to position within the image set."""
    img = spec.image_set()
    pos = np.full(spec.q**spec.rows, -1, dtype=np.int64)
    pos[img] = np.arange(len(img))
    return pos, len(img)


def verify_balanced_coloring_bound(
    specs: Sequence[EnsembleSpec], Q, T, budget: int | None = None, tight: bool = False
) -> dict:
    """Exact check of the multi-source balanced-coloring bound.

    ``Q`` and ``T`` are tables over the product domain (one axis per source,
    big-endian vector indices); ``T`` is a boolean mask. The left side is
    E_F sum_c |Q(T & bin c)/Q(T) - 1/prod|Im F_s||. The right side uses the
    per-source profiles; with ``tight`` the factor (beta_S + 1) of each term
    is replaced by (beta_{S'} + 1) for the subset S' that term covers.
    """
    T = np.asarray(T, dtype=bool)
    _check_lemma_inputs(specs, T.shape)
    _check_lemma_inputs(specs, np.shape(Q))
    _tuple_budget(specs, budget)
    W, _ = _as_int_weights(np.where(T, np.asarray(Q, dtype=object), 0))
    QT = int(W.sum())
    if QT <= 0:
        raise ValueError("Q(T) must be positive")

    k = len(specs)
    tables = [member_tables(s) for s in specs]
    maps = [_image_positions(s) for s in specs]
    ims = [m[1] for m in maps]
    N = math.prod(ims)
    pts = np.argwhere(T)
    wts = np.array([int(W[tuple(p)]) for p in pts], dtype=np.int64)
    # bin position of each T point under every member, per source
    binpos = [maps[s][0][tables[s][:, pts[:, s]]] for s in range(k)]
    stride = [math.prod(ims[s + 1 :]) for s in range(k)]
    last = binpos[-1]
    M_last = last.shape[0]
    total = 0
    for prefix in itertools.product(*[range(len(t)) for t in tables[:-1]]):
        base = np.zeros(len(pts), dtype=np.int64)
        for s, f in enumerate(prefix):
            base += binpos[s][f] * stride[s]
        flat = (np.arange(M_last, dtype=np.int64)[:, None] * N + base[None, :] + last).reshape(-1)
        qc = np.bincount(flat, weights=np.tile(wts, M_last), minlength=M_last * N)
        qc = np.rint(qc).astype(np.int64)
        total += int(np.abs(qc * N - QT).sum())
    nmembers = math.prod(len(t) for t in tables)
    lhs = Fraction(total, QT * N * nmembers)

    profiles = [profile_ensemble(s) for s in specs]
    full = compose_profiles(profiles)
    radicand = full.alpha - 1
    for sub in _subsets(k):
        comp = [s for s in range(k) if s not in sub]
        a_c = compose_profiles([profiles[s] for s in comp]).alpha
        b = compose_profiles([profiles[s] for s in sub]).beta if tight else full.beta
        msub = _restricted_max_sum(W, sub)
        radicand += a_c * (b + 1) * math.prod(ims[s] for s in sub) * Fraction(msub, QT)
    holds = lhs * lhs <= radicand
    return {
        "lhs": lhs,
        "rhs": math.sqrt(radicand),
        "rhs_squared": radicand,
        "holds": bool(holds),
        "profiles": profiles,
    }


def verify_collision_bound(
    specs: Sequence[EnsembleSpec], T, z_S: Sequence[int], budget: int | None = None
) -> dict:
    """Exact check of the multi-source collision-resistance bound.

    ``z_S`` gives the vector index of the distinguished point per source.
    """
    T = np.asarray(T, dtype=bool)
    _check_lemma_inputs(specs, T.shape)
    _tuple_budget(specs, budget)
    k = len(specs)
    z_S = tuple(int(v) for v in z_S)
    tables = [member_tables(s) for s in specs]
    comp = T.copy()
    comp[z_S] = False
    pts = np.argwhere(comp)
    hits = 0
    if len(pts):
        # same[s][f, t]: member f of source s maps competitor t to z's bin
        same = [tables[s][:, pts[:, s]] == tables[s][:, [z_S[s]]] for s in range(k)]
        last = same[-1]
        for prefix in itertools.product(*[range(len(t)) for t in tables[:-1]]):
            acc = np.ones(len(pts), dtype=bool)
            for s, f in enumerate(prefix):
                acc &= same[s][f]
            hits += int((last & acc[None, :]).any(axis=1).sum())
    nmembers = math.prod(len(t) for t in tables)
    lhs = Fraction(hits, nmembers)

    profiles = [profile_ensemble(s) for s in specs]
    ims = [s.image_size for s in specs]
    rhs = compose_profiles(profiles).beta
    size_T = int(T.sum())
    for sub in _subsets(k):
        rest = tuple(s for s in range(k) if s not in sub)
        if not rest:
            obar = size_T
        else:
            # largest fibre of T over z_rest
            counts = T.sum(axis=sub)
            obar = int(counts.max()) if counts.size else 0
        a = compose_profiles([profiles[s] for s in sub]).alpha
        b = compose_profiles([profiles[s] for s in rest]).beta
        rhs += a * (b + 1) * obar / math.prod(ims[s] for s in sub)
    return {"lhs": lhs, "rhs": rhs, "holds": bool(lhs <= rhs), "profiles": profiles}


def report_json(config: dict, result: dict) -> dict:
    """Verification report record {config, lhs, rhs, holds}."""
    return {
        "config": config,
        "lhs": float(result["lhs"]),
        "rhs": float(result["rhs"]),
        "holds": bool(result["holds"]),
    }


__all__ = [
    "ALPHA_GRID",
    "EnsembleSpec",
    "HashProfile",
    "collision_probability",
    "compose_profiles",
    "enumerate_members",
    "ensemble_size",
    "hash_lhs",
    "member_tables",
    "profile_ensemble",
    "report_json",
    "sample_matrix",
    "verify_balanced_coloring_bound",
    "verify_collision_bound",
    "verify_hash_inequality",
]
