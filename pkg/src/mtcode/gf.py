"""Prime-field linear algebra: vectors, matrices, affine cosets.

Vectors over GF(q)^n are indexed big-endian: coordinate 0 is the most
significant base-q digit of ``FieldVector.index``. Every enumeration in the
package (exact sweeps, syndrome tables, decoders) relies on that convention.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from . import kernels

DEFAULT_ENUM_BUDGET = 1 << 24


class BudgetExceeded(RuntimeError):
    """An exact enumeration would exceed the configured budget."""


class DimensionError(ValueError):
    pass


class ModulusError(ValueError):
    pass


def enumeration_budget() -> int:
    """Budget for exact enumerations; ``MTCODE_ENUM_BUDGET`` overrides it."""
    raw = os.environ.get("MTCODE_ENUM_BUDGET")
    return int(raw) if raw else DEFAULT_ENUM_BUDGET


def check_budget(size: int, budget: int | None = None, what: str = "enumeration") -> None:
    limit = enumeration_budget() if budget is None else budget
    if size > limit:
        raise BudgetExceeded(f"{what} of size {size} exceeds budget {limit}")


def is_prime(q: int) -> bool:
    if q < 2:
        return False
    if q < 4:
        return True
    if q % 2 == 0:
        return False
    d = 3
    while d * d <= q:
        if q % d == 0:
            return False
        d += 2
    return True


def _check_modulus(q: int) -> None:
    if not is_prime(int(q)):
        raise ModulusError(f"modulus {q} is not prime")


@dataclass(frozen=True)
class FieldElement:
    value: int
    modulus: int = 2

    def __post_init__(self) -> None:
        _check_modulus(self.modulus)
        if not 0 <= self.value < self.modulus:
            raise ValueError(f"{self.value} not in [0, {self.modulus})")

    def _other(self, other: "FieldElement | int") -> int:
        if isinstance(other, FieldElement):
            if other.modulus != self.modulus:
                raise ModulusError("modulus mismatch")
            return other.value
        return int(other) % self.modulus

    def __add__(self, other):
        return FieldElement((self.value + self._other(other)) % self.modulus, self.modulus)

    def __sub__(self, other):
        return FieldElement((self.value - self._other(other)) % self.modulus, self.modulus)

    def __mul__(self, other):
        return FieldElement((self.value * self._other(other)) % self.modulus, self.modulus)

    def __neg__(self):
        return FieldElement((-self.value) % self.modulus, self.modulus)

    def inverse(self) -> "FieldElement":
        if self.value == 0:
            raise ZeroDivisionError("zero has no inverse")
        return FieldElement(pow(self.value, self.modulus - 2, self.modulus), self.modulus)

    def __int__(self) -> int:
        return self.value


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class FieldVector:
    """Immutable vector over GF(q)."""

    __slots__ = ("elements", "q")

    def __init__(self, values: Sequence[int] | np.ndarray, q: int = 2):
        _check_modulus(q)
        arr = np.array(values, dtype=np.int64).reshape(-1)
        if arr.size and (arr.min() < 0 or arr.max() >= q):
            raise ValueError(f"entries must lie in [0, {q})")
        object.__setattr__(self, "elements", _frozen(arr))
        object.__setattr__(self, "q", int(q))

    def __setattr__(self, name, value):
        raise AttributeError("FieldVector is immutable")

    def __reduce__(self):
        return (FieldVector, (np.array(self.elements), self.q))

    @classmethod
    def zeros(cls, n: int, q: int = 2) -> "FieldVector":
        return cls(np.zeros(n, dtype=np.int64), q)

    @classmethod
    def from_index(cls, index: int, n: int, q: int = 2) -> "FieldVector":
        digits = np.zeros(n, dtype=np.int64)
        for k in range(n - 1, -1, -1):
            index, digits[k] = divmod(index, q)
        return cls(digits, q)

    @property
    def length(self) -> int:
        return int(self.elements.shape[0])

    def __len__(self) -> int:
        return self.length

    def __iter__(self) -> Iterator[int]:
        return (int(v) for v in self.elements)

    def __getitem__(self, k: int) -> int:
        return int(self.elements[k])

    def __eq__(self, other) -> bool:
        if not isinstance(other, FieldVector):
            return NotImplemented
        return self.q == other.q and np.array_equal(self.elements, other.elements)

    def __hash__(self) -> int:
        return hash((self.q, self.elements.tobytes()))

    def __repr__(self) -> str:
        return f"FieldVector({self.tolist()}, q={self.q})"

    def tolist(self) -> list[int]:
        return [int(v) for v in self.elements]

    @property
    def index(self) -> int:
        idx = 0
        for v in self.elements:
            idx = idx * self.q + int(v)
        return idx

    def _same(self, other: "FieldVector") -> None:
        if other.q != self.q:
            raise ModulusError("modulus mismatch")
        if other.length != self.length:
            raise DimensionError("length mismatch")

    def __add__(self, other: "FieldVector") -> "FieldVector":
        self._same(other)
        return FieldVector((self.elements + other.elements) % self.q, self.q)

    def __sub__(self, other: "FieldVector") -> "FieldVector":
        self._same(other)
        return FieldVector((self.elements - other.elements) % self.q, self.q)

    def concat(self, *others: "FieldVector") -> "FieldVector":
        for o in others:
            if o.q != self.q:
                raise ModulusError("modulus mismatch")
        return FieldVector(np.concatenate([self.elements] + [o.elements for o in others]), self.q)


class FieldMatrix:
    """Immutable l x n matrix over GF(q).

    ``storage`` is only a hint ("dense" or "sparse"); it never changes results.
    """

    __slots__ = ("entries", "q", "storage")

    def __init__(self, entries, q: int = 2, storage: str = "dense", cols: int | None = None):
        _check_modulus(q)
        arr = np.array(entries, dtype=np.int64)
        if arr.size == 0:
            if cols is None:
                cols = arr.shape[1] if arr.ndim == 2 else 0
            arr = np.zeros((0, cols), dtype=np.int64)
        if arr.ndim != 2:
            raise DimensionError("matrix entries must be 2-d")
        if arr.size and (arr.min() < 0 or arr.max() >= q):
            raise ValueError(f"entries must lie in [0, {q})")
        if storage not in ("dense", "sparse"):
            raise ValueError("storage must be 'dense' or 'sparse'")
        object.__setattr__(self, "entries", _frozen(arr))
        object.__setattr__(self, "q", int(q))
        object.__setattr__(self, "storage", storage)

    def __setattr__(self, name, value):
        raise AttributeError("FieldMatrix is immutable")

    def __reduce__(self):
        return (FieldMatrix, (np.array(self.entries), self.q, self.storage, self.cols))

    @classmethod
    def identity(cls, n: int, q: int = 2) -> "FieldMatrix":
        return cls(np.eye(n, dtype=np.int64), q)

    @classmethod
    def zeros(cls, rows: int, cols: int, q: int = 2) -> "FieldMatrix":
        return cls(np.zeros((rows, cols), dtype=np.int64), q, cols=cols)

    @property
    def rows(self) -> int:
        return int(self.entries.shape[0])

    @property
    def cols(self) -> int:
        return int(self.entries.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def __eq__(self, other) -> bool:
        if not isinstance(other, FieldMatrix):
            return NotImplemented
        return self.q == other.q and self.shape == other.shape and np.array_equal(self.entries, other.entries)

    def __hash__(self) -> int:
        return hash((self.q, self.shape, self.entries.tobytes()))

    def __repr__(self) -> str:
        return f"FieldMatrix({self.entries.tolist()}, q={self.q})"

    def packed_rows(self) -> list[int]:
        """GF(2) rows as ints; column k sits at bit ``cols - 1 - k``."""
        if self.q != 2:
            raise ModulusError("bit packing is only defined for GF(2)")
        weights = 1 << np.arange(self.cols - 1, -1, -1, dtype=object)
        return [int(np.dot(row.astype(object), weights)) if self.cols else 0 for row in self.entries]

    def rank(self) -> int:
        return len(_rref(self.entries, self.q, self.cols)[1])

    def image_size(self) -> int:
        return self.q ** self.rank()

    def vstack(self, *others: "FieldMatrix") -> "FieldMatrix":
        for o in others:
            if o.q != self.q:
                raise ModulusError("modulus mismatch")
            if o.cols != self.cols:
                raise DimensionError("column count mismatch")
        return FieldMatrix(np.vstack([self.entries] + [o.entries for o in others]), self.q, cols=self.cols)

    @staticmethod
    def block_diag(mats: Sequence["FieldMatrix"]) -> "FieldMatrix":
        if not mats:
            raise ValueError("need at least one matrix")
        q = mats[0].q
        if any(m.q != q for m in mats):
            raise ModulusError("modulus mismatch")
        rows = sum(m.rows for m in mats)
        cols = sum(m.cols for m in mats)
        out = np.zeros((rows, cols), dtype=np.int64)
        r = c = 0
        for m in mats:
            out[r : r + m.rows, c : c + m.cols] = m.entries
            r += m.rows
            c += m.cols
        return FieldMatrix(out, q, cols=cols)

    def to_json(self) -> dict:
        rr, cc = np.nonzero(self.entries)
        coords = [[int(r), int(c), int(self.entries[r, c])] for r, c in zip(rr, cc)]
        return {"q": self.q, "rows": self.rows, "cols": self.cols, "coords": coords}

    @classmethod
    def from_json(cls, obj: dict) -> "FieldMatrix":
        q, rows, cols = int(obj["q"]), int(obj["rows"]), int(obj["cols"])
        arr = np.zeros((rows, cols), dtype=np.int64)
        for r, c, v in obj.get("coords", []):
            if not (0 <= r < rows and 0 <= c < cols):
                raise DimensionError(f"coordinate ({r}, {c}) outside {rows}x{cols}")
            arr[r, c] = v
        return cls(arr, q, storage=obj.get("storage", "dense"), cols=cols)


def mat_vec_mul(m: FieldMatrix, v: FieldVector) -> FieldVector:
    """Compute ``m @ v`` over GF(q)."""
    if m.q != v.q:
        raise ModulusError("modulus mismatch")
    if m.cols != v.length:
        raise DimensionError(f"matrix has {m.cols} columns, vector has length {v.length}")
    return FieldVector((m.entries @ v.elements) % m.q if m.rows else np.zeros(0, dtype=np.int64), m.q)


# --- elimination -----------------------------------------------------------


def _rref(aug: np.ndarray, q: int, npivot: int) -> tuple[np.ndarray, list[int]]:
    """RREF mod q with pivots restricted to the leftmost ``npivot`` columns."""
    a = np.array(aug, dtype=np.int64) % q
    nrows, ncols = a.shape
    if q == 2 and 0 < ncols <= 64 and nrows:
        weights = np.left_shift(np.uint64(1), np.arange(ncols - 1, -1, -1, dtype=np.uint64))
        packed = (a.astype(np.uint64) * weights).sum(axis=1, dtype=np.uint64)
        red, pivots = kernels.gf2_rref(packed, ncols, npivot)
        bits = ((red[:, None] >> np.arange(ncols - 1, -1, -1, dtype=np.uint64)) & np.uint64(1)).astype(np.int64)
        return bits, list(pivots)
    pivots: list[int] = []
    r = 0
    for col in range(npivot):
        if r == nrows:
            break
        nz = np.nonzero(a[r:, col])[0]
        if len(nz) == 0:
            continue
        hit = r + int(nz[0])
        if hit != r:
            a[[r, hit]] = a[[hit, r]]
        inv = pow(int(a[r, col]), q - 2, q)
        a[r] = (a[r] * inv) % q
        for i in range(nrows):
            if i != r and a[i, col]:
                a[i] = (a[i] - a[i, col] * a[r]) % q
        pivots.append(col)
        r += 1
    return a, pivots


@dataclass(frozen=True)
class CosetSystem:
    """Solution set {z : m z = c} as particular solution plus kernel basis.

    ``particular`` is None when the system is inconsistent. The particular
    solution is zero on ``free_columns`` and kernel vector k has a one at
    ``free_columns[k]`` and zeros on the other free columns, so the kernel
    coefficients of a member are exactly its free coordinates.
    """

    particular: FieldVector | None
    kernel_basis: tuple[FieldVector, ...]
    ambient_dim: int
    q: int = 2
    free_columns: tuple[int, ...] = field(default=())

    @property
    def is_empty(self) -> bool:
        return self.particular is None

    @property
    def dimension(self) -> int:
        return len(self.kernel_basis)

    @property
    def size(self) -> int:
        return 0 if self.is_empty else self.q ** self.dimension

    def contains(self, z: FieldVector) -> bool:
        if self.is_empty:
            return False
        d = z - self.particular
        coeffs = d.elements[list(self.free_columns)] if self.free_columns else np.zeros(0, dtype=np.int64)
        recon = self.combine(coeffs)
        return np.array_equal(recon, d.elements)

    def basis_matrix(self) -> np.ndarray:
        if not self.kernel_basis:
            return np.zeros((0, self.ambient_dim), dtype=np.int64)
        return np.stack([b.elements for b in self.kernel_basis])

    def combine(self, coeffs: np.ndarray) -> np.ndarray:
        return (np.asarray(coeffs, dtype=np.int64) @ self.basis_matrix()) % self.q

    def members(self, budget: int | None = None) -> np.ndarray:
        """All members as a (size, n) array in enumeration (Gray) order."""
        if self.is_empty:
            return np.zeros((0, self.ambient_dim), dtype=np.int64)
        check_budget(self.size, budget, "coset enumeration")
        coeffs = gray_sequence(self.dimension, self.q)
        return (self.particular.elements[None, :] + coeffs @ self.basis_matrix()) % self.q


def solve_affine(m: FieldMatrix, c: FieldVector) -> CosetSystem:
    """Solve ``m z = c`` by Gaussian elimination with deterministic pivoting."""
    if m.q != c.q:
        raise ModulusError("modulus mismatch")
    if m.rows != c.length:
        raise DimensionError(f"matrix has {m.rows} rows, right side has length {c.length}")
    n, q = m.cols, m.q
    aug = np.hstack([m.entries, c.elements.reshape(-1, 1)]) if m.rows else np.zeros((0, n + 1), dtype=np.int64)
    red, pivots = _rref(aug, q, n)
    rank = len(pivots)
    if red.shape[0] > rank and np.any(red[rank:, n] % q):
        return CosetSystem(None, (), n, q, ())
    free = tuple(k for k in range(n) if k not in set(pivots))
    part = np.zeros(n, dtype=np.int64)
    for i, p in enumerate(pivots):
        part[p] = red[i, n]
    basis = []
    for f in free:
        b = np.zeros(n, dtype=np.int64)
        b[f] = 1
        for i, p in enumerate(pivots):
            b[p] = (-red[i, f]) % q
        basis.append(FieldVector(b, q))
    return CosetSystem(FieldVector(part, q), tuple(basis), n, q, free)


def intersect_cosets(
    a: tuple[FieldMatrix, FieldVector], b: tuple[FieldMatrix, FieldVector]
) -> CosetSystem:
    """Intersection of {z : m1 z = c1} and {z : m2 z = c2}."""
    (m1, c1), (m2, c2) = a, b
    if m1.cols != m2.cols:
        raise DimensionError("ambient dimensions differ")
    return solve_affine(m1.vstack(m2), c1.concat(c2))


# --- enumeration order -----------------------------------------------------


def gray_sequence(d: int, q: int = 2) -> np.ndarray:
    """Modular q-ary Gray code of length d as a (q**d, d) array.

    Row i has digit k equal to (i_k - i_{k+1}) mod q, where i_k are the
    little-endian base-q digits of i. Consecutive rows differ in exactly one
    coordinate, which increases by one mod q.
    """
    idx = np.arange(q**d, dtype=np.int64)
    digits = np.stack([(idx // q**k) % q for k in range(d)], axis=1) if d else np.zeros((q**d, 0), dtype=np.int64)
    shifted = np.zeros_like(digits)
    if d > 1:
        shifted[:, :-1] = digits[:, 1:]
    return (digits - shifted) % q


def gray_rank(coeffs: np.ndarray, q: int = 2) -> np.ndarray:
    """Position of Gray-code coefficient vectors in ``gray_sequence`` order.

    ``coeffs`` has shape (..., d); digit k of the rank is the suffix sum of
    coefficients k..d-1 mod q.
    """
    coeffs = np.asarray(coeffs, dtype=np.int64)
    d = coeffs.shape[-1]
    suffix = np.cumsum(coeffs[..., ::-1], axis=-1)[..., ::-1] % q
    weights = q ** np.arange(d, dtype=np.int64)
    return (suffix * weights).sum(axis=-1)


def enumerate_coset(cs: CosetSystem, budget: int | None = None) -> Iterator[FieldVector]:
    """Yield every member of ``cs`` once, in Gray-code order over kernel coefficients."""
    if cs.is_empty:
        return
    check_budget(cs.size, budget, "coset enumeration")
    q, d = cs.q, cs.dimension
    basis = cs.basis_matrix()
    z = cs.particular.elements.copy()
    yield FieldVector(z, q)
    counter = [0] * d
    for _ in range(cs.size - 1):
        # increment little-endian counter; the lowest digit that does not
        # wrap is the Gray coordinate that moves
        t = 0
        while counter[t] == q - 1:
            counter[t] = 0
            t += 1
        counter[t] += 1
        z = (z + basis[t]) % q
        yield FieldVector(z, q)


# --- whole-space tables ----------------------------------------------------


def all_vectors(n: int, q: int = 2, budget: int | None = None) -> np.ndarray:
    """Every vector of GF(q)^n as rows of a (q**n, n) array, index order."""
    check_budget(q**n, budget, "vector-space enumeration")
    idx = np.arange(q**n, dtype=np.int64)
    return np.stack([(idx // q ** (n - 1 - k)) % q for k in range(n)], axis=1) if n else np.zeros((1, 0), dtype=np.int64)


def syndrome_table(m: FieldMatrix, budget: int | None = None) -> np.ndarray:
    """Index of ``m z`` for every z in GF(q)^cols, as an int64 array."""
    n, q, l = m.cols, m.q, m.rows
    check_budget(q**n, budget, "syndrome table")
    if l == 0:
        return np.zeros(q**n, dtype=np.int64)
    if q == 2 and l <= 62:
        # bit b of the vector index is coordinate n-1-b
        col_syn = []
        for b in range(n):
            col = m.entries[:, n - 1 - b]
            col_syn.append(int(sum(int(v) << (l - 1 - r) for r, v in enumerate(col))))
        return kernels.gf2_syndrome_table(np.array(col_syn, dtype=np.uint64), n).astype(np.int64)
    idx = np.arange(q**n, dtype=np.int64)
    syn = np.zeros((q**n, l), dtype=np.int64)
    for k in range(n):
        digit = (idx // q ** (n - 1 - k)) % q
        syn = (syn + digit[:, None] * m.entries[:, k][None, :]) % q
    weights = q ** np.arange(l - 1, -1, -1, dtype=np.int64)
    return syn @ weights


def coset_ranks(cs_template: CosetSystem, budget: int | None = None) -> np.ndarray:
    """Enumeration rank of every z in GF(q)^n within its own coset.

    All cosets of one matrix share the free columns, so a single template
    (any consistent solve of that matrix) fixes the ranks.
    """
    n, q = cs_template.ambient_dim, cs_template.q
    check_budget(q**n, budget, "rank table")
    idx = np.arange(q**n, dtype=np.int64)
    free = cs_template.free_columns
    acc = np.zeros(q**n, dtype=np.int64)
    rank = np.zeros(q**n, dtype=np.int64)
    for k in range(len(free) - 1, -1, -1):
        digit = (idx // q ** (n - 1 - free[k])) % q
        acc = (acc + digit) % q
        rank += acc * q**k
    return rank


# --- ensembles -------------------------------------------------------------

ENSEMBLE_KINDS = ("UniformLinear", "SparseColumnWeight", "RandomBinningTable")


@dataclass(frozen=True)
class EnsembleSpec:
    """A hash-function ensemble on GF(q)^cols with q**rows bins."""

    kind: str
    q: int = 2
    rows: int = 1
    cols: int = 1
    weight: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ENSEMBLE_KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        _check_modulus(self.q)
        if self.rows < 1 or self.cols < 1:
            raise DimensionError("rows and cols must be >= 1")
        if self.kind == "SparseColumnWeight":
            if self.weight is None or self.weight < 1:
                raise ValueError("SparseColumnWeight needs weight >= 1")
            if self.weight > self.rows:
                raise ValueError(f"column weight {self.weight} exceeds rows {self.rows}")

    def image_set(self) -> np.ndarray:
        """Indices of the union of images over all ensemble members, sorted.

        Full codomain for the uniform and table ensembles. For sparse columns
        it is every sum of at most ``cols`` weight-w vectors, which can be
        smaller when cols < rows.
        """
        size = self.q**self.rows
        if self.kind != "SparseColumnWeight":
            return np.arange(size, dtype=np.int64)
        vecs = all_vectors(self.rows, self.q)
        weight_ok = (vecs != 0).sum(axis=1) == self.weight
        step = np.zeros(size, dtype=bool)
        step[0] = True
        step[weight_ok] = True
        reach = step.copy()
        weights = self.q ** np.arange(self.rows - 1, -1, -1, dtype=np.int64)
        for _ in range(self.cols - 1):
            a = vecs[reach]
            b = vecs[step]
            sums = ((a[:, None, :] + b[None, :, :]) % self.q) @ weights
            reach = np.zeros(size, dtype=bool)
            reach[np.unique(sums)] = True
        return np.flatnonzero(reach)

    @property
    def image_size(self) -> int:
        """|Im F|: size of the union of images over the ensemble."""
        return int(len(self.image_set()))

    @property
    def domain_size(self) -> int:
        return self.q**self.cols

    @property
    def is_linear(self) -> bool:
        return self.kind != "RandomBinningTable"

    def with_dims(self, rows: int, cols: int) -> "EnsembleSpec":
        return EnsembleSpec(self.kind, self.q, rows, cols, self.weight)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "q": self.q, "rows": self.rows, "cols": self.cols}
        if self.weight is not None:
            out["weight"] = self.weight
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "EnsembleSpec":
        return cls(obj["kind"], int(obj.get("q", 2)), int(obj["rows"]), int(obj["cols"]), obj.get("weight"))


@dataclass(frozen=True)
class BinningTable:
    """An explicit function GF(q)^cols -> GF(q)^rows stored as a lookup table."""

    table: np.ndarray
    rows: int
    cols: int
    q: int = 2

    def apply(self, z: FieldVector) -> FieldVector:
        return FieldVector.from_index(int(self.table[z.index]), self.rows, self.q)


def as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def sample_matrix(spec: EnsembleSpec, rows: int | None = None, cols: int | None = None, rng=None):
    """Draw one member of the ensemble.

    Returns a FieldMatrix for the linear ensembles and a BinningTable for
    RandomBinningTable. The draw is a pure function of (spec, dims, seed).
    """
    rows = spec.rows if rows is None else rows
    cols = spec.cols if cols is None else cols
    spec = spec.with_dims(rows, cols) if (rows, cols) != (spec.rows, spec.cols) else spec
    gen = as_rng(rng)
    q = spec.q
    if spec.kind == "UniformLinear":
        return FieldMatrix(gen.integers(0, q, size=(rows, cols)), q)
    if spec.kind == "SparseColumnWeight":
        w = spec.weight
        out = np.zeros((rows, cols), dtype=np.int64)
        for c in range(cols):
            pos = gen.choice(rows, size=w, replace=False)
            out[pos, c] = gen.integers(1, q, size=w) if q > 2 else 1
        return FieldMatrix(out, q, storage="sparse")
    check_budget(spec.domain_size, None, "binning table")
    return BinningTable(_frozen(gen.integers(0, q**rows, size=spec.domain_size)), rows, cols, q)
