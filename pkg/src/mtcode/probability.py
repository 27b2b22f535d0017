"""Finite joint PMFs over named variables and the usual information functionals.

All quantities are in bits. Tables are dense numpy arrays with one axis per
variable, in declaration order.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .gf import BudgetExceeded, as_rng

DEFAULT_CELL_BUDGET = 1 << 22
MASS_TOL = 1e-12


def cell_budget() -> int:
    raw = os.environ.get("MTCODE_CELL_BUDGET")
    return int(raw) if raw else DEFAULT_CELL_BUDGET


def _names(vars_) -> list[str]:
    if isinstance(vars_, str):
        return [vars_]
    return list(vars_)


def _shaped(values, shape, what: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.size != int(np.prod(shape, dtype=np.int64)):
        raise ValueError(f"{what} has {arr.size} entries, alphabet sizes {list(shape)} need {int(np.prod(shape))}")
    return arr.reshape(shape)


class JointPMF:
    """Joint distribution of named finite variables.

    ``variables`` is a sequence of (name, alphabet_size); ``probs`` has one
    axis per variable.
    """

    __slots__ = ("variables", "probs")

    def __init__(self, variables: Sequence[tuple[str, int]], probs, check: bool = True):
        variables = tuple((str(n), int(s)) for n, s in variables)
        names = [n for n, _ in variables]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names in {names}")
        shape = tuple(s for _, s in variables)
        if any(s < 1 for s in shape):
            raise ValueError("alphabet sizes must be >= 1")
        arr = _shaped(probs, shape, "probability table")
        if check:
            if np.any(arr < 0):
                raise ValueError("probabilities must be nonnegative")
            if abs(arr.sum() - 1.0) > MASS_TOL * max(1, arr.size) ** 0.5 + MASS_TOL:
                raise ValueError(f"probabilities sum to {arr.sum()!r}, not 1")
        arr.setflags(write=False)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "probs", arr)

    def __setattr__(self, name, value):
        raise AttributeError("JointPMF is immutable")

    def __reduce__(self):
        return (JointPMF, (self.variables, np.array(self.probs), False))

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.variables]

    @property
    def sizes(self) -> list[int]:
        return [s for _, s in self.variables]

    def size_of(self, name: str) -> int:
        return self.sizes[self.axis(name)]

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}; have {self.names}") from None

    def axes(self, names: Iterable[str]) -> list[int]:
        return [self.axis(n) for n in names]

    def __repr__(self) -> str:
        return f"JointPMF({list(self.variables)})"

    def to_json(self) -> dict:
        return {
            "variables": [{"name": n, "size": s} for n, s in self.variables],
            "probs": [float(v) for v in self.probs.reshape(-1)],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "JointPMF":
        variables = [(v["name"], int(v["size"])) for v in obj["variables"]]
        return cls(variables, np.asarray(obj["probs"], dtype=np.float64))

    def renamed(self, mapping: dict[str, str]) -> "JointPMF":
        return JointPMF([(mapping.get(n, n), s) for n, s in self.variables], self.probs, check=False)

    def reorder(self, names: Sequence[str]) -> "JointPMF":
        """Same distribution with the axes permuted to ``names``."""
        names = _names(names)
        if sorted(names) != sorted(self.names):
            raise KeyError("reorder needs every variable exactly once")
        perm = self.axes(names)
        return JointPMF([self.variables[a] for a in perm], np.transpose(self.probs, perm), check=False)


def product(*pmfs: JointPMF) -> JointPMF:
    """Independent joint of several PMFs."""
    variables: list[tuple[str, int]] = []
    probs = np.ones(())
    for p in pmfs:
        variables.extend(p.variables)
        probs = np.multiply.outer(probs, p.probs)
    return JointPMF(variables, probs)


def marginal(p: JointPMF, keep) -> JointPMF:
    """Sum out everything except ``keep``; the original variable order is kept."""
    keep = set(_names(keep))
    unknown = keep - set(p.names)
    if unknown:
        raise KeyError(f"unknown variables {sorted(unknown)}")
    drop = tuple(i for i, n in enumerate(p.names) if n not in keep)
    probs = p.probs.sum(axis=drop) if drop else p.probs
    return JointPMF([v for v in p.variables if v[0] in keep], probs, check=False)


def _table(p: JointPMF, names: Sequence[str]) -> np.ndarray:
    """Marginal table with axes in the order of ``names``."""
    m = marginal(p, names)
    return np.transpose(m.probs, m.axes(names)) if names else np.asarray(m.probs.sum())


def _check_disjoint(*groups: Sequence[str]) -> None:
    seen: set[str] = set()
    for g in groups:
        for n in g:
            if n in seen:
                raise ValueError(f"variable {n!r} appears in more than one argument")
            seen.add(n)


class ConditionalKernel:
    """Conditional law of ``output_vars`` given ``input_vars``.

    ``table`` has the input axes first, then the output axes. Rows whose
    conditioning cell had zero mass are uniform and marked in ``zero_rows``.
    """

    __slots__ = ("input_vars", "output_vars", "table", "zero_rows")

    def __init__(self, input_vars, output_vars, table, zero_rows=None, check: bool = True):
        input_vars = tuple((str(n), int(s)) for n, s in input_vars)
        output_vars = tuple((str(n), int(s)) for n, s in output_vars)
        shape = tuple(s for _, s in input_vars) + tuple(s for _, s in output_vars)
        arr = _shaped(table, shape, "kernel table")
        nin = len(input_vars)
        if check:
            sums = arr.reshape(int(np.prod(shape[:nin], dtype=np.int64)), -1).sum(axis=1)
            if np.any(arr < 0) or np.any(np.abs(sums - 1.0) > 1e-9):
                raise ValueError("kernel rows must be distributions")
        if zero_rows is None:
            zero_rows = np.zeros(shape[:nin], dtype=bool)
        zr = np.array(zero_rows, dtype=bool).reshape(shape[:nin])
        arr.setflags(write=False)
        zr.setflags(write=False)
        object.__setattr__(self, "input_vars", input_vars)
        object.__setattr__(self, "output_vars", output_vars)
        object.__setattr__(self, "table", arr)
        object.__setattr__(self, "zero_rows", zr)

    def __setattr__(self, name, value):
        raise AttributeError("ConditionalKernel is immutable")

    def __reduce__(self):
        return (ConditionalKernel, (self.input_vars, self.output_vars, np.array(self.table), np.array(self.zero_rows), False))

    @property
    def input_names(self) -> list[str]:
        return [n for n, _ in self.input_vars]

    @property
    def output_names(self) -> list[str]:
        return [n for n, _ in self.output_vars]

    def row(self, inputs: Sequence[int]) -> np.ndarray:
        """Output distribution (flattened) for one input cell."""
        return self.table[tuple(int(v) for v in inputs)].reshape(-1)

    def matrix(self) -> np.ndarray:
        """Kernel as a (|inputs|, |outputs|) row-stochastic matrix."""
        nin = int(np.prod([s for _, s in self.input_vars], dtype=np.int64))
        return self.table.reshape(nin, -1)

    def to_json(self) -> dict:
        return {
            "inputs": [{"name": n, "size": s} for n, s in self.input_vars],
            "outputs": [{"name": n, "size": s} for n, s in self.output_vars],
            "table": [float(v) for v in self.table.reshape(-1)],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ConditionalKernel":
        return cls(
            [(v["name"], int(v["size"])) for v in obj["inputs"]],
            [(v["name"], int(v["size"])) for v in obj["outputs"]],
            np.asarray(obj["table"], dtype=np.float64),
        )


def conditional(p: JointPMF, target, given=()) -> ConditionalKernel:
    target, given = _names(target), _names(given)
    _check_disjoint(target, given)
    joint = _table(p, given + target)
    gshape = joint.shape[: len(given)]
    mass = joint.reshape(gshape + (-1,)).sum(axis=-1)
    zero = mass <= 0
    safe = np.where(zero, 1.0, mass)
    tab = joint / safe.reshape(gshape + (1,) * len(target))
    if np.any(zero):
        tsize = int(np.prod(joint.shape[len(given) :], dtype=np.int64))
        tab = np.where(zero.reshape(gshape + (1,) * len(target)), 1.0 / tsize, tab)
    return ConditionalKernel(
        [(n, p.size_of(n)) for n in given], [(n, p.size_of(n)) for n in target], tab, zero, check=False
    )


def _h(arr: np.ndarray) -> float:
    v = arr[arr > 0]
    return float(-(v * np.log2(v)).sum())


def entropy(p: JointPMF, target, given=()) -> float:
    """H(target | given) in bits."""
    target, given = _names(target), _names(given)
    _check_disjoint(target, given)
    p.axes(target + given)
    if not target:
        return 0.0
    hj = _h(_table(p, target + given))
    return hj - _h(_table(p, given)) if given else hj


def mutual_information(p: JointPMF, a, b, given=()) -> float:
    """I(a; b | given) in bits, clamped at zero against rounding."""
    a, b, given = _names(a), _names(b), _names(given)
    _check_disjoint(a, b, given)
    val = entropy(p, a, given) - entropy(p, a, b + given)
    if val < -1e-9:
        raise ArithmeticError(f"negative mutual information {val}")
    return max(val, 0.0)


def compose(prior: JointPMF, k: ConditionalKernel) -> JointPMF:
    """Joint of ``prior`` and the kernel outputs, p(z) k(y | z_inputs)."""
    clash = set(k.output_names) & set(prior.names)
    if clash:
        raise ValueError(f"kernel outputs {sorted(clash)} already in prior")
    for n, s in k.input_vars:
        if prior.size_of(n) != s:
            raise ValueError(f"alphabet size mismatch for {n!r}")
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    nprior, nout = len(prior.names), len(k.output_names)
    if nprior + nout > len(letters):
        raise ValueError("too many variables for compose")
    pl = letters[:nprior]
    ol = letters[nprior : nprior + nout]
    kl = "".join(pl[prior.axis(n)] for n in k.input_names) + ol
    probs = np.einsum(f"{pl},{kl}->{pl}{ol}", prior.probs, k.table)
    return JointPMF(list(prior.variables) + list(k.output_vars), probs, check=False)


def block_name(name: str, k: int) -> str:
    return f"{name}_{k}"


def block_extend(p: JointPMF, n: int, budget: int | None = None) -> JointPMF:
    """i.i.d. n-fold extension; variables are ordered variable-major (X_0..X_{n-1}, Y_0..)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return p
    limit = cell_budget() if budget is None else budget
    cells = p.probs.size**n
    if cells > limit:
        raise BudgetExceeded(f"block table with {cells} cells exceeds budget {limit}")
    probs = np.ones(())
    for _ in range(n):
        probs = np.multiply.outer(probs, p.probs)
    m = len(p.names)
    # axes currently (copy0 vars, copy1 vars, ...); move to variable-major
    perm = [k * m + v for v in range(m) for k in range(n)]
    probs = np.transpose(probs, perm)
    variables = [(block_name(name, k), s) for name, s in p.variables for k in range(n)]
    return JointPMF(variables, probs, check=False)


def sample(p: JointPMF | np.ndarray, rng=None, size: int | None = None):
    """Inverse-CDF draw over the row-major cell order.

    For a JointPMF returns a tuple of values (one per variable), or an array
    of shape (size, nvars) when ``size`` is given. A bare 1-d probability
    vector returns a cell index (or an array of them).
    """
    gen = as_rng(rng)
    flat = p.probs.reshape(-1) if isinstance(p, JointPMF) else np.asarray(p, dtype=np.float64).reshape(-1)
    cdf = np.cumsum(flat)
    cdf /= cdf[-1]
    u = gen.random(1 if size is None else size)
    cells = np.minimum(np.searchsorted(cdf, u, side="right"), len(flat) - 1)
    if not isinstance(p, JointPMF):
        return int(cells[0]) if size is None else cells
    values = np.stack(np.unravel_index(cells, p.probs.shape), axis=1)
    return tuple(int(v) for v in values[0]) if size is None else values


def sample_kernel(k: ConditionalKernel, inputs: Sequence[int], rng=None) -> tuple[int, ...]:
    cell = sample(k.row(inputs), rng)
    return tuple(int(v) for v in np.unravel_index(cell, [s for _, s in k.output_vars]))


# --- spectral estimators ---------------------------------------------------

SPECTRAL_QUANTITIES = (
    "sup_entropy_rate",
    "inf_entropy_rate",
    "cond_sup_entropy_rate",
    "inf_information_rate",
)
_CHUNK = 256


@dataclass(frozen=True)
class SpectralEstimate:
    quantity: str
    n: int
    trials: int
    epsilon: float
    value: float

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")


def _letter_info(p: JointPMF, quantity: str, target, given) -> tuple[np.ndarray, list[int]]:
    """Per-cell self-information term, laid out over the (target + given) table."""
    names = target + given
    joint = _table(p, names)
    with np.errstate(divide="ignore"):
        if quantity in ("sup_entropy_rate", "inf_entropy_rate"):
            t = _table(p, target)
            info = -np.log2(t).reshape(t.shape + (1,) * len(given))
            info = np.broadcast_to(info, joint.shape)
        else:
            g = _table(p, given).reshape((1,) * len(target) + joint.shape[len(target) :])
            cond = -np.log2(joint) + np.log2(g)
            if quantity == "cond_sup_entropy_rate":
                info = cond
            else:
                t = _table(p, target).reshape(joint.shape[: len(target)] + (1,) * len(given))
                info = -np.log2(t) - cond
    return np.where(joint > 0, info, 0.0), [p.axis(v) for v in names]


def spectral_entropy_estimate(
    p: JointPMF,
    quantity: str,
    target,
    given=(),
    n: int = 100,
    trials: int = 1000,
    epsilon: float = 0.05,
    rng=None,
    budget: int | None = None,
) -> SpectralEstimate:
    """Finite-n quantile surrogate for the spectral (information-spectrum) rates.

    Each trial draws an i.i.d. n-block and records the normalized block
    self-information; sup variants return the (1 - epsilon) empirical
    quantile, inf variants the epsilon quantile. Trials are drawn in fixed
    chunks seeded by (seed, chunk index).
    """
    if quantity not in SPECTRAL_QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}")
    target, given = _names(target), _names(given)
    _check_disjoint(target, given)
    if quantity in ("cond_sup_entropy_rate", "inf_information_rate") and not given:
        raise ValueError(f"{quantity} needs a conditioning variable")
    if trials < 1 or not 0 < epsilon < 1:
        raise ValueError("need trials >= 1 and 0 < epsilon < 1")
    from .gf import enumeration_budget

    limit = enumeration_budget() if budget is None else budget
    if n * trials > limit:
        raise BudgetExceeded(f"n*trials = {n * trials} exceeds budget {limit}")
    info, _ = _letter_info(p, quantity, target, given)
    sub = _table(p, target + given).reshape(-1)
    flat_info = info.reshape(-1)
    cdf = np.cumsum(sub)
    cdf /= cdf[-1]
    seed = rng if isinstance(rng, (int, np.integer)) else int(as_rng(rng).integers(2**63))
    values = np.empty(trials)
    for c in range(0, trials, _CHUNK):
        m = min(_CHUNK, trials - c)
        gen = np.random.default_rng([seed, c // _CHUNK])
        cells = np.minimum(np.searchsorted(cdf, gen.random((m, n)), side="right"), len(sub) - 1)
        values[c : c + m] = flat_info[cells].sum(axis=1) / n
    q = 1 - epsilon if quantity in ("sup_entropy_rate", "cond_sup_entropy_rate") else epsilon
    value = float(np.quantile(values, q, method="inverted_cdf"))
    return SpectralEstimate(quantity, n, trials, epsilon, value)


def binary_entropy(x: float) -> float:
    if x <= 0 or x >= 1:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)
