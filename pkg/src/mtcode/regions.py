"""Rate regions as H-polytopes.

Inequalities are a . x <= b with rational coefficients and float bounds in
bits. Rate variables are named ``R<s>`` and ``r<s>`` where ``<s>`` is the
message name with a leading "Z" removed ("Z0" -> "R0", "r0").

Fourier-Motzkin elimination is exact on the coefficients. Redundancy and
equality decisions use linear programming with a fixed margin of 1e-9 bits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog

from .probability import JointPMF, entropy, marginal, mutual_information, product

MARGIN = 1e-9


class FactorizationError(ValueError):
    """The joint law does not have the independence structure the region needs."""


class RegionError(RuntimeError):
    """An LP decision could not be made."""


def rate_var(kind: str, s: str) -> str:
    return kind + (s[1:] if s.startswith("Z") else s)


@dataclass(frozen=True)
class LinearInequality:
    """sum_v coeffs[v] * v <= bound."""

    coeffs: tuple[tuple[str, Fraction], ...]
    bound: float
    label: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        items = self.coeffs.items() if isinstance(self.coeffs, dict) else self.coeffs
        clean = tuple(sorted((str(k), Fraction(v)) for k, v in items if Fraction(v) != 0))
        object.__setattr__(self, "coeffs", clean)
        object.__setattr__(self, "bound", float(self.bound) + 0.0)

    @classmethod
    def make(cls, coeffs: dict, bound: float, label: str = "") -> "LinearInequality":
        return cls(tuple(coeffs.items()), bound, label)

    @property
    def coeff_map(self) -> dict[str, Fraction]:
        return dict(self.coeffs)

    @property
    def trivial(self) -> bool:
        return not self.coeffs

    def coefficient(self, v: str) -> Fraction:
        return self.coeff_map.get(v, Fraction(0))

    def value(self, point: dict) -> float:
        return float(sum(float(c) * float(point.get(v, 0.0)) for v, c in self.coeffs))

    def holds(self, point: dict, tol: float = MARGIN) -> bool:
        return self.value(point) <= self.bound + tol

    def normalized(self) -> "LinearInequality":
        """Scale so the largest |coefficient| is 1."""
        if not self.coeffs:
            return self
        m = max(abs(c) for _, c in self.coeffs)
        return LinearInequality(tuple((v, c / m) for v, c in self.coeffs), self.bound / float(m), self.label)

    def pretty(self) -> str:
        parts = []
        for v, c in self.coeffs:
            mag = "" if abs(c) == 1 else f"{abs(c)}*"
            sign = "-" if c < 0 else "+"
            parts.append(f"{sign} {mag}{v}")
        lhs = " ".join(parts)
        lhs = lhs[2:] if lhs.startswith("+ ") else "-" + lhs[2:]
        out = f"{lhs} <= {_num(self.bound)}"
        return f"{out}    # {self.label}" if self.label else out

    def to_json(self) -> dict:
        return {
            "coeffs": {v: str(c) for v, c in self.coeffs},
            "bound": self.bound,
            **({"label": self.label} if self.label else {}),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LinearInequality":
        return cls(tuple((v, Fraction(c)) for v, c in obj["coeffs"].items()), float(obj["bound"]), obj.get("label", ""))


def _num(x: float) -> str:
    """Shortest round-trip form, with integral values printed without a trailing .0."""
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def _le(coeffs: dict, bound: float, label: str = "") -> LinearInequality:
    return LinearInequality.make(coeffs, bound, label)


def _ge(coeffs: dict, bound: float, label: str = "") -> LinearInequality:
    return LinearInequality.make({v: -Fraction(c) for v, c in coeffs.items()}, -bound, label)


@dataclass(frozen=True)
class Polytope:
    variables: tuple[str, ...]
    inequalities: tuple[LinearInequality, ...]
    infeasible: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "inequalities", tuple(self.inequalities))
        for ineq in self.inequalities:
            for v, _ in ineq.coeffs:
                if v not in self.variables:
                    raise KeyError(f"inequality uses unknown variable {v!r}")

    def contains(self, point: dict, tol: float = MARGIN) -> bool:
        return not self.infeasible and all(q.holds(point, tol) for q in self.inequalities)

    def matrix(self) -> tuple[np.ndarray, np.ndarray]:
        A = np.array([[float(q.coefficient(v)) for v in self.variables] for q in self.inequalities], dtype=np.float64)
        b = np.array([q.bound for q in self.inequalities], dtype=np.float64)
        return A.reshape(len(self.inequalities), len(self.variables)), b

    def pretty(self) -> str:
        """Single-variable bounds merged into ``lo <= v <= hi``, the rest one per line."""
        if self.infeasible:
            return "(empty)"
        lo: dict = {}
        hi: dict = {}
        rest = []
        for q in self.inequalities:
            if len(q.coeffs) == 1 and abs(q.coeffs[0][1]) == 1:
                v, c = q.coeffs[0]
                if c > 0:
                    hi[v] = min(hi.get(v, np.inf), q.bound)
                else:
                    lo[v] = max(lo.get(v, -np.inf), -q.bound + 0.0)
            else:
                rest.append(q)
        lines = []
        for v in self.variables:
            if v in lo or v in hi:
                left = f"{_num(lo[v])} <= " if v in lo else ""
                right = f" <= {_num(hi[v])}" if v in hi else ""
                lines.append(f"{left}{v}{right}")
        lines += [q.pretty() for q in rest]
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "vars": list(self.variables),
            "ineqs": [q.to_json() for q in self.inequalities],
            **({"infeasible": True} if self.infeasible else {}),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Polytope":
        return cls(tuple(obj["vars"]), tuple(LinearInequality.from_json(q) for q in obj["ineqs"]), bool(obj.get("infeasible", False)))


# --- region families -------------------------------------------------------


def _nonempty_subsets(items: Sequence[str]):
    for k in range(1, len(items) + 1):
        yield from itertools.combinations(items, k)


def _decoder_parts(d) -> tuple[tuple[str, ...], list[str]]:
    """(decode set, side variables) from a DecoderSpec or a (decode, side) pair."""
    decode, side = (d.decode, d.side) if hasattr(d, "decode") else (tuple(d[0]), d[1])
    if side is None:
        sides: list[str] = []
    elif isinstance(side, str):
        sides = [side]
    else:
        sides = list(side)
    return tuple(decode), sides


def _sw_constraints(p: JointPMF, decoders, var) -> list[LinearInequality]:
    out = []
    for d in decoders:
        decode, sides = _decoder_parts(d)
        for sub in _nonempty_subsets(decode):
            rest = [s for s in decode if s not in sub]
            h = entropy(p, list(sub), sides + rest)
            given = ",".join(sides + rest)
            out.append(_ge({var(s): 1 for s in sub}, h, f"H({','.join(sub)}|{given})" if given else f"H({','.join(sub)})"))
    return out


def source_region(p: JointPMF, decoders) -> Polytope:
    """Rates r_s with sum_{D'} r_s >= H(Z_D' | Y_j, Z_{D_j minus D'}) for every decoder and D'."""
    sources: list[str] = []
    for d in decoders:
        decode, sides = _decoder_parts(d)
        p.axes(list(decode) + sides)
        for s in decode:
            if s not in sources:
                sources.append(s)
    var = lambda s: rate_var("r", s)  # noqa: E731
    ineqs = [_ge({var(s): 1}, 0.0, "nonnegativity") for s in sources]
    ineqs += _sw_constraints(p, decoders, var)
    return Polytope(tuple(var(s) for s in sources), tuple(ineqs))


def _independence_gap(p: JointPMF, groups: Sequence[Sequence[str]]) -> float:
    names = [s for g in groups for s in g]
    joint = marginal(p, names).reorder(names)
    prod = product(*[marginal(p, list(g)).reorder(list(g)) for g in groups])
    return float(np.max(np.abs(joint.probs - prod.probs)))


def check_independent(p: JointPMF, groups: Sequence[Sequence[str]], tol: float = 1e-12) -> None:
    gap = _independence_gap(p, groups)
    if gap > tol:
        raise FactorizationError(f"groups {[list(g) for g in groups]} are not independent (max deviation {gap:.3g})")


def channel_region_raw(p: JointPMF, decoders, variant: str = "general", groups=None, messages=None) -> Polytope:
    """Joint conditions on (R_s, r_s) before elimination.

    general: R_s >= 0, SW lower bounds on r, R_s + r_s <= H(Z_s), with the Z_s
    mutually independent. disjoint: the upper bounds become
    sum_{S'} (R_s + r_s) <= H(Z_S') for every nonempty S' inside a group, and
    independence is only required across groups.
    """
    if variant not in ("general", "disjoint"):
        raise ValueError(f"unknown variant {variant!r}")
    if messages is None:
        if groups is not None:
            messages = [s for g in groups for s in g]
        else:
            messages = []
            for d in decoders:
                for s in _decoder_parts(d)[0]:
                    if s not in messages:
                        messages.append(s)
    messages = list(messages)
    if variant == "general":
        groups = [(s,) for s in messages]
    elif groups is None:
        raise ValueError("the disjoint variant needs the message groups")
    groups = [tuple(g) for g in groups]
    if sorted(s for g in groups for s in g) != sorted(messages):
        raise ValueError("groups must partition the messages")
    if len(groups) > 1:
        check_independent(p, groups)
    R = lambda s: rate_var("R", s)  # noqa: E731
    r = lambda s: rate_var("r", s)  # noqa: E731
    ineqs = [_ge({R(s): 1}, 0.0, "nonnegativity") for s in messages]
    ineqs += _sw_constraints(p, decoders, r)
    decoded = {s for d in decoders for s in _decoder_parts(d)[0]}
    ineqs += [_ge({r(s): 1}, 0.0, "undecoded auxiliary") for s in messages if s not in decoded]
    for g in groups:
        subsets = [(s,) for s in g] if variant == "general" else list(_nonempty_subsets(g))
        for sub in subsets:
            coeffs = {}
            for s in sub:
                coeffs[R(s)] = 1
                coeffs[r(s)] = 1
            ineqs.append(_le(coeffs, entropy(p, list(sub)), f"H({','.join(sub)})"))
    variables = tuple(R(s) for s in messages) + tuple(r(s) for s in messages)
    return Polytope(variables, tuple(ineqs))


# --- elimination and LP decisions ----------------------------------------


def _dedupe(ineqs: Iterable[LinearInequality]) -> list[LinearInequality]:
    """Keep the tightest bound per normalized coefficient vector, in first-seen order."""
    best: dict = {}
    order = []
    for q in ineqs:
        qn = q.normalized()
        key = qn.coeffs
        if key not in best:
            order.append(key)
            best[key] = qn
        elif qn.bound < best[key].bound:
            best[key] = qn
    return [best[k] for k in order]


def _settle_trivial(variables, ineqs, margin) -> Polytope:
    kept = []
    infeasible = False
    for q in ineqs:
        if q.trivial:
            if q.bound < -margin:
                infeasible = True
            continue
        kept.append(q)
    return Polytope(variables, tuple(_dedupe(kept)), infeasible)


def fourier_motzkin(poly: Polytope, eliminate: str, margin: float = MARGIN) -> Polytope:
    """Project out one variable by combining every (upper, lower) pair."""
    if eliminate not in poly.variables:
        raise KeyError(f"variable {eliminate!r} not in polytope")
    upper, lower, rest = [], [], []
    for q in poly.inequalities:
        a = q.coefficient(eliminate)
        (upper if a > 0 else lower if a < 0 else rest).append(q)
    combined = list(rest)
    for u in upper:
        au = u.coefficient(eliminate)
        for lo in lower:
            al = -lo.coefficient(eliminate)
            coeffs = {}
            for v in poly.variables:
                if v == eliminate:
                    continue
                c = al * u.coefficient(v) + au * lo.coefficient(v)
                if c:
                    coeffs[v] = c
            bound = float(al) * u.bound + float(au) * lo.bound
            label = f"({u.label}) + ({lo.label})" if u.label or lo.label else ""
            combined.append(LinearInequality.make(coeffs, bound, label))
    variables = tuple(v for v in poly.variables if v != eliminate)
    out = _settle_trivial(variables, combined, margin)
    return Polytope(out.variables, out.inequalities, out.infeasible or poly.infeasible)


def eliminate_all(poly: Polytope, names: Sequence[str], prune: bool = True) -> Polytope:
    """Eliminate several variables, pruning redundancy between steps to keep FM small."""
    out = poly
    for v in names:
        out = fourier_motzkin(out, v)
        if prune:
            out = remove_redundant(out)
    return out


def _lp_max(c: np.ndarray, A: np.ndarray, b: np.ndarray):
    """max c.x over A x <= b. Returns (status, value); status in {"ok", "unbounded", "infeasible"}."""
    n = len(c)
    if A.shape[0] == 0:
        return ("ok", 0.0) if not np.any(c) else ("unbounded", np.inf)
    res = linprog(-c, A_ub=A, b_ub=b, bounds=[(None, None)] * n, method="highs")
    if res.status == 0:
        return "ok", float(-res.fun)
    if res.status == 3:
        return "unbounded", np.inf
    if res.status == 2:
        return "infeasible", -np.inf
    raise RegionError(f"linear program failed: {res.message}")


def implies(poly: Polytope, ineq: LinearInequality, margin: float = MARGIN) -> bool:
    """True when every point of ``poly`` satisfies ``ineq`` (up to ``margin``)."""
    if poly.infeasible:
        return True
    A, b = poly.matrix()
    c = np.array([float(ineq.coefficient(v)) for v in poly.variables])
    status, val = _lp_max(c, A, b)
    if status == "infeasible":
        return True
    if status == "unbounded":
        return False
    return val <= ineq.bound + margin


def remove_redundant(poly: Polytope, margin: float = MARGIN) -> Polytope:
    """Drop inequalities implied by the remaining ones, one at a time in order."""
    base = _settle_trivial(poly.variables, poly.inequalities, margin)
    if poly.infeasible or base.infeasible:
        return Polytope(poly.variables, base.inequalities, True)
    kept = list(base.inequalities)
    i = 0
    while i < len(kept):
        others = Polytope(poly.variables, tuple(kept[:i] + kept[i + 1 :]))
        if implies(others, kept[i], margin):
            kept.pop(i)
        else:
            i += 1
    return Polytope(poly.variables, tuple(kept))


def _check_same_vars(a: Polytope, b: Polytope) -> None:
    if set(a.variables) != set(b.variables):
        raise KeyError(f"variable sets differ: {a.variables} vs {b.variables}")


def contained_in(a: Polytope, b: Polytope, margin: float = MARGIN) -> bool:
    """a is a subset of b."""
    _check_same_vars(a, b)
    a = Polytope(b.variables, a.inequalities, a.infeasible)
    return all(implies(a, q, margin) for q in b.inequalities) and (not b.infeasible or _is_empty(a))


def _is_empty(poly: Polytope) -> bool:
    if poly.infeasible:
        return True
    A, b = poly.matrix()
    status, _ = _lp_max(np.zeros(len(poly.variables)), A, b)
    return status == "infeasible"


def polytope_equal(a: Polytope, b: Polytope, margin: float = MARGIN) -> bool:
    return contained_in(a, b, margin) and contained_in(b, a, margin)


def containment_report(a: Polytope, b: Polytope, margin: float = MARGIN) -> str:
    """One of "equal", "subset" (a in b), "superset", "incomparable"."""
    ab, ba = contained_in(a, b, margin), contained_in(b, a, margin)
    if ab and ba:
        return "equal"
    if ab:
        return "subset"
    if ba:
        return "superset"
    return "incomparable"


def project_rates(raw: Polytope) -> Polytope:
    """Eliminate every auxiliary rate r_s from a raw channel region."""
    aux = [v for v in raw.variables if v.startswith("r")]
    return remove_redundant(eliminate_all(raw, aux))


# --- explicit lists -------------------------------------------------------


def _rates(names):
    return [rate_var("R", s) for s in names]


def mac_explicit_region(p: JointPMF, z=("Z0", "Z1", "Z2"), y="Y") -> Polytope:
    """Seven sum-rate bounds I(Z_A; Y | Z_rest) plus nonnegativity."""
    z = list(z)
    check_independent(p, [(s,) for s in z])
    R = dict(zip(z, _rates(z)))
    ineqs = [_ge({R[s]: 1}, 0.0, "nonnegativity") for s in z]
    for sub in _nonempty_subsets(z):
        rest = [s for s in z if s not in sub]
        val = mutual_information(p, list(sub), [y], rest)
        cond = f"|{','.join(rest)}" if rest else ""
        ineqs.append(_le({R[s]: 1 for s in sub}, val, f"I({','.join(sub)};{y}{cond})"))
    return Polytope(tuple(R[s] for s in z), tuple(ineqs))


def bc_explicit_region(p: JointPMF, z=("Z0", "Z1", "Z2"), y=("Y1", "Y2")) -> Polytope:
    """Eight-line inner region for the two-receiver broadcast channel with a common message."""
    z0, z1, z2 = z
    y1, y2 = y
    I = lambda a, b, g=(): mutual_information(p, list(a), list(b), list(g))  # noqa: E731
    R0, R1, R2 = _rates(z)
    i01 = I([z0], [z1, y1])
    i02 = I([z0], [z2, y2])
    i0y1, i0y2 = I([z0], [y1]), I([z0], [y2])
    i1 = I([z1], [z0, y1])
    i2 = I([z2], [z0, y2])
    i1y = I([z1], [y1], [z0])
    i2y = I([z2], [y2], [z0])
    i12 = I([z1], [z2])
    i12c = I([z1], [z2], [z0])
    ineqs = [_ge({v: 1}, 0.0, "nonnegativity") for v in (R0, R1, R2)]
    ineqs += [
        _le({R0: 1}, i01, "I(Z0;Z1Y1)"),
        _le({R0: 1}, i02, "I(Z0;Z2Y2)"),
        _le({R1: 1}, i1, "I(Z1;Z0Y1)"),
        _le({R2: 1}, i2, "I(Z2;Z0Y2)"),
        _le({R0: 1, R1: 1}, i1y + i0y1, "I(Z1;Y1|Z0)+I(Z0;Y1)"),
        _le({R0: 1, R1: 1}, i1y + i02, "I(Z1;Y1|Z0)+I(Z0;Z2Y2)"),
        _le({R0: 1, R2: 1}, i2y + i0y2, "I(Z2;Y2|Z0)+I(Z0;Y2)"),
        _le({R0: 1, R2: 1}, i2y + i01, "I(Z2;Y2|Z0)+I(Z0;Z1Y1)"),
        _le({R1: 1, R2: 1}, i1 + i2 - i12, "I(Z1;Z0Y1)+I(Z2;Z0Y2)-I(Z1;Z2)"),
        _le({R0: 1, R1: 1, R2: 1}, i1y + i2y - i12c + i0y1, "I(Z1;Y1|Z0)+I(Z2;Y2|Z0)-I(Z1;Z2|Z0)+I(Z0;Y1)"),
        _le({R0: 1, R1: 1, R2: 1}, i1y + i2y - i12c + i0y2, "I(Z1;Y1|Z0)+I(Z2;Y2|Z0)-I(Z1;Z2|Z0)+I(Z0;Y2)"),
        _le({R0: 2, R1: 1, R2: 1}, I([z0, z1], [y1]) + I([z0, z2], [y2]) - i12c, "I(Z0Z1;Y1)+I(Z0Z2;Y2)-I(Z1;Z2|Z0)"),
    ]
    return Polytope((R0, R1, R2), tuple(ineqs))


def marton_region(p: JointPMF, z=("Z0", "Z1", "Z2"), y=("Y1", "Y2")) -> Polytope:
    """Five-line Marton list; the sum-rate line uses I(Z1;Z2|Z0)."""
    z0, z1, z2 = z
    y1, y2 = y
    I = lambda a, b, g=(): mutual_information(p, list(a), list(b), list(g))  # noqa: E731
    R0, R1, R2 = _rates(z)
    i12c = I([z1], [z2], [z0])
    base = I([z1], [y1], [z0]) + I([z2], [y2], [z0]) - i12c
    ineqs = [_ge({v: 1}, 0.0, "nonnegativity") for v in (R0, R1, R2)]
    ineqs += [
        _le({R0: 1}, I([z0], [y1]), "I(Z0;Y1)"),
        _le({R0: 1}, I([z0], [y2]), "I(Z0;Y2)"),
        _le({R0: 1, R1: 1}, I([z0, z1], [y1]), "I(Z0Z1;Y1)"),
        _le({R0: 1, R2: 1}, I([z0, z2], [y2]), "I(Z0Z2;Y2)"),
        _le({R0: 1, R1: 1, R2: 1}, base + I([z0], [y1]), "I(Z1;Y1|Z0)+I(Z2;Y2|Z0)-I(Z1;Z2|Z0)+I(Z0;Y1)"),
        _le({R0: 1, R1: 1, R2: 1}, base + I([z0], [y2]), "I(Z1;Y1|Z0)+I(Z2;Y2|Z0)-I(Z1;Z2|Z0)+I(Z0;Y2)"),
    ]
    return Polytope((R0, R1, R2), tuple(ineqs))


def mac_raw_region(p: JointPMF, z=("Z0", "Z1", "Z2"), y="Y") -> Polytope:
    """General-variant raw region for the MAC wiring with one decoder of all three messages."""
    return channel_region_raw(p, [(tuple(z), y)], "general", messages=list(z))


def bc_raw_region(p: JointPMF, z=("Z0", "Z1", "Z2"), y=("Y1", "Y2")) -> Polytope:
    """Disjoint-variant raw region for one encoder and decoders {Z0, Z1} on Y1, {Z0, Z2} on Y2."""
    z0, z1, z2 = z
    return channel_region_raw(p, [((z0, z1), y[0]), ((z0, z2), y[1])], "disjoint", groups=[tuple(z)])
