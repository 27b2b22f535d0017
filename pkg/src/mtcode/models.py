"""Small source and channel models used by tests, configs and the CLI."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .gf import as_rng
from .probability import ConditionalKernel, JointPMF, compose, product


def bernoulli(p: float, name: str = "Z") -> JointPMF:
    return JointPMF([(name, 2)], [1 - p, p])


def uniform(size: int, name: str = "Z") -> JointPMF:
    return JointPMF([(name, size)], np.full(size, 1.0 / size))


def point_mass(value: int, size: int, name: str = "Z") -> JointPMF:
    probs = np.zeros(size)
    probs[value] = 1.0
    return JointPMF([(name, size)], probs)


def dsbs(p: float, names=("Z1", "Z2")) -> JointPMF:
    """Doubly symmetric binary source: uniform bit and a copy flipped w.p. p."""
    return JointPMF([(names[0], 2), (names[1], 2)], [[(1 - p) / 2, p / 2], [p / 2, (1 - p) / 2]])


def bsc(p: float, inp: str = "X", out: str = "Y") -> ConditionalKernel:
    return ConditionalKernel([(inp, 2)], [(out, 2)], [[1 - p, p], [p, 1 - p]])


def symmetric_channel(p: float, size: int, inp: str = "X", out: str = "Y") -> ConditionalKernel:
    """q-ary symmetric channel: keep w.p. 1-p, else uniform over the other symbols."""
    tab = np.full((size, size), p / (size - 1) if size > 1 else 0.0)
    np.fill_diagonal(tab, 1 - p)
    return ConditionalKernel([(inp, size)], [(out, size)], tab)


def identity_kernel(inp: str, out: str, size: int = 2) -> ConditionalKernel:
    return ConditionalKernel([(inp, size)], [(out, size)], np.eye(size))


def constant_kernel(inp: str, out: str, in_size: int = 2, dist=(0.5, 0.5)) -> ConditionalKernel:
    return ConditionalKernel([(inp, in_size)], [(out, len(dist))], np.tile(np.asarray(dist, float), (in_size, 1)))


def binary_adder(x1: str = "X1", x2: str = "X2", out: str = "Y") -> ConditionalKernel:
    """Y = X1 + X2 as an integer in {0, 1, 2}."""
    tab = np.zeros((2, 2, 3))
    for a in range(2):
        for b in range(2):
            tab[a, b, a + b] = 1.0
    return ConditionalKernel([(x1, 2), (x2, 2)], [(out, 3)], tab)


def additive_noise_source(noise: JointPMF, q: int = 2, names=("Z1", "Z2")) -> JointPMF:
    """Z2 uniform over GF(q) and Z1 = Z2 + N with N ~ noise (a single variable)."""
    pn = noise.probs.reshape(-1)
    tab = np.zeros((q, q))
    for b in range(q):
        for e in range(q):
            tab[(b + e) % q, b] = pn[e] / q
    return JointPMF([(names[0], q), (names[1], q)], tab)


def dyadic_probs(shape, rng=None, bits: int = 4, positive: bool = False) -> np.ndarray:
    """Random probabilities that are multiples of 2**-bits.

    Dyadic values keep entropies and sums exact in binary floating point.
    """
    gen = as_rng(rng)
    cells = int(np.prod(shape))
    total = 1 << bits
    if positive and cells > total:
        raise ValueError("too many cells for strictly positive dyadic masses")
    base = 1 if positive else 0
    counts = np.full(cells, base, dtype=np.int64)
    extra = gen.multinomial(total - base * cells, np.full(cells, 1.0 / cells))
    counts += extra
    return (counts / total).reshape(shape)


def dyadic_pmf(variables, rng=None, bits: int = 4, positive: bool = False) -> JointPMF:
    shape = tuple(s for _, s in variables)
    return JointPMF(variables, dyadic_probs(shape, rng, bits, positive))


def dyadic_kernel(inputs, outputs, rng=None, bits: int = 3) -> ConditionalKernel:
    gen = as_rng(rng)
    ishape = tuple(s for _, s in inputs)
    oshape = tuple(s for _, s in outputs)
    rows = [dyadic_probs(oshape, gen, bits) for _ in range(int(np.prod(ishape)))]
    return ConditionalKernel(inputs, outputs, np.stack(rows).reshape(ishape + oshape))


def as_fractions(probs: np.ndarray) -> np.ndarray:
    """Exact rational copy of a float table (dyadic floats convert exactly)."""
    out = np.empty(probs.shape, dtype=object)
    for idx, v in np.ndenumerate(probs):
        out[idx] = Fraction(float(v))
    return out


def bsc_p2p(p: float) -> JointPMF:
    """Z uniform, X = Z, Y = X through BSC(p)."""
    joint = compose(bernoulli(0.5, "Z"), identity_kernel("Z", "X"))
    return compose(joint, bsc(p, "X", "Y"))


def adder_mac() -> JointPMF:
    """Binary adder MAC with X_i = Z_i uniform and a constant common auxiliary Z0."""
    joint = product(point_mass(0, 2, "Z0"), uniform(2, "Z1"), uniform(2, "Z2"))
    joint = compose(joint, _copy_kernel(("Z0", "Z1"), "X1", 1))
    joint = compose(joint, _copy_kernel(("Z0", "Z2"), "X2", 1))
    return compose(joint, binary_adder())


def _copy_kernel(inputs, out: str, which: int) -> ConditionalKernel:
    tab = np.zeros((2, 2, 2))
    for a in range(2):
        for b in range(2):
            tab[a, b, (a, b)[which]] = 1.0
    return ConditionalKernel([(inputs[0], 2), (inputs[1], 2)], [(out, 2)], tab)


def random_mac(rng=None) -> JointPMF:
    """Independent dyadic Z0, Z1, Z2, dyadic encoders X1|Z0Z1, X2|Z0Z2 and a ternary-output channel."""
    gen = as_rng(rng)
    joint = product(*[dyadic_pmf([(f"Z{k}", 2)], gen) for k in range(3)])
    joint = compose(joint, dyadic_kernel([("Z0", 2), ("Z1", 2)], [("X1", 2)], gen))
    joint = compose(joint, dyadic_kernel([("Z0", 2), ("Z2", 2)], [("X2", 2)], gen))
    return compose(joint, dyadic_kernel([("X1", 2), ("X2", 2)], [("Y", 3)], gen))


def random_bc(rng=None) -> JointPMF:
    """Dyadic joint of (Z0, Z1, Z2), X a noisy random map of them, and two dyadic receivers."""
    gen = as_rng(rng)
    joint = dyadic_pmf([("Z0", 2), ("Z1", 2), ("Z2", 2)], gen, bits=5, positive=True)
    target = gen.integers(0, 4, size=8)
    tab = np.full((8, 4), 1 / 32)
    tab[np.arange(8), target] = 1 - 3 / 32
    joint = compose(joint, ConditionalKernel([("Z0", 2), ("Z1", 2), ("Z2", 2)], [("X", 4)], tab.reshape(2, 2, 2, 4)))
    joint = compose(joint, dyadic_kernel([("X", 4)], [("Y1", 2)], gen))
    return compose(joint, dyadic_kernel([("X", 4)], [("Y2", 2)], gen, bits=3))


def builtin_pmf(desc: dict, rng=None) -> JointPMF:
    """JointPMF from a config description: explicit tables or a named builtin."""
    if "builtin" not in desc:
        return JointPMF.from_json(desc)
    name = desc["builtin"]
    if name == "bernoulli":
        return bernoulli(desc.get("p", 0.5), desc.get("name", "Z"))
    if name == "dsbs":
        return dsbs(desc.get("p", 0.11))
    if name == "bsc-p2p":
        return bsc_p2p(desc.get("p", 0.11))
    if name == "adder-mac":
        return adder_mac()
    if name == "random-mac":
        return random_mac(rng)
    if name == "random-bc":
        return random_bc(rng)
    if name == "additive":
        q = int(desc.get("q", 2))
        p = desc.get("p", 0.11)
        noise = np.full(q, p / (q - 1))
        noise[0] = 1 - p
        return additive_noise_source(JointPMF([("N", q)], noise), q)
    raise ValueError(f"unknown builtin distribution {name!r}")
