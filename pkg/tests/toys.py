"""Small channel-code configurations shared by the channel and acceptance tests."""

import numpy as np

from mtcode.channel_coding import ChannelCodeSpec, EncoderSpec, MessageGroup, random_channel_code
from mtcode.gf import FieldMatrix
from mtcode.models import bernoulli, binary_adder, bsc, dyadic_kernel, dyadic_pmf, identity_kernel, uniform
from mtcode.probability import ConditionalKernel, JointPMF
from mtcode.source_coding import DecoderSpec


def p2p(channel, n, r, R, seed, prior=None, kernel=None):
    prior = prior or uniform(2, "Z")
    kernel = kernel or identity_kernel("Z", "X")
    return random_channel_code(
        [MessageGroup(("Z",), prior)], [EncoderSpec("X", ("Z",), kernel)], channel,
        [DecoderSpec(("Z",), "Y")], n, {"Z": r}, {"Z": R}, np.random.default_rng(seed),
    )


def erasure(e):
    return ConditionalKernel([("X", 2)], [("Y", 3)], [[1 - e, e, 0.0], [0.0, e, 1 - e]])


def mac(n, rates, seed, channel=None):
    """Common message Z0 shared by both encoders, private Z1 and Z2, one decoder of all three."""
    rng = np.random.default_rng(seed)
    groups = [MessageGroup((s,), uniform(2, s)) for s in ("Z0", "Z1", "Z2")]
    enc = [
        EncoderSpec("X1", ("Z0", "Z1"), dyadic_kernel([("Z0", 2), ("Z1", 2)], [("X1", 2)], rng, bits=2)),
        EncoderSpec("X2", ("Z0", "Z2"), dyadic_kernel([("Z0", 2), ("Z2", 2)], [("X2", 2)], rng, bits=2)),
    ]
    channel = channel or binary_adder()
    r = {s: rates[s][0] for s in rates}
    R = {s: rates[s][1] for s in rates}
    return random_channel_code(groups, enc, channel, [DecoderSpec(("Z0", "Z1", "Z2"), "Y")], n, r, R, rng)


def bc(n, rates, seed):
    """One encoder, a dependent pair (Z1, Z2) in a single group, two receivers."""
    rng = np.random.default_rng(seed)
    prior = dyadic_pmf([("Z1", 2), ("Z2", 2)], rng, bits=3, positive=True)
    xk = np.zeros((2, 2, 4))
    for a in range(2):
        for b in range(2):
            xk[a, b, 2 * a + b] = 1.0
    enc = EncoderSpec("X", ("Z1", "Z2"), ConditionalKernel([("Z1", 2), ("Z2", 2)], [("X", 4)], xk))
    ch = np.zeros((4, 2, 2))
    for x in range(4):
        a, b = divmod(x, 2)
        for y1 in range(2):
            for y2 in range(2):
                ch[x, y1, y2] = (0.9 if y1 == a else 0.1) * (0.8 if y2 == b else 0.2)
    channel = ConditionalKernel([("X", 4)], [("Y1", 2), ("Y2", 2)], ch)
    decs = [DecoderSpec(("Z1",), "Y1"), DecoderSpec(("Z2",), "Y2")]
    r = {s: rates[s][0] for s in rates}
    R = {s: rates[s][1] for s in rates}
    return random_channel_code([MessageGroup(("Z1", "Z2"), prior)], [enc], channel, decs, n, r, R, rng)


def two_pairs(n, seed):
    """Two independent encoder/decoder pairs over a channel with cross-talk."""
    rng = np.random.default_rng(seed)
    groups = [MessageGroup(("Z1",), bernoulli(0.5, "Z1")), MessageGroup(("Z2",), bernoulli(0.375, "Z2"))]
    enc = [EncoderSpec("X1", ("Z1",), identity_kernel("Z1", "X1")), EncoderSpec("X2", ("Z2",), identity_kernel("Z2", "X2"))]
    channel = dyadic_kernel([("X1", 2), ("X2", 2)], [("Y1", 2), ("Y2", 2)], rng, bits=3)
    decs = [DecoderSpec(("Z1",), "Y1"), DecoderSpec(("Z2",), "Y2")]
    return random_channel_code(groups, enc, channel, decs, n, {"Z1": 0.5, "Z2": 0.5}, {"Z1": 0.5, "Z2": 0.5}, rng)


def toy_configs():
    """Ten (name, spec) pairs with n <= 4 over binary auxiliaries."""
    return [
        ("p2p-bsc-n3", p2p(bsc(0.11), 3, 1 / 3, 1 / 3, 0)),
        ("p2p-bsc-n4", p2p(bsc(0.2), 4, 0.5, 0.25, 1)),
        ("p2p-erasure-n3", p2p(erasure(0.25), 3, 1 / 3, 1 / 3, 2)),
        ("p2p-biased-noisy-w-n3", p2p(bsc(0.05), 3, 1 / 3, 1 / 3, 3, bernoulli(0.25, "Z"), bsc(0.125, "Z", "X"))),
        ("p2p-bsc-n4-high-rate", p2p(bsc(0.05), 4, 0.25, 0.5, 4)),
        ("mac-adder-n2", mac(2, {"Z0": (0.5, 0.5), "Z1": (0.0, 0.5), "Z2": (0.5, 0.0)}, 5)),
        ("mac-noisy-n2", mac(2, {"Z0": (0.0, 0.5), "Z1": (0.5, 0.5), "Z2": (0.0, 0.5)}, 6,
                             dyadic_kernel([("X1", 2), ("X2", 2)], [("Y", 3)], np.random.default_rng(60), bits=3))),
        ("bc-dependent-n2", bc(2, {"Z1": (0.5, 0.5), "Z2": (0.0, 0.5)}, 7)),
        ("bc-dependent-n3", bc(3, {"Z1": (1 / 3, 1 / 3), "Z2": (1 / 3, 1 / 3)}, 8)),
        ("two-pairs-n2", two_pairs(2, 9)),
    ]


def fixed_spec(f, g, c, channel, prior=None, n=None):
    """Point-to-point spec with explicit matrices and pinned vector."""
    from mtcode.gf import FieldVector

    f, g = FieldMatrix(f, 2, cols=n), FieldMatrix(g, 2, cols=n)
    n = f.cols
    prior = prior or uniform(2, "Z")
    return ChannelCodeSpec(
        (MessageGroup(("Z",), prior),), (EncoderSpec("X", ("Z",), identity_kernel("Z", "X")),), channel,
        (DecoderSpec(("Z",), "Y"),), {"Z": f}, {"Z": g}, n, 2, {"Z": FieldVector(c, 2)},
    )


def as_pmf(probs, name="Z"):
    return JointPMF([(name, len(probs))], probs)
