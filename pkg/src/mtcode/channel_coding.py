"""Channel code built from the source code plus message hashes.

Each message s owns an auxiliary block z_s. Messages are grouped; every group
draws its blocks jointly with a constrained random number generator: the
group prior restricted to {z : f z = c, g z = m}. Encoder i feeds the blocks
of its access set through its kernel W_i, the channel acts letterwise, and
decoder j runs the source-code CRNG decoder on c_D and y_j and outputs
g_s(z_hat_s).

Disjoint groups with one encoder per group give the direct construction.
Singleton groups with overlapping access sets give the common-message
reduction, where every encoder that uses message s sees the same z_s.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .gf import (
    DimensionError,
    EnsembleSpec,
    FieldMatrix,
    FieldVector,
    as_rng,
    check_budget,
    mat_vec_mul,
    sample_matrix,
    syndrome_table,
)
from .probability import ConditionalKernel, JointPMF, compose, conditional, marginal, product, sample
from .source_coding import (
    DecoderSpec,
    MCResult,
    SourceCodeSpec,
    _BlockSpace,
    _cell_probs,
    _weights_from_counts,
    crng_decode,
    rows_for_rate,
    trial_rng,
    wilson_interval,
)


@dataclass(frozen=True)
class MessageGroup:
    """Messages whose auxiliary blocks are drawn jointly from ``prior``."""

    messages: tuple[str, ...]
    prior: JointPMF

    def __post_init__(self) -> None:
        object.__setattr__(self, "messages", tuple(self.messages))
        if sorted(self.prior.names) != sorted(self.messages):
            raise ValueError(f"group prior over {self.prior.names} must cover exactly {self.messages}")


@dataclass(frozen=True)
class EncoderSpec:
    """Channel input ``name`` = W(z_access), applied letterwise."""

    name: str
    access: tuple[str, ...]
    kernel: ConditionalKernel

    def __post_init__(self) -> None:
        object.__setattr__(self, "access", tuple(self.access))
        if self.kernel.input_names != list(self.access):
            raise ValueError(f"kernel inputs {self.kernel.input_names} must equal access set {self.access}")
        if self.kernel.output_names != [self.name]:
            raise ValueError(f"kernel must output the single variable {self.name!r}")


@dataclass(frozen=True, eq=False)
class ChannelCodeSpec:
    groups: tuple[MessageGroup, ...]
    encoders: tuple[EncoderSpec, ...]
    channel: ConditionalKernel
    decoders: tuple[DecoderSpec, ...]
    f: dict
    g: dict
    n: int
    q: int = 2
    c: dict | None = None

    def __post_init__(self) -> None:
        for attr in ("groups", "encoders", "decoders"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))
        msgs = self.messages
        if len(set(msgs)) != len(msgs):
            raise ValueError("message groups must be disjoint")
        for grp in self.groups:
            for s in grp.messages:
                if grp.prior.size_of(s) != self.q:
                    raise ValueError(f"auxiliary {s!r} must take values in GF({self.q})")
        for s in msgs:
            for name, mats in (("f", self.f), ("g", self.g)):
                if s not in mats:
                    raise KeyError(f"missing {name} matrix for {s!r}")
                m = mats[s]
                if m.cols != self.n or m.q != self.q:
                    raise DimensionError(f"{name}[{s}] must be GF({self.q}) with {self.n} columns")
        for e in self.encoders:
            for s in e.access:
                if s not in msgs:
                    raise KeyError(f"encoder {e.name!r} accesses unknown message {s!r}")
            touched = [grp for grp in self.groups if set(grp.messages) & set(e.access)]
            for grp in touched:
                if not set(grp.messages) <= set(e.access):
                    raise ValueError(f"encoder {e.name!r} must access whole groups")
        xnames = [e.name for e in self.encoders]
        if sorted(self.channel.input_names) != sorted(xnames):
            raise ValueError(f"channel inputs {self.channel.input_names} != encoder outputs {xnames}")
        for d in self.decoders:
            if d.side not in self.channel.output_names:
                raise KeyError(f"decoder side variable {d.side!r} is not a channel output")
            for s in d.decode:
                if s not in msgs:
                    raise KeyError(f"decoder references unknown message {s!r}")
        if self.c is not None:
            for s in msgs:
                cv = self.c[s]
                if cv.length != self.f[s].rows:
                    raise DimensionError(f"c[{s}] has length {cv.length}, f has {self.f[s].rows} rows")

    @property
    def messages(self) -> tuple[str, ...]:
        return tuple(itertools.chain.from_iterable(grp.messages for grp in self.groups))

    @property
    def outputs(self) -> list[str]:
        return self.channel.output_names

    def message_count(self, s: str) -> int:
        return self.q ** self.g[s].rows

    @property
    def rates(self) -> dict[str, tuple[float, float]]:
        """(R_s, r_s) per message in bits per symbol."""
        lq = math.log2(self.q)
        return {s: (self.g[s].rows / self.n * lq, self.f[s].rows / self.n * lq) for s in self.messages}

    def with_c(self, c: dict) -> "ChannelCodeSpec":
        return ChannelCodeSpec(self.groups, self.encoders, self.channel, self.decoders, self.f, self.g, self.n, self.q, c)

    def prior(self) -> JointPMF:
        return product(*[grp.prior.reorder(grp.messages) for grp in self.groups])

    def to_json(self) -> dict:
        out = {
            "q": self.q,
            "n": self.n,
            "groups": [{"messages": list(g.messages), "prior": g.prior.to_json()} for g in self.groups],
            "encoders": [{"name": e.name, "access": list(e.access), "kernel": e.kernel.to_json()} for e in self.encoders],
            "channel": self.channel.to_json(),
            "decoders": [d.to_json() for d in self.decoders],
            "f": {s: self.f[s].to_json() for s in self.messages},
            "g": {s: self.g[s].to_json() for s in self.messages},
        }
        if self.c is not None:
            out["c"] = {s: self.c[s].tolist() for s in self.messages}
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ChannelCodeSpec":
        q = int(obj.get("q", 2))
        c = obj.get("c")
        return cls(
            tuple(MessageGroup(tuple(g["messages"]), JointPMF.from_json(g["prior"])) for g in obj["groups"]),
            tuple(EncoderSpec(e["name"], tuple(e["access"]), ConditionalKernel.from_json(e["kernel"])) for e in obj["encoders"]),
            ConditionalKernel.from_json(obj["channel"]),
            tuple(DecoderSpec(tuple(d["decode"]), d["side"]) for d in obj["decoders"]),
            {s: FieldMatrix.from_json(m) for s, m in obj["f"].items()},
            {s: FieldMatrix.from_json(m) for s, m in obj["g"].items()},
            int(obj["n"]),
            q,
            None if c is None else {s: FieldVector(v, q) for s, v in c.items()},
        )


@dataclass
class TransmissionTrace:
    messages: dict
    z: dict
    z_by_encoder: dict
    x: dict
    y: dict
    m_hat: dict
    encoder_failed: bool = False

    def errors(self) -> bool:
        if self.encoder_failed:
            return True
        for j, rep in self.m_hat.items():
            for s, v in rep.items():
                if v is None or v != self.messages[s]:
                    return True
        return False

    def to_json(self) -> dict:
        def vec(v):
            return None if v is None else [int(a) for a in (v.tolist() if hasattr(v, "tolist") else v)]

        return {
            "messages": {s: vec(v) for s, v in self.messages.items()},
            "z": {s: vec(v) for s, v in self.z.items()},
            "x": {s: vec(v) for s, v in self.x.items()},
            "y": {s: vec(v) for s, v in self.y.items()},
            "m_hat": {str(j): {s: vec(v) for s, v in rep.items()} for j, rep in self.m_hat.items()},
            "encoder_failed": self.encoder_failed,
        }


# --- single-letter models ---------------------------------------------------


def _uniform_prior(spec: ChannelCodeSpec) -> JointPMF:
    q = spec.q
    k = len(spec.messages)
    return JointPMF([(s, q) for s in spec.messages], np.full((q,) * k, 1.0 / q**k))


def _push_through(spec: ChannelCodeSpec, prior: JointPMF) -> JointPMF:
    joint = prior
    for e in spec.encoders:
        joint = compose(joint, e.kernel)
    joint = compose(joint, spec.channel)
    return marginal(joint, list(spec.messages) + spec.outputs)


def induced_channel(spec: ChannelCodeSpec) -> ConditionalKernel:
    """Letterwise law of the outputs given all auxiliaries: sum_x mu(y|x) prod_i W_i(x_i|z)."""
    joint = _push_through(spec, _uniform_prior(spec))
    return conditional(joint, spec.outputs, list(spec.messages))


def induced_joint(spec: ChannelCodeSpec) -> JointPMF:
    """Single-letter joint of (Z_S, Y_J) under the group priors."""
    return _push_through(spec, spec.prior())


def source_view(spec: ChannelCodeSpec) -> SourceCodeSpec:
    """The source code run by the decoders: f matrices on the induced joint."""
    return SourceCodeSpec(induced_joint(spec), dict(spec.f), spec.decoders, spec.n, spec.q)


# --- encoding ----------------------------------------------------------------


def _group_blocks(spec: ChannelCodeSpec, gi: int, rng) -> dict:
    grp = spec.groups[gi]
    letters = sample(grp.prior, rng, size=spec.n)
    return {s: letters[:, grp.prior.axis(s)] for s in grp.messages}


def draw_pinned_vectors(spec: ChannelCodeSpec, rng=None) -> dict:
    """c_s = f_s z_s with z drawn from the group priors."""
    gen = as_rng(rng)
    out = {}
    for gi, grp in enumerate(spec.groups):
        z = _group_blocks(spec, gi, gen)
        for s in grp.messages:
            out[s] = mat_vec_mul(spec.f[s], FieldVector(z[s], spec.q))
    return out


def _require_c(spec: ChannelCodeSpec) -> dict:
    if spec.c is None:
        raise ValueError("pinned vectors c are not set; call draw_pinned_vectors and with_c")
    return spec.c


def _group_coset(spec: ChannelCodeSpec, gi: int, m: dict):
    from .gf import solve_affine

    grp = spec.groups[gi]
    c = _require_c(spec)
    mats = [spec.f[s].vstack(spec.g[s]) for s in grp.messages]
    stacked = FieldMatrix.block_diag(mats)
    rhs = np.concatenate([np.concatenate([c[s].elements, _vec(m[s], spec.q).elements]) for s in grp.messages])
    return solve_affine(stacked, FieldVector(rhs, spec.q))


def _vec(v, q) -> FieldVector:
    return v if isinstance(v, FieldVector) else FieldVector(v, q)


def group_crng(spec: ChannelCodeSpec, gi: int, m: dict, rng=None, budget: int | None = None):
    """Sample z_group from the prior restricted to C_f(c) and C_g(m); None on failure."""
    grp = spec.groups[gi]
    cs = _group_coset(spec, gi, m)
    if cs.is_empty:
        return None
    members = cs.members(budget)
    names = list(grp.messages)
    probs = _cell_probs(grp.prior, names)
    n, q = spec.n, spec.q
    cells = np.zeros((members.shape[0], n), dtype=np.int64)
    for i in range(len(names)):
        cells = cells * q + members[:, i * n : (i + 1) * n]
    counts = np.stack([(cells == c).sum(axis=1) for c in range(len(probs))], axis=1)
    w = _weights_from_counts(counts, probs)
    total = w.sum()
    if total <= 0:
        return None
    pick = sample(w / total, as_rng(rng))
    return {s: FieldVector(members[pick, i * n : (i + 1) * n], q) for i, s in enumerate(names)}


def message_encoder(spec: ChannelCodeSpec, gi: int, seed) -> Callable[[dict], dict | None]:
    """Per-group encoder with its internal randomness fixed by ``seed``.

    Calling it twice with the same messages returns the same blocks, which is
    what lets several channel encoders share a common message.
    """

    def phi(m: dict):
        return group_crng(spec, gi, m, np.random.default_rng([int(seed), 1_000_003, gi]))

    return phi


def _apply_kernel(kernel: ConditionalKernel, inputs: Sequence[np.ndarray], rng) -> np.ndarray:
    """Letterwise draw from ``kernel`` given input blocks."""
    gen = as_rng(rng)
    n = len(inputs[0]) if inputs else 0
    mat = kernel.matrix()
    sizes = [s for _, s in kernel.input_vars]
    row = np.zeros(n, dtype=np.int64)
    for blk, a in zip(inputs, sizes):
        row = row * a + np.asarray(blk, dtype=np.int64)
    cdf = np.cumsum(mat, axis=1)
    u = gen.random(n)
    out = np.array([min(int(np.searchsorted(cdf[r], ui, side="right")), mat.shape[1] - 1) for r, ui in zip(row, u)], dtype=np.int64)
    return out


def compose_common_message_encoder(phis: dict, encoder: EncoderSpec, groups_of: dict) -> Callable:
    """Channel encoder Phi_i(m) = W_i(phi'_s(m_s) for s in its access set).

    ``phis`` maps group index to a per-group encoder, ``groups_of`` maps each
    message to its group index.
    """

    def encode_i(m: dict, rng=None):
        z = {}
        for gi in sorted({groups_of[s] for s in encoder.access}):
            out = phis[gi](m)
            if out is None:
                return None
            z.update(out)
        zs = [z[s].elements for s in encoder.access]
        x = _apply_kernel(encoder.kernel, zs, rng)
        return x, {s: z[s] for s in encoder.access}

    return encode_i


def _groups_of(spec: ChannelCodeSpec) -> dict:
    return {s: gi for gi, grp in enumerate(spec.groups) for s in grp.messages}


def encode(spec: ChannelCodeSpec, i: int, m: dict, rng=None, seed: int | None = None):
    """Channel input of encoder i, or None when its coset intersection fails.

    Returns (x_i, z_access). ``seed`` fixes the per-group generators so that
    encoders sharing a message see the same block.
    """
    gen = as_rng(rng)
    seed = int(gen.integers(2**63)) if seed is None else seed
    phis = {gi: message_encoder(spec, gi, seed) for gi in range(len(spec.groups))}
    return compose_common_message_encoder(phis, spec.encoders[i], _groups_of(spec))(m, gen)


def transmit(spec: ChannelCodeSpec, x: dict, rng=None) -> dict:
    """Letterwise channel output blocks for input blocks ``x``."""
    gen = as_rng(rng)
    inputs = [np.asarray(x[name]) for name in spec.channel.input_names]
    cells = _apply_kernel(spec.channel, inputs, gen)
    sizes = [s for _, s in spec.channel.output_vars]
    digits = np.unravel_index(cells, sizes)
    return {name: np.asarray(d, dtype=np.int64) for name, d in zip(spec.outputs, digits)}


def decode(spec: ChannelCodeSpec, j: int, y: np.ndarray, rng=None, view: SourceCodeSpec | None = None) -> dict:
    """m_hat_s = g_s(z_hat_s) with z_hat from the CRNG source decoder; None on failure."""
    c = _require_c(spec)
    view = source_view(spec) if view is None else view
    d = spec.decoders[j]
    res = crng_decode(view, j, {s: c[s] for s in d.decode}, y, rng)
    if res.failed:
        return {s: None for s in d.decode}
    return {s: mat_vec_mul(spec.g[s], res.reproduction[s]) for s in d.decode}


def draw_messages(spec: ChannelCodeSpec, rng) -> dict:
    gen = as_rng(rng)
    return {s: FieldVector(gen.integers(0, spec.q, size=spec.g[s].rows), spec.q) for s in spec.messages}


def run_trial(spec: ChannelCodeSpec, rng, view: SourceCodeSpec | None = None) -> TransmissionTrace:
    """One end-to-end transmission with uniform messages."""
    gen = as_rng(rng)
    m = draw_messages(spec, gen)
    seed = int(gen.integers(2**63))
    phis = {gi: message_encoder(spec, gi, seed) for gi in range(len(spec.groups))}
    groups_of = _groups_of(spec)
    x, z, z_by = {}, {}, {}
    for i, e in enumerate(spec.encoders):
        out = compose_common_message_encoder(phis, e, groups_of)(m, gen)
        if out is None:
            return TransmissionTrace(m, z, z_by, x, {}, {}, encoder_failed=True)
        x[e.name], z_by[i] = out
        z.update(out[1])
    y = transmit(spec, x, gen)
    view = source_view(spec) if view is None else view
    m_hat = {j: decode(spec, j, y[d.side], gen, view) for j, d in enumerate(spec.decoders)}
    return TransmissionTrace(m, z, z_by, x, y, m_hat)


# --- exact evaluation ------------------------------------------------------


@dataclass
class _Sweep:
    """Quantities over all z_S blocks (mixed radix in message order)."""

    weight: np.ndarray
    valid: np.ndarray
    m_index: np.ndarray
    fg_mass: np.ndarray
    f_mass: float
    n_messages: int
    fg_count: np.ndarray


def _code_index(mat: FieldMatrix, budget) -> np.ndarray:
    return syndrome_table(mat, budget)


def _group_sweep(spec: ChannelCodeSpec, gi: int, budget):
    """Per-group arrays over z_group blocks: weight, f-ok mask, message index."""
    grp = spec.groups[gi]
    names = list(grp.messages)
    n, q = spec.n, spec.q
    space = _BlockSpace(names, [q] * len(names), n)
    check_budget(space.total, budget, "group sweep")
    idx = np.arange(space.total, dtype=np.int64)
    inv, counts = space.types(idx)
    w = _weights_from_counts(counts, _cell_probs(grp.prior, names))[inv]
    c = _require_c(spec)
    ok = np.ones(space.total, dtype=bool)
    midx = np.zeros(space.total, dtype=np.int64)
    for s in names:
        zs = space.var_index(idx, s)
        code = _code_index(spec.f[s], budget)[zs]
        ok &= code == FieldVector(c[s].elements, q).index
        midx = midx * spec.message_count(s) + _code_index(spec.g[s], budget)[zs]
    nm = math.prod(spec.message_count(s) for s in names)
    return w, ok, midx, nm


def _sweep_all(spec: ChannelCodeSpec, budget) -> _Sweep:
    weight = np.ones(1)
    valid = np.ones(1, dtype=bool)
    midx = np.zeros(1, dtype=np.int64)
    nm_total = 1
    for gi in range(len(spec.groups)):
        w, ok, mi, nm = _group_sweep(spec, gi, budget)
        weight = np.multiply.outer(weight, w).reshape(-1)
        valid = np.logical_and.outer(valid, ok).reshape(-1)
        midx = np.add.outer(midx * nm, mi).reshape(-1)
        nm_total *= nm
    fg_mass = np.bincount(midx[valid], weights=weight[valid], minlength=nm_total)
    fg_count = np.bincount(midx[valid], minlength=nm_total)
    return _Sweep(weight, valid, midx, fg_mass, float(weight[valid].sum()), nm_total, fg_count)


def _group_fg_masses(spec: ChannelCodeSpec, budget):
    """Per group: (mass of each C_fg(c, m), mass of C_f(c)); the product form of the sweep."""
    out = []
    for gi in range(len(spec.groups)):
        w, ok, mi, nm = _group_sweep(spec, gi, budget)
        out.append((np.bincount(mi[ok], weights=w[ok], minlength=nm), float(w[ok].sum())))
    return out


def _output_space(spec: ChannelCodeSpec):
    sizes = [s for _, s in spec.channel.output_vars]
    return spec.outputs, sizes


def _block_channel(spec: ChannelCodeSpec, budget) -> np.ndarray:
    """mu(y_J | z_S) for every block pair, shape (q^(n|S|), prod |Y|^n)."""
    kern = induced_channel(spec)
    names = list(spec.messages) + spec.outputs
    sizes = [spec.q] * len(spec.messages) + [s for _, s in spec.channel.output_vars]
    space = _BlockSpace(names, sizes, spec.n)
    check_budget(space.total, budget, "channel block sweep")
    inv, counts = space.types(np.arange(space.total, dtype=np.int64))
    w = _weights_from_counts(counts, kern.table.reshape(-1))[inv]
    nz = spec.q ** (spec.n * len(spec.messages))
    return w.reshape(nz, -1)


def _y_component(spec: ChannelCodeSpec, yname: str) -> np.ndarray:
    """Index of y_j inside the joint output-block index."""
    names, sizes = _output_space(spec)
    nb = [a**spec.n for a in sizes]
    total = math.prod(nb)
    pos = names.index(yname)
    stride = math.prod(nb[pos + 1 :])
    return (np.arange(total, dtype=np.int64) // stride) % nb[pos]


def _decoder_tables(spec: ChannelCodeSpec, j: int, view: SourceCodeSpec, budget):
    """For decoder j over (z_D, y_j): joint weight, f-ok mask, message index, z_D index, y index."""
    d = spec.decoders[j]
    names = list(d.decode) + [d.side]
    ysize = view.model.size_of(d.side)
    sizes = [spec.q] * len(d.decode) + [ysize]
    space = _BlockSpace(names, sizes, spec.n)
    check_budget(space.total, budget, "decoder sweep")
    idx = np.arange(space.total, dtype=np.int64)
    inv, counts = space.types(idx)
    w = _weights_from_counts(counts, _cell_probs(view.model, names))[inv]
    c = _require_c(spec)
    ok = np.ones(space.total, dtype=bool)
    midx = np.zeros(space.total, dtype=np.int64)
    for s in d.decode:
        zs = space.var_index(idx, s)
        ok &= _code_index(spec.f[s], budget)[zs] == c[s].index
        midx = midx * spec.message_count(s) + _code_index(spec.g[s], budget)[zs]
    ny = ysize**spec.n
    return w, ok, midx, idx // ny, idx % ny, ny


def _decoder_correct_messages(spec, j, view, budget) -> np.ndarray:
    """P(m_hat_D = m_D | y_j) as a (|M_D|, |Y_j|^n) table."""
    w, ok, midx, _, yidx, ny = _decoder_tables(spec, j, view, budget)
    nmd = math.prod(spec.message_count(s) for s in spec.decoders[j].decode)
    num = np.bincount(midx[ok] * ny + yidx[ok], weights=w[ok], minlength=nmd * ny).reshape(nmd, ny)
    den = np.bincount(yidx[ok], weights=w[ok], minlength=ny)
    cnt_fg = np.bincount(midx[ok] * ny + yidx[ok], minlength=nmd * ny).reshape(nmd, ny).astype(float)
    cnt_f = np.bincount(yidx[ok], minlength=ny).astype(float)
    fallback = np.divide(cnt_fg, cnt_f[None, :], out=np.zeros_like(cnt_fg), where=cnt_f[None, :] > 0)
    return np.where(den[None, :] > 0, num / np.where(den > 0, den, 1.0)[None, :], fallback)


def _decoder_correct_blocks(spec, j, view, budget) -> np.ndarray:
    """P(z_hat_D = z_D | y_j) as a (q^(n|D|), |Y_j|^n) table (zero off C_f(c))."""
    w, ok, _, zD, yidx, ny = _decoder_tables(spec, j, view, budget)
    nzd = spec.q ** (spec.n * len(spec.decoders[j].decode))
    den = np.bincount(yidx[ok], weights=w[ok], minlength=ny)
    cnt_f = np.bincount(yidx[ok], minlength=ny).astype(float)
    out = np.zeros((nzd, ny))
    val = np.where(den[yidx] > 0, w / np.where(den[yidx] > 0, den[yidx], 1.0), 1.0 / np.maximum(cnt_f[yidx], 1))
    out[zD[ok], yidx[ok]] = val[ok]
    return out


def _submessage_index(spec: ChannelCodeSpec, names: Sequence[str]) -> np.ndarray:
    """For every full message index, the mixed-radix index of the ``names`` part."""
    counts = [spec.message_count(s) for s in spec.messages]
    total = math.prod(counts)
    idx = np.arange(total, dtype=np.int64)
    strides = [math.prod(counts[i + 1 :]) for i in range(len(counts))]
    out = np.zeros(total, dtype=np.int64)
    for s in names:
        p = spec.messages.index(s)
        out = out * counts[p] + (idx // strides[p]) % counts[p]
    return out


def _subblock_index(spec: ChannelCodeSpec, names: Sequence[str]) -> np.ndarray:
    """For every z_S block index, the index of the z_names sub-block."""
    k = len(spec.messages)
    nb = spec.q**spec.n
    idx = np.arange(nb**k, dtype=np.int64)
    out = np.zeros(nb**k, dtype=np.int64)
    for s in names:
        p = spec.messages.index(s)
        out = out * nb + (idx // nb ** (k - 1 - p)) % nb
    return out


def end_to_end_error(spec: ChannelCodeSpec, mode: str = "exact", trials: int = 1000, seed: int = 0,
                     workers: int = 1, budget: int | None = None):
    """Probability that some decoder misreproduces some of its messages.

    Messages are uniform over GF(q)^(rows of g_s); an encoder failure counts
    as an error. ``mode`` is "exact" (returns a float) or "mc" (MCResult).
    """
    if mode == "mc":
        return _mc_error(spec, trials, seed, workers)
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    _require_c(spec)
    view = source_view(spec)
    sw = _sweep_all(spec, budget)
    K = _block_channel(spec, budget)
    a = np.zeros_like(sw.weight)
    good = sw.valid & (sw.fg_mass[sw.m_index] > 0)
    a[good] = sw.weight[good] / sw.fg_mass[sw.m_index[good]] / sw.n_messages
    P = np.zeros((sw.n_messages, K.shape[1]))
    np.add.at(P, sw.m_index[good], a[good, None] * K[good])
    corr = np.ones_like(P)
    for j, d in enumerate(spec.decoders):
        table = _decoder_correct_messages(spec, j, view, budget)
        corr *= table[_submessage_index(spec, d.decode)][:, _y_component(spec, d.side)]
    return 1.0 - float((P * corr).sum())


@dataclass(frozen=True)
class ErrorDecomposition:
    encoder_failure_mass: float
    decoding_mass: float
    mismatch_tv: float

    @property
    def bound(self) -> float:
        """decoding_mass + mismatch_tv (the failure mass is already inside the TV term)."""
        return self.decoding_mass + self.mismatch_tv

    def to_json(self) -> dict:
        return {
            "encoder_failure_mass": self.encoder_failure_mass,
            "decoding_mass": self.decoding_mass,
            "mismatch_tv": self.mismatch_tv,
        }


def error_decomposition(spec: ChannelCodeSpec, mode: str = "exact", budget: int | None = None) -> ErrorDecomposition:
    """Encoding-failure mass, source decoding error given c, and message-law mismatch.

    decoding_mass is the block error of the source decoders when z is drawn
    from the prior restricted to C_f(c); mismatch_tv is
    sum_m |mu(C_fg(c, m)) / mu(C_f(c)) - 1/|M||. The end-to-end error never
    exceeds decoding_mass + mismatch_tv.
    """
    if mode != "exact":
        raise ValueError("error_decomposition is exact only")
    _require_c(spec)
    view = source_view(spec)
    per_group = _group_fg_masses(spec, budget)
    # message law is a product over groups
    ratio = np.ones(1)
    fail = np.zeros(1, dtype=bool)
    for fg, fmass in per_group:
        r = fg / fmass if fmass > 0 else np.zeros_like(fg)
        ratio = np.multiply.outer(ratio, r).reshape(-1)
        fail = np.logical_or.outer(fail, fg <= 0).reshape(-1)
    nm = len(ratio)
    tv = float(np.abs(ratio - 1.0 / nm).sum())
    failure = float(fail.sum()) / nm

    sw = _sweep_all(spec, budget)
    K = _block_channel(spec, budget)
    if sw.f_mass <= 0:
        return ErrorDecomposition(failure, 1.0, tv)
    pz = np.where(sw.valid, sw.weight, 0.0) / sw.f_mass
    corr = np.ones_like(K)
    for j, d in enumerate(spec.decoders):
        table = _decoder_correct_blocks(spec, j, view, budget)
        corr *= table[_subblock_index(spec, d.decode)][:, _y_component(spec, d.side)]
    decoding = 1.0 - float((pz[:, None] * K * corr).sum())
    return ErrorDecomposition(failure, decoding, tv)


def _mc_chunk(args) -> int:
    spec, seed, start, stop = args
    view = source_view(spec)
    return sum(run_trial(spec, trial_rng(seed, t), view).errors() for t in range(start, stop))


def _mc_error(spec: ChannelCodeSpec, trials: int, seed: int, workers: int, chunk: int = 256) -> MCResult:
    from concurrent.futures import ProcessPoolExecutor

    if trials < 1:
        raise ValueError("trials must be >= 1")
    _require_c(spec)
    jobs = [(spec, seed, a, min(a + chunk, trials)) for a in range(0, trials, chunk)]
    if workers <= 1 or len(jobs) == 1:
        errors = sum(_mc_chunk(job) for job in jobs)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            errors = sum(pool.map(_mc_chunk, jobs))
    lo, hi = wilson_interval(errors, trials)
    return MCResult(errors / trials, lo, hi, errors, trials)


# --- construction helpers -------------------------------------------------


def random_channel_code(
    groups: Sequence[MessageGroup],
    encoders: Sequence[EncoderSpec],
    channel: ConditionalKernel,
    decoders: Sequence[DecoderSpec],
    n: int,
    r: dict,
    R: dict,
    rng=None,
    ensemble: EnsembleSpec | None = None,
    q: int = 2,
) -> ChannelCodeSpec:
    """Draw f (rate r_s) and g (rate R_s) per message, then the pinned vectors c."""
    gen = as_rng(rng)
    ens = ensemble or EnsembleSpec("UniformLinear", q)
    msgs = list(itertools.chain.from_iterable(g.messages for g in groups))
    f, g = {}, {}
    for s in msgs:
        for rate, out in ((r[s], f), (R[s], g)):
            rows = rows_for_rate(rate, n, q)
            out[s] = FieldMatrix.zeros(0, n, q) if rows == 0 else sample_matrix(ens, rows, n, gen)
    spec = ChannelCodeSpec(tuple(groups), tuple(encoders), channel, tuple(decoders), f, g, n, q)
    return spec.with_c(draw_pinned_vectors(spec, gen))
