"""Independent brute-force oracles written with plain loops over tuples."""

import itertools
from fractions import Fraction

import numpy as np


def _mv(mat, z, q):
    return tuple(int(sum(int(a) * int(b) for a, b in zip(row, z)) % q) for row in mat)


def _block_prob(pmf_table, letters):
    p = 1.0
    for cell in letters:
        p *= float(pmf_table[cell])
    return p


def channel_error_bruteforce(spec):
    """End-to-end error by enumerating messages, auxiliaries, inputs and outputs."""
    q, n = spec.q, spec.n
    msgs = spec.messages
    F = {s: spec.f[s].entries.tolist() for s in msgs}
    G = {s: spec.g[s].entries.tolist() for s in msgs}
    c = {s: tuple(spec.c[s].tolist()) for s in msgs}
    blocks = list(itertools.product(range(q), repeat=n))

    # prior of a full z_S (tuple of blocks in message order)
    def prior(zS):
        p = 1.0
        for grp in spec.groups:
            tab = grp.prior.reorder(grp.messages).probs
            for k in range(n):
                p *= float(tab[tuple(zS[msgs.index(s)][k] for s in grp.messages)])
        return p

    xs = [e.name for e in spec.encoders]
    xsizes = [e.kernel.output_vars[0][1] for e in spec.encoders]
    ynames = spec.channel.output_names
    ysizes = [sz for _, sz in spec.channel.output_vars]
    chan = spec.channel.table
    in_order = spec.channel.input_names

    # joint single-letter law of (z_S, y_J) for the decoders
    def joint_letter(zl, yl):
        tot = 0.0
        pz = 1.0
        for grp in spec.groups:
            tab = grp.prior.reorder(grp.messages).probs
            pz *= float(tab[tuple(zl[msgs.index(s)] for s in grp.messages)])
        for xl in itertools.product(*[range(a) for a in xsizes]):
            w = pz
            for e, xv in zip(spec.encoders, xl):
                w *= float(e.kernel.table[tuple(zl[msgs.index(s)] for s in e.access) + (xv,)])
            xin = tuple(xl[xs.index(nm)] for nm in in_order)
            w *= float(chan[xin + tuple(yl)])
            tot += w
        return tot

    def marg_letter(D, zD, yname, yv):
        tot = 0.0
        for zl in itertools.product(range(q), repeat=len(msgs)):
            if any(zl[msgs.index(s)] != zD[i] for i, s in enumerate(D)):
                continue
            for yl in itertools.product(*[range(a) for a in ysizes]):
                if yl[ynames.index(yname)] != yv:
                    continue
                tot += joint_letter(zl, yl)
        return tot

    mcache = {}

    def dec_correct(j, mD, yj):
        d = spec.decoders[j]
        key = (j, mD, yj)
        if key in mcache:
            return mcache[key]
        num = den = 0.0
        cnum = cden = 0
        for zD in itertools.product(blocks, repeat=len(d.decode)):
            if any(_mv(F[s], zD[i], q) != c[s] for i, s in enumerate(d.decode)):
                continue
            w = 1.0
            for k in range(n):
                w *= marg_letter(d.decode, tuple(zD[i][k] for i in range(len(d.decode))), d.side, yj[k])
            hit = all(_mv(G[s], zD[i], q) == mD[i] for i, s in enumerate(d.decode))
            den += w
            cden += 1
            if hit:
                num += w
                cnum += 1
        val = num / den if den > 0 else cnum / cden
        mcache[key] = val
        return val

    mspaces = [list(itertools.product(range(q), repeat=spec.g[s].rows)) for s in msgs]
    total_m = np.prod([len(x) for x in mspaces])
    correct = 0.0
    for m in itertools.product(*mspaces):
        members = []
        for zS in itertools.product(blocks, repeat=len(msgs)):
            if all(_mv(F[s], zS[i], q) == c[s] and _mv(G[s], zS[i], q) == m[i] for i, s in enumerate(msgs)):
                members.append((zS, prior(zS)))
        # each group normalizes separately; groups are independent so the product normalizes too
        mass = sum(w for _, w in members)
        if mass <= 0:
            continue
        for zS, w in members:
            if w == 0:
                continue
            for xb in itertools.product(*[itertools.product(range(a), repeat=n) for a in xsizes]):
                px = 1.0
                for e, xv in zip(spec.encoders, xb):
                    for k in range(n):
                        px *= float(e.kernel.table[tuple(zS[msgs.index(s)][k] for s in e.access) + (xv[k],)])
                if px == 0:
                    continue
                for yb in itertools.product(*[itertools.product(range(a), repeat=n) for a in ysizes]):
                    py = 1.0
                    for k in range(n):
                        xin = tuple(xb[xs.index(nm)][k] for nm in in_order)
                        py *= float(chan[xin + tuple(yb[i][k] for i in range(len(ynames)))])
                    if py == 0:
                        continue
                    corr = 1.0
                    for j, d in enumerate(spec.decoders):
                        mD = tuple(m[msgs.index(s)] for s in d.decode)
                        corr *= dec_correct(j, mD, yb[ynames.index(d.side)])
                    correct += w / mass * px * py * corr / total_m
    return 1.0 - correct


# --- source codes ------------------------------------------------------------


def _letter_table(model, names):
    """Single-letter law of ``names`` as a dict cell -> Fraction, by plain summation."""
    order = [v for v, _ in model.variables]
    sizes = [s for _, s in model.variables]
    out = {}
    for cell in itertools.product(*[range(s) for s in sizes]):
        key = tuple(cell[order.index(v)] for v in names)
        out[key] = out.get(key, 0) + Fraction(float(model.probs[cell]))
    return out


def source_error_bruteforce(spec, kind):
    """Exact single-decoder block error for the map or crng decoder, as a Fraction."""
    q, n = spec.q, spec.n
    d = spec.decoders[0]
    names = list(d.decode) + ([d.side] if d.side is not None else [])
    ysize = spec.model.size_of(d.side) if d.side is not None else 1
    letters = _letter_table(spec.model, names)
    mats = {s: spec.matrices[s].entries.tolist() for s in d.decode}
    groups = {}
    for zs in itertools.product(itertools.product(range(q), repeat=n), repeat=len(d.decode)):
        key_c = tuple(_mv(mats[s], zs[i], q) for i, s in enumerate(d.decode))
        for yb in itertools.product(range(ysize), repeat=n):
            w = Fraction(1)
            for k in range(n):
                cell = tuple(z[k] for z in zs) + ((yb[k],) if d.side is not None else ())
                w *= letters.get(cell, 0)
            groups.setdefault((key_c, yb), []).append(w)
    correct = Fraction(0)
    for ws in groups.values():
        tot = sum(ws)
        if kind == "map":
            correct += max(ws)
        elif tot:
            correct += sum(w * w for w in ws) / tot
    return 1 - correct


# --- hash ensembles ----------------------------------------------------------


def ensemble_members(spec):
    """Every member as a function table (list of bin indices over the domain), with its probability."""
    q, rows, cols = spec.q, spec.rows, spec.cols
    domain = list(itertools.product(range(q), repeat=cols))

    def as_table(mat):
        return [_index(_mv(mat, z, q), q) for z in domain]

    if spec.kind == "RandomBinningTable":
        tabs = list(itertools.product(range(q**rows), repeat=len(domain)))
        return [(list(t), Fraction(1, len(tabs))) for t in tabs]
    if spec.kind == "UniformLinear":
        mats = list(itertools.product(range(q), repeat=rows * cols))
        return [
            (as_table([m[r * cols:(r + 1) * cols] for r in range(rows)]), Fraction(1, len(mats)))
            for m in mats
        ]
    # sparse: each column independently picks w positions and nonzero values
    colchoices = []
    for pos in itertools.combinations(range(rows), spec.weight):
        for vals in itertools.product(range(1, q), repeat=spec.weight):
            col = [0] * rows
            for p, v in zip(pos, vals):
                col[p] = v
            colchoices.append(col)
    out = []
    for cols_ in itertools.product(colchoices, repeat=cols):
        mat = [[cols_[c][r] for c in range(cols)] for r in range(rows)]
        out.append((as_table(mat), Fraction(1, len(colchoices) ** cols)))
    return out


def _index(v, q):
    i = 0
    for a in v:
        i = i * q + a
    return i


def collision_bruteforce(spec, z, z2):
    members = ensemble_members(spec)
    q = spec.q
    a, b = _index(z, q), _index(z2, q)
    return sum(p for t, p in members if t[a] == t[b])


def image_union(spec):
    seen = set()
    for t, _ in ensemble_members(spec):
        seen.update(t)
    return len(seen)


def hash_lhs_bruteforce(spec, alpha, z):
    q = spec.q
    members = ensemble_members(spec)
    thresh = Fraction(alpha) / image_union(spec)
    a = _index(z, q)
    total = Fraction(0)
    for b in range(q**spec.cols):
        if b == a:
            continue
        pr = sum(p for t, p in members if t[a] == t[b])
        if pr > thresh:
            total += pr
    return total


def bcp_lhs_bruteforce(specs, Q, T):
    """E_F sum_c |Q(T & C_F(c))/Q(T) - 1/prod|Im F_s|| over product ensembles."""
    per = [ensemble_members(s) for s in specs]
    ims = [image_union(s) for s in specs]
    N = 1
    for m in ims:
        N *= m
    pts = [p for p in itertools.product(*[range(s.q**s.cols) for s in specs]) if T[p]]
    QT = sum(Fraction(Q[p]) for p in pts)
    total = Fraction(0)
    for combo in itertools.product(*per):
        prob = Fraction(1)
        for _, p in combo:
            prob *= p
        bins = {}
        for pt in pts:
            key = tuple(combo[k][0][pt[k]] for k in range(len(specs)))
            bins[key] = bins.get(key, 0) + Fraction(Q[pt])
        dev = sum(abs(v / QT - Fraction(1, N)) for v in bins.values())
        dev += (N - len(bins)) * Fraction(1, N)
        total += prob * dev
    return total


def crp_lhs_bruteforce(specs, T, z_S):
    """P_F(some other point of T shares the bin of z_S)."""
    per = [ensemble_members(s) for s in specs]
    pts = [p for p in itertools.product(*[range(s.q**s.cols) for s in specs]) if T[p] and p != tuple(z_S)]
    total = Fraction(0)
    for combo in itertools.product(*per):
        prob = Fraction(1)
        for _, p in combo:
            prob *= p
        home = tuple(combo[k][0][z_S[k]] for k in range(len(specs)))
        if any(tuple(combo[k][0][pt[k]] for k in range(len(specs))) == home for pt in pts):
            total += prob
    return total
