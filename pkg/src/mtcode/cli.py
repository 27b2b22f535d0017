"""Command-line experiment runner.

Every experiment is a JSON config validated against
``schema/experiment.schema.json``. Results are CSV rows
(config_hash, params, metric, value, ci_low, ci_high) with shortest
round-trip float formatting, so identical (config, seed) pairs give
byte-identical files whatever the worker count.

Exit codes: 2 config or schema error, 3 enumeration budget exceeded,
4 internal invariant breach (a repro bundle is written next to the output).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import traceback
from fractions import Fraction
from importlib import resources
from typing import Iterator

import jsonschema
import numpy as np

from . import __version__
from .channel_coding import (
    ChannelCodeSpec,
    EncoderSpec,
    MessageGroup,
    end_to_end_error,
    error_decomposition,
    random_channel_code,
)
from .gf import BudgetExceeded, EnsembleSpec, FieldMatrix, FieldVector
from .hashing import (
    ensemble_size,
    verify_balanced_coloring_bound,
    verify_collision_bound,
    verify_hash_inequality,
)
from .models import builtin_pmf, identity_kernel
from .probability import ConditionalKernel, entropy, mutual_information, spectral_entropy_estimate
from .regions import (
    bc_explicit_region,
    channel_region_raw,
    containment_report,
    mac_explicit_region,
    marton_region,
    project_rates,
    source_region,
)
from .source_coding import (
    DecoderSpec,
    SourceCodeSpec,
    build_code,
    crng_chi_square,
    draw_blocks,
    encode,
    exact_error,
    mc_error,
)

COLUMNS = ("config_hash", "params", "metric", "value", "ci_low", "ci_high")
EXIT_CONFIG, EXIT_BUDGET, EXIT_INVARIANT = 2, 3, 4


class ConfigError(ValueError):
    """Config is well-formed JSON but does not describe a runnable experiment."""


class InvariantError(AssertionError):
    """A computed result violates a property that must always hold."""


# --- config handling --------------------------------------------------------


def load_schema() -> dict:
    text = resources.files("mtcode").joinpath("schema/experiment.schema.json").read_text()
    return json.loads(text)


def validate_schema(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"schema violation at {where}: {exc.message}") from None


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: dict) -> str:
    body = {k: v for k, v in cfg.items() if k != "output"}
    return hashlib.sha256(canonical(body).encode()).hexdigest()[:16]


def apply_override(cfg: dict, assignment: str) -> None:
    """``a.b.c=<json>`` sets a nested key; the value is parsed as JSON when possible."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} must look like key=value")
    key, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = cfg
    parts = key.split(".")
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = value


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, Fraction):
        x = float(x)
    if isinstance(x, (bool, np.bool_)):
        return repr(float(bool(x)))
    return repr(float(x))


def record(h: str, params: dict, metric: str, value, lo=None, hi=None) -> tuple:
    return (h, canonical(params), metric, fmt(value), fmt(lo), fmt(hi))


def _sub_rng(seed: int, *keys) -> np.random.Generator:
    return np.random.default_rng([int(seed)] + [int(k) for k in keys])


def _sub_seed(seed: int, *keys) -> int:
    return int(np.random.SeedSequence([int(seed)] + [int(k) for k in keys]).generate_state(2, np.uint64)[0] >> 1)


def _decoders(objs) -> tuple[DecoderSpec, ...]:
    return tuple(DecoderSpec(tuple(d["decode"]), d.get("side")) for d in objs)


# --- region ------------------------------------------------------------------

_EXPLICIT = {"mac": mac_explicit_region, "bc": bc_explicit_region, "marton": marton_region}


def _region_of(model: dict, p):
    family = model["family"]
    if family == "source":
        if "decoders" not in model:
            raise ConfigError("source regions need decoders")
        return source_region(p, _decoders(model["decoders"]))
    if family == "channel":
        if "decoders" not in model:
            raise ConfigError("channel regions need decoders")
        raw = channel_region_raw(
            p, _decoders(model["decoders"]), model.get("variant", "general"), model.get("groups"), model.get("messages")
        )
        return project_rates(raw) if model.get("eliminate", True) else raw
    return _EXPLICIT[family](p)


def _plan_region(cfg: dict) -> dict:
    model = cfg["model"]
    count = cfg.get("sweep", {}).get("distributions", 1)
    pmfs = [builtin_pmf(model["pmf"], _sub_rng(cfg["seed"], k)) for k in range(count)]
    # factorization and variable checks happen while building the raw families
    for p in pmfs:
        if model["family"] == "channel":
            channel_region_raw(p, _decoders(model.get("decoders", [])), model.get("variant", "general"),
                               model.get("groups"), model.get("messages"))
        elif model["family"] == "source":
            source_region(p, _decoders(model.get("decoders", [])))
    return {"pmfs": pmfs}


def _run_region(cfg: dict, plan: dict, h: str, workers: int, out: dict) -> Iterator[tuple]:
    model = cfg["model"]
    texts, polys = [], []
    for k, p in enumerate(plan["pmfs"]):
        poly = _region_of(model, p)
        polys.append(poly.to_json())
        header = f"# distribution {k}\n" if len(plan["pmfs"]) > 1 else ""
        texts.append(header + poly.pretty())
        for q in poly.inequalities:
            lhs = q.pretty().split(" <= ")[0]
            yield record(h, {"dist": k, "ineq": lhs}, "bound", q.bound)
        if "compare" in model:
            other = _EXPLICIT[model["compare"]](p)
            rel = containment_report(poly, other)
            yield record(h, {"dist": k, "against": model["compare"]}, "equal", rel == "equal")
            yield record(h, {"dist": k, "against": model["compare"], "relation": rel}, "relation", 1.0)
    out["text"] = "\n".join(texts)
    out["json"] = polys


# --- simulate-source --------------------------------------------------------


def _source_grid(cfg: dict):
    model, sweep = cfg["model"], cfg.get("sweep", {})
    ns = sweep.get("n", [4])
    rate_list = sweep.get("rates") or [model.get("rates", {})]
    return ns, rate_list


def _plan_source(cfg: dict) -> dict:
    model = cfg["model"]
    p = builtin_pmf(model["pmf"], _sub_rng(cfg["seed"], 0))
    decs = _decoders(model["decoders"])
    q = model.get("q", 2)
    ns, rate_list = _source_grid(cfg)
    sources = [s for s in p.names if any(s in d.decode for d in decs)]
    mats = model.get("matrices")
    fixed = None
    if isinstance(mats, dict):
        if len(ns) != 1:
            raise ConfigError("explicit matrices fix the block length; give a single n")
        fixed = {s: FieldMatrix.from_json(m) for s, m in mats.items()}
        SourceCodeSpec(p, fixed, decs, ns[0], q)
    elif mats is None:
        for rates in rate_list:
            missing = [s for s in sources if s not in rates]
            if missing:
                raise ConfigError(f"no rate for sources {missing}")
    SourceCodeSpec(p, {s: FieldMatrix.identity(ns[0], q) for s in sources}, decs, ns[0], q)
    return {"pmf": p, "decoders": decs, "q": q, "sources": sources, "fixed": fixed}


def _run_source(cfg: dict, plan: dict, h: str, workers: int, out: dict) -> Iterator[tuple]:
    model, sweep = cfg["model"], cfg.get("sweep", {})
    ns, rate_list = _source_grid(cfg)
    codes = sweep.get("codes", 1)
    trials = sweep.get("trials", 1000)
    kinds = model.get("decoder_kinds", ["map"])
    mode = model.get("mode", "exact")
    eps = model.get("epsilon", 0.1)
    ens_obj = model.get("ensemble", {"kind": "UniformLinear"})
    q = plan["q"]
    ens = EnsembleSpec(ens_obj["kind"], q, 1, 1, ens_obj.get("weight"))
    for ni, n in enumerate(ns):
        for ri, rates in enumerate(rate_list):
            totals = {k: 0.0 for k in kinds}
            for c in range(codes):
                if plan["fixed"] is not None:
                    spec = SourceCodeSpec(plan["pmf"], plan["fixed"], plan["decoders"], n, q)
                elif model.get("matrices") == "identity":
                    spec = SourceCodeSpec(plan["pmf"], {s: FieldMatrix.identity(n, q) for s in plan["sources"]},
                                          plan["decoders"], n, q)
                else:
                    spec = build_code(plan["pmf"], {s: rates[s] for s in plan["sources"]}, plan["decoders"], n, ens,
                                      _sub_rng(cfg["seed"], n, ri, c), q)
                params = {"n": n, "rates": rates, "code": c}
                if mode == "fidelity":
                    yield from _fidelity_rows(cfg, spec, params, trials, h, (n, ri, c))
                    continue
                for kind in kinds:
                    if mode == "exact":
                        val = float(exact_error(spec, kind, eps))
                        if not -1e-12 <= val <= 1 + 1e-12:
                            raise InvariantError(f"exact error {val} outside [0, 1]")
                        totals[kind] += val
                        yield record(h, {**params, "decoder": kind}, "exact_error", val)
                    else:
                        res = mc_error(spec, kind, trials, _sub_seed(cfg["seed"], n, ri, c), eps, workers)
                        totals[kind] += res.estimate
                        yield record(h, {**params, "decoder": kind, "trials": trials}, "mc_error", res.estimate,
                                     res.ci_low, res.ci_high)
            if mode == "fidelity":
                continue
            for kind in kinds:
                yield record(h, {"n": n, "rates": rates, "codes": codes, "decoder": kind}, f"mean_{mode}_error",
                             totals[kind] / codes)


def _fidelity_rows(cfg, spec, params, draws, h, keys) -> Iterator[tuple]:
    """Chi-square test of CRNG draws at one (c, y) drawn from the source, decoder 0."""
    blocks = draw_blocks(spec, _sub_rng(cfg["seed"], *keys, 1))
    z = {s: FieldVector(blocks[s], spec.q) for s in spec.sources}
    d = spec.decoders[0]
    y = blocks[d.side] if d.side is not None else None
    res = crng_chi_square(spec, 0, encode(spec, z), y, draws, _sub_seed(cfg["seed"], *keys, 2))
    params = {**params, "draws": draws, "cells": res["cells"]}
    yield record(h, params, "chi2_statistic", res["statistic"])
    yield record(h, params, "chi2_pvalue", res["pvalue"])


# --- simulate-channel -------------------------------------------------------


def _channel_parts(cfg: dict):
    model = cfg["model"]
    rng = _sub_rng(cfg["seed"], 0)
    groups = tuple(MessageGroup(tuple(g["messages"]), builtin_pmf(g["prior"], rng)) for g in model["groups"])
    encoders = []
    for e in model["encoders"]:
        if "kernel" in e:
            kern = ConditionalKernel.from_json(e["kernel"])
        elif len(e["access"]) == 1:
            kern = identity_kernel(e["access"][0], e["name"], model.get("q", 2))
        else:
            raise ConfigError(f"encoder {e['name']!r} accesses several messages and needs a kernel")
        encoders.append(EncoderSpec(e["name"], tuple(e["access"]), kern))
    return groups, tuple(encoders), ConditionalKernel.from_json(model["channel"]), _decoders(model["decoders"])


def _plan_channel(cfg: dict) -> dict:
    model = cfg["model"]
    groups, encoders, channel, decoders = _channel_parts(cfg)
    q = model.get("q", 2)
    ns = cfg.get("sweep", {}).get("n", [4])
    msgs = [s for g in groups for s in g.messages]
    if "f" in model or "g" in model:
        if len(ns) != 1:
            raise ConfigError("explicit f/g matrices fix the block length; give a single n")
        f = {s: FieldMatrix.from_json(m) for s, m in model["f"].items()}
        g = {s: FieldMatrix.from_json(m) for s, m in model["g"].items()}
        c = {s: FieldVector(v, q) for s, v in model["c"].items()} if "c" in model else None
        ChannelCodeSpec(groups, encoders, channel, decoders, f, g, ns[0], q, c)
    else:
        rates = model.get("rates", {})
        missing = [s for s in msgs if s not in rates]
        if missing:
            raise ConfigError(f"no rates for messages {missing}")
        zero = {s: FieldMatrix.zeros(0, ns[0], q) for s in msgs}
        ChannelCodeSpec(groups, encoders, channel, decoders, zero, zero, ns[0], q)
    return {"parts": (groups, encoders, channel, decoders), "q": q, "messages": msgs}


def _run_channel(cfg: dict, plan: dict, h: str, workers: int, out: dict) -> Iterator[tuple]:
    from .channel_coding import draw_pinned_vectors

    model, sweep = cfg["model"], cfg.get("sweep", {})
    groups, encoders, channel, decoders = plan["parts"]
    q = plan["q"]
    mode = model.get("mode", "exact")
    trials = sweep.get("trials", 1000)
    codes = sweep.get("codes", 1)
    ens_obj = model.get("ensemble", {"kind": "UniformLinear"})
    ens = EnsembleSpec(ens_obj["kind"], q, 1, 1, ens_obj.get("weight"))
    for n in sweep.get("n", [4]):
        for c in range(codes):
            rng = _sub_rng(cfg["seed"], n, c)
            if "f" in model:
                f = {s: FieldMatrix.from_json(m) for s, m in model["f"].items()}
                g = {s: FieldMatrix.from_json(m) for s, m in model["g"].items()}
                spec = ChannelCodeSpec(groups, encoders, channel, decoders, f, g, n, q)
                pinned = ({s: FieldVector(v, q) for s, v in model["c"].items()} if "c" in model
                          else draw_pinned_vectors(spec, rng))
                spec = spec.with_c(pinned)
            else:
                rates = model["rates"]
                spec = random_channel_code(groups, encoders, channel, decoders, n,
                                           {s: rates[s]["r"] for s in plan["messages"]},
                                           {s: rates[s]["R"] for s in plan["messages"]}, rng, ens, q)
            params = {"n": n, "code": c}
            if mode in ("exact", "both"):
                err = end_to_end_error(spec)
                dec = error_decomposition(spec)
                if err > dec.bound + 1e-12:
                    raise InvariantError(f"end-to-end error {err} exceeds decomposition bound {dec.bound}")
                yield record(h, params, "end_to_end_error", err)
                for k, v in dec.to_json().items():
                    yield record(h, params, k, v)
            if mode in ("mc", "both"):
                res = end_to_end_error(spec, "mc", trials, _sub_seed(cfg["seed"], n, c), workers)
                yield record(h, {**params, "trials": trials}, "mc_error", res.estimate, res.ci_low, res.ci_high)


# --- verify-hash ------------------------------------------------------------

_LEMMA_MEMBER_LIMIT = 1 << 12


def _lemma_instance(rng: np.random.Generator, kinds, q: int, max_sources: int, max_dim: int):
    """Random small lemma input: ensembles, integer weights Q and a nonempty mask T."""
    k = 1 + int(rng.integers(max_sources))
    while True:
        specs = []
        for _ in range(k):
            kind = kinds[int(rng.integers(len(kinds)))]
            rows = 1 + int(rng.integers(max_dim))
            cols = 1 + int(rng.integers(max_dim))
            if kind["kind"] == "SparseColumnWeight":
                w = min(kind.get("weight", 1), rows)
                specs.append(EnsembleSpec(kind["kind"], q, rows, cols, w))
            else:
                specs.append(EnsembleSpec(kind["kind"], q, rows, cols))
        if math.prod(ensemble_size(s) for s in specs) <= _LEMMA_MEMBER_LIMIT:
            break
    shape = tuple(s.domain_size for s in specs)
    Q = rng.integers(0, 9, size=shape)
    T = rng.random(shape) < 0.5
    if not (T & (Q > 0)).any():
        idx = tuple(int(rng.integers(a)) for a in shape)
        T[idx] = True
        Q[idx] = max(int(Q[idx]), 1)
    pts = np.argwhere(T)
    z = tuple(int(v) for v in pts[int(rng.integers(len(pts)))])
    return specs, Q, T, z


def _plan_hash(cfg: dict) -> dict:
    model = cfg["model"]
    kinds = model.get("ensembles", [{"kind": "UniformLinear"}, {"kind": "RandomBinningTable"}])
    q = model.get("q", 2)
    for kd in kinds:
        EnsembleSpec(kd["kind"], q, max(kd.get("weight", 1), 1), 1, kd.get("weight"))
    return {"kinds": kinds, "q": q}


def _run_hash(cfg: dict, plan: dict, h: str, workers: int, out: dict) -> Iterator[tuple]:
    model, sweep = cfg["model"], cfg.get("sweep", {})
    q = plan["q"]
    failures = []
    if "hash" in model["checks"]:
        alpha = Fraction(str(model.get("alpha", 1)))
        beta = Fraction(str(model.get("beta", 0)))
        for kd in plan["kinds"]:
            for rows in sweep.get("rows", [1, 2, 3, 4]):
                for cols in sweep.get("cols", [1, 2, 3, 4, 5, 6]):
                    w = kd.get("weight")
                    if w is not None and w > rows:
                        continue
                    spec = EnsembleSpec(kd["kind"], q, rows, cols, w)
                    worst = Fraction(0)
                    ok = True
                    for zi in range(1, q**cols):
                        res = verify_hash_inequality(spec, alpha, beta, FieldVector.from_index(zi, cols, q))
                        worst = max(worst, res["lhs"])
                        ok &= res["holds"]
                    params = {"ensemble": kd, "rows": rows, "cols": cols, "alpha": str(alpha), "beta": str(beta)}
                    yield record(h, params, "hash_lhs_max", worst)
                    yield record(h, params, "hash_holds", ok)
    lemma_checks = [c for c in model["checks"] if c in ("mbcp", "mcrp")]
    for t in range(sweep.get("configurations", 0) if lemma_checks else 0):
        rng = _sub_rng(cfg["seed"], t)
        specs, Q, T, z = _lemma_instance(rng, plan["kinds"], q, model.get("max_sources", 2), model.get("max_dim", 4))
        params = {"config": t, "ensembles": [s.to_json() for s in specs]}
        if "mbcp" in lemma_checks:
            res = verify_balanced_coloring_bound(specs, Q, T)
            yield record(h, params, "mbcp_lhs", res["lhs"])
            yield record(h, params, "mbcp_rhs", res["rhs"])
            yield record(h, params, "mbcp_holds", res["holds"])
            if not res["holds"]:
                failures.append(("mbcp", t))
        if "mcrp" in lemma_checks:
            res = verify_collision_bound(specs, T, z)
            yield record(h, params, "mcrp_lhs", res["lhs"])
            yield record(h, params, "mcrp_rhs", res["rhs"])
            yield record(h, params, "mcrp_holds", res["holds"])
            if not res["holds"]:
                failures.append(("mcrp", t))
    out["failures"] = failures


# --- spectral ----------------------------------------------------------------


def _plan_spectral(cfg: dict) -> dict:
    model = cfg["model"]
    p = builtin_pmf(model["pmf"], _sub_rng(cfg["seed"], 0))
    p.axes(model["target"] + model.get("given", []))
    return {"pmf": p}


def _run_spectral(cfg: dict, plan: dict, h: str, workers: int, out: dict) -> Iterator[tuple]:
    model, sweep = cfg["model"], cfg.get("sweep", {})
    p = plan["pmf"]
    quantity, target, given = model["quantity"], model["target"], model.get("given", [])
    trials = sweep.get("trials", 1000)
    eps = sweep.get("epsilon", 0.05)
    if quantity == "inf_information_rate":
        ref = mutual_information(p, target, given)
    else:
        ref = entropy(p, target, given if quantity == "cond_sup_entropy_rate" else [])
    for n in sweep.get("n", [100]):
        est = spectral_entropy_estimate(p, quantity, target, given, n, trials, eps, _sub_seed(cfg["seed"], n))
        params = {"n": n, "trials": trials, "epsilon": eps, "quantity": quantity}
        yield record(h, params, quantity, est.value)
        yield record(h, params, "shannon_reference", ref)


KINDS = {
    "region": (_plan_region, _run_region),
    "simulate-source": (_plan_source, _run_source),
    "simulate-channel": (_plan_channel, _run_channel),
    "verify-hash": (_plan_hash, _run_hash),
    "spectral": (_plan_spectral, _run_spectral),
}


# --- entry points -------------------------------------------------------------


def load_config(path: str, seed: int | None = None, overrides=()) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for ov in overrides:
        apply_override(cfg, ov)
    if seed is not None:
        cfg["seed"] = seed
    validate_schema(cfg)
    return cfg


def run_config(cfg: dict, workers: int = 1) -> tuple[list[tuple], dict]:
    """Run a validated config; returns (rows, extras)."""
    plan_fn, run_fn = KINDS[cfg["kind"]]
    try:
        plan = plan_fn(cfg)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    h = config_hash(cfg)
    extras: dict = {}
    rows = list(run_fn(cfg, plan, h, workers, extras))
    if extras.get("failures"):
        raise InvariantError(f"lemma checks failed: {extras['failures']}", rows)
    return rows, extras


def write_csv(rows, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(COLUMNS)
    w.writerows(rows)


def validate(cfg_or_path, seed: int | None = None) -> list[str]:
    """Schema and semantic problems of a config, without running it."""
    report = []
    try:
        cfg = load_config(cfg_or_path, seed) if isinstance(cfg_or_path, str) else cfg_or_path
        if not isinstance(cfg_or_path, str):
            validate_schema(cfg)
    except ConfigError as exc:
        return [str(exc)]
    try:
        KINDS[cfg["kind"]][0](cfg)
    except Exception as exc:  # noqa: BLE001 - every failure goes in the report
        report.append(f"{type(exc).__name__}: {exc}")
    return report


def _repro_bundle(cfg: dict, exc: BaseException, out_path: str | None) -> str:
    folder = os.path.dirname(os.path.abspath(out_path)) if out_path else os.getcwd()
    path = os.path.join(folder, f"repro-{config_hash(cfg)}.json")
    bundle = {
        "version": __version__,
        "config": cfg,
        "error": str(exc.args[0]) if exc.args else repr(exc),
        "traceback": traceback.format_exception(type(exc), exc, exc.__traceback__),
    }
    with open(path, "w") as fh:
        json.dump(bundle, fh, indent=2, sort_keys=True)
    return path


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mtcode", description="Multi-terminal coding experiments.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in KINDS:
        sp = sub.add_parser(name, help=f"run a {name} config")
        sp.add_argument("config")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("-o", "--output", default=None, help="CSV path (default: config output or stdout)")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=JSON", help="override a config entry")
    sp = sub.add_parser("validate", help="check a config without running it")
    sp.add_argument("config")
    sp.add_argument("--seed", type=int, default=None)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "validate":
        report = validate(args.config, args.seed)
        for line in report:
            print(line)
        if not report:
            print("ok")
        return 0 if not report else 1
    try:
        cfg = load_config(args.config, args.seed, args.set)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg["kind"] != args.command:
        print(f"error: config kind {cfg['kind']!r} does not match subcommand {args.command!r}", file=sys.stderr)
        return EXIT_CONFIG
    out_path = args.output or cfg.get("output")
    try:
        rows, extras = run_config(cfg, args.workers)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"error: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InvariantError as exc:
        if len(exc.args) > 1 and out_path:
            with open(out_path, "w", newline="") as fh:
                write_csv(exc.args[1], fh)
        path = _repro_bundle(cfg, exc, out_path)
        print(f"error: invariant breach: {exc.args[0]} (repro bundle: {path})", file=sys.stderr)
        return EXIT_INVARIANT
    if out_path:
        with open(out_path, "w", newline="") as fh:
            write_csv(rows, fh)
        if "json" in extras:
            with open(os.path.splitext(out_path)[0] + ".json", "w") as fh:
                json.dump(extras["json"], fh, indent=1, sort_keys=True)
    if "text" in extras:
        print(extras["text"])
    elif not out_path:
        buf = io.StringIO()
        write_csv(rows, buf)
        sys.stdout.write(buf.getvalue())
    return 0


if __name__ == "__main__":
    sys.exit(main())
