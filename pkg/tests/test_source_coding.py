import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtcode.gf import BudgetExceeded, DimensionError, EnsembleSpec, FieldMatrix, FieldVector, mat_vec_mul, solve_affine
from mtcode.models import additive_noise_source, bernoulli, dsbs, dyadic_pmf
from mtcode.probability import JointPMF, binary_entropy, product
from mtcode.source_coding import (
    DecoderSpec,
    SourceCodeSpec,
    additive_structure,
    build_code,
    crng_chi_square,
    crng_decode,
    encode,
    entropy_table,
    exact_error,
    map_decode,
    mc_error,
    rows_for_rate,
    typicality_decode,
)
from oracles import source_error_bruteforce

SIDE = (DecoderSpec(("Z1",), "Z2"),)
BOTH = (DecoderSpec(("Z1", "Z2")),)


def V(*xs):
    return FieldVector(list(xs), 2)


def side_code(f_rows, n, model=None):
    model = model or dsbs(0.11)
    return SourceCodeSpec(model, {"Z1": FieldMatrix(f_rows, 2, cols=n)}, SIDE, n)


# --- encode -------------------------------------------------------------------------


def test_encode_examples():
    z = {"Z1": V(1, 1, 1)}
    assert encode(side_code(np.eye(3, dtype=int), 3), z)["Z1"] == V(1, 1, 1)
    assert encode(side_code(np.zeros((2, 3), dtype=int), 3), z)["Z1"] == V(0, 0)
    assert encode(side_code([[1, 1, 0], [0, 1, 1]], 3), z)["Z1"] == V(0, 0)


def test_spec_validation():
    with pytest.raises(DimensionError):
        SourceCodeSpec(dsbs(0.1), {"Z1": FieldMatrix.identity(3)}, SIDE, 4)
    with pytest.raises(ValueError):
        SourceCodeSpec(dsbs(0.1), {"Z1": FieldMatrix.identity(3), "Z2": FieldMatrix.identity(3)}, SIDE, 3)
    with pytest.raises(KeyError):
        SourceCodeSpec(dsbs(0.1), {"Z1": FieldMatrix.identity(3)}, BOTH, 3)


def test_rates_and_json():
    spec = build_code(dsbs(0.11), {"Z1": 0.5, "Z2": 0.75}, BOTH, 8, rng=3)
    assert spec.rates == {"Z1": 0.5, "Z2": 0.75}
    back = SourceCodeSpec.from_json(spec.to_json())
    assert back.to_json() == spec.to_json()
    assert rows_for_rate(0.8, 4) == 3


# --- decoders -------------------------------------------------------------------------


def test_crng_identity_is_exact():
    spec = side_code(np.eye(4, dtype=int), 4)
    z = V(1, 0, 1, 1)
    for seed in range(10):
        res = crng_decode(spec, 0, {"Z1": z}, np.array([0, 0, 0, 0]), seed)
        assert res.reproduction["Z1"] == z and not res.fallback


def test_crng_zero_map_reproduces_posterior():
    spec = side_code(np.zeros((0, 1), dtype=int), 1)
    c = {"Z1": FieldVector([], 2)}
    draws = [crng_decode(spec, 0, c, np.array([0]), np.random.default_rng(s)).reproduction["Z1"].tolist()[0]
             for s in range(4000)]
    frac = np.mean(draws)
    assert abs(frac - 0.11) < 3 * np.sqrt(0.11 * 0.89 / 4000)
    assert crng_chi_square(spec, 0, c, np.array([0]), 10_000, seed=1)["pvalue"] > 0.001


def test_crng_chi_square_parity_check():
    spec = side_code([[1, 1]], 2)
    c = encode(spec, {"Z1": V(1, 0)})
    res = crng_chi_square(spec, 0, c, np.array([1, 0]), 10_000, seed=2)
    assert res["cells"] == 2 and res["pvalue"] > 0.001


def test_crng_zero_mass_falls_back():
    model = JointPMF([("Z1", 2), ("Z2", 2)], [[0.5, 0.0], [0.0, 0.5]])
    spec = side_code(np.zeros((0, 2), dtype=int), 2, model)
    res = crng_decode(spec, 0, {"Z1": FieldVector([], 2)}, np.array([0, 1]), 0)
    assert not res.fallback
    spec = side_code([[1, 0]], 2, model)
    res = crng_decode(spec, 0, {"Z1": V(1)}, np.array([0, 0]), 0)
    assert res.fallback and res.reproduction["Z1"].tolist()[0] == 1


def test_map_examples():
    spec = side_code(np.eye(3, dtype=int), 3)
    assert map_decode(spec, 0, {"Z1": V(0, 1, 1)}, np.array([1, 1, 1])).reproduction["Z1"] == V(0, 1, 1)
    # a uniform posterior: every member ties, the first in enumeration order wins
    flat = SourceCodeSpec(product(bernoulli(0.5, "Z1"), bernoulli(0.5, "Z2")), {"Z1": FieldMatrix([[1, 1, 0]], 2)}, SIDE, 3)
    first = map_decode(flat, 0, {"Z1": V(1)}, np.array([0, 0, 0])).reproduction["Z1"]
    assert first.tolist() == solve_affine(FieldMatrix([[1, 1, 0]], 2), V(1)).members()[0].tolist()


def test_map_beats_crng_on_dsbs():
    spec = build_code(dsbs(0.11), {"Z1": 0.75}, SIDE, 4, rng=0)
    assert spec.matrices["Z1"].rows == 3
    m = exact_error(spec, "map", exact=True)
    c = exact_error(spec, "crng", exact=True)
    assert m == source_error_bruteforce(spec, "map")
    assert c == source_error_bruteforce(spec, "crng")
    assert m <= c <= 2 * m


def test_typicality_examples():
    spec = side_code([[1, 1, 0]], 3)
    res = typicality_decode(spec, 0, {"Z1": V(1)}, np.array([1, 1, 1]), epsilon=100.0)
    assert res.reproduction["Z1"].tolist() == solve_affine(FieldMatrix([[1, 1, 0]], 2), V(1)).members()[0].tolist()
    det = JointPMF([("Z1", 2), ("Z2", 2)], [[0.0, 0.0], [1.0, 0.0]])
    spec = side_code([[1, 1, 0]], 3, det)
    res = typicality_decode(spec, 0, {"Z1": V(1)}, np.array([0, 0, 0]), epsilon=0.01)
    assert res.failed
    spec = side_code([[1, 1, 1]], 3, det)
    res = typicality_decode(spec, 0, {"Z1": V(1)}, np.array([0, 0, 0]), epsilon=0.01)
    assert res.reproduction["Z1"] == V(1, 1, 1) and not res.failed


def test_typicality_error_at_least_map():
    spec = build_code(dsbs(0.11), {"Z1": 0.75}, SIDE, 8, rng=4)
    tab = entropy_table(spec, 0)
    assert tab[frozenset({"Z1"})] == pytest.approx(binary_entropy(0.11))
    t = exact_error(spec, "typical", epsilon=0.3)
    m = exact_error(spec, "map")
    assert m <= t <= 1.0
    assert exact_error(spec, "typical", epsilon=0.3, exact=True) == pytest.approx(t, abs=1e-12)


# --- exact error --------------------------------------------------------------------


def test_exact_error_identity_is_zero():
    spec = SourceCodeSpec(dsbs(0.11), {"Z1": FieldMatrix.identity(3), "Z2": FieldMatrix.identity(3)}, BOTH, 3)
    for kind in ("map", "crng", "typical"):
        assert exact_error(spec, kind, epsilon=10.0) == 0.0


def test_exact_error_zero_rate():
    model = product(bernoulli(0.3, "Z1"), bernoulli(0.5, "Z2"))
    spec = SourceCodeSpec(model, {"Z1": FieldMatrix.zeros(0, 3)}, SIDE, 3)
    # MAP guesses the all-zero block, correct with probability 0.7^3
    got = exact_error(spec, "map", exact=True)
    assert got == source_error_bruteforce(spec, "map")
    assert float(got) == pytest.approx(1 - 0.7**3, abs=1e-15)
    assert exact_error(spec, "crng", exact=True) == source_error_bruteforce(spec, "crng")


def test_exact_error_budget():
    spec = build_code(dsbs(0.11), {"Z1": 0.5}, SIDE, 10, rng=0)
    with pytest.raises(BudgetExceeded):
        exact_error(spec, "map", method="generic", budget=1 << 10)


def test_exact_vs_mc_within_three_sigma():
    spec = build_code(dsbs(0.11), {"Z1": 0.67}, SIDE, 6, rng=1)
    for kind in ("crng", "map"):
        p = exact_error(spec, kind)
        mc = mc_error(spec, kind, 10_000, seed=3)
        assert abs(mc.estimate - p) <= 3 * np.sqrt(p * (1 - p) / 10_000)
        assert mc.ci_low <= mc.estimate <= mc.ci_high


def test_mc_identity_and_seeding():
    spec = SourceCodeSpec(dsbs(0.11), {"Z1": FieldMatrix.identity(3)}, SIDE, 3)
    assert mc_error(spec, "crng", 300, seed=1).errors == 0
    lossy = build_code(dsbs(0.11), {"Z1": 0.5}, SIDE, 4, rng=2)
    assert mc_error(lossy, "crng", 500, seed=9) == mc_error(lossy, "crng", 500, seed=9)
    with pytest.raises(ValueError):
        mc_error(lossy, "crng", 0)


def test_two_decoders_exact_vs_mc():
    model = product(dsbs(0.1), bernoulli(0.5, "W")).renamed({"W": "Y0"})
    decs = (DecoderSpec(("Z1",), "Z2"), DecoderSpec(("Z1",), "Y0"))
    spec = SourceCodeSpec(model, {"Z1": FieldMatrix([[1, 0, 1, 1], [0, 1, 1, 0], [1, 1, 1, 1]], 2)}, decs, 4)
    p = exact_error(spec, "map")
    mc = mc_error(spec, "map", 4000, seed=0)
    assert abs(mc.estimate - p) <= 3 * np.sqrt(p * (1 - p) / 4000)


def test_additive_path_agrees_with_generic():
    for q, n, rate, seed in [(2, 6, 0.5, 0), (2, 5, 0.8, 1), (3, 3, 0.67, 2)]:
        noise = np.full(q, 0.15 / (q - 1))
        noise[0] = 0.85
        model = additive_noise_source(JointPMF([("N", q)], noise), q)
        spec = build_code(model, {"Z1": rate}, SIDE, n, rng=seed, q=q)
        assert additive_structure(spec) is not None
        for kind in ("map", "crng"):
            a = exact_error(spec, kind, method="additive")
            g = exact_error(spec, kind, method="generic")
            assert a == pytest.approx(g, abs=1e-12)
    both = build_code(dsbs(0.11), {"Z1": 0.75, "Z2": 0.75}, BOTH, 4, rng=5)
    assert exact_error(both, "map", method="additive") == pytest.approx(exact_error(both, "map", method="generic"), abs=1e-12)


def test_rate_monotonicity_nested():
    rng = np.random.default_rng(8)
    rows = rng.integers(0, 2, size=(6, 6))
    prev = None
    for l in range(7):
        spec = side_code(rows[:l] if l else np.zeros((0, 6), dtype=int), 6)
        e = exact_error(spec, "map", exact=True)
        if prev is not None:
            assert e <= prev
        prev = e


# --- properties -----------------------------------------------------------------------


@st.composite
def random_codes(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    two = draw(st.booleans())
    n = draw(st.integers(1, 4 if two else 6))
    if two:
        model = dyadic_pmf([("Z1", 2), ("Z2", 2)], rng)
        rates = {"Z1": float(rng.integers(0, n + 1)) / n, "Z2": float(rng.integers(0, n + 1)) / n}
        decs = BOTH
    else:
        model = dyadic_pmf([("Z1", 2), ("Y", 3)], rng)
        rates = {"Z1": float(rng.integers(0, n + 1)) / n}
        decs = (DecoderSpec(("Z1",), "Y"),)
    ens = EnsembleSpec("SparseColumnWeight", 2, weight=1) if draw(st.booleans()) else None
    try:
        return build_code(model, rates, decs, n, ensemble=ens, rng=rng)
    except ValueError:
        return build_code(model, rates, decs, n, rng=rng)


@settings(max_examples=60, deadline=None)
@given(random_codes())
def test_factor_two_and_oracle(spec):
    m = exact_error(spec, "map", exact=True, method="generic")
    c = exact_error(spec, "crng", exact=True, method="generic")
    assert m == source_error_bruteforce(spec, "map")
    assert c == source_error_bruteforce(spec, "crng")
    assert m <= c <= 2 * m
    assert exact_error(spec, "map", method="generic") == pytest.approx(float(m), abs=1e-12)
    assert exact_error(spec, "crng", method="generic") == pytest.approx(float(c), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(random_codes(), st.integers(0, 2**16))
def test_codeword_consistency(spec, seed):
    rng = np.random.default_rng(seed)
    d = spec.decoders[0]
    z = {s: FieldVector(rng.integers(0, 2, spec.n), 2) for s in spec.sources}
    c = encode(spec, z)
    y = rng.integers(0, spec.model.size_of(d.side), spec.n) if d.side else None
    for res in (crng_decode(spec, 0, c, y, rng), map_decode(spec, 0, c, y),
                typicality_decode(spec, 0, c, y, epsilon=0.5)):
        if not res.failed:
            for s in d.decode:
                assert mat_vec_mul(spec.matrices[s], res.reproduction[s]) == c[s]
