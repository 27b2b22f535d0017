import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtcode.gf import BudgetExceeded
from mtcode.models import bernoulli, bsc, dsbs, identity_kernel, point_mass, uniform
from mtcode.probability import (
    ConditionalKernel,
    JointPMF,
    binary_entropy,
    block_extend,
    compose,
    conditional,
    entropy,
    marginal,
    mutual_information,
    product,
    sample,
    spectral_entropy_estimate,
)

H011 = binary_entropy(0.11)


def adder_joint():
    tab = np.zeros((2, 2, 3))
    for a, b in itertools.product(range(2), repeat=2):
        tab[a, b, a + b] = 0.25
    return JointPMF([("X1", 2), ("X2", 2), ("Y", 3)], tab)


def test_binary_entropy_value():
    want = -0.11 * math.log2(0.11) - 0.89 * math.log2(0.89)
    assert binary_entropy(0.11) == pytest.approx(want, abs=1e-15)
    assert want == pytest.approx(0.49991596, abs=1e-8)


def test_marginal_examples():
    p = product(bernoulli(0.5, "A"), bernoulli(0.5, "B"))
    assert np.allclose(marginal(p, ["A"]).probs, [0.5, 0.5])
    assert marginal(p, ["A", "B"]).names == ["A", "B"]
    d = dsbs(0.11)
    assert np.allclose(marginal(d, ["Z1"]).probs, [0.5, 0.5])
    assert np.allclose(marginal(d, ["Z2"]).probs, [0.5, 0.5])
    with pytest.raises(KeyError):
        marginal(d, ["nope"])


def test_conditional_examples():
    p = product(bernoulli(0.3, "A"), bernoulli(0.6, "B"))
    k = conditional(p, ["A"], ["B"])
    assert np.allclose(k.matrix(), [[0.7, 0.3], [0.7, 0.3]])
    same = JointPMF([("A", 2), ("B", 2)], [[0.5, 0], [0, 0.5]])
    assert np.allclose(conditional(same, ["A"], ["B"]).matrix(), np.eye(2))
    assert np.allclose(conditional(dsbs(0.11), ["Z1"], ["Z2"]).matrix(), [[0.89, 0.11], [0.11, 0.89]])


def test_conditional_zero_rows_flagged():
    p = JointPMF([("A", 2), ("B", 3)], [[0.5, 0.0, 0.0], [0.5, 0.0, 0.0]])
    k = conditional(p, ["A"], ["B"])
    assert k.zero_rows.tolist() == [False, True, True]
    assert np.allclose(k.table[1], [0.5, 0.5])


def test_entropy_examples():
    assert entropy(bernoulli(0.5), ["Z"]) == 1.0
    with pytest.raises(ValueError):
        entropy(bernoulli(0.3), ["Z"], ["Z"])
    dup = compose(bernoulli(0.3, "X"), identity_kernel("X", "X2"))
    assert entropy(dup, ["X"], ["X2"]) == pytest.approx(0.0, abs=1e-12)
    assert entropy(dsbs(0.11), ["Z1"], ["Z2"]) == pytest.approx(H011, abs=1e-12)


def test_mutual_information_examples():
    p = product(bernoulli(0.3, "A"), bernoulli(0.6, "B"))
    assert mutual_information(p, ["A"], ["B"]) == pytest.approx(0.0, abs=1e-12)
    dup = compose(bernoulli(0.5, "X"), identity_kernel("X", "X2"))
    assert mutual_information(dup, ["X"], ["X2"]) == pytest.approx(1.0, abs=1e-12)
    # four equiprobable inputs land on Y in {0,1,2} with masses 1/4, 1/2, 1/4
    assert mutual_information(adder_joint(), ["X1", "X2"], ["Y"]) == pytest.approx(1.5, abs=1e-12)


def test_compose_examples():
    dup = compose(bernoulli(0.5, "X"), identity_kernel("X", "Y"))
    assert dup.names == ["X", "Y"] and np.allclose(dup.probs, np.eye(2) / 2)
    assert entropy(compose(bernoulli(0.5, "X"), bsc(0.0)), ["Y"], ["X"]) == pytest.approx(0.0, abs=1e-12)
    j = compose(bernoulli(0.5, "X"), bsc(0.11))
    assert mutual_information(j, ["X"], ["Y"]) == pytest.approx(1 - H011, abs=1e-12)
    with pytest.raises(ValueError):
        compose(j, bsc(0.1, "X", "Y"))


def test_block_extend_examples():
    d = dsbs(0.11)
    assert block_extend(d, 1) is d
    b = block_extend(d, 3)
    z1 = [v for v in b.names if v.startswith("Z1")]
    z2 = [v for v in b.names if v.startswith("Z2")]
    assert entropy(b, z1, z2) == pytest.approx(3 * H011, abs=1e-9)
    assert block_extend(uniform(3), 4).probs.sum() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(BudgetExceeded):
        block_extend(uniform(4), 12, budget=1 << 20)


def test_sample_examples():
    assert all(sample(point_mass(2, 4), np.random.default_rng(s)) == (2,) for s in range(20))
    draws = sample(bernoulli(0.5), np.random.default_rng(1), size=100_000)
    assert abs(draws.mean() - 0.5) < 0.01
    assert np.array_equal(sample(dsbs(0.2), 7, size=50), sample(dsbs(0.2), 7, size=50))


def test_json_roundtrip():
    p = dsbs(0.2)
    q = JointPMF.from_json(p.to_json())
    assert q.variables == p.variables and np.array_equal(q.probs, p.probs)
    k = bsc(0.3)
    k2 = ConditionalKernel.from_json(k.to_json())
    assert np.array_equal(k.table, k2.table)


def test_validation():
    with pytest.raises(ValueError):
        JointPMF([("A", 2)], [0.3, 0.3])
    with pytest.raises(ValueError):
        JointPMF([("A", 2), ("A", 2)], [[0.25] * 2] * 2)
    with pytest.raises(ValueError):
        ConditionalKernel([("A", 2)], [("B", 2)], [[0.5, 0.6], [0.5, 0.5]])


# --- spectral estimators ------------------------------------------------------


def test_spectral_trivial_cases():
    det = spectral_entropy_estimate(point_mass(1, 2), "sup_entropy_rate", ["Z"], n=50, trials=100, rng=0)
    assert det.value == 0.0
    for q in ("sup_entropy_rate", "inf_entropy_rate"):
        est = spectral_entropy_estimate(bernoulli(0.5), q, ["Z"], n=37, trials=200, rng=3)
        assert est.value == 1.0


def test_spectral_conditional_and_information():
    d = dsbs(0.11)
    c = spectral_entropy_estimate(d, "cond_sup_entropy_rate", ["Z1"], ["Z2"], n=400, trials=500, rng=1)
    i = spectral_entropy_estimate(d, "inf_information_rate", ["Z1"], ["Z2"], n=400, trials=500, rng=1)
    assert c.value > H011 and i.value < 1 - H011
    assert abs(c.value - H011) < 0.1 and abs(i.value - (1 - H011)) < 0.1


def test_spectral_determinism_and_errors():
    a = spectral_entropy_estimate(bernoulli(0.2), "sup_entropy_rate", ["Z"], n=100, trials=600, rng=5)
    b = spectral_entropy_estimate(bernoulli(0.2), "sup_entropy_rate", ["Z"], n=100, trials=600, rng=5)
    assert a == b
    with pytest.raises(ValueError):
        spectral_entropy_estimate(bernoulli(0.2), "sup_entropy_rate", ["Z"], epsilon=1.0)
    with pytest.raises(ValueError):
        spectral_entropy_estimate(dsbs(0.2), "cond_sup_entropy_rate", ["Z1"])
    with pytest.raises(BudgetExceeded):
        spectral_entropy_estimate(bernoulli(0.2), "sup_entropy_rate", ["Z"], n=1000, trials=1000, budget=10**5)


def test_spectral_quantiles_bracket_entropy():
    h = binary_entropy(0.2)
    sup = spectral_entropy_estimate(bernoulli(0.2), "sup_entropy_rate", ["Z"], n=400, trials=2000, rng=0)
    inf = spectral_entropy_estimate(bernoulli(0.2), "inf_entropy_rate", ["Z"], n=400, trials=2000, rng=0)
    assert inf.value < h < sup.value
    # the tails shrink like 1/sqrt(n)
    sup_big = spectral_entropy_estimate(bernoulli(0.2), "sup_entropy_rate", ["Z"], n=4000, trials=500, rng=0)
    assert sup_big.value - h < sup.value - h


# --- properties ------------------------------------------------------------------


@st.composite
def pmfs(draw, nvars=3):
    sizes = [draw(st.integers(1, 3)) for _ in range(nvars)]
    cells = math.prod(sizes)
    raw = draw(st.lists(st.integers(0, 20), min_size=cells, max_size=cells).filter(lambda x: sum(x) > 0))
    probs = np.array(raw, dtype=float) / sum(raw)
    return JointPMF([(f"V{k}", s) for k, s in enumerate(sizes)], probs.reshape(sizes))


@settings(max_examples=100, deadline=None)
@given(pmfs())
def test_information_inequalities(p):
    a, b, c = p.names
    assert entropy(p, [a], [b]) <= entropy(p, [a]) + 1e-9
    assert entropy(p, [a, b]) == pytest.approx(entropy(p, [a]) + entropy(p, [b], [a]), abs=1e-9)
    assert mutual_information(p, [a], [b], [c]) >= 0.0
    assert mutual_information(p, [a], [b]) >= 0.0
    prod = product(marginal(p, [a]), marginal(p, [b]).renamed({b: "W"}))
    assert mutual_information(prod, [a], ["W"]) == pytest.approx(0.0, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(pmfs(nvars=2), st.integers(1, 3))
def test_block_entropy_additivity(p, n):
    b = block_extend(p, n)
    assert entropy(b, b.names) == pytest.approx(n * entropy(p, p.names), abs=1e-9)
