import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pfkernel.diagram import PersistenceDiagram
from pfkernel.kernels import (PF, PSS, PWG, SW, Prob, cross_gram, default_grid, gram, kernel_value, pf_kernel,
                              prob_features, pss_kernel, pwg_kernel, quantile_t, sliced_wasserstein_distance,
                              sw_kernel)
from pfkernel.measure import SmoothingParams
from pfkernel.metric import fim_distance

from conftest import diagrams, random_diagram

EMPTY = PersistenceDiagram()
UNIT = PersistenceDiagram([(0, 1)])


def min_eig_ratio(K):
    ev = np.linalg.eigvalsh(K)
    return ev[0] / ev[-1]


def test_pf_examples():
    dg = PersistenceDiagram([(0.1, 0.4), (0.2, 0.9)])
    assert pf_kernel(dg, dg, PF(1.0, 0.1)) == 1.0
    other = PersistenceDiagram([(0.3, 0.35)])
    d = fim_distance(dg, other, SmoothingParams(0.1))
    assert pf_kernel(dg, other, PF(2.5, 0.1)) == pytest.approx(math.exp(-2.5 * d), rel=1e-15)
    far = PersistenceDiagram([(10, 20)])
    assert fim_distance(UNIT, far, SmoothingParams(1e-3)) == pytest.approx(math.pi / 2, abs=1e-12)
    assert 0 <= pf_kernel(UNIT, far, PF(50.0, 1e-3)) < 1e-30
    with pytest.raises(ValueError):
        PF(0.0, 0.1)


def test_pss_examples():
    assert pss_kernel(EMPTY, EMPTY, PSS(1.0)) == 0.0
    diag = PersistenceDiagram([(0.4, 0.4)])
    assert pss_kernel(diag, diag, PSS(1.0)) == 0.0
    assert pss_kernel(UNIT, UNIT, PSS(1.0)) == pytest.approx((1 - math.exp(-2 / 8)) / (8 * math.pi), rel=1e-14)


def test_pwg_examples():
    dg = PersistenceDiagram([(0.1, 0.4), (0.2, 0.9)])
    assert pwg_kernel(dg, dg, PWG()) == 1.0
    assert pwg_kernel(PersistenceDiagram([(0.3, 0.3), (1, 1)]), EMPTY, PWG()) == 1.0
    C, tau = 2.0, 0.7
    assert pwg_kernel(UNIT, EMPTY, PWG(C=C, tau=tau)) == pytest.approx(
        math.exp(-math.atan(C) ** 2 / (2 * tau ** 2)), rel=1e-14)


def test_sw_examples():
    dg = PersistenceDiagram([(0.1, 0.4), (0.2, 0.9)])
    assert sw_kernel(dg, dg, SW(10, 1.0)) == 1.0
    # one direction orthogonal to the diagonal: distance from (0,1) to (0.5,0.5)
    ortho = np.array([[1.0, -1.0]]) / math.sqrt(2)
    assert sliced_wasserstein_distance(UNIT, EMPTY, 1, ortho) == pytest.approx(math.sqrt(0.5), rel=1e-15)
    # default single direction is theta = -pi/2, i.e. (0, -1)
    assert sliced_wasserstein_distance(UNIT, EMPTY, 1) == pytest.approx(0.5, rel=1e-15)


@settings(max_examples=30)
@given(diagrams(max_size=6), diagrams(max_size=6))
def test_sw_symmetric_nonnegative(a, b):
    d = sliced_wasserstein_distance(a, b)
    assert d >= 0
    assert d == pytest.approx(sliced_wasserstein_distance(b, a), abs=1e-12)


def test_gram_single_and_pairwise_oracle(rng):
    dgs = [random_diagram(rng, 1, 8) for _ in range(5)]
    for params in [PF(1.3, 0.2), PSS(0.5), PWG(sigma=0.3), SW(10, 0.5)]:
        K = gram(dgs, params).values
        oracle = np.array([[kernel_value(a, b, params) for b in dgs] for a in dgs])
        np.testing.assert_allclose(K, oracle, rtol=0, atol=1e-15)
        assert gram(dgs[:1], params).values.shape == (1, 1)
        np.testing.assert_allclose(cross_gram(dgs[:2], dgs, params), K[:2], atol=1e-15)


def test_pf_power_relation(rng):
    dgs = [random_diagram(rng, 1, 8) for _ in range(6)]
    G = gram(dgs, PF(0.5, 0.1))
    G2 = G.with_t(1.75)
    np.testing.assert_allclose(G2.values, G.values ** (1.75 / 0.5), rtol=1e-12)
    assert G2.kernel.t == 1.75
    with pytest.raises(TypeError):
        gram(dgs, PSS(1.0)).with_t(2.0)


def test_gram_permutation_equivariant(rng):
    dgs = [random_diagram(rng, 1, 8) for _ in range(6)]
    perm = rng.permutation(6)
    for params in [PF(1.0, 0.1), SW(5, 1.0)]:
        K = gram(dgs, params).values
        Kp = gram([dgs[i] for i in perm], params).values
        np.testing.assert_allclose(Kp, K[np.ix_(perm, perm)], atol=1e-15)


@pytest.mark.parametrize("params", [PSS(0.1), PSS(1.0), SW(10, 0.5), SW(10, 2.0), PWG(sigma=0.2, tau=0.5)])
def test_baseline_grams_psd(params):
    rng = np.random.default_rng(5)
    for _ in range(5):
        K = gram([random_diagram(rng) for _ in range(10)], params).values
        assert min_eig_ratio(K) >= -1e-8


@settings(max_examples=30)
@given(diagrams(max_size=6), diagrams(max_size=6), st.floats(1e-3, 1e3))
def test_pf_stability_bound(a, b, t):
    params = PF(t, 0.3)
    d = fim_distance(a, b, params.smoothing())
    induced = pf_kernel(a, a, params) + pf_kernel(b, b, params) - 2 * pf_kernel(a, b, params)
    assert induced <= 2 * t * d + 1e-15


def test_quantile_examples():
    assert quantile_t([1, 1, 1], 50) == 1.0
    vals = np.linspace(0.1, 1.0, 10)
    assert quantile_t(vals[::-1], 50) == 1 / 0.5
    assert quantile_t(vals, 100) == 1.0
    assert quantile_t(vals, 1) == 1 / 0.1
    assert quantile_t(vals, 15) == 1 / 0.2


@pytest.mark.parametrize("vals, s", [([], 50), ([0.0, 0.0], 50), ([1.0], 0), ([1.0], 101)])
def test_quantile_errors(vals, s):
    with pytest.raises(ValueError):
        quantile_t(vals, s)


def test_prob_features(rng):
    dgs = [random_diagram(rng, 1, 10) for _ in range(3)] + [EMPTY]
    grid = default_grid(dgs, 8)
    F = prob_features(dgs, grid, 0.1)
    assert F.shape == (4, 64)
    np.testing.assert_allclose(F[:3].sum(axis=1), 1.0, rtol=1e-12)
    assert not F[3].any()
    K = gram(dgs, Prob(0.1, 0.5, grid)).values
    assert np.allclose(np.diag(K), 1.0) and min_eig_ratio(K) >= -1e-8
    with pytest.raises(ValueError):
        Prob(0.1, 0.5)
