"""Exponential-integral oracles and random-stream/sampling plumbing.

The E1 tests check three independent routes: adaptive quadrature on the
defining integrals, scipy.special.exp1, and the large-x asymptotic
series.  Frozen reference values were produced from the quadrature
oracle and cross-checked against scipy before being committed.
"""

import math
import warnings

import numpy as np
import pytest
from scipy.integrate import IntegrationWarning, quad
from scipy.special import exp1

from mimosim.numerics import (
    RngStream,
    cn_factor,
    expint_e1,
    expint_e1_scaled,
    is_diagonal,
    sample_cn,
)

from conftest import random_psd, stream


# ---------------------------------------------------------------------------
# oracles


def e1_quadrature(x):
    """E1(x) by adaptive quadrature on int_x^inf exp(-t)/t dt (x <= ~30)."""
    f = lambda t: math.exp(-t) / t
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        if x >= 1.0:
            return quad(f, x, np.inf, epsabs=1e-16, epsrel=1e-13, limit=300)[0]
        head = quad(f, x, 1.0, epsabs=1e-14, epsrel=1e-13, limit=300)[0]
        tail = quad(f, 1.0, np.inf, epsabs=1e-16, epsrel=1e-13, limit=300)[0]
    return head + tail


def e1_scaled_quadrature(x):
    """exp(x)*E1(x) by quadrature on int_0^inf exp(-u)/(u+x) du (any x > 0)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        return quad(
            lambda u: math.exp(-u) / (u + x), 0.0, np.inf, epsabs=1e-16, epsrel=1e-13, limit=300
        )[0]


def e1_scaled_asymptotic(x, terms=10):
    """Divergent asymptotic series (1/x) * sum_k k! (-1/x)^k, truncated."""
    acc = 0.0
    term = 1.0
    for k in range(terms):
        acc += term
        term *= -(k + 1) / x
    return acc / x


# ---------------------------------------------------------------------------
# E1 values


def test_frozen_reference_values():
    assert abs(expint_e1(1.0) - 0.219384) < 5e-7
    assert abs(expint_e1(0.1) - 1.822924) < 5e-7
    assert abs(expint_e1_scaled(1.0) - 0.596347) < 5e-7
    assert abs(expint_e1_scaled(4.0) - 0.206346) < 5e-7


def test_matches_quadrature_oracle():
    # direct form: quadrature is exact down to its absolute floor ~1e-16
    for x in np.logspace(-8, math.log10(30.0), 25):
        oracle = e1_quadrature(x)
        assert abs(expint_e1(x) - oracle) <= max(1e-11 * oracle, 1e-16), f"x={x}"
    # scaled form: well-conditioned at every x, so purely relative
    for x in np.logspace(-8, 8, 33):
        oracle = e1_scaled_quadrature(x)
        assert abs(expint_e1_scaled(x) - oracle) <= 1e-11 * oracle, f"x={x}"


def test_matches_scipy_exp1():
    for x in np.logspace(-8, math.log10(600.0), 40):
        ours, ref = expint_e1(x), float(exp1(x))
        assert abs(ours - ref) <= 1e-12 * ref, f"x={x}"
    # scaled variant, composed from scipy where exp(x) still fits a double
    for x in np.logspace(-6, math.log10(290.0), 25):
        ref = math.exp(x) * float(exp1(x))
        assert abs(expint_e1_scaled(x) - ref) <= 1e-11 * ref, f"x={x}"


def test_asymptotic_series_beyond_50():
    for x in [50.0, 70.0, 1e2, 1e3, 1e6, 1e8]:
        ref = e1_scaled_asymptotic(x)
        assert abs(expint_e1_scaled(x) - ref) <= 1e-8 * ref, f"x={x}"


def test_scaled_unscaled_identity():
    for x in np.logspace(-6, math.log10(30.0), 20):
        lhs = expint_e1(x)
        rhs = math.exp(-x) * expint_e1_scaled(x)
        assert abs(lhs - rhs) <= 1e-12 * lhs


def test_series_continued_fraction_join():
    # the implementation switches branches at x = 1; no jump there
    lo, hi = expint_e1(1.0 - 1e-9), expint_e1(1.0 + 1e-9)
    assert abs(lo - hi) < 1e-8
    assert lo > hi  # E1 is strictly decreasing


def test_rejects_non_positive_argument():
    for bad in (0.0, -1.0, math.nan, math.inf):
        with pytest.raises(ValueError):
            expint_e1(bad)
        with pytest.raises(ValueError):
            expint_e1_scaled(bad)


# ---------------------------------------------------------------------------
# random streams


def test_stream_is_reproducible():
    a = stream(777, 3).generator().standard_normal(32)
    b = stream(777, 3).generator().standard_normal(32)
    np.testing.assert_array_equal(a, b)


def test_generator_restarts_at_stream_origin():
    s = stream(777, 3)
    first = s.generator().standard_normal(8)
    again = s.generator().standard_normal(8)
    np.testing.assert_array_equal(first, again)


def test_substreams_differ():
    base = RngStream(seed=42)
    draws = [base.with_substream(k).generator().standard_normal(16) for k in range(4)]
    for i in range(4):
        for j in range(i + 1, 4):
            assert not np.allclose(draws[i], draws[j])


def test_with_substream_equals_direct_construction():
    a = RngStream(seed=9, substream=5).generator().standard_normal(8)
    b = RngStream(seed=9).with_substream(5).generator().standard_normal(8)
    np.testing.assert_array_equal(a, b)


def test_stream_validation():
    with pytest.raises(ValueError):
        RngStream(seed=-1)
    with pytest.raises(ValueError):
        RngStream(seed=2**64)
    with pytest.raises(ValueError):
        RngStream(seed=1, substream=-2)


# ---------------------------------------------------------------------------
# complex Gaussian sampling


def test_sample_cn_covariance():
    rng = np.random.default_rng(101)
    cov = random_psd(4, rng)
    draws = sample_cn(cov, stream(101), size=200_000)
    emp_cov = draws.T @ draws.conj() / draws.shape[0]  # sum of h h^H terms
    assert np.linalg.norm(emp_cov - cov) / np.linalg.norm(cov) < 0.03
    # circular symmetry: the pseudo-covariance E{h h^T} vanishes
    pseudo = (draws[:, :, None] * draws[:, None, :]).mean(axis=0)
    assert np.linalg.norm(pseudo) / np.linalg.norm(cov) < 0.03
    assert abs(draws.mean()) < 0.01


def test_sample_cn_diagonal_covariance():
    d = np.array([2.0, 0.5, 1.0])
    draws = sample_cn(np.diag(d), stream(7), size=100_000)
    var = (np.abs(draws) ** 2).mean(axis=0)
    np.testing.assert_allclose(var, d, rtol=0.03)
    cross = (draws[:, 0] * draws[:, 1].conj()).mean()
    assert abs(cross) < 0.02


def test_sample_cn_shapes():
    cov = np.eye(3)
    assert sample_cn(cov, stream(1)).shape == (3,)
    assert sample_cn(cov, stream(1), size=10).shape == (10, 3)
    assert sample_cn(cov, stream(1)).dtype == np.complex128


def test_cn_factor_reconstructs():
    rng = np.random.default_rng(5)
    cov = random_psd(6, rng)
    f = cn_factor(cov)
    np.testing.assert_allclose(f @ f.conj().T, cov, atol=1e-12)


def test_cn_factor_clamps_rounding_debris():
    v = np.array([1.0, 1j, -1.0]) / math.sqrt(3.0)
    rank1 = np.outer(v, v.conj())
    f = cn_factor(rank1 - 1e-14 * np.eye(3))  # slightly indefinite by rounding scale
    np.testing.assert_allclose(f @ f.conj().T, rank1, atol=1e-12)


def test_cn_factor_rejects_indefinite():
    with pytest.raises(ValueError):
        cn_factor(np.diag([1.0, -0.1]))
    with pytest.raises(ValueError):
        cn_factor(np.array([[1.0, 0.5], [-0.5, 1.0]]))  # not Hermitian


def test_is_diagonal():
    assert is_diagonal(np.eye(4))
    assert is_diagonal(np.diag([1.0, 0.0, 2.0]))
    assert not is_diagonal(np.array([[1.0, 1e-18], [0.0, 1.0]]))
    assert not is_diagonal(np.ones((2, 3)))
    assert not is_diagonal(np.ones(3))
