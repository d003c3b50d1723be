import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracl1.errors import DomainError
from fracl1.specfun import (
    MLConfig,
    erfc,
    evaluate_mittag_leffler,
    gamma_fn,
    ml_asymptotic,
    ml_series,
    mittag_leffler,
)
from oracles import ml_laplace


def test_gamma_known_values():
    assert gamma_fn(1.0) == 1.0
    assert gamma_fn(2.0) == 1.0
    assert abs(gamma_fn(0.5) - math.sqrt(math.pi)) <= 1e-12


def test_gamma_ratio_against_high_precision():
    mpmath.mp.dps = 40
    ref = mpmath.gamma(21) / mpmath.gamma(mpmath.mpf(20.75))
    got = gamma_fn(21.0) / gamma_fn(20.75)
    assert abs(got / float(ref) - 1.0) <= 1e-12


@pytest.mark.parametrize("x", [0.0, -1.0, -7.0])
def test_gamma_poles(x):
    with pytest.raises(DomainError):
        gamma_fn(x)


def test_gamma_reflection_region():
    mpmath.mp.dps = 30
    for x in (-2.5, -0.3, 0.1, 0.49):
        assert abs(gamma_fn(x) / float(mpmath.gamma(x)) - 1.0) <= 1e-12


def test_erfc_values():
    assert erfc(0.0) == 1.0
    assert abs(erfc(1.0) - 0.15729920705028513) <= 1e-12
    mpmath.mp.dps = 30
    for x in (-3.0, 0.3, 2.0, 6.0):
        assert abs(erfc(x) - float(mpmath.erfc(x))) <= 1e-12


@given(st.floats(-8.0, 8.0))
def test_erfc_symmetry(x):
    assert abs(erfc(-x) - (2.0 - erfc(x))) <= 1e-12


@pytest.mark.parametrize("g", [0.1, 0.25, 0.5, 0.9, 1.0])
def test_ml_at_zero(g):
    assert mittag_leffler(g, 0.0) == 1.0


def test_ml_exponential_identity():
    t = np.linspace(0.0, 50.0, 1001)
    dev = max(abs(mittag_leffler(1.0, -tk) - math.exp(-tk)) for tk in t)
    assert dev <= 1e-10


def test_ml_half_identity():
    z = np.linspace(0.0, 5.0, 501)
    dev = max(abs(mittag_leffler(0.5, -zk) - math.exp(zk * zk) * math.erfc(zk)) for zk in z)
    assert dev <= 1e-8


def test_ml_half_identity_large_argument():
    from scipy.special import erfcx

    for zk in (6.0, 10.0, 100.0, 1e4):
        assert abs(mittag_leffler(0.5, -zk) - erfcx(zk)) <= 1e-12


@pytest.mark.parametrize("g", [0.05, 0.25, 0.5, 0.75, 0.9, 0.99])
def test_ml_against_laplace_integral(g):
    xs = list(np.geomspace(1e-3, 1e5, 25)) + [4.99, 5.01, 21.5, 50.0]
    for x in xs:
        assert abs(mittag_leffler(g, -x) - ml_laplace(g, x)) <= 1e-10, x


def test_testbed_example_value():
    assert abs(mittag_leffler(0.5, -1.0) - math.e * math.erfc(1.0)) <= 1e-14
    assert round(mittag_leffler(0.5, -1.0), 6) == 0.427584


@pytest.mark.parametrize("g", [0.2, 0.5, 0.8])
def test_branches_agree_at_cutoff(g):
    cut = MLConfig().series_cutoff
    s, _ = ml_series(g, -cut, 400)
    a, _ = ml_asymptotic(g, -cut, 60)
    ref = ml_laplace(g, cut)
    assert abs(s - ref) <= 1e-7 or abs(a - ref) <= 1e-7
    assert abs(mittag_leffler(g, -cut * (1 - 1e-9)) - mittag_leffler(g, -cut * (1 + 1e-9))) <= 1e-7


@given(st.floats(0.05, 1.0), st.floats(0.0, 200.0), st.floats(1e-3, 50.0))
def test_ml_positive_and_decreasing(g, x, dx):
    a = mittag_leffler(g, -x)
    b = mittag_leffler(g, -(x + dx))
    assert 0.0 < b < a <= 1.0


@pytest.mark.parametrize("g", [0.25, 0.5, 0.75])
def test_long_time_tail(g):
    x = 1e3
    assert abs(mittag_leffler(g, -x) * x * math.gamma(1 - g) - 1.0) <= 0.05


def test_near_one_falls_back_to_exponential():
    res = evaluate_mittag_leffler(1.0 - 1e-10, -30.0)
    assert res.branch == "exp"
    assert res.value == math.exp(-30.0)


def test_domain_errors():
    with pytest.raises(DomainError):
        mittag_leffler(0.0, -1.0)
    with pytest.raises(DomainError):
        mittag_leffler(1.5, -1.0)
    with pytest.raises(DomainError):
        mittag_leffler(0.5, 1.0)


def test_inaccurate_result_is_flagged():
    cfg = MLConfig(series_cutoff=5.0, series_terms=200, asymptotic_terms=10, extended_precision=False)
    res = evaluate_mittag_leffler(0.9, -8.0, cfg)
    assert not res.accurate
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        mittag_leffler(0.9, -8.0, cfg)
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)


def test_default_config_reaches_target_near_cutoff():
    for g in (0.3, 0.6, 0.9):
        for x in (4.0, 5.0, 6.0, 8.0):
            assert evaluate_mittag_leffler(g, -x).accurate
