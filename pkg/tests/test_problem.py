import logging
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracl1.errors import DomainError
from fracl1.problem import (
    Problem,
    SpatialGrid,
    make_benchmark,
    make_reservoir,
    make_steep_source,
    make_testbed,
)
from fracl1.specfun import mittag_leffler
from oracles import ml_laplace

gammas = st.floats(0.05, 1.0)


@given(gammas)
def test_testbed_exact_at_origin(g):
    bm = make_testbed(g)
    assert bm.exact(np.pi / 2, 0.0) == pytest.approx(1.0, abs=1e-15)


def test_testbed_gamma_one_is_exponential():
    bm = make_testbed(1.0)
    x = np.linspace(0, np.pi, 9)
    for t in (0.1, 1.0, 7.0):
        assert np.max(np.abs(bm.exact(x, t) - np.exp(-t) * np.sin(x))) <= 1e-14


def test_testbed_half_value():
    bm = make_testbed(0.5)
    assert bm.exact(np.pi / 2, 1.0) == pytest.approx(math.e * math.erfc(1.0), abs=1e-12)
    assert round(float(bm.exact(np.pi / 2, 1.0)), 6) == 0.427584


def test_testbed_problem_fields():
    p = make_testbed(0.25).problem
    assert (p.x_lo, p.x_hi, p.K) == (0.0, math.pi, 1.0)
    assert not p.has_source
    x = np.linspace(0, np.pi, 5)
    assert np.array_equal(p.initial(x), np.sin(x))
    assert p.left_bc(3.0) == 0.0 and p.right_bc(3.0) == 0.0


@pytest.mark.parametrize("g", [0.0, -0.1, 1.01])
def test_gamma_out_of_range(g):
    with pytest.raises(DomainError):
        make_testbed(g)


def test_steep_source_values():
    bm = make_steep_source(0.25, 20.0, 20.0)
    assert bm.params == {"gamma": 0.25, "a": 20.0, "p": 20.0}
    x = np.linspace(0, np.pi, 7)
    assert np.max(np.abs(bm.exact(x, 0.0) - np.sin(x))) <= 1e-15
    expected = ml_laplace(0.25, 1.0) + 20.0
    assert bm.exact(np.pi / 2, 1.0) == pytest.approx(expected, abs=1e-10)


def test_steep_source_is_consistent_with_equation():
    # f = D^g u - u_xx for u = (E(-t^g) + a t^p) sin x; D^g t^p = Gamma(1+p)/Gamma(1+p-g) t^(p-g)
    g, a, p = 0.25, 20.0, 20.0
    bm = make_steep_source(g, a, p)
    t = 0.7
    ratio = math.gamma(1 + p) / math.gamma(1 + p - g)
    expected = a * ratio * t ** (p - g) + a * t**p
    assert bm.problem.source(np.array([np.pi / 2]), t)[0] == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("kw", [{"p": 0.25}, {"p": 0.1}, {"a": 0.0}, {"a": -1.0}])
def test_steep_source_rejects(kw):
    with pytest.raises(DomainError):
        make_steep_source(0.25, **kw)


def test_steep_source_rejects_gamma_one():
    with pytest.raises(DomainError):
        make_steep_source(1.0)


@given(st.floats(0.05, 0.95), st.floats(0.0, 3.0))
def test_steep_minus_power_is_testbed(g, t):
    steep = make_steep_source(g, 20.0, 20.0)
    base = make_testbed(g)
    x = np.linspace(0, np.pi, 11)
    diff = steep.exact(x, t) - 20.0 * t**20.0 * np.sin(x) - base.exact(x, t)
    assert np.max(np.abs(diff)) <= 1e-12 * max(1.0, 20.0 * t**20.0)


def test_reservoir_layout(caplog):
    with caplog.at_level(logging.WARNING, logger="fracl1.problem"):
        bm = make_reservoir(0.25, 1.0, 4.0, 2.0)
    assert "disagree" in caplog.text
    p = bm.problem
    assert (p.x_lo, p.x_hi) == (0.0, 4.0)
    assert p.left_bc(1.0) == 2.0 and p.right_bc(1.0) == 0.0
    assert np.all(p.initial(np.linspace(0, 4, 5)) == 0.0)
    assert bm.exact is None


def test_reservoir_gamma_one_has_exact():
    bm = make_reservoir(1.0, 1.0, 4.0, 1.0)
    x = np.linspace(0, 4, 41)
    assert np.max(np.abs(bm.exact(x, 40.0) - (1 - x / 4))) <= 1e-6


def test_reservoir_rejects_bad_length():
    with pytest.raises(DomainError):
        make_reservoir(0.5, L=0.0)


@pytest.mark.parametrize(
    "tag,g",
    [("testbed", 0.3), ("steep_source", 0.3), ("reservoir", 1.0)],
)
def test_exact_satisfies_boundaries(tag, g):
    bm = make_benchmark(tag, g)
    p = bm.problem
    for t in (0.01, 0.3, 1.0, 2.5):
        assert bm.exact(np.array([p.x_lo]), t)[0] == pytest.approx(p.left_bc(t), abs=1e-12)
        assert bm.exact(np.array([p.x_hi]), t)[0] == pytest.approx(p.right_bc(t), abs=1e-12 * max(1.0, abs(bm.exact(np.array([0.5 * p.x_hi]), t)[0])))


def test_testbed_exact_matches_initial_on_grid():
    bm = make_testbed(0.4)
    grid = SpatialGrid.for_problem(bm.problem, 40)
    assert np.array_equal(bm.exact(grid.x, 0.0), bm.problem.initial(grid.x))


def test_unknown_tag():
    with pytest.raises(DomainError):
        make_benchmark("nope", 0.5)


def test_grid():
    grid = SpatialGrid(0.0, math.pi, 40)
    assert grid.J == 40 and grid.n_nodes == 41
    assert grid.dx == math.pi / 40
    assert grid.x[0] == 0.0 and grid.x[-1] == math.pi
    assert grid.interior.shape == (39,)
    with pytest.raises(ValueError):
        grid.x[3] = 1.0
    with pytest.raises(DomainError):
        SpatialGrid(0.0, 1.0, 1)
    with pytest.raises(DomainError):
        SpatialGrid(1.0, 1.0, 10)


def test_problem_validation():
    with pytest.raises(DomainError):
        Problem(gamma=0.5, K=0.0)
    with pytest.raises(DomainError):
        Problem(gamma=0.5, x_lo=1.0, x_hi=0.0)


def test_source_values_default_zero():
    p = Problem(gamma=0.5)
    x = np.linspace(0, 1, 4)
    assert np.array_equal(p.source_values(x, 1.0), np.zeros(4))
    q = Problem(gamma=0.5, source=lambda x, t: 2.0)
    assert np.array_equal(q.source_values(x, 1.0), np.full(4, 2.0))
