import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eulerlab.grid import DomainError, TimeGrid
from eulerlab.quadrature import (
    IntegrationError,
    ToleranceNotMet,
    adaptive_simpson,
    brownian_functional_mc,
    composite_simpson,
    gaussian_expectation_mc,
    mollifier_integral,
    mollifier_value,
    right_bump_integral,
    summarize,
)
from eulerlab.rng import SeedSpec

# 40-digit mpmath values, computed once and frozen
C_ORACLE = 0.2219969080840397189
X1_ORACLE = 0.3942227695209020695


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3),
       st.floats(-2, 2), st.floats(0.01, 3))
@settings(max_examples=60, deadline=None)
def test_simpson_integrates_cubics_exactly(c0, c1, c2, c3, a, width):
    b = a + width

    def f(x):
        return c0 + c1 * x + c2 * x**2 + c3 * x**3

    def F(x):
        return c0 * x + c1 * x**2 / 2 + c2 * x**3 / 3 + c3 * x**4 / 4

    exact = F(b) - F(a)
    scale = 1.0 + abs(exact) + sum(abs(c) for c in (c0, c1, c2, c3)) * (1 + abs(a) + width) ** 4
    assert abs(adaptive_simpson(f, a, b, 1e-10).value - exact) <= 1e-12 * scale
    assert abs(composite_simpson(f, a, b, 3) - exact) <= 1e-12 * scale


def test_mollifier_integral_matches_high_precision_oracle():
    assert abs(mollifier_integral(1.0) - C_ORACLE) < 1e-12
    assert abs(mollifier_integral(0.0)) == 0.0


def test_right_bump_integral_matches_high_precision_oracle():
    assert abs(right_bump_integral(2.0) - X1_ORACLE) < 1e-12
    assert right_bump_integral(1.0) == 0.0
    assert right_bump_integral(0.3) == 0.0


def test_symmetric_mollifier_integral_is_twice_the_half():
    full = adaptive_simpson(lambda u: float(mollifier_value(u)), -1.0, 1.0, 1e-12).value
    assert abs(full - 2 * C_ORACLE) < 1e-12


def test_adaptive_and_composite_agree_on_smooth_integrals():
    a = adaptive_simpson(math.sin, 0.0, math.pi, 1e-12)
    assert abs(a.value - 2.0) < 1e-11
    assert a.error_estimate < 1e-10
    assert abs(composite_simpson(np.sin, 0.0, math.pi, 1 << 12) - 2.0) < 1e-12


def test_mollifier_values():
    assert mollifier_value(0.0) == math.exp(-1.0)
    assert np.all(mollifier_value(np.array([-1.0, 1.0, 1.5, -7.0])) == 0.0)
    x = np.linspace(-0.99, 0.99, 101)
    assert np.array_equal(mollifier_value(x), mollifier_value(-x))


def test_quadrature_rejects_bad_input():
    with pytest.raises(DomainError):
        adaptive_simpson(math.sin, 1.0, 0.0)
    with pytest.raises(DomainError):
        adaptive_simpson(math.sin, 0.0, 1.0, tol=0.0)
    with pytest.raises(IntegrationError):
        adaptive_simpson(lambda x: math.inf, 0.0, 1.0)
    with pytest.raises(DomainError):
        composite_simpson(np.sin, 0.0, 1.0, 0)
    assert adaptive_simpson(math.sin, 1.0, 1.0).value == 0.0


def test_tolerance_not_met_carries_estimate():
    with pytest.raises(ToleranceNotMet) as info:
        adaptive_simpson(lambda x: math.sqrt(abs(x - 0.3)), 0.0, 1.0, 1e-15, max_depth=4)
    assert abs(info.value.result.value - (2 / 3) * (0.3**1.5 + 0.7**1.5)) < 1e-2


def test_gaussian_mc_against_closed_form():
    # E[cos Z] = exp(-1/2)
    est = gaussian_expectation_mc(np.cos, 1.0, 200_000, SeedSpec(3))
    assert abs(est.mean - math.exp(-0.5)) < 4 * est.stderr
    assert est.n == 200_000


def test_gaussian_mc_is_chunk_invariant():
    a = gaussian_expectation_mc(np.cos, 1.0, 10_001, SeedSpec(5), chunk=1 << 18)
    b = gaussian_expectation_mc(np.cos, 1.0, 10_001, SeedSpec(5), chunk=777)
    assert a == b


def test_gaussian_mc_enforces_bound():
    with pytest.raises(IntegrationError):
        gaussian_expectation_mc(lambda z: 2.0 * z, 1.0, 1000, SeedSpec(0))
    with pytest.raises(DomainError):
        gaussian_expectation_mc(np.cos, 1.0, 1, SeedSpec(0))


def test_brownian_functional_mc_against_closed_form():
    # E[cos W(1)] = exp(-1/2) and E[cos(int_0^1 W)] = exp(-1/6) up to O(h) quadrature error
    grid = TimeGrid(1.0, 6)
    est = brownian_functional_mc(lambda w: np.cos(w[:, -1]), 1.0, grid, 50_000, SeedSpec(1))
    assert abs(est.mean - math.exp(-0.5)) < 4 * est.stderr
    est = brownian_functional_mc(lambda w: np.cos(np.sum(w[:, :-1], axis=1) * grid.h), 1.0, grid,
                                 50_000, SeedSpec(2))
    assert abs(est.mean - math.exp(-1 / 6)) < 4 * est.stderr + 0.01


def test_summarize():
    s = summarize([1.0, 2.0, 3.0, 4.0])
    assert s.mean == 2.5
    assert s.stderr == pytest.approx(math.sqrt(5 / 3 / 4))
    assert math.isnan(summarize([1.0]).stderr)
