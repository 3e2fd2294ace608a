import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from eulerlab.estimation import (
    ErrorCurve,
    ErrorRow,
    error_row,
    map_chunks,
    polynomial_ratio_drops,
    theorem_bound_violations,
    weak_strong_errors,
)
from eulerlab.grid import DomainError
from eulerlab.models import drift_free_model, model_bsp1, model_ex2b, model_ex3


@given(arrays(np.float64, (30, 3), elements=st.floats(-10, 10)))
@settings(max_examples=60, deadline=None)
def test_strong_error_dominates_weak_error(diff):
    r = error_row(4, 0.25, diff, np.zeros(30, dtype=bool))
    # Jensen: |E D| <= E|D|
    assert r.weak_error <= r.strong_error + 1e-12
    assert r.weak_stderr >= 0 and r.strong_stderr >= 0


def test_error_row_excludes_blown_paths():
    diff = np.array([[1.0, 0.0], [3.0, 0.0], [1e9, 1e9]])
    r = error_row(8, 0.125, diff, np.array([False, False, True]))
    assert r.weak_error == 2.0
    assert r.strong_error == 2.0
    assert r.blown_up_fraction == pytest.approx(1 / 3)
    assert r.weak_stderr == pytest.approx(math.sqrt(2.0 / 2))
    empty = error_row(8, 0.125, diff, np.ones(3, dtype=bool))
    assert math.isnan(empty.weak_error) and empty.blown_up_fraction == 1.0


def test_row_bound_columns():
    assert math.isnan(ErrorRow(16, 1 / 16, 0, 0, 0, 0).bound_thm5)
    assert ErrorRow(32, 1 / 32, 0, 0, 0, 0).bound_thm5 > 0
    assert math.isnan(ErrorRow(1, 1.0, 0, 0, 0, 0).order0_ref(2.0))


def test_drift_free_errors_vanish():
    m = drift_free_model([[1.0], [0.0], [-3.0]])
    curve = weak_strong_errors(m, 1.0, [1, 3, 5], 500, seed=2)
    assert len(curve) == 3
    assert np.all(curve.column("strong_error") < 1e-13)


def test_errors_do_not_depend_on_jobs_or_chunks():
    m = model_ex2b()
    x0 = np.array([0.0, 0.2, 1.0])
    a = weak_strong_errors(m, 1.0, [2, 4], 300, 1, x0=x0, chunk_size=100, n_jobs=1)
    b = weak_strong_errors(m, 1.0, [2, 4], 300, 1, x0=x0, chunk_size=100, n_jobs=3)
    assert a.rows == b.rows


def test_ex3_small_curve_respects_bound():
    curve = weak_strong_errors(model_ex3(), 2.0, range(5, 9), 2000, seed=0)
    assert theorem_bound_violations(curve) == []
    assert np.all(curve.column("weak_error") > 1e-3)


def test_requires_exact_solution():
    with pytest.raises(NotImplementedError):
        weak_strong_errors(model_bsp1(), 1.0, [2], 10)
    with pytest.raises(DomainError):
        weak_strong_errors(model_ex3(), 2.0, [2], 0)


def _curve(weak, se=0.0, k0=8):
    rows = tuple(ErrorRow(2**k, 2.0**-k, w, se, w, 0.0) for k, w in zip(range(k0, k0 + len(weak)), weak))
    return ErrorCurve("ex3", 2.0, 1, 0, rows)


def test_polynomial_ratio_drops():
    flat = _curve([0.1] * 9)
    assert polynomial_ratio_drops(flat) == []
    fast = _curve([0.1 * 2.0**-k for k in range(9)])
    assert len(polynomial_ratio_drops(fast)) == 8
    # a drop inside the noise band is not a violation
    noisy = _curve([0.1, 0.0999], se=1e-3)
    assert polynomial_ratio_drops(noisy) == []


def test_theorem_bound_violations_flags_small_errors():
    c = _curve([1e-20, 1.0], k0=5)
    assert [r.N for r in theorem_bound_violations(c)] == [32]


def test_map_chunks_keeps_order():
    out = map_chunks(lambda a, b: (a, b), 10, 3, n_jobs=4)
    assert out == [(0, 3), (3, 6), (6, 9), (9, 10)]
