import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from eulerlab.grid import DomainError, TimeGrid, floor_h, subsample_indices


def test_grid_step_and_count():
    g = TimeGrid(2.0, 5)
    assert g.h == 2.0 / 32
    assert g.step_count == 32
    assert g.step_count * g.h == 2.0
    assert g.times()[-1] == 2.0


def test_grid_rejects_bad_arguments():
    with pytest.raises(DomainError):
        TimeGrid(0.0, 3)
    with pytest.raises(DomainError):
        TimeGrid(1.0, -1)
    with pytest.raises(DomainError):
        TimeGrid(1.0, 1.5)


def test_floor_examples():
    assert floor_h(2.0, 0.3).index == 6
    assert floor_h(2.0, 0.3).time == pytest.approx(1.8)
    assert floor_h(0.0, 0.7).index == 0
    g = TimeGrid(2.0, 10)
    for n in (0, 1, 17, 1023, 1024):
        assert floor_h(n * g.h, g).index == n


def test_floor_negative_time_raises():
    with pytest.raises(DomainError):
        floor_h(-1e-12, 0.1)


@given(st.floats(0, 1e4, allow_nan=False), st.floats(1e-6, 10, allow_nan=False))
def test_floor_brackets_t(t, h):
    f = floor_h(t, h)
    assert f.time <= t < (f.index + 1) * h


@given(st.floats(0, 1e4, allow_nan=False), st.floats(1e-6, 10, allow_nan=False))
def test_floor_is_idempotent(t, h):
    f = floor_h(t, h)
    assert floor_h(f.time, h).index == f.index


def test_index_of_rejects_off_grid_time():
    g = TimeGrid(1.0, 3)
    assert g.index_of(0.5) == 4
    with pytest.raises(DomainError):
        g.index_of(0.3)


def test_subsample_examples():
    assert subsample_indices(TimeGrid(1.0, 3), TimeGrid(1.0, 1)).tolist() == [0, 4, 8]
    assert subsample_indices(TimeGrid(1.0, 2), TimeGrid(1.0, 0)).tolist() == [0, 4]
    assert subsample_indices(TimeGrid(1.0, 4), TimeGrid(1.0, 4)).tolist() == list(range(17))


def test_subsample_errors():
    with pytest.raises(DomainError):
        subsample_indices(TimeGrid(1.0, 2), TimeGrid(1.0, 3))
    with pytest.raises(DomainError):
        subsample_indices(TimeGrid(1.0, 3), TimeGrid(2.0, 1))


@given(st.integers(0, 8), st.integers(0, 8), st.integers(0, 8))
def test_subsample_composes(a, b, c):
    k0, k1, k2 = sorted((a, b, c))
    g0, g1, g2 = (TimeGrid(2.0, k) for k in (k0, k1, k2))
    direct = subsample_indices(g2, g0)
    composed = subsample_indices(g2, g1)[subsample_indices(g1, g0)]
    assert np.array_equal(direct, composed)
