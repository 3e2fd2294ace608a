import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eulerlab.euler import (
    EulerConfig,
    _Stepper,
    coupled_terminal_values,
    euler_run,
    euler_run_batch,
    euler_y1_representation,
    ex3_grid_offset,
)
from eulerlab.grid import DomainError, TimeGrid
from eulerlab.models import drift_free_model, linear_model, model_bsp1, model_ex2b, model_ex3
from eulerlab.quadrature import mollifier_value
from eulerlab.rng import SeedSpec, brownian_batch, sample_path, sample_paths


@given(st.integers(0, 2**31), st.integers(1, 7))
@settings(max_examples=15, deadline=None)
def test_drift_free_euler_is_exact(seed, level):
    m = drift_free_model([[1.0, 0.0], [0.5, -2.0], [0.0, 0.0]])
    x0 = np.array([0.3, -1.0, 2.0])
    ex, ys, blow = coupled_terminal_values(m, x0, 1.0, [level], seed, np.arange(20))
    assert np.all(blow == -1)
    assert np.max(np.abs(ys[0] - ex)) < 1e-13


def test_linear_drift_matches_matrix_power():
    A = np.array([[-1.0, 2.0], [0.0, -0.5]])
    m = linear_model(A)
    grid = TimeGrid(1.0, 5)
    p = sample_path(SeedSpec(0), grid)
    traj = euler_run(m, [1.0, 1.0], [p], EulerConfig(grid))
    M = np.eye(2) + grid.h * A
    for n in (0, 1, 7, 32):
        assert np.allclose(traj.at_index(n), np.linalg.matrix_power(M, n) @ [1.0, 1.0], rtol=1e-13)


def test_ex3_clock_and_riemann_components():
    m = model_ex3()
    grid = TimeGrid(2.0, 6)
    paths = sample_paths(SeedSpec(1), grid, range(4))
    traj = euler_run(m, np.zeros(4), paths, EulerConfig(grid))
    n = np.arange(grid.step_count + 1)
    assert np.allclose(traj.states[:, 3], n * grid.h, rtol=0, atol=1e-14)
    # third component is the left Riemann sum of the mollifier
    riemann = np.concatenate([[0.0], np.cumsum(mollifier_value(n[:-1] * grid.h) * grid.h)])
    assert np.allclose(traj.states[:, 2], riemann, rtol=0, atol=1e-15)
    assert np.array_equal(traj.states[:, 1], paths[1].values)
    assert ex3_grid_offset(grid) == pytest.approx(traj.states[-1, 2] - 0.2219969080840397189, abs=1e-12)


def test_ex3_grid_offset_is_positive_and_order_h():
    for k in range(3, 15):
        g = TimeGrid(2.0, k)
        off = ex3_grid_offset(g)
        assert g.h / 20 <= off <= 2 * g.h


@pytest.mark.parametrize("level", [3, 6, 9])
def test_y1_representation_matches_euler_run(level):
    m = model_ex3()
    grid = TimeGrid(2.0, level)
    for s in range(5):
        paths = sample_paths(SeedSpec(7, s), grid, range(4))
        traj = euler_run(m, np.zeros(4), paths, EulerConfig(grid))
        for n in (0, grid.step_count // 2, grid.step_count // 2 + 3, grid.step_count):
            t = n * grid.h
            rep = euler_y1_representation(grid, paths[1], t)
            assert rep == pytest.approx(traj.states[n, 0], rel=1e-12, abs=1e-15)


def test_y1_representation_off_grid_time():
    m = model_ex3()
    fine = TimeGrid(2.0, 8)
    grid = TimeGrid(2.0, 5)
    paths = sample_paths(SeedSpec(2), fine, range(4))
    t = 1.5 + 3 * fine.h
    traj = euler_run(m, np.zeros(4), paths, EulerConfig(grid))
    y = traj.at(t, m, paths)
    assert euler_y1_representation(grid, paths[1], t) == pytest.approx(y[0], rel=1e-12)
    assert euler_y1_representation(grid, paths[1], 0.5) == 0.0
    with pytest.raises(DomainError):
        euler_y1_representation(grid, paths[1], 2.5)


def test_coupled_levels_equal_separate_runs_on_subsampled_paths():
    m = model_ex2b()
    x0 = np.array([0.0, 0.3, 1.0])
    levels = [2, 4, 6]
    streams = np.arange(10, 16)
    ex, ys, _ = coupled_terminal_values(m, x0, 1.0, levels, 11, streams, block=7)
    fine = TimeGrid(1.0, 6)
    w = brownian_batch(11, streams, fine, [0])
    for L, k in enumerate(levels):
        res = euler_run_batch(m, x0, w, fine, EulerConfig(TimeGrid(1.0, k)))
        assert np.array_equal(res.terminal, ys[L])


def test_coupled_values_do_not_depend_on_block_or_batch_split():
    m = model_ex2b()
    x0 = np.array([0.0, 0.0, 0.5])
    _, a, _ = coupled_terminal_values(m, x0, 1.0, [3, 5], 2, np.arange(8), block=128)
    _, b, _ = coupled_terminal_values(m, x0, 1.0, [3, 5], 2, np.arange(8), block=5)
    _, c, _ = coupled_terminal_values(m, x0, 1.0, [3, 5], 2, np.arange(3, 8), block=16)
    assert np.array_equal(a, b)
    assert np.array_equal(a[:, 3:], c)


def test_ex3_fast_kernel_matches_generic_engine():
    m = model_ex3()
    levels = [2, 4, 6, 8]
    ex_f, y_f, b_f = coupled_terminal_values(m, np.zeros(4), 2.0, levels, 5, np.arange(40))
    ex_g, y_g, b_g = coupled_terminal_values(m, np.zeros(4), 2.0, levels, 5, np.arange(40), engine="generic")
    assert np.allclose(ex_f, ex_g, rtol=0, atol=1e-13)
    assert np.allclose(y_f, y_g, rtol=0, atol=1e-12)
    assert np.array_equal(b_f, b_g)


def test_ex3_fast_kernel_matches_representation():
    m = model_ex3()
    levels = [3, 7]
    _, ys, _ = coupled_terminal_values(m, np.zeros(4), 2.0, levels, 9, np.arange(6))
    fine = TimeGrid(2.0, 7)
    for s in range(6):
        p = sample_path(SeedSpec(9, s), fine, component=1)
        for L, k in enumerate(levels):
            assert ys[L, s, 0] == euler_y1_representation(TimeGrid(2.0, k), p, 2.0)


def test_tamed_drift_is_bounded_by_inverse_step():
    st_ = _Stepper(model_bsp1(), "tamed")
    x = np.array([[1e3, 1e3], [-50.0, 2.0], [0.1, 0.1]])
    for h in (1e-1, 1e-3):
        mu = st_.drift(x, h)
        assert np.all(np.linalg.norm(mu, axis=1) * h <= 1.0)


def test_blow_up_is_flagged_and_state_frozen():
    m = model_bsp1()
    grid = TimeGrid(1.0, 4)
    w = brownian_batch(0, np.arange(4), grid, [0])
    res = euler_run_batch(m, np.array([50.0, 50.0]), w, grid, EulerConfig(grid, "plain", 1e10))
    assert np.all(res.blow_up_index > 0)
    assert np.all(np.isfinite(res.terminal))
    tamed = euler_run_batch(m, np.array([50.0, 50.0]), w, grid, EulerConfig(grid, "tamed", 1e10))
    assert np.all(tamed.blow_up_index == -1)


def test_trajectory_truncated_at_blow_up():
    m = model_bsp1()
    grid = TimeGrid(1.0, 4)
    p = sample_path(SeedSpec(0), grid)
    traj = euler_run(m, [50.0, 50.0], [p], EulerConfig(grid))
    assert traj.blow_up_index is not None
    assert len(traj.states) == traj.blow_up_index


def test_input_validation():
    m = model_ex3()
    with pytest.raises(DomainError):
        EulerConfig(TimeGrid(1.0, 2), scheme="implicit")
    with pytest.raises(DomainError):
        coupled_terminal_values(m, np.zeros(3), 2.0, [2], 0, [0])
    with pytest.raises(DomainError):
        coupled_terminal_values(m, np.zeros(4), 2.0, [5], 0, [0], fine_level=4)
    with pytest.raises(DomainError):
        coupled_terminal_values(m, np.zeros(4), 2.0, [2], 0, [0], engine="gpu")
    with pytest.raises(NotImplementedError):
        coupled_terminal_values(model_bsp1(), np.zeros(2), 1.0, [2], 0, [0])
    with pytest.raises(DomainError):
        euler_run(m, np.zeros(4), [], EulerConfig(TimeGrid(1.0, 2)))
