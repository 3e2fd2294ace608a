"""Euler-Maruyama engine with common-path coupling.

``euler_run`` / ``euler_run_batch`` step a model along given Brownian paths;
``coupled_terminal_values`` streams one fine path per stream and advances
every requested coarser level on it at the same time, together with the
model's exact solution.  Both routes draw increments through
:mod:`eulerlab.rng` with identical arithmetic, so they agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from numba import njit

from .grid import DomainError, TimeGrid, floor_h, subsample_indices
from .models import SdeModel
from .quadrature import _bump_right, mollifier_integral, mollifier_value, right_bump_integral
from .rng import BrownianPath, fill_increments, fill_path_block, stream_keys, subsample

Scheme = Literal["plain", "tamed"]


@dataclass(frozen=True)
class EulerConfig:
    grid: TimeGrid
    scheme: Scheme = "plain"
    blow_up_threshold: float = 1e10

    def __post_init__(self):
        if self.scheme not in ("plain", "tamed"):
            raise DomainError(f"unknown scheme {self.scheme!r}")
        if not self.blow_up_threshold > 0:
            raise DomainError("blow_up_threshold must be positive")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Grid states ``states[n] = Y(n h)``; truncated before the first blow-up."""

    grid: TimeGrid
    states: np.ndarray
    blow_up_index: int | None = None

    def at_index(self, n: int) -> np.ndarray:
        return self.states[n]

    def at(self, t: float, model: SdeModel, paths: Sequence[BrownianPath], scheme: Scheme = "plain") -> np.ndarray:
        """State at an arbitrary time, continued from the last grid point.

        Between grid points the scheme is ``Y(t) = Y(n h) + mu(Y(n h)) (t - n h)
        + sigma(Y(n h)) (W(t) - W(n h))``; ``t`` must be a point of the
        paths' own grid so that ``W(t)`` is known.
        """
        n = floor_h(t, self.grid).index
        if n >= len(self.states):
            raise DomainError(f"t={t!r} lies beyond the stored trajectory")
        y = self.states[n][None, :]
        dt = t - n * self.grid.h
        dw = np.zeros((1, model.m))
        for p in paths:
            dw[0, p.component] = p.at(t) - p.at(n * self.grid.h)
        return _Stepper(model, scheme).step(y, dw, dt)[0]


class _Stepper:
    """One Euler step ``x + mu~(x) h + sigma(x) dW`` for a batch of states."""

    def __init__(self, model: SdeModel, scheme: Scheme):
        self.model = model
        self.tamed = scheme == "tamed"
        self.active = model.active_noise()
        self.entries = None
        if model.additive is not None:
            B = model.additive
            self.entries = [(i, j, B[i, j]) for j in self.active for i in range(model.d) if B[i, j] != 0.0]

    def drift(self, x, h):
        mu = self.model.drift(x)
        if self.tamed:
            norm = np.sqrt(np.sum(mu * mu, axis=1))
            mu = mu / (1.0 + h * norm)[:, None]
        return mu

    def step(self, x, dw, h):
        """``dw`` has one column per noise component (shape ``(batch, m)``)."""
        out = x + self.drift(x, h) * h
        if self.entries is not None:
            for i, j, b in self.entries:
                out[:, i] += b * dw[:, j]
        else:
            sigma = self.model.diffusion(x)
            for j in self.active:
                out += sigma[:, :, j] * dw[:, j:j + 1]
        return out


class _BlowUpGuard:
    def __init__(self, batch: int, threshold: float):
        self.threshold = threshold
        self.index = np.full(batch, -1, dtype=np.int64)
        self.alive = np.ones(batch, dtype=bool)
        self.all_alive = True

    def check(self, x_old, x_new, n_new):
        if self.all_alive and np.max(np.abs(x_new)) <= self.threshold:  # False for NaN
            return x_new
        ok = np.abs(x_new).max(axis=1) <= self.threshold
        newly = self.alive & ~ok
        self.index[newly] = n_new
        self.alive &= ok
        self.all_alive = bool(self.alive.all())
        return np.where(self.alive[:, None], x_new, x_old)


@dataclass(frozen=True, eq=False)
class BatchResult:
    terminal: np.ndarray          # (batch, d), last finite state of each path
    blow_up_index: np.ndarray     # (batch,), -1 when the path never crossed
    states: np.ndarray | None = None  # (batch, steps + 1, d) when requested


def euler_run_batch(model: SdeModel, x0, w: np.ndarray, path_grid: TimeGrid, cfg: EulerConfig,
                    keep_states: bool = False) -> BatchResult:
    """Euler scheme on ``cfg.grid`` for a batch of paths ``w`` of shape ``(batch, m, steps + 1)``.

    ``w`` lives on ``path_grid``, which must be at least as fine as
    ``cfg.grid``; coarse increments are read at subsampled fine indices.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (model.d,):
        raise DomainError(f"initial value has shape {x0.shape}, model dimension is {model.d}")
    if w.ndim != 3 or w.shape[1] != model.m or w.shape[2] != path_grid.step_count + 1:
        raise DomainError(f"paths have shape {w.shape}, expected (batch, {model.m}, {path_grid.step_count + 1})")
    idx = subsample_indices(path_grid, cfg.grid)
    wc = w[:, :, idx]
    batch = w.shape[0]
    stepper = _Stepper(model, cfg.scheme)
    guard = _BlowUpGuard(batch, cfg.blow_up_threshold)
    h = cfg.grid.h
    x = np.tile(x0, (batch, 1))
    states = None
    if keep_states:
        states = np.full((batch, cfg.grid.step_count + 1, model.d), np.nan)
        states[:, 0] = x
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(cfg.grid.step_count):
            dw = wc[:, :, n + 1] - wc[:, :, n]
            x_new = guard.check(x, stepper.step(x, dw, h), n + 1)
            if states is not None:
                states[guard.alive, n + 1] = x_new[guard.alive]
            x = x_new
    return BatchResult(x, guard.index, states)


def euler_run(model: SdeModel, x0, paths: Sequence[BrownianPath], cfg: EulerConfig) -> Trajectory:
    """Single Euler trajectory driven by one path per noise component.

    Missing components are treated as zero paths.
    """
    if not paths:
        raise DomainError("need at least one Brownian path")
    grid = paths[0].grid
    w = np.zeros((1, model.m, grid.step_count + 1))
    for p in paths:
        if p.grid != grid:
            p = _on_grid(p, grid)
        w[0, p.component] = p.values
    res = euler_run_batch(model, x0, w, grid, cfg, keep_states=True)
    n_blow = int(res.blow_up_index[0])
    states = res.states[0]
    if n_blow >= 0:
        return Trajectory(cfg.grid, states[:n_blow].copy(), n_blow)
    return Trajectory(cfg.grid, states, None)


def _on_grid(path: BrownianPath, grid: TimeGrid) -> BrownianPath:
    if path.grid.level < grid.level:
        raise DomainError("paths of one trajectory must share a grid")
    return subsample(path, grid)


def coupled_terminal_values(model: SdeModel, x0, horizon: float, levels: Sequence[int], master_seed: int,
                            stream_ids, scheme: Scheme = "plain", blow_up_threshold: float = 1e10,
                            fine_level: int | None = None, with_exact: bool = True,
                            engine: str = "auto", block: int = 128):
    """Exact solution and Euler approximations at ``horizon`` on shared fine paths.

    Each stream's path is generated ``block`` fine increments at a time on
    the grid of level ``fine_level`` (default ``max(levels)``) and never
    stored whole; level ``K`` steps every ``2**(fine_level - K)`` fine
    increments.

    ``engine="auto"`` uses a model-specific kernel when the model declares
    one and it applies (see :func:`ex3_coupled_terminal_values`);
    ``"generic"`` always steps the scheme.

    Returns ``(exact, euler, blow_up)`` with shapes ``(batch, d)``,
    ``(len(levels), batch, d)`` and ``(len(levels), batch)``; ``exact`` is
    ``None`` when ``with_exact`` is false.
    """
    if engine not in ("auto", "generic"):
        raise DomainError(f"unknown engine {engine!r}")
    levels = [int(k) for k in levels]
    fine_level = max(levels) if fine_level is None else int(fine_level)
    if min(levels) < 0 or fine_level < max(levels):
        raise DomainError(f"levels {levels} must lie in [0, {fine_level}]")
    if block < 1:
        raise DomainError("block must be positive")
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (model.d,):
        raise DomainError(f"initial value has shape {x0.shape}, model dimension is {model.d}")
    exact = model.exact if with_exact else None
    if with_exact and exact is None:
        raise NotImplementedError(f"model {model.name!r} has no exact solution")

    kernel = _KERNELS.get(model.params.get("kernel"))
    if engine == "auto" and kernel is not None and scheme == "plain" and kernel.applies(x0):
        return kernel(horizon, levels, fine_level, master_seed, stream_ids, with_exact, block)

    fine = TimeGrid(horizon, fine_level)
    keys = stream_keys(master_seed, stream_ids)
    batch = len(keys)
    active = model.active_noise()
    hf = fine.h
    ex_state = exact.begin(x0, batch) if exact is not None else None

    stepper = _Stepper(model, scheme)
    ys = [np.tile(x0, (batch, 1)) for _ in levels]
    w_last = [np.zeros((batch, model.m)) for _ in levels]
    guards = [_BlowUpGuard(batch, blow_up_threshold) for _ in levels]
    ratios = [1 << (fine_level - k) for k in levels]
    hs = [TimeGrid(horizon, k).h for k in levels]

    w = np.zeros((batch, model.m))
    incs = {j: np.empty((batch, block)) for j in active}
    with np.errstate(over="ignore", invalid="ignore"):
        for b0 in range(0, fine.step_count, block):
            width = min(block, fine.step_count - b0)
            for j in active:
                fill_increments(keys, j, b0, incs[j][:, :width], hf)
            for c in range(width):
                i = b0 + c
                w_new = w.copy()
                for j in active:
                    w_new[:, j] = w[:, j] + incs[j][:, c]
                if exact is not None:
                    exact.advance(ex_state, i * hf, hf, w, w_new)
                for L, r in enumerate(ratios):
                    if (i + 1) % r:
                        continue
                    dw = w_new - w_last[L]
                    ys[L] = guards[L].check(ys[L], stepper.step(ys[L], dw, hs[L]), (i + 1) // r)
                    w_last[L] = w_new
                w = w_new
    ex_val = exact.value(ex_state, horizon, w) if exact is not None else None
    return ex_val, np.stack(ys), np.stack([g.index for g in guards])


def _ex3_inner_sum(grid: TimeGrid, n_end: int) -> float:
    # Euler value of X3 at n_end*h: left Riemann sum of the mollifier, in recursion order
    k = np.arange(n_end)
    k = k[k * grid.h < 1.0]
    if k.size == 0:
        return 0.0
    return float(np.cumsum(mollifier_value(k * grid.h) * grid.h)[-1])


@njit(cache=True, nogil=True)
def _accumulate_rows(acc, terms):
    # acc[b] + terms[b, 0] + terms[b, 1] + ..., strictly left to right
    for b in range(terms.shape[0]):
        a = acc[b]
        for c in range(terms.shape[1]):
            a = a + terms[b, c]
        acc[b] = a


class _Ex3Kernel:
    """Coupled terminal values of the ex3 model from X(0) = 0 without stepping.

    Only the second component is noisy.  ``Y4(nh) = nh`` and ``Y3`` is a
    deterministic Riemann sum, so ``Y1`` reduces to the cell sum evaluated by
    :func:`euler_y1_representation`; here that sum is accumulated block by
    block on every level at once, in the same order and with the same
    floating-point operations.  ``Y2`` is reported as ``W2(T)`` itself.
    """

    def applies(self, x0) -> bool:
        return bool(np.all(np.asarray(x0) == 0.0))

    def __call__(self, horizon, levels, fine_level, master_seed, stream_ids, with_exact, block):
        fine = TimeGrid(horizon, fine_level)
        keys = stream_keys(master_seed, stream_ids)
        batch = len(keys)
        grids = [TimeGrid(horizon, k) for k in levels]
        ratios = [1 << (fine_level - k) for k in levels]
        offsets = [ex3_grid_offset(g) for g in grids]
        y1 = np.zeros((len(levels), batch))
        w_end = np.zeros(batch)
        w = np.empty((batch, block))
        # cells [n h, (n+1) h) with n h > 1 that end by the horizon
        first = int(1.0 // fine.h)
        while first * fine.h <= 1.0:
            first += 1
        for b0 in range(0, fine.step_count, block):
            width = min(block, fine.step_count - b0)
            fill_path_block(keys, 1, b0, w_end, w[:, :width], fine.h)
            w_end = w[:, width - 1].copy()
            lo, hi = max(b0 + 1, first), min(b0 + width, fine.step_count - 1)
            if lo > hi:
                continue
            wc = w[:, lo - b0 - 1:hi - b0]
            e = np.exp(np.minimum(wc * wc * wc, 700.0))
            for L, (g, r, off) in enumerate(zip(grids, ratios, offsets)):
                i0 = -(-lo // r) * r
                if i0 > hi:
                    continue
                n = np.arange(i0 // r, hi // r + 1)
                terms = _bump_right(n * g.h) * np.cos(off * e[:, i0 - lo::r]) * g.h
                _accumulate_rows(y1[L], terms)
        euler = np.zeros((len(levels), batch, 4))
        euler[:, :, 0] = y1
        euler[:, :, 1] = w_end
        for L, g in enumerate(grids):
            euler[L, :, 2] = _ex3_inner_sum(g, g.step_count)
            euler[L, :, 3] = g.step_count * g.h
        exact = None
        if with_exact:
            exact = np.zeros((batch, 4))
            exact[:, 0] = right_bump_integral(horizon)
            exact[:, 1] = w_end
            exact[:, 2] = mollifier_integral(min(horizon, 1.0))
            exact[:, 3] = horizon
        return exact, euler, np.full((len(levels), batch), -1, dtype=np.int64)


_KERNELS = {"ex3": _Ex3Kernel()}


def ex3_grid_offset(grid: TimeGrid) -> float:
    """Euler value of ``X3`` after time 1 minus the mollifier integral.

    The third component integrates the mollifier with a left Riemann sum,
    summed in the order the Euler recursion adds it.
    """
    h = grid.h
    k = np.arange(int(math.ceil(1.0 / h)) + 1)
    k = k[k * h < 1.0]
    terms = mollifier_value(k * h) * h
    return float(np.cumsum(terms)[-1]) - mollifier_integral(1.0)


def euler_y1_representation(grid: TimeGrid, path: BrownianPath, t: float) -> float:
    """First Euler component of the ex3 model at time ``t`` in closed form.

    The integrand is constant on grid cells, so the integral from 1 to ``t``
    is a finite sum over cells ``[n h, (n+1) h)`` with ``n h > 1`` plus a
    partial last cell; ``path`` is ``W_2`` on ``grid`` or a finer grid.
    """
    if t < 1.0:
        return 0.0
    if path.grid != grid:
        path = subsample(path, grid)
    h = grid.h
    n_end = floor_h(t, grid).index
    if n_end > grid.step_count or (n_end == grid.step_count and t > n_end * h):
        raise DomainError(f"t={t!r} is beyond the path grid")
    offset = ex3_grid_offset(grid)
    n = np.arange(n_end + 1)
    n = n[n * h > 1.0]
    if n.size == 0:
        return 0.0
    s = n * h
    w = path.values[n]
    e = np.exp(np.minimum(w * w * w, 700.0))
    integrand = _bump_right(s) * np.cos(offset * e)
    # n[-1] == n_end: every kept cell but the last is complete
    full = integrand[:-1] * h
    total = float(np.cumsum(full)[-1]) if full.size else 0.0
    if t > n_end * h:
        total += float(integrand[-1]) * (t - n_end * h)
    return total
