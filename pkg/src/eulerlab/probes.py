"""Empirical probes of regularity: Hoelder increments of ``x -> E[phi(X^x(t))]``
and difference quotients of the multiplicative-noise model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .estimation import map_chunks
from .euler import EulerConfig, euler_run_batch
from .grid import DomainError, TimeGrid
from .models import SdeModel, model_bsp1, solve_exact_batch
from .quadrature import summarize
from .rng import brownian_batch


@dataclass(frozen=True, eq=False)
class HolderProbe:
    x: np.ndarray
    direction: np.ndarray
    t: float
    deltas: np.ndarray
    increments: np.ndarray
    stderr: np.ndarray
    fitted_alpha: float

    def ratio(self, alpha: float) -> np.ndarray:
        """``increment(delta) / delta^alpha``; growth as delta shrinks rules out Hoelder exponent alpha."""
        return self.increments / self.deltas ** alpha

    def window_alphas(self, width: int = 4) -> np.ndarray:
        """Log-log slopes over sliding windows of ``width`` consecutive deltas."""
        if width < 2 or width > len(self.deltas):
            raise DomainError(f"window width {width} does not fit {len(self.deltas)} deltas")
        return np.array([fit_slope(self.deltas[i:i + width], self.increments[i:i + width])
                         for i in range(len(self.deltas) - width + 1)])


def fit_slope(deltas, increments) -> float:
    """Least-squares slope of ``log increment`` against ``log delta``."""
    inc = np.asarray(increments, dtype=np.float64)
    if np.any(inc <= 0):
        return math.nan
    return float(np.polyfit(np.log(deltas), np.log(inc), 1)[0])


def _full_paths(model: SdeModel, seed: int, a: int, b: int, grid: TimeGrid) -> np.ndarray:
    active = model.active_noise()
    w = np.zeros((b - a, model.m, grid.step_count + 1))
    if active:
        w[:, active] = brownian_batch(seed, np.arange(a, b), grid, active)
    return w


def holder_probe(model: SdeModel, x, direction, t: float, phi: Callable[[np.ndarray], np.ndarray],
                 deltas: Sequence[float], n_samples: int, seed: int = 0, level: int = 8,
                 method: str = "exact", chunk_size: int = 4096, n_jobs: int = 1) -> HolderProbe:
    """Increments ``|E[phi(X^(x + delta dir)(t))] - E[phi(X^x(t))]|`` on common paths.

    ``method="exact"`` uses the model's pathwise exact solution on a grid of
    ``2**level`` steps over ``[0, t]``, so the increments reflect the
    solution and not a discretization; ``"euler"`` runs the Euler scheme on
    the same grid instead.  ``phi`` maps states ``(batch, d)`` to ``(batch,)``.
    """
    deltas = np.asarray(deltas, dtype=np.float64)
    if deltas.ndim != 1 or len(deltas) < 4:
        raise DomainError("need at least four deltas for the slope fit")
    if np.any(deltas <= 0) or np.any(np.diff(deltas) >= 0):
        raise DomainError("deltas must be positive and strictly decreasing")
    if method not in ("exact", "euler"):
        raise DomainError(f"unknown method {method!r}")
    if method == "exact" and model.exact is None:
        raise NotImplementedError(f"model {model.name!r} has no exact solution")
    x = np.asarray(x, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    if x.shape != (model.d,) or direction.shape != (model.d,):
        raise DomainError(f"base point and direction need shape ({model.d},)")
    norm = float(np.linalg.norm(direction))
    if norm == 0:
        raise DomainError("direction must be nonzero")
    direction = direction / norm
    grid = TimeGrid(t, level)

    def solve(x0, w):
        if method == "exact":
            return solve_exact_batch(model, x0, w, grid, t)
        return euler_run_batch(model, x0, w, grid, EulerConfig(grid)).terminal

    def run(a, b):
        w = _full_paths(model, seed, a, b, grid)
        base = np.asarray(phi(solve(x, w)), dtype=np.float64)
        return np.stack([np.asarray(phi(solve(x + d * direction, w)), dtype=np.float64) - base
                         for d in deltas], axis=1)

    diffs = np.concatenate(map_chunks(run, n_samples, chunk_size, n_jobs), axis=0)
    stats = [summarize(diffs[:, i]) for i in range(len(deltas))]
    inc = np.array([abs(s.mean) for s in stats])
    se = np.array([s.stderr for s in stats])
    return HolderProbe(x, direction, float(t), deltas, inc, se, fit_slope(deltas, inc))


@dataclass(frozen=True)
class LipschitzRow:
    h: float
    truncated_mean: float
    truncated_stderr: float
    median: float
    flagged_fraction: float


def lipschitz_blowup_probe(t: float, x2: float, h_list: Sequence[float], n_samples: int, seed: int = 0,
                           level: int = 10, cap: float = 1e6, scheme: str = "tamed",
                           blow_up_threshold: float = 1e10) -> list[LipschitzRow]:
    """Difference quotients ``X1^(h, x2)(t) / h`` of the multiplicative-noise model.

    ``X1`` vanishes identically from ``x1 = 0``, so the quotient is the
    whole difference.  Its expectation diverges as ``h -> 0``, hence each
    row reports the mean of the quotient clipped to ``[-cap, cap]``, the
    median and the fraction of paths the Euler engine flagged as blown up
    (counted as ``+cap`` in the mean).  All ``h`` share the same paths.
    """
    if not x2 > 0:
        raise DomainError(f"need x2 > 0, got {x2!r}")
    model = model_bsp1()
    grid = TimeGrid(t, level)
    cfg = EulerConfig(grid, scheme, blow_up_threshold)
    w = brownian_batch(seed, np.arange(n_samples), grid, [0])
    rows = []
    for h in h_list:
        if not h > 0:
            raise DomainError(f"need h > 0, got {h!r}")
        res = euler_run_batch(model, np.array([h, x2]), w, grid, cfg)
        flagged = res.blow_up_index >= 0
        q = res.terminal[:, 0] / h
        q = np.where(flagged, np.inf, q)
        clipped = summarize(np.clip(q, -cap, cap))
        rows.append(LipschitzRow(float(h), clipped.mean, clipped.stderr, float(np.median(q)),
                                 float(flagged.mean())))
    return rows


def x1_exponential_representation(x1: float, x2_states: np.ndarray, h: float) -> np.ndarray:
    """``x1 * exp(sum_n X2(nh) h)`` along grid states ``x2_states`` (last axis is time)."""
    x2_states = np.asarray(x2_states, dtype=np.float64)
    return x1 * np.exp(np.sum(x2_states[..., :-1], axis=-1) * h)
