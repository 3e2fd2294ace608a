"""Weak and strong error curves of the Euler scheme under common-path coupling."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bounds import THEOREM_H_MAX, bound_theorem5, order0_reference
from .euler import coupled_terminal_values
from .grid import DomainError, TimeGrid
from .models import SdeModel


@dataclass(frozen=True)
class ErrorRow:
    N: int
    h: float
    weak_error: float
    weak_stderr: float
    strong_error: float
    strong_stderr: float
    blown_up_fraction: float = 0.0

    @property
    def bound_thm5(self) -> float:
        """Slow-convergence lower bound at this step, NaN where it is not asserted."""
        return bound_theorem5(self.h) if self.h <= THEOREM_H_MAX else math.nan

    def order0_ref(self, T: float) -> float:
        return order0_reference(self.N, T) if self.N >= 2 else math.nan


@dataclass(frozen=True)
class ErrorCurve:
    model: str
    T: float
    n_samples: int
    seed: int
    rows: tuple[ErrorRow, ...] = field(default_factory=tuple)

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])


def _chunks(n: int, size: int):
    return [(s, min(n, s + size)) for s in range(0, n, size)]


def map_chunks(fn, n: int, chunk_size: int, n_jobs: int = 1) -> list:
    """``[fn(start, stop) for each chunk]`` in chunk order, optionally on threads.

    Chunk boundaries depend only on ``n`` and ``chunk_size``, never on
    ``n_jobs``, and results are returned in order, so the outcome does not
    depend on the thread count.
    """
    spans = _chunks(n, chunk_size)
    if n_jobs <= 1 or len(spans) == 1:
        return [fn(a, b) for a, b in spans]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(lambda ab: fn(*ab), spans))


def error_row(N: int, h: float, diff: np.ndarray, blown: np.ndarray) -> ErrorRow:
    """Error statistics from per-path differences ``X(T) - Y(T)`` of shape ``(n, d)``.

    Paths flagged as blown up are left out.  The weak standard error is
    ``sqrt(sum_j var_j / n)``, the root mean square of the estimated mean
    difference vector, which bounds the spread of its norm.
    """
    n_all = diff.shape[0]
    good = diff[~blown]
    n = good.shape[0]
    frac = (n_all - n) / n_all if n_all else math.nan
    if n == 0:
        return ErrorRow(N, h, math.nan, math.nan, math.nan, math.nan, frac)
    mean = good.sum(axis=0) / n
    norms = np.sqrt(np.sum(good * good, axis=1))
    strong = float(norms.sum() / n)
    if n > 1:
        var = np.sum((good - mean) ** 2, axis=0) / (n - 1)
        weak_se = math.sqrt(float(var.sum()) / n)
        strong_se = math.sqrt(float(np.sum((norms - strong) ** 2)) / (n - 1) / n)
    else:
        weak_se = strong_se = math.nan
    return ErrorRow(N, h, float(np.sqrt(np.sum(mean * mean))), weak_se, strong, strong_se, frac)


def weak_strong_errors(model: SdeModel, T: float, levels: Sequence[int], n_samples: int, seed: int = 0,
                       x0=None, fine_level: int | None = None, scheme: str = "plain", n_jobs: int = 1,
                       chunk_size: int = 8192, engine: str = "auto",
                       blow_up_threshold: float = 1e10) -> ErrorCurve:
    """Weak and strong errors of the Euler scheme at time ``T`` on each level.

    Path ``k`` is stream ``k`` of ``seed``; the exact solution and every
    level are driven by that one path, generated on the finest level.
    """
    if model.exact is None:
        raise NotImplementedError(f"model {model.name!r} has no exact solution")
    if n_samples < 1:
        raise DomainError("need at least one sample")
    levels = sorted({int(k) for k in levels})
    x0 = np.zeros(model.d) if x0 is None else np.asarray(x0, dtype=np.float64)

    def run(a, b):
        ex, ys, blow = coupled_terminal_values(model, x0, T, levels, seed, np.arange(a, b), scheme,
                                               blow_up_threshold, fine_level, engine=engine)
        return ex[None] - ys, blow >= 0

    parts = map_chunks(run, n_samples, chunk_size, n_jobs)
    diff = np.concatenate([p[0] for p in parts], axis=1)
    blown = np.concatenate([p[1] for p in parts], axis=1)
    rows = []
    for L, k in enumerate(levels):
        g = TimeGrid(T, k)
        rows.append(error_row(g.step_count, g.h, diff[L], blown[L]))
    return ErrorCurve(model.name, float(T), int(n_samples), int(seed), tuple(rows))


def theorem_bound_violations(curve: ErrorCurve, sigmas: float = 3.0) -> list[ErrorRow]:
    """Rows with ``h <= 1/22`` whose weak error plus ``sigmas`` standard errors is below the bound."""
    return [r for r in curve if r.h <= THEOREM_H_MAX
            and r.weak_error + sigmas * r.weak_stderr < bound_theorem5(r.h)]


def polynomial_ratio_drops(curve: ErrorCurve, alpha: float = 0.05, k_window=(8, 16),
                           sigmas: float = 3.0) -> list[tuple[int, float, float, float]]:
    """Places where ``weak_error * N^alpha`` decreases by more than ``sigmas`` standard errors.

    Consecutive levels inside ``k_window`` are compared; the standard error of
    the difference combines both rows in quadrature.  Returns
    ``(N, ratio_before, ratio_after, allowed_drop)`` for each violation, so an
    empty list means the error decays no faster than ``N^-alpha``.
    """
    lo, hi = k_window
    rows = [r for r in curve if 2 ** lo <= r.N <= 2 ** hi]
    out = []
    for a, b in zip(rows, rows[1:]):
        ra, rb = a.weak_error * a.N ** alpha, b.weak_error * b.N ** alpha
        se = math.hypot(a.weak_stderr * a.N ** alpha, b.weak_stderr * b.N ** alpha)
        if rb < ra - sigmas * se:
            out.append((b.N, ra, rb, sigmas * se))
    return out
