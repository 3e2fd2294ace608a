"""Dyadic time grids and the floor-to-grid operator.

Grid points are addressed by integer index; real times are derived as
``index * h`` and never used as the primary coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain on which an operation is defined."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on ``[0, horizon]`` with ``2**level`` steps."""

    horizon: float
    level: int

    def __post_init__(self):
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise DomainError(f"horizon must be positive and finite, got {self.horizon!r}")
        if int(self.level) != self.level or self.level < 0:
            raise DomainError(f"level must be a nonnegative integer, got {self.level!r}")
        object.__setattr__(self, "level", int(self.level))

    @property
    def h(self) -> float:
        return math.ldexp(self.horizon, -self.level)

    @property
    def step_count(self) -> int:
        return 1 << self.level

    def time(self, index):
        return index * self.h

    def times(self) -> np.ndarray:
        return np.arange(self.step_count + 1) * self.h

    def index_of(self, t: float) -> int:
        """Index of grid point ``t``; raises if ``t`` is not on the grid."""
        n = floor_h(t, self).index
        if n * self.h != t:
            raise DomainError(f"t={t!r} is not a grid point of {self}")
        return n


@dataclass(frozen=True)
class FloorIndex:
    grid: TimeGrid
    index: int

    @property
    def time(self) -> float:
        return self.index * self.grid.h


def floor_h(t: float, grid) -> FloorIndex:
    """Largest ``n`` with ``n*h <= t`` on the infinite grid ``{0, h, 2h, ...}``.

    ``grid`` is a :class:`TimeGrid` or a bare positive step size.
    """
    if not isinstance(grid, TimeGrid):
        grid = TimeGrid(float(grid), 0)
    h = grid.h
    if not t >= 0:
        raise DomainError(f"floor_h needs t >= 0, got {t!r}")
    n = int(math.floor(t / h))
    # t/h may round across an integer in either direction
    while n > 0 and n * h > t:
        n -= 1
    while (n + 1) * h <= t:
        n += 1
    return FloorIndex(grid, n)


def subsample_indices(fine: TimeGrid, coarse: TimeGrid) -> np.ndarray:
    """Fine-grid index of every coarse grid point: ``i -> i * 2**(K_fine - K_coarse)``."""
    if fine.horizon != coarse.horizon:
        raise DomainError(
            f"horizons differ: fine {fine.horizon!r} vs coarse {coarse.horizon!r}"
        )
    if coarse.level > fine.level:
        raise DomainError(
            f"coarse level {coarse.level} is finer than fine level {fine.level}"
        )
    ratio = 1 << (fine.level - coarse.level)
    return np.arange(coarse.step_count + 1, dtype=np.int64) * ratio
