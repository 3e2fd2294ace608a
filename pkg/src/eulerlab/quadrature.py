"""Deterministic integration oracles.

Adaptive and composite Simpson for smooth one-dimensional integrals, and
Monte Carlo expectation oracles for bounded functionals of a Gaussian or of
a Brownian path.  The Monte Carlo oracles require a bound on the integrand
so that their CLT error bars are meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import DomainError, TimeGrid
from .rng import SeedSpec, brownian_batch, normals, stream_keys


class IntegrationError(ArithmeticError):
    """The integrand returned a non-finite value or broke its bound."""


class ToleranceNotMet(IntegrationError):
    """Adaptive refinement ran out of depth; ``result`` holds the best estimate."""

    def __init__(self, message, result):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int


@dataclass(frozen=True)
class McExpectation:
    mean: float
    stderr: float
    n: int


def _finite(y, x):
    y = float(y)
    if not math.isfinite(y):
        raise IntegrationError(f"integrand is not finite at x={x!r}: {y!r}")
    return y


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-12, max_depth: int = 60) -> QuadratureResult:
    """Adaptive Simpson quadrature with Richardson-corrected panels.

    A panel is accepted when ``|S_left + S_right - S| <= 15 * tol_panel``,
    where the tolerance is halved at every bisection.  The reported error
    estimate is the sum of ``|S_left + S_right - S| / 15`` over accepted
    panels.
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    if not a <= b:
        raise DomainError(f"need a <= b, got a={a!r}, b={b!r}")
    if a == b:
        return QuadratureResult(0.0, 0.0, 0)

    evals = 0

    def F(x):
        nonlocal evals
        evals += 1
        return _finite(f(x), x)

    fa, fm, fb = F(a), F(0.5 * (a + b)), F(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    # explicit stack: (a, b, fa, fm, fb, whole, tol, depth)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    err = 0.0
    failed = False
    while stack:
        lo, hi, flo, fmid, fhi, s, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = F(lm), F(rm)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        delta = left + right - s
        if abs(delta) <= 15.0 * eps or depth >= max_depth or not (lo < lm < mid < rm < hi):
            if abs(delta) > 15.0 * eps:
                failed = True
            total += left + right + delta / 15.0
            err += abs(delta) / 15.0
        else:
            # right first so the left half is summed first
            stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
            stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
    result = QuadratureResult(total, err, evals)
    if failed:
        raise ToleranceNotMet(f"tolerance {tol:g} not met on [{a}, {b}]", result)
    return result


def composite_simpson(f, a: float, b: float, panels: int) -> float:
    """Composite Simpson rule with ``panels`` panels; ``f`` must accept arrays."""
    if panels < 1:
        raise DomainError("need at least one panel")
    x = np.linspace(a, b, 2 * panels + 1)
    y = np.asarray(f(x), dtype=np.float64)
    if not np.all(np.isfinite(y)):
        raise IntegrationError("integrand is not finite on the Simpson nodes")
    h = (b - a) / (2 * panels)
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))


def _checked_values(values, bound):
    values = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise IntegrationError("integrand returned non-finite values")
    if np.any(np.abs(values) > bound):
        raise IntegrationError(f"integrand exceeded its bound {bound!r}")
    return values


def summarize(values) -> McExpectation:
    """Mean and CLT standard error of per-sample values (fixed reduction order)."""
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    mean = float(np.mean(values))
    if n < 2:
        return McExpectation(mean, float("nan"), n)
    var = float(np.sum((values - mean) ** 2)) / (n - 1)
    return McExpectation(mean, math.sqrt(var / n), n)


def gaussian_expectation_mc(g, bound: float, n: int, seed: SeedSpec, chunk: int = 1 << 18) -> McExpectation:
    """Monte Carlo estimate of ``E[g(Z)]`` for standard normal ``Z`` and ``|g| <= bound``.

    Draw ``k`` of the stream ``seed`` feeds sample ``k``; ``g`` is called on
    fixed-size chunks, so the result does not depend on how work is split.
    """
    if n < 2:
        raise DomainError("need at least two samples")
    key = seed.key
    out = np.empty(n)
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        z = normals(key, np.arange(start, stop, dtype=np.int64))
        out[start:stop] = _checked_values(g(z), bound)
    return summarize(out)


def brownian_functional_mc(f, bound: float, grid: TimeGrid, n: int, seed: SeedSpec,
                           chunk_elements: int = 1 << 22) -> McExpectation:
    """Monte Carlo estimate of ``E[f(W)]`` over Brownian paths on ``grid``.

    ``f`` maps an array of path values of shape ``(batch, steps + 1)`` to
    ``(batch,)``.  Path ``k`` is stream ``k`` of ``seed.master_seed``.
    """
    if n < 2:
        raise DomainError("need at least two samples")
    batch = max(1, chunk_elements // (grid.step_count + 1))
    out = np.empty(n)
    for start in range(0, n, batch):
        stop = min(n, start + batch)
        paths = brownian_batch(seed.master_seed, np.arange(start, stop), grid, [0])[:, 0, :]
        out[start:stop] = _checked_values(f(paths), bound)
    return summarize(out)


def mollifier_value(x):
    x = np.asarray(x, dtype=np.float64)
    inside = np.abs(x) < 1.0
    if not inside.any():
        return np.zeros(x.shape)
    safe = np.where(inside, 1.0 - x * x, 1.0)
    return np.where(inside, np.exp(-1.0 / safe), 0.0)


def _bump_right(s):
    s = np.asarray(s, dtype=np.float64)
    inside = s > 1.0
    if not inside.any():
        return np.zeros(s.shape)
    safe = np.where(inside, s * s - 1.0, 1.0)
    return np.where(inside, np.exp(-1.0 / safe), 0.0)


@lru_cache(maxsize=None)
def mollifier_integral(upper: float = 1.0, tol: float = 1e-12) -> float:
    """``int_0^upper exp(-1/(1-u^2)) du`` for ``upper`` in ``[0, 1]``."""
    upper = min(max(float(upper), 0.0), 1.0)
    return adaptive_simpson(lambda u: float(mollifier_value(u)), 0.0, upper, tol).value


@lru_cache(maxsize=None)
def right_bump_integral(upper: float = 2.0, tol: float = 1e-12) -> float:
    """``int_1^upper exp(-1/(s^2-1)) ds`` (zero for ``upper <= 1``)."""
    if upper <= 1.0:
        return 0.0
    return adaptive_simpson(lambda s: float(_bump_right(s)), 1.0, float(upper), tol).value
