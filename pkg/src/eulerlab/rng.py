"""Counter-based Gaussian streams and Brownian paths.

Every variate is a pure function of ``(master_seed, stream_id, counter)``:
the stream key is derived by SplitMix64 mixing, and draw ``c`` of a stream
is ``mix64(key + (c + 1) * GOLDEN)``.  No generator state is carried between
draws, so any partition of the work over paths, chunks or threads yields
bit-identical samples.

The top 52 bits ``k`` become the uniform ``(k + 1/2) 2^-52``.  Every such
value and its mirror ``1 - u`` are exact doubles, so the uniforms stay
strictly inside (0, 1) and symmetric.  The uniform is mapped to a normal by
Wichura's AS241 rational approximation of the quantile function (relative
accuracy about 1e-16).  Each draw consumes exactly one 64-bit word, so
streams stay aligned whatever the values drawn.

Brownian increments of noise component ``j`` at fine step ``i`` use counter
``(j << 40) | i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .grid import DomainError, TimeGrid, subsample_indices

_U64 = np.uint64
_MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
COMPONENT_SHIFT = 40


@njit(cache=True, inline="always")
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _to_uniform(z):
    return (float(z >> np.uint64(12)) + 0.5) * 2.220446049250313e-16


@njit(cache=True, inline="always")
def _ppnd16_central(q):
    r = 0.180625 - q * q
    num = (((((((2509.0809287301226727 * r + 33430.575583588128105) * r
                + 67265.770927008700853) * r + 45921.953931549871457) * r
              + 13731.693765509461125) * r + 1971.5909503065514427) * r
            + 133.14166789178437745) * r + 3.387132872796366608)
    den = (((((((5226.495278852545561 * r + 28729.085735721942674) * r
                + 39307.89580009271061) * r + 21213.794301586595867) * r
              + 5394.1960214247511077) * r + 687.1870074920579083) * r
            + 42.313330701600911252) * r + 1.0)
    return q * num / den


@njit(cache=True, nogil=True)
def _ppnd16_tail(p, q):
    r = p if q < 0.0 else 1.0 - p
    r = math.sqrt(-math.log(r))
    if r <= 5.0:
        r -= 1.6
        num = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r
                    + 0.24178072517745061177) * r + 1.27045825245236838258) * r
                  + 3.64784832476320460504) * r + 5.7694972214606914055) * r
                + 4.6303378461565452959) * r + 1.42343711074968357734)
        den = (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r
                    + 0.0151986665636164571966) * r + 0.14810397642748007459) * r
                  + 0.68976733498510000455) * r + 1.6763848301838038494) * r
                + 2.05319162663775882187) * r + 1.0)
    else:
        r -= 5.0
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
                    + 0.0012426609473880784386) * r + 0.026532189526576123093) * r
                  + 0.29656057182850489123) * r + 1.7848265399172913358) * r
                + 5.4637849111641143699) * r + 6.6579046435011037772)
        den = (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r
                    + 1.8463183175100546818e-5) * r + 7.868691311456132591e-4) * r
                  + 0.0148753612908506148525) * r + 0.13692988092273580531) * r
                + 0.59983220655588793769) * r + 1.0)
    val = num / den
    return -val if q < 0.0 else val


@njit(cache=True, nogil=True)
def _ppnd16_inplace(u, out):
    """Wichura (1988) AS241 standard normal quantile of ``u`` into ``out``.

    The central branch runs branch-free over the whole buffer so it can be
    vectorized; the tails are patched in a second pass.
    """
    for i in range(u.size):
        out[i] = _ppnd16_central(u[i] - 0.5)
    for i in range(u.size):
        q = u[i] - 0.5
        if abs(q) > 0.425:
            out[i] = _ppnd16_tail(u[i], q)


@njit(cache=True)
def _normals_flat(keys, counters, out):
    u = np.empty(out.size)
    for i in range(out.size):
        u[i] = _to_uniform(_mix(keys[i] + (counters[i] + np.uint64(1)) * np.uint64(0x9E3779B97F4A7C15)))
    _ppnd16_inplace(u, out)


@njit(cache=True, nogil=True)
def row_increments(key, first_counter, scale, u, out):
    """``out[i] = scale * N(key, first_counter + i)``; ``u`` is scratch of the same length."""
    for i in range(out.size):
        c = first_counter + np.uint64(i) + np.uint64(1)
        u[i] = _to_uniform(_mix(key + c * np.uint64(0x9E3779B97F4A7C15)))
    _ppnd16_inplace(u, out)
    for i in range(out.size):
        out[i] *= scale


@njit(cache=True, nogil=True)
def _fill_increments(keys, first_counter, scale, out):
    n_keys, count = out.shape
    u = np.empty(count)
    z = np.empty(count)
    for b in range(n_keys):
        row_increments(keys[b], first_counter, scale, u, z)
        out[b, :] = z


@njit(cache=True, nogil=True)
def _fill_path_block(keys, first_counter, scale, w_start, out):
    # out[b, i] = w_start[b] + sum of increments first_counter .. first_counter + i
    n_keys, count = out.shape
    u = np.empty(count)
    z = np.empty(count)
    for b in range(n_keys):
        row_increments(keys[b], first_counter, scale, u, z)
        w = w_start[b]
        for i in range(count):
            w = w + z[i]
            out[b, i] = w


@njit(cache=True)
def _mix_array(z, out):
    for i in range(z.size):
        out[i] = _mix(z[i])


def mix64(z) -> np.ndarray:
    """SplitMix64 finalizer, elementwise on a uint64 array."""
    z = np.ascontiguousarray(z, dtype=_U64)
    out = np.empty_like(z)
    _mix_array(z.ravel(), out.ravel())
    return out


def _as_u64(x) -> np.ndarray:
    x = np.asarray(x)
    return x if x.dtype == _U64 else x.astype(np.int64).astype(_U64)


def stream_keys(master_seed: int, stream_ids) -> np.ndarray:
    """Per-stream 64-bit keys for one master seed."""
    master = np.array([(int(master_seed) + GOLDEN) & _MASK64], dtype=_U64)
    streams = _as_u64(np.atleast_1d(stream_ids))
    with np.errstate(over="ignore"):
        b = mix64(streams + _U64((2 * GOLDEN) & _MASK64))
    return mix64(mix64(master) ^ b)


def raw_bits(keys, counters) -> np.ndarray:
    """The 64-bit word behind each (key, counter) draw, broadcasting."""
    keys, counters = np.broadcast_arrays(np.asarray(keys, dtype=_U64), _as_u64(counters))
    return mix64(keys + (counters + _U64(1)) * _U64(GOLDEN))


def uniform_from_bits(bits) -> np.ndarray:
    """Top 52 bits ``k`` mapped to ``(k + 1/2) 2^-52``, strictly inside (0, 1)."""
    return ((np.asarray(bits, dtype=_U64) >> _U64(12)).astype(np.int64) + 0.5) * 2.0**-52


def gaussian_from_uniform(u):
    """Standard normal quantile function (AS241), elementwise."""
    u = np.asarray(u, dtype=np.float64)
    if np.any((u <= 0.0) | (u >= 1.0) | np.isnan(u)):
        raise DomainError("uniforms must lie strictly inside (0, 1)")
    flat = np.ascontiguousarray(u).ravel()
    out = np.empty_like(flat)
    _ppnd16_inplace(flat, out)
    return out.reshape(u.shape) if u.ndim else float(out[0])


def normals(keys, counters) -> np.ndarray:
    """Standard normal draw for each (key, counter) pair, broadcasting."""
    keys, counters = np.broadcast_arrays(np.asarray(keys, dtype=_U64), _as_u64(counters))
    out = np.empty(keys.shape)
    _normals_flat(np.ascontiguousarray(keys).ravel(), np.ascontiguousarray(counters).ravel(), out.reshape(-1))
    return out


def fill_increments(keys: np.ndarray, component: int, start: int, out: np.ndarray, h: float) -> np.ndarray:
    """Brownian increments ``sqrt(h) * Z`` of steps ``start ..`` into ``out`` of shape ``(len(keys), count)``."""
    first = _U64((int(component) << COMPONENT_SHIFT) + int(start))
    _fill_increments(np.ascontiguousarray(keys, dtype=_U64), first, math.sqrt(h), out)
    return out


def fill_path_block(keys: np.ndarray, component: int, start: int, w_start: np.ndarray, out: np.ndarray,
                    h: float) -> np.ndarray:
    """Path values ``W((start + 1) h), W((start + 2) h), ...`` continuing from ``w_start = W(start h)``.

    The running sum adds increments in the same order as
    :func:`brownian_batch`, so the values agree bit for bit.
    """
    first = _U64((int(component) << COMPONENT_SHIFT) + int(start))
    _fill_path_block(np.ascontiguousarray(keys, dtype=_U64), first, math.sqrt(h),
                     np.ascontiguousarray(w_start, dtype=np.float64), out)
    return out


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int
    stream_id: int = 0

    @property
    def key(self) -> np.uint64:
        return stream_keys(self.master_seed, [self.stream_id])[0]

    def normals(self, counters) -> np.ndarray:
        return normals(self.key, counters)

    def stream(self, stream_id: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, stream_id)


def gaussian(seed: SeedSpec, counter: int = 0) -> float:
    """Draw number ``counter`` of the stream ``seed`` as a standard normal."""
    return float(seed.normals(np.array([counter]))[0])


@dataclass(frozen=True, eq=False)
class BrownianPath:
    """One Brownian component sampled on ``grid``; ``values[i] = W(i*h)``."""

    grid: TimeGrid
    values: np.ndarray
    component: int = 0

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.shape != (self.grid.step_count + 1,):
            raise DomainError(
                f"expected {self.grid.step_count + 1} values, got shape {values.shape}"
            )
        if values[0] != 0.0:
            raise DomainError("Brownian path must start at 0")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    def at(self, t: float) -> float:
        return float(self.values[self.grid.index_of(t)])


def brownian_batch(master_seed: int, stream_ids, grid: TimeGrid, components) -> np.ndarray:
    """Paths of many streams as an array of shape ``(n_streams, n_components, steps + 1)``."""
    keys = stream_keys(master_seed, stream_ids)
    components = list(components)
    out = np.zeros((len(keys), len(components), grid.step_count + 1))
    incr = np.empty((len(keys), grid.step_count))
    for c, j in enumerate(components):
        fill_increments(keys, j, 0, incr, grid.h)
        np.cumsum(incr, axis=1, out=out[:, c, 1:])
    return out


def sample_path(seed: SeedSpec, grid: TimeGrid, component: int = 0) -> BrownianPath:
    """Brownian path of stream ``seed`` for one noise component."""
    w = brownian_batch(seed.master_seed, [seed.stream_id], grid, [component])
    return BrownianPath(grid, w[0, 0], component)


def sample_paths(seed: SeedSpec, grid: TimeGrid, components) -> list[BrownianPath]:
    return [sample_path(seed, grid, j) for j in components]


def subsample(path: BrownianPath, coarse: TimeGrid) -> BrownianPath:
    """Restriction of ``path`` to the points of a coarser grid."""
    idx = subsample_indices(path.grid, coarse)
    return BrownianPath(coarse, path.values[idx], path.component)
