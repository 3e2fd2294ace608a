"""The SDE zoo: drift/diffusion coefficients and pathwise exact solutions.

Coefficients are vectorized over a leading batch axis: ``drift`` maps an
array of states of shape ``(batch, d)`` to ``(batch, d)`` and ``diffusion``
maps it to ``(batch, d, m)``.  Models with constant diffusion carry the
matrix in ``additive`` so the Euler engine can skip dead noise columns.

Exact solutions are accumulated along a Brownian path one grid cell at a
time (``begin`` / ``advance`` / ``value``), which lets the Monte Carlo layer
stream very fine paths without ever storing them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import DomainError, TimeGrid
from .quadrature import _bump_right, mollifier_integral, mollifier_value, right_bump_integral

# exp(x) overflows float64 just above 709; cos of anything beyond this is
# already an arbitrary phase
_EXP_CLIP = 700.0


def mollifier(x):
    """``1_{(-1,1)}(x) * exp(-1/(1-x^2))``, zero on and outside ``[-1, 1]``."""
    y = mollifier_value(x)
    return float(y) if np.ndim(y) == 0 else y


def cube_exp(x):
    x = np.asarray(x, dtype=np.float64)
    return np.exp(np.minimum(x * x * x, _EXP_CLIP))


class PathwiseSolution:
    """Exact solution evaluated from a Brownian path.

    Subclasses accumulate over cells ``[t, t + h]`` of the path grid.
    ``state`` is whatever ``begin`` returns; ``w_*`` arrays have shape
    ``(batch, m)``.
    """

    def begin(self, x0: np.ndarray, batch: int):
        raise NotImplementedError

    def advance(self, state, t: float, h: float, w_left: np.ndarray, w_right: np.ndarray):
        pass

    def value(self, state, t: float, w: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class TrapezoidSolution(PathwiseSolution):
    """``X(t) = x0 + int_0^t g(x0, W(s)) ds + B W(t)`` with the trapezoid rule for the integral.

    ``integrand(x0, w)`` returns ``(batch, d)``; ``None`` means no integral term.
    """

    def __init__(self, integrand, B):
        self.integrand = integrand
        self.B = np.asarray(B, dtype=np.float64)

    def begin(self, x0, batch):
        acc = np.zeros((batch, self.B.shape[0]))
        left = None
        if self.integrand is not None:
            left = self.integrand(x0, np.zeros((batch, self.B.shape[1])))
        return {"x0": np.asarray(x0, dtype=np.float64), "acc": acc, "left": left}

    def advance(self, state, t, h, w_left, w_right):
        if self.integrand is None:
            return
        right = self.integrand(state["x0"], w_right)
        state["acc"] += 0.5 * h * (state["left"] + right)
        state["left"] = right

    def value(self, state, t, w):
        out = state["x0"] + state["acc"]
        for j in range(self.B.shape[1]):
            if np.any(self.B[:, j]):
                out = out + self.B[:, j] * w[:, j:j + 1]
        return out


@dataclass(frozen=True, eq=False)
class SdeModel:
    name: str
    d: int
    m: int
    drift: Callable[[np.ndarray], np.ndarray]
    diffusion: Callable[[np.ndarray], np.ndarray]
    additive: np.ndarray | None = None
    exact: PathwiseSolution | None = None
    taming_required: bool = False
    description: str = ""
    params: dict = field(default_factory=dict)

    def active_noise(self) -> list[int]:
        """Noise components that can move the state."""
        if self.additive is None:
            return list(range(self.m))
        return [j for j in range(self.m) if np.any(self.additive[:, j] != 0.0)]

    def solve_exact(self, x0, paths, t: float | None = None) -> np.ndarray:
        """Exact solution at time ``t`` driven by one path per noise component.

        Components without a path are taken to be identically zero.  For
        batches of paths use :func:`solve_exact_batch`.
        """
        if self.exact is None:
            raise NotImplementedError(f"model {self.name!r} has no exact solution")
        grid = paths[0].grid
        w = np.zeros((1, self.m, grid.step_count + 1))
        for p in paths:
            w[0, p.component] = p.values
        return solve_exact_batch(self, x0, w, grid, t)[0]


def solve_exact_batch(model: SdeModel, x0, w: np.ndarray, grid: TimeGrid, t: float | None = None) -> np.ndarray:
    """Exact solution for a batch of paths ``w`` of shape ``(batch, m, steps + 1)``."""
    if model.exact is None:
        raise NotImplementedError(f"model {model.name!r} has no exact solution")
    t = grid.horizon if t is None else t
    n_end = grid.index_of(t)
    x0 = np.asarray(x0, dtype=np.float64)
    state = model.exact.begin(x0, w.shape[0])
    h = grid.h
    for i in range(n_end):
        model.exact.advance(state, i * h, h, w[:, :, i], w[:, :, i + 1])
    return model.exact.value(state, n_end * h, w[:, :, n_end])


def _additive_diffusion(B):
    B = np.asarray(B, dtype=np.float64)

    def diffusion(x):
        return np.broadcast_to(B, (x.shape[0],) + B.shape)

    return diffusion


# --- SDE with linear multiplicative noise ------------------------------------

def model_bsp1() -> SdeModel:
    """``dX1 = X1 X2 dt``, ``dX2 = -X1^2 dt + X2 dW``.

    The drift is superlinear, so plain Euler may explode; no exact solution
    is known, but ``X1(t) = x1 * exp(int_0^t X2(s) ds)`` holds pathwise.
    """

    def drift(x):
        out = np.empty_like(x)
        out[:, 0] = x[:, 0] * x[:, 1]
        out[:, 1] = -x[:, 0] * x[:, 0]
        return out

    def diffusion(x):
        out = np.zeros(x.shape + (1,))
        out[:, 1, 0] = x[:, 1]
        return out

    return SdeModel("bsp1", 2, 1, drift, diffusion, taming_required=True,
                    description="X1' = X1 X2, dX2 = -X1^2 dt + X2 dW")


# --- degenerate additive noise ----------------------------------------------

_SQRT2 = math.sqrt(2.0)


def model_ex2b() -> SdeModel:
    """``dX1 = cos(X3 exp(X2^3)) dt``, ``dX2 = sqrt(2) dW``, ``dX3 = 0``."""
    B = np.array([[0.0], [_SQRT2], [0.0]])

    def drift(x):
        out = np.zeros_like(x)
        out[:, 0] = np.cos(x[:, 2] * cube_exp(x[:, 1]))
        return out

    def integrand(x0, w):
        out = np.zeros((w.shape[0], 3))
        out[:, 0] = np.cos(x0[2] * cube_exp(x0[1] + _SQRT2 * w[:, 0]))
        return out

    return SdeModel("ex2b", 3, 1, drift, _additive_diffusion(B), additive=B,
                    exact=TrapezoidSolution(integrand, B),
                    description="dX1 = cos(X3 exp(X2^3)) dt, dX2 = sqrt(2) dW")


@dataclass(frozen=True)
class SeriesDriftSpec:
    """Truncation of ``sum_n sum_{m in Z_n} 4^-(n+|m|) cos((x3 - m/2^n) exp(x2^3))``.

    ``Z_0`` is all integers and ``Z_n`` (``n >= 1``) the odd integers; the
    truncation keeps ``n <= n_max`` and ``|m| <= m_max``.
    """

    n_max: int = 20
    m_max: int = 20
    tail_bound: float = field(init=False)

    def __post_init__(self):
        if self.n_max < 0 or self.m_max < 0:
            raise DomainError("truncation limits must be nonnegative")
        tail = series_weight_tail(self.n_max, self.m_max)
        if tail > 1e-12:
            raise DomainError(f"truncation ({self.n_max}, {self.m_max}) leaves tail {tail:.3g} > 1e-12")
        object.__setattr__(self, "tail_bound", tail)

    def terms(self) -> tuple[np.ndarray, np.ndarray]:
        """Weights ``4^-(n+|m|)`` and shifts ``m / 2^n`` of the kept terms."""
        weights, shifts = [], []
        for n in range(self.n_max + 1):
            for m in range(-self.m_max, self.m_max + 1):
                if n > 0 and m % 2 == 0:
                    continue
                weights.append(4.0 ** -(n + abs(m)))
                shifts.append(m / 2.0**n)
        return np.array(weights), np.array(shifts)


def series_weight_total() -> float:
    """``sum_n sum_{m in Z_n} 4^-(n+|m|) = 5/3 + (1/3)(8/15) = 83/45``."""
    return 83.0 / 45.0


def series_weight_tail(n_max: int, m_max: int) -> float:
    """Total weight of the dropped terms, summed in closed form."""
    q = 0.25
    first_odd = 2 * ((m_max + 1) // 2) + 1  # smallest odd m beyond m_max
    odd_all = 2.0 * q / (1.0 - q * q)
    s_n = q * (1.0 - q**n_max) / (1.0 - q)
    return (2.0 * q ** (m_max + 1) / (1.0 - q)
            + s_n * 2.0 * q**first_odd / (1.0 - q * q)
            + q ** (n_max + 1) / (1.0 - q) * odd_all)


def series_weight_truncated(n_max: int, m_max: int) -> float:
    q = 0.25
    # n = 0: all m with |m| <= m_max
    s0 = 1.0 + 2.0 * q * (1.0 - q**m_max) / (1.0 - q)
    # n >= 1: odd m with |m| <= m_max
    odd = (m_max + 1) // 2
    s_odd = 2.0 * q * (1.0 - q ** (2 * odd)) / (1.0 - q * q)
    s_n = q * (1.0 - q**n_max) / (1.0 - q)
    return s0 + s_n * s_odd


def series_drift(spec: SeriesDriftSpec):
    weights, shifts = spec.terms()
    order = np.argsort(weights, kind="stable")  # small terms first
    weights, shifts = weights[order], shifts[order]

    def mu1(x2, x3):
        e = cube_exp(x2)[:, None]
        return np.sum(weights * np.cos((x3[:, None] - shifts) * e), axis=1)

    return mu1


def model_series3(spec: SeriesDriftSpec | None = None) -> SdeModel:
    """Additive-noise model whose drift is the series of shifted oscillators.

    ``dX1 = mu1(X2, X3) dt``, ``dX2 = dW``, ``dX3 = 0``; the drift is
    bounded by 83/45 < 2 for any truncation.
    """
    spec = SeriesDriftSpec() if spec is None else spec
    mu1 = series_drift(spec)
    B = np.array([[0.0], [1.0], [0.0]])

    def drift(x):
        out = np.zeros_like(x)
        out[:, 0] = mu1(x[:, 1], x[:, 2])
        return out

    def integrand(x0, w):
        out = np.zeros((w.shape[0], 3))
        out[:, 0] = mu1(x0[1] + w[:, 0], np.full(w.shape[0], x0[2]))
        return out

    return SdeModel("series3", 3, 1, drift, _additive_diffusion(B), additive=B,
                    exact=TrapezoidSolution(integrand, B),
                    description=f"series drift truncated at n<={spec.n_max}, |m|<={spec.m_max}",
                    params={"series": spec})


# --- the slow-convergence counterexample -------------------------------------

class Ex3Solution(PathwiseSolution):
    """Exact solution of the four-dimensional model started at the origin.

    ``X4(t) = t``, ``X3(t) = int_0^min(t,1) mollifier``, ``X2 = W2`` and
    ``X1(t) = int_1^t exp(-1/(s^2-1)) ds``: once ``X4 > 1`` the third
    component has reached the mollifier integral and the cosine is 1.
    """

    def begin(self, x0, batch):
        if np.any(np.asarray(x0) != 0.0):
            raise DomainError("the exact solution of ex3 is only available for x0 = 0")
        return batch

    def value(self, state, t, w):
        out = np.zeros((state, 4))
        out[:, 0] = right_bump_integral(t)
        out[:, 1] = w[:, 1]
        out[:, 2] = mollifier_integral(min(t, 1.0))
        out[:, 3] = t
        return out


def model_ex3() -> SdeModel:
    """Four-dimensional model with smooth bounded coefficients for which
    Euler-Maruyama converges slower than any power of the step size."""
    C = mollifier_integral(1.0)
    B = np.zeros((4, 4))
    B[1, 1] = 1.0

    def drift(x):
        out = np.zeros_like(x)
        x4 = x[:, 3]
        out[:, 2] = mollifier_value(x4)
        out[:, 3] = 1.0
        right = x4 > 1.0
        if np.any(right):
            out[:, 0] = _bump_right(x4) * np.cos((x[:, 2] - C) * cube_exp(x[:, 1]))
        return out

    return SdeModel("ex3", 4, 4, drift, _additive_diffusion(B), additive=B,
                    exact=Ex3Solution(),
                    description="slow-convergence counterexample, X(0) = 0",
                    params={"kernel": "ex3"})


# --- generic helpers --------------------------------------------------------

def drift_free_model(B, name: str = "drift_free") -> SdeModel:
    """``dX = B dW``; exact solution ``x0 + B W(t)``."""
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    return SdeModel(name, B.shape[0], B.shape[1], lambda x: np.zeros_like(x),
                    _additive_diffusion(B), additive=B, exact=TrapezoidSolution(None, B))


def linear_model(A, B=None, name: str = "linear") -> SdeModel:
    """``dX = A X dt + B dW`` (no exact solution attached)."""
    A = np.asarray(A, dtype=np.float64)
    d = A.shape[0]
    B = np.zeros((d, 1)) if B is None else np.atleast_2d(np.asarray(B, dtype=np.float64))
    return SdeModel(name, d, B.shape[1], lambda x: x @ A.T, _additive_diffusion(B), additive=B)


def bump_test_function(c: float):
    """Compactly supported smooth test function ``x1 * psi(x1) * prod_k psi(x_k)``.

    ``psi`` equals 1 on ``[-c, c]`` and vanishes outside ``[-c-1, c+1]``; it is
    the standard ``f(s)/(f(s)+f(1-s))`` smooth step with ``f(s) = exp(-1/s)``.
    """
    if not c > 0:
        raise DomainError(f"plateau half-width must be positive, got {c!r}")

    def psi(x):
        return _smooth_step(c + 1.0 - np.abs(np.asarray(x, dtype=np.float64)))

    def phi(x):
        x = np.asarray(x, dtype=np.float64)
        out = x[..., 0] * psi(x[..., 0])
        for k in range(1, x.shape[-1]):
            out = out * psi(x[..., k])
        return out

    phi.psi = psi
    return phi


def _smooth_step(s):
    def f(u):
        pos = u > 0
        return np.where(pos, np.exp(-1.0 / np.where(pos, u, 1.0)), 0.0)

    a, b = f(s), f(1.0 - s)
    return a / (a + b)


MODELS = {
    "bsp1": model_bsp1,
    "ex2b": model_ex2b,
    "series3": model_series3,
    "ex3": model_ex3,
}


def get_model(name: str) -> SdeModel:
    try:
        return MODELS[name]()
    except KeyError:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None
