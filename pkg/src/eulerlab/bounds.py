"""Closed-form lower bounds and checkers for the supporting inequalities.

Every evaluator validates its domain and raises :class:`DomainError` outside
it.  The ``*_suite`` functions run a checker over a family of admissible
instances and collect violations instead of stopping at the first one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import DomainError, floor_h
from .quadrature import SeedSpec, adaptive_simpson, gaussian_expectation_mc, mollifier_integral, mollifier_value

# largest step for which the slow-convergence lower bound is asserted
THEOREM_H_MAX = 1.0 / 22.0
# E[exp(-72 Z^2)] for standard normal Z
GAUSSIAN_TAIL_FACTOR = 1.0 / math.sqrt(145.0)


class PreconditionError(DomainError):
    """Sampled hypotheses of an inequality do not hold."""


def bound_theorem5(h: float) -> float:
    """``exp(-14 |ln h|^(2/3))``, the weak-error lower bound for the ex3 model at ``T = 2``."""
    if not 0.0 < h <= THEOREM_H_MAX:
        raise DomainError(f"h must lie in (0, 1/22], got {h!r}")
    return math.exp(-14.0 * abs(math.log(h)) ** (2.0 / 3.0))


def order0_reference(N: int, T: float) -> float:
    """Reference curve of convergence order 0 for ``N`` steps on ``[0, T]``."""
    if N < 2:
        raise DomainError(f"need N >= 2, got {N!r}")
    if not T > 0:
        raise DomainError(f"need T > 0, got {T!r}")
    ln = math.log(N)
    c = 1.0 / (2.0 * T)
    inner = ln - c * ln ** (2.0 / 3.0)
    return 1.0 / (15.0 * ln ** (1.0 / 3.0)) * math.exp(-c * inner ** (2.0 / 3.0))


def order_line(N: int, order: float) -> float:
    """``1 / (15 N^order)``: reference lines drawn next to the error curve."""
    return 1.0 / (15.0 * N ** order)


def lemma33_h_max(t: float, x: float) -> float:
    """Largest admissible ``h`` for the oscillatory lower bounds at ``(t, x)``."""
    if not t > 0:
        raise DomainError(f"need t > 0, got {t!r}")
    return 0.5 * math.pi * math.exp(-max(math.sqrt(t) + x, 0.0) ** 3)


def _lemma33_exponent(t, x, h):
    h_max = lemma33_h_max(t, x)
    if not 0.0 < h <= h_max:
        raise DomainError(f"h={h!r} outside (0, {h_max!r}] for t={t!r}, x={x!r}")
    return (abs(math.log(math.pi / (2.0 * h))) ** (2.0 / 3.0) + x * x) / t


def bound_lemma33_first(t: float, x: float, h: float) -> float:
    """Lower bound ``exp(-8/t [|ln(pi/2h)|^(2/3) + x^2])`` for ``1 - E[cos(h exp((x + W(t))^3))]``."""
    return math.exp(-8.0 * _lemma33_exponent(t, x, h))


def bound_lemma33_second(t: float, x: float, h: float, tail_factor: float | None = None) -> float:
    """Lower bound for ``int_0^t E[1_A (1 - cos(h exp((x + W(s))^3)))] ds``.

    ``tail_factor`` is ``E[1_A exp(-72 W(t)^2 / t)]``; the default is its
    value for ``A = R``.
    """
    if tail_factor is None:
        tail_factor = GAUSSIAN_TAIL_FACTOR
    if not 0.0 <= tail_factor <= 1.0:
        raise DomainError(f"tail factor must lie in [0, 1], got {tail_factor!r}")
    return t / 3.0 * tail_factor * math.exp(-72.0 * _lemma33_exponent(t, x, h))


def oscillatory_gap_mc(t: float, x: float, h: float, n: int, seed: SeedSpec):
    """Monte Carlo estimate of ``1 - E[cos(h exp((x + W(t))^3))]``.

    The integrand lies in ``[0, 2]``; the exponent is clipped where ``exp``
    would overflow, which only fixes an arbitrary phase.
    """
    sd = math.sqrt(t)

    def g(z):
        y = x + sd * z
        return 1.0 - np.cos(h * np.exp(np.minimum(y * y * y, 700.0)))

    return gaussian_expectation_mc(g, 2.0, n, seed)


# --- integral inequalities --------------------------------------------------

def _sample_grid(a, b, n=257):
    return np.linspace(a, b, n)


def check_lemma32(phi, dphi, d2phi, psi, dpsi, a: float, b: float, tol: float = 1e-12,
                  slack: float = 1e-12) -> float:
    """``int_a^b cos(phi) psi`` after checking the sign hypotheses on a sample grid.

    Needs ``exp(i phi(a)) = i``, ``phi' >= 0``, ``phi'' >= 0``, ``psi >= 0`` and
    ``psi' <= 0``; the integral is then non-positive.  Callables must accept
    arrays.
    """
    if not a < b:
        raise DomainError(f"need a < b, got {a!r}, {b!r}")
    pa = float(phi(a))
    if abs(math.cos(pa)) > 1e-9 or abs(math.sin(pa) - 1.0) > 1e-9:
        raise PreconditionError(f"phi(a)={pa!r} is not pi/2 modulo 2 pi")
    x = _sample_grid(a, b)
    for name, vals, sign in (("phi'", dphi(x), 1), ("phi''", d2phi(x), 1),
                             ("psi", psi(x), 1), ("psi'", dpsi(x), -1)):
        vals = np.broadcast_to(np.asarray(vals, dtype=np.float64), x.shape)
        if np.any(sign * vals < -slack):
            bad = x[np.argmax(sign * vals < -slack)]
            raise PreconditionError(f"{name} has the wrong sign at x={bad!r}")
    return adaptive_simpson(lambda s: math.cos(float(phi(s))) * float(psi(s)), a, b, tol).value


def check_lemma52(psi, dpsi, b: float, h: float, tol: float = 1e-13) -> tuple[float, float]:
    """Both sides of the left-endpoint quadrature bound for a function with non-increasing derivative.

    Returns ``(lhs, rhs)`` with ``lhs = int_0^b (psi(s) - psi(floor_h(s))) ds``.
    """
    if not b > 0:
        raise DomainError(f"need b > 0, got {b!r}")
    if not 0.0 < h <= b:
        raise DomainError(f"need h in (0, b], got h={h!r}, b={b!r}")
    d = np.asarray(dpsi(_sample_grid(0.0, b)), dtype=np.float64)
    if np.any(np.diff(d) > 1e-12 * max(1.0, float(np.max(np.abs(d))))):
        raise PreconditionError("psi' is not non-increasing on [0, b]")
    nb = floor_h(b, h).index
    fb = nb * h
    integral = adaptive_simpson(lambda s: float(psi(s)), 0.0, b, tol).value
    # staircase: full cells [kh, (k+1)h) for k < nb, then the partial cell [fb, b]
    k = np.arange(nb)
    stair = math.fsum(np.asarray(psi(k * h), dtype=np.float64) * h) + float(psi(fb)) * (b - fb)
    lhs = integral - stair
    rhs = 0.5 * (float(dpsi(0.0)) * h * h + (float(psi(fb - h)) - float(psi(0.0))) * h
                 + float(dpsi(fb)) * (b - fb) ** 2)
    return lhs, rhs


LEMMA53_H_MAX = 0.125


def mollifier_riemann_sum(h: float) -> float:
    """``int_0^inf 1_[0,1)(floor_h(s)) mollifier(floor_h(s)) ds``: whole cells ``k h < 1``, correctly rounded."""
    n = floor_h(1.0, h).index
    k = np.arange(n + 1)
    k = k[k * h < 1.0]
    return math.fsum(mollifier_value(k * h) * h)


def check_lemma53(h: float, constant: float | None = None) -> float:
    """Gap between the left Riemann sum of the mollifier and its integral over ``[0, 1]``.

    ``constant`` replaces the integral (fault injection); the gap lies in
    ``[h/20, 2h]`` for ``h <= 1/8``.
    """
    if not 0.0 < h <= LEMMA53_H_MAX:
        raise DomainError(f"h must lie in (0, 1/8], got {h!r}")
    if constant is None:
        constant = mollifier_integral(1.0)
    return mollifier_riemann_sum(h) - constant


# --- suites ------------------------------------------------------------------

@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.cases - len(self.failures)}/{self.cases} cases"


def lemma53_suite(k_range=range(3, 21), constant: float | None = None) -> SuiteResult:
    res = SuiteResult("mollifier Riemann gap in [h/20, 2h]")
    for k in k_range:
        h = 2.0 ** -k
        gap = check_lemma53(h, constant)
        res.cases += 1
        if not h / 20.0 <= gap <= 2.0 * h:
            res.failures.append({"h": h, "gap": gap})
    return res


def lemma32_family(rng: np.random.Generator):
    """Random admissible instance: ``phi = pi/2 + c1 x + c2 x^2``, ``psi = max(d0 - d1 x, 0)``.

    The interval stops at the kink of ``psi`` so that ``psi`` stays smooth.
    """
    c1, c2 = rng.uniform(0.0, 5.0, size=2)
    d0, d1 = rng.uniform(0.1, 2.0), rng.uniform(0.0, 2.0)
    b = rng.uniform(0.1, 6.0)
    if d1 > 0:
        b = min(b, d0 / d1)
    a = 0.0
    return dict(
        phi=lambda x: 0.5 * math.pi + c1 * x + c2 * x * x,
        dphi=lambda x: c1 + 2.0 * c2 * x,
        d2phi=lambda x: 2.0 * c2 + 0.0 * x,
        psi=lambda x: np.maximum(d0 - d1 * x, 0.0),
        dpsi=lambda x: np.where(d0 - d1 * np.asarray(x) > 0.0, -d1, 0.0),
        a=a, b=b, params=(c1, c2, d0, d1, b),
    )


def lemma32_suite(n_cases: int = 1000, seed: int = 0, tol: float = 1e-9) -> SuiteResult:
    res = SuiteResult("oscillatory integral sign")
    rng = np.random.default_rng(seed)
    for _ in range(n_cases):
        inst = lemma32_family(rng)
        params = inst.pop("params")
        val = check_lemma32(**inst)
        res.cases += 1
        if val > tol:
            res.failures.append({"params": params, "value": val})
    return res


def lemma52_family(rng: np.random.Generator):
    """Random function with non-increasing derivative on ``[0, b]`` and a step ``h <= b``."""
    kind = rng.integers(4)
    b = rng.uniform(0.2, 3.0)
    h = b / rng.integers(1, 40) * rng.uniform(0.5, 1.0)
    a1, a2 = rng.uniform(-2.0, 2.0), rng.uniform(0.0, 2.0)
    if kind == 0:  # concave quadratic
        psi = lambda s: a1 * s - a2 * s * s
        dpsi = lambda s: a1 - 2.0 * a2 * s
    elif kind == 1:  # square root
        eps = rng.uniform(0.01, 1.0)
        psi = lambda s: a2 * np.sqrt(s + eps)
        dpsi = lambda s: 0.5 * a2 / np.sqrt(s + eps)
    elif kind == 2:  # saturating exponential
        r = rng.uniform(0.1, 5.0)
        psi = lambda s: -a2 * np.exp(-r * s) + a1 * s
        dpsi = lambda s: a2 * r * np.exp(-r * s) + a1
    else:  # logarithm
        eps = rng.uniform(0.05, 1.0)
        psi = lambda s: a2 * np.log(s + eps)
        dpsi = lambda s: a2 / (s + eps)
    return dict(psi=psi, dpsi=dpsi, b=b, h=h, params=(int(kind), a1, a2, b, h))


def lemma52_suite(n_cases: int = 1000, seed: int = 0, tol: float = 1e-9) -> SuiteResult:
    res = SuiteResult("left-endpoint quadrature of concave functions")
    rng = np.random.default_rng(seed)
    for _ in range(n_cases):
        inst = lemma52_family(rng)
        params = inst.pop("params")
        lhs, rhs = check_lemma52(**inst)
        res.cases += 1
        if lhs > rhs + tol:
            res.failures.append({"params": params, "lhs": lhs, "rhs": rhs})
    return res


def lemma33_cases():
    """3 x 3 x 3 admissible ``(t, x, h)``: ``h`` is the largest admissible step times 1, 1e-2, 1e-4."""
    out = []
    for t in (0.5, 1.0, 2.0):
        for x in (-0.5, 0.0, 0.5):
            h_max = lemma33_h_max(t, x)
            for f in (1.0, 1e-2, 1e-4):
                out.append((t, x, h_max * f))
    return out


def lemma33_suite(n: int = 10**7, seed: int = 0, cases=None) -> SuiteResult:
    res = SuiteResult("oscillatory Gaussian lower bound")
    for i, (t, x, h) in enumerate(cases if cases is not None else lemma33_cases()):
        est = oscillatory_gap_mc(t, x, h, n, SeedSpec(seed, i))
        bound = bound_lemma33_first(t, x, h)
        res.cases += 1
        if est.mean < bound - 3.0 * est.stderr:
            res.failures.append({"t": t, "x": x, "h": h, "mc": est.mean, "stderr": est.stderr, "bound": bound})
    return res
