"""Pinned numerical constants, each computed two independent ways.

Integrals are evaluated by adaptive Simpson (tolerance 1e-12) and by
composite Simpson with 2**20 panels; closed forms are evaluated in double
precision and in 40-digit decimal arithmetic.  A disagreement above 1e-10
aborts generation.  The rendered file is deterministic byte for byte.
"""

from __future__ import annotations

import decimal
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .bounds import bound_theorem5, order0_reference
from .quadrature import _bump_right, adaptive_simpson, composite_simpson, mollifier_value

AGREEMENT = 1e-10
SIMPSON_TOL = 1e-12
SIMPSON_PANELS = 1 << 20
DEFAULT_PATH = "data/constants.txt"


class FixtureError(RuntimeError):
    """Two methods for the same constant disagree."""


@dataclass(frozen=True)
class Fixture:
    key: str
    value: float
    provenance: str


def fmt(x: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    return f"{x:.17g}"


def _dual_integral(key, f, a, b, what):
    adaptive = adaptive_simpson(lambda s: float(f(s)), a, b, SIMPSON_TOL)
    composite = composite_simpson(f, a, b, SIMPSON_PANELS)
    diff = abs(adaptive.value - composite)
    if diff > AGREEMENT:
        raise FixtureError(f"{key}: adaptive {adaptive.value!r} vs composite {composite!r}")
    prov = (f"{what}; adaptive Simpson tol={SIMPSON_TOL:g} ({adaptive.evaluations} evaluations) "
            f"vs composite Simpson {SIMPSON_PANELS} panels = {fmt(composite)}; |diff| = {diff:.3g}")
    return Fixture(key, adaptive.value, prov)


def _theorem_bound_decimal(h: decimal.Decimal, ctx) -> decimal.Decimal:
    ln = abs(ctx.ln(h))
    return ctx.exp(-14 * ctx.power(ln, decimal.Decimal(2) / 3))


def _order0_decimal(N: int, T: decimal.Decimal, ctx) -> decimal.Decimal:
    ln = ctx.ln(decimal.Decimal(N))
    c = 1 / (2 * T)
    inner = ln - c * ctx.power(ln, decimal.Decimal(2) / 3)
    third = decimal.Decimal(1) / 3
    return 1 / (15 * ctx.power(ln, third)) * ctx.exp(-c * ctx.power(inner, decimal.Decimal(2) / 3))


def _dual_closed_form(key, double_value, dec_value, what):
    diff = abs(decimal.Decimal(double_value) - dec_value)
    rel = float(diff / abs(dec_value))
    if rel > AGREEMENT:
        raise FixtureError(f"{key}: double {double_value!r} vs decimal {dec_value}")
    prov = f"{what}; double precision vs 40-digit decimal = {dec_value:.20e}; relative diff = {rel:.3g}"
    return Fixture(key, double_value, prov)


def compute_fixtures() -> list[Fixture]:
    ctx = decimal.Context(prec=40)
    out = [
        _dual_integral("mollifier_integral", mollifier_value, 0.0, 1.0,
                       "int_0^1 exp(-1/(1-u^2)) du"),
        _dual_integral("mollifier_integral_symmetric", mollifier_value, -1.0, 1.0,
                       "int_-1^1 exp(-1/(1-u^2)) du"),
        _dual_integral("ex3_x1_terminal", _bump_right, 1.0, 2.0,
                       "int_1^2 exp(-1/(s^2-1)) ds, first component of the ex3 solution at t=2"),
    ]
    h = decimal.Decimal(1) / 22
    out.append(_dual_closed_form("bound_thm5_h_1_22", bound_theorem5(1.0 / 22.0),
                                 _theorem_bound_decimal(h, ctx), "exp(-14 |ln h|^(2/3)) at h=1/22"))
    for k in (10, 16, 30):
        out.append(_dual_closed_form(f"bound_thm5_h_2^-{k}", bound_theorem5(2.0 ** -k),
                                     _theorem_bound_decimal(decimal.Decimal(2) ** -k, ctx),
                                     f"exp(-14 |ln h|^(2/3)) at h=2^-{k}"))
    for N in (2, 2 ** 16, 2 ** 30):
        out.append(_dual_closed_form(f"order0_ref_N_{N}_T_2", order0_reference(N, 2.0),
                                     _order0_decimal(N, decimal.Decimal(2), ctx),
                                     f"order-0 reference curve at N={N}, T=2"))
    out.append(_dual_closed_form("gaussian_tail_factor", 1.0 / math.sqrt(145.0),
                                 1 / ctx.sqrt(decimal.Decimal(145)), "E[exp(-72 Z^2)] = 145^(-1/2)"))
    return out


def render_fixtures(fixtures: list[Fixture]) -> str:
    lines = ["# eulerlab pinned constants, generated by `eulerlab fixtures`",
             "# format: key = value (17 significant digits); the comment above each key records how it was computed",
             ""]
    for fx in fixtures:
        lines.append(f"# {fx.provenance}")
        lines.append(f"{fx.key} = {fmt(fx.value)}")
    return "\n".join(lines) + "\n"


def write_fixtures(path) -> Path:
    path = Path(path)
    text = render_fixtures(compute_fixtures())
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write fixture file {path}: {exc}") from exc
    return path


def parse_fixtures(text: str) -> dict[str, float]:
    out = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        out[key.strip()] = float(value)
    return out


def load_fixtures(path=None) -> dict[str, float]:
    """Pinned constants from ``path``, or from the copy shipped with the package."""
    if path is None:
        text = resources.files("eulerlab").joinpath(DEFAULT_PATH).read_text()
    else:
        text = Path(path).read_text()
    return parse_fixtures(text)
