"""CSV and SVG writers and the flat ``key = value`` config format."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable, Sequence

from .bounds import order_line
from .estimation import ErrorCurve

ERROR_COLUMNS = ["N", "h", "weak_error", "weak_stderr", "strong_error", "strong_stderr", "bound_thm5", "order0_ref"]


def fmt(x) -> str:
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return f"{float(x):.17g}"


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def error_curve_rows(curve: ErrorCurve):
    for r in curve:
        yield (r.N, r.h, r.weak_error, r.weak_stderr, r.strong_error, r.strong_stderr,
               r.bound_thm5, r.order0_ref(curve.T))


def error_curve_csv(curve: ErrorCurve) -> str:
    return rows_to_csv(ERROR_COLUMNS, error_curve_rows(curve))


def write_text(path, text: str) -> Path:
    path = Path(path)
    try:
        if path.parent != Path(""):
            path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


# --- config -------------------------------------------------------------------

class ConfigError(ValueError):
    pass


def parse_config(text: str, source: str = "<config>") -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment, dashes in keys become underscores."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        out[key.replace("-", "_")] = value
    return out


def read_config(path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


# --- SVG ----------------------------------------------------------------------

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _log_ticks(lo, hi):
    return list(range(math.floor(lo), math.ceil(hi) + 1))


def loglog_svg(series, title: str = "", xlabel: str = "", ylabel: str = "", width: int = 640,
               height: int = 440) -> str:
    """Minimal log-log line plot.

    ``series`` is a list of ``(label, xs, ys, dashed)``; non-positive or
    non-finite points are skipped.
    """
    pts = [[(math.log10(x), math.log10(y)) for x, y in zip(xs, ys)
            if x > 0 and y > 0 and math.isfinite(x) and math.isfinite(y)] for _, xs, ys, _ in series]
    allp = [p for s in pts for p in s]
    if not allp:
        raise ValueError("nothing to plot")
    x0, x1 = min(p[0] for p in allp), max(p[0] for p in allp)
    y0, y1 = math.floor(min(p[1] for p in allp)), math.ceil(max(p[1] for p in allp))
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1
    ml, mr, mt, mb = 70, 170, 40, 50
    pw, ph = width - ml - mr, height - mt - mb

    def X(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def Y(v):
        return mt + (y1 - v) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="12">',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _log_ticks(x0, x1):
        if x0 <= t <= x1:
            out.append(f'<line x1="{X(t):.2f}" y1="{mt}" x2="{X(t):.2f}" y2="{mt + ph}" stroke="#ddd"/>')
            out.append(f'<text x="{X(t):.2f}" y="{mt + ph + 16}" text-anchor="middle">1e{t}</text>')
    for t in _log_ticks(y0, y1):
        out.append(f'<line x1="{ml}" y1="{Y(t):.2f}" x2="{ml + pw}" y2="{Y(t):.2f}" stroke="#ddd"/>')
        out.append(f'<text x="{ml - 6}" y="{Y(t) + 4:.2f}" text-anchor="end">1e{t}</text>')
    for i, ((label, _, _, dashed), p) in enumerate(zip(series, pts)):
        if not p:
            continue
        color = _COLORS[i % len(_COLORS)]
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        d = " ".join(f"{X(a):.2f},{Y(b):.2f}" for a, b in p)
        out.append(f'<polyline points="{d}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
        ly = mt + 14 + 18 * i
        out.append(f'<line x1="{ml + pw + 10}" y1="{ly - 4}" x2="{ml + pw + 34}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="1.5"{dash}/>')
        out.append(f'<text x="{ml + pw + 40}" y="{ly}">{_esc(label)}</text>')
    if title:
        out.append(f'<text x="{ml + pw / 2:.1f}" y="{mt - 14}" text-anchor="middle">{_esc(title)}</text>')
    if xlabel:
        out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{_esc(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="16" y="{mt + ph / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {mt + ph / 2:.1f})">{_esc(ylabel)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def error_curve_svg(curve: ErrorCurve) -> str:
    N = [r.N for r in curve]
    series = [
        ("weak error", N, [r.weak_error for r in curve], False),
        ("strong error", N, [r.strong_error for r in curve], False),
        ("order 0 curve", N, [r.order0_ref(curve.T) for r in curve], True),
        ("1/(15 sqrt N)", N, [order_line(n, 0.5) for n in N], True),
        ("1/(15 N)", N, [order_line(n, 1.0) for n in N], True),
    ]
    return loglog_svg(series, title=f"Euler errors, model {curve.model}, T = {curve.T:g}",
                      xlabel="N (steps)", ylabel="error")
