"""Command line entry point: ``eulerlab <subcommand> [options]``.

Subcommands
    figure1       weak/strong error curve of a model against N, CSV (+ SVG)
    bounds-check  deterministic and randomized inequality suites
    probe         Hoelder or Lipschitz regularity probe, CSV
    fixtures      regenerate the pinned constants file
    simulate      dump one Euler trajectory as CSV

Options may also come from ``--config FILE`` (flat ``key = value``); values
given on the command line win over the file, which wins over the defaults.
Exit status is 0 when every check passed, 1 when a check failed and 2 on
invalid input.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import bounds, io
from .estimation import polynomial_ratio_drops, theorem_bound_violations, weak_strong_errors
from .euler import EulerConfig, euler_run
from .fixtures import FixtureError, write_fixtures
from .grid import DomainError, TimeGrid
from .models import MODELS, get_model
from .probes import holder_probe, lipschitz_blowup_probe
from .quadrature import mollifier_integral
from .rng import SeedSpec, sample_path

MODES = {
    # mode: (k_max, samples)
    "quick": (10, 10_000),
    "desk": (16, 100_000),
    "full": (30, 100_000),
}


@dataclass
class ExperimentConfig:
    model: str = "ex3"
    T: float = 2.0
    k_min: int = 1
    k_max: int = 16
    samples: int = 100_000
    seed: int = 0
    out: str = "figure1.csv"
    svg: str | None = None
    mode: str = "desk"
    jobs: int = 1

    def __post_init__(self):
        if self.model not in MODELS:
            raise DomainError(f"unknown model {self.model!r}; choose from {sorted(MODELS)}")
        if self.mode not in MODES:
            raise DomainError(f"unknown mode {self.mode!r}")
        if not (0 <= self.k_min <= self.k_max):
            raise DomainError(f"need 0 <= k_min <= k_max, got {self.k_min}, {self.k_max}")
        if self.samples < 2:
            raise DomainError("need at least two samples")
        if not self.T > 0:
            raise DomainError("T must be positive")
        if self.jobs < 1:
            raise DomainError("jobs must be positive")

    @property
    def levels(self) -> list[int]:
        return list(range(self.k_min, self.k_max + 1))


_CASTS = {"model": str, "T": float, "k_min": int, "k_max": int, "samples": lambda s: int(float(s)),
          "seed": int, "out": str, "svg": str, "mode": str, "jobs": int}


def _merge(cli: dict, file_values: dict, mode_flag: str | None) -> ExperimentConfig:
    values = {}
    unknown = set(file_values) - set(_CASTS)
    if unknown:
        raise DomainError(f"unknown config keys: {sorted(unknown)}")
    for k, v in file_values.items():
        try:
            values[k] = _CASTS[k](v)
        except ValueError:
            raise DomainError(f"config key {k}: cannot parse {v!r}") from None
    if mode_flag is not None:
        values["mode"] = mode_flag
    mode = values.get("mode", "desk")
    if mode not in MODES:
        raise DomainError(f"unknown mode {mode!r}")
    k_max, samples = MODES[mode]
    merged = {"k_max": k_max, "samples": samples}
    merged.update(values)
    merged.update({k: v for k, v in cli.items() if v is not None})
    return ExperimentConfig(**merged)


def _add_experiment_options(p, default_out):
    p.add_argument("--config", help="flat key = value file with defaults for the options below")
    p.add_argument("--model", choices=sorted(MODELS))
    p.add_argument("--T", type=float, help="time horizon")
    p.add_argument("--k-min", dest="k_min", type=int, help="coarsest level (N = 2^k)")
    p.add_argument("--k-max", dest="k_max", type=int, help="finest level")
    p.add_argument("--samples", type=lambda s: int(float(s)), help="Monte Carlo paths")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help=f"CSV output path (default {default_out})")
    p.add_argument("--svg", help="also write a log-log SVG plot here")
    p.add_argument("--jobs", type=int, help="worker threads; results do not depend on it")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--quick", dest="mode_flag", action="store_const", const="quick",
                   help="k <= 10, 1e4 paths")
    g.add_argument("--full", dest="mode_flag", action="store_const", const="full",
                   help="k <= 30, 1e5 paths (very long)")


def _config_from_args(args) -> ExperimentConfig:
    file_values = io.read_config(args.config) if args.config else {}
    cli = {k: getattr(args, k) for k in _CASTS if k != "mode" and hasattr(args, k)}
    return _merge(cli, file_values, args.mode_flag)


# --- subcommands ----------------------------------------------------------------

def cmd_figure1(args) -> int:
    cfg = _config_from_args(args)
    model = get_model(cfg.model)
    curve = weak_strong_errors(model, cfg.T, cfg.levels, cfg.samples, cfg.seed, n_jobs=cfg.jobs)
    io.write_text(cfg.out, io.error_curve_csv(curve))
    if cfg.svg:
        io.write_text(cfg.svg, io.error_curve_svg(curve))
    bad = theorem_bound_violations(curve) if cfg.model == "ex3" else []
    for r in curve:
        print(f"N=2^{int(math.log2(r.N)):<2d} weak={r.weak_error:.4e} (se {r.weak_stderr:.1e}) "
              f"strong={r.strong_error:.4e}")
    if cfg.model == "ex3":
        print(f"lower bound exp(-14|ln h|^(2/3)) respected on all rows with h <= 1/22: {not bad}")
        drops = polynomial_ratio_drops(curve)
        print(f"weak error * N^0.05 non-decreasing over k = 8..16: {not drops}")
    print(f"wrote {cfg.out}")
    return 1 if bad else 0


def cmd_bounds_check(args) -> int:
    if args.lemma53_h is not None:
        gap = bounds.check_lemma53(args.lemma53_h)
        ok = args.lemma53_h / 20 <= gap <= 2 * args.lemma53_h
        print(f"{'PASS' if ok else 'FAIL'} h={args.lemma53_h!r}: gap={gap!r}")
        return 0 if ok else 1
    constant = None
    if args.inject_fault:
        constant = mollifier_integral(1.0) + args.fault_size
        print(f"fault injected: mollifier integral perturbed by {args.fault_size:g}")
    suites = [
        bounds.lemma53_suite(constant=constant),
        bounds.lemma52_suite(args.cases, args.seed),
        bounds.lemma32_suite(args.cases, args.seed),
        bounds.lemma33_suite(args.mc_samples, args.seed),
    ]
    for s in suites:
        print(s.line())
        for f in s.failures[:10]:
            print(f"    {f}")
    return 0 if all(s.passed for s in suites) else 1


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def cmd_probe(args) -> int:
    if args.kind == "holder":
        model = get_model(args.model or "ex2b")
        x = np.array(_floats(args.x)) if args.x else np.zeros(model.d)
        direction = np.array(_floats(args.direction)) if args.direction else np.eye(model.d)[-1]
        deltas = _floats(args.deltas) if args.deltas else [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
        coord = args.coordinate
        res = holder_probe(model, x, direction, args.t, lambda X: X[:, coord], deltas, args.samples,
                           args.seed, level=args.level, method=args.method)
        ratio = res.ratio(0.5)
        text = io.rows_to_csv(["delta", "increment", "stderr", "increment_over_sqrt_delta"],
                              zip(res.deltas, res.increments, res.stderr, ratio))
        print(f"fitted exponent {res.fitted_alpha:.4f}; sliding-window exponents "
              + ", ".join(f"{a:.3f}" for a in res.window_alphas()))
        print("increments growing faster than sqrt(delta) as delta shrinks indicate a missing "
              "Hoelder exponent 1/2")
    else:
        hs = _floats(args.h_list) if args.h_list else [1e-1, 1e-2, 1e-3, 1e-4]
        rows = lipschitz_blowup_probe(args.t, args.x2, hs, args.samples, args.seed, level=args.level)
        text = io.rows_to_csv(["h", "truncated_mean", "truncated_stderr", "median", "flagged_fraction"],
                              ((r.h, r.truncated_mean, r.truncated_stderr, r.median, r.flagged_fraction)
                               for r in rows))
        print("difference quotients X1(t)/h should grow as h shrinks; the clipped mean only shows the trend")
    io.write_text(args.out, text)
    print(f"wrote {args.out}")
    return 0


def cmd_fixtures(args) -> int:
    try:
        path = write_fixtures(args.out)
    except FixtureError as exc:
        print(f"fixture generation failed: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


def cmd_simulate(args) -> int:
    model = get_model(args.model)
    x0 = np.array(_floats(args.x0)) if args.x0 else np.zeros(model.d)
    grid = TimeGrid(args.T, args.level)
    paths = [sample_path(SeedSpec(args.seed, args.stream), grid, j) for j in model.active_noise()]
    if not paths:
        paths = [sample_path(SeedSpec(args.seed, args.stream), grid, 0)]
    traj = euler_run(model, x0, paths, EulerConfig(grid, args.scheme))
    header = ["t"] + [f"y{i + 1}" for i in range(model.d)]
    rows = ((n * grid.h, *traj.states[n]) for n in range(len(traj.states)))
    io.write_text(args.out, io.rows_to_csv(header, rows))
    if traj.blow_up_index is not None:
        print(f"trajectory blew up at step {traj.blow_up_index}")
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eulerlab", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("figure1", help="error curve of the Euler scheme against N")
    _add_experiment_options(f, "figure1.csv")
    f.set_defaults(func=cmd_figure1)

    b = sub.add_parser("bounds-check", help="run the inequality suites")
    b.add_argument("--cases", type=int, default=1000, help="randomized instances per suite")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--mc-samples", type=lambda s: int(float(s)), default=10**6,
                   help="Gaussian samples per case of the oscillatory bound")
    b.add_argument("--inject-fault", action="store_true",
                   help="perturb the mollifier integral to check that the suite notices")
    b.add_argument("--fault-size", type=float, default=1e-3)
    b.add_argument("--lemma53-h", type=float, help="check the Riemann-gap bound at one step only")
    b.set_defaults(func=cmd_bounds_check)

    pr = sub.add_parser("probe", help="regularity probes")
    pr.add_argument("kind", choices=["holder", "lipschitz"])
    pr.add_argument("--model", choices=sorted(MODELS), help="holder: model (default ex2b)")
    pr.add_argument("--x", help="holder: base point, comma separated (default 0)")
    pr.add_argument("--direction", help="holder: direction (default last unit vector)")
    pr.add_argument("--coordinate", type=int, default=0, help="holder: observed state coordinate")
    pr.add_argument("--deltas", help="holder: comma separated decreasing deltas")
    pr.add_argument("--method", choices=["exact", "euler"], default="exact")
    pr.add_argument("--x2", type=float, default=1.0, help="lipschitz: initial second component")
    pr.add_argument("--h-list", help="lipschitz: comma separated initial first components")
    pr.add_argument("--t", type=float, default=1.0)
    pr.add_argument("--level", type=int, default=8, help="path grid level")
    pr.add_argument("--samples", type=lambda s: int(float(s)), default=10**5)
    pr.add_argument("--seed", type=int, default=0)
    pr.add_argument("--out", default="probe.csv")
    pr.set_defaults(func=cmd_probe)

    fx = sub.add_parser("fixtures", help="regenerate the pinned constants")
    fx.add_argument("--out", default="constants.txt")
    fx.set_defaults(func=cmd_fixtures)

    s = sub.add_parser("simulate", help="dump one Euler trajectory")
    s.add_argument("--model", choices=sorted(MODELS), default="ex3")
    s.add_argument("--T", type=float, default=2.0)
    s.add_argument("--level", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--stream", type=int, default=0)
    s.add_argument("--x0", help="initial value, comma separated (default 0)")
    s.add_argument("--scheme", choices=["plain", "tamed"], default="plain")
    s.add_argument("--out", default="trajectory.csv")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, io.ConfigError, KeyError, NotImplementedError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
