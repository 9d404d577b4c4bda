"""Command-line front end: one machine-readable table per verification surface.

Exit codes: 0 when every row passes, 1 on bad arguments, 2 when a check fails.
Set ``HALFHARDY_THREADS`` to compute rows on several threads; output order
never depends on it.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .closedform import constants_report, gamma_general
from .energy import fuzz_test_function, hardy_margin
from .extremal import DEFAULT_NS, check_scan, convergence_scan, thread_count
from .quad import (
    TAIL_KERNEL_A,
    TAIL_KERNEL_CASES,
    TAIL_KERNEL_CONSTANT,
    TAIL_KERNEL_X,
    QuadratureError,
    gamma_by_quadrature,
    pv_laplacian_power,
    tail_kernel_integral,
)
from .specfun import FracParams

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILED = 2

IDENTITY_TOL = 1e-12
GAMMA_TOL = 1e-8
LAPLACIAN_TOL = 1e-5
KERNEL_SLACK = 0.05

DEFAULT_D = (1, 2, 3, 5, 10)
DEFAULT_CONSTANT_ALPHAS = tuple(round(0.1 * k, 1) for k in range(1, 20)) + (1.99,)
DEFAULT_GAMMA_ALPHAS = (0.15, 0.35, 0.55, 0.75, 0.95, 1.05, 1.25, 1.45, 1.65, 1.85)
DEFAULT_LAPLACIAN_PAIRS = (
    (0.3, -0.35),
    (0.3, 0.1),
    (0.5, -0.25),
    (0.5, 0.2),
    (0.8, -0.6),
    (0.8, 0.5),
    (1.0, 0.4),
    (1.2, 0.1),
    (1.5, 0.25),
    (1.5, -0.5),
    (1.7, 1.2),
    (1.9, 0.45),
)
DEFAULT_X = (0.5, 1.0, 4.0)
DEFAULT_FUZZ_ALPHAS = (0.3, 0.7, 1.2, 1.7)
DEFAULT_RAYLEIGH_ALPHAS = (0.5, 1.0, 1.5)


class UsageError(ValueError):
    pass


@dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def _map(fn: Callable, items: list) -> list:
    workers = thread_count()
    if workers == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# argument parsing


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _seed_list(text: str) -> list[int]:
    """``"3,7,9"`` or a half-open range ``"0:200"``."""
    if ":" in text:
        try:
            start, stop = (int(t) for t in text.split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected START:STOP, got {text!r}") from None
        return list(range(start, stop))
    return _int_list(text)


def _positive(text: str) -> float:
    value = float(text)
    if not value > 0.0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return value


def _check_alphas(alphas) -> list[float]:
    alphas = list(alphas)
    bad = [a for a in alphas if not (0.0 < a < 2.0)]
    if bad or not alphas:
        raise UsageError(f"alpha values must lie in (0, 2), got {bad or 'none'}")
    return alphas


def _check_ds(ds) -> list[int]:
    ds = list(ds)
    bad = [d for d in ds if d < 1]
    if bad or not ds:
        raise UsageError(f"d values must be positive integers, got {bad or 'none'}")
    return ds


def _check_ps(alpha: float, ps) -> None:
    bad = [p for p in ps if not (-1.0 < p < alpha)]
    if bad:
        raise UsageError(f"p values must lie in (-1, alpha={alpha}), got {bad}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_constants(args) -> Table:
    ds = _check_ds(args.d or DEFAULT_D)
    alphas = _check_alphas(args.alpha or DEFAULT_CONSTANT_ALPHAS)
    table = Table("constants", ["d", "alpha", "kappa", "A", "killing_coeff", "best_killed", "identity_residual"])
    for d in ds:
        for alpha in alphas:
            rep = constants_report(FracParams(d, alpha))
            table.rows.append(
                {
                    "d": d,
                    "alpha": alpha,
                    "kappa": rep.kappa,
                    "A": rep.normalizer,
                    "killing_coeff": rep.killing_coeff,
                    "best_killed": rep.best_killed,
                    "identity_residual": rep.identity_residual,
                }
            )
            if rep.relative_residual > IDENTITY_TOL:
                table.failures.append(f"d={d} alpha={alpha}: relative residual {rep.relative_residual:.3g}")
    return table


def _gamma_grid(args) -> list[tuple[float, float]]:
    alphas = _check_alphas(args.alpha or DEFAULT_GAMMA_ALPHAS)
    grid = []
    for alpha in alphas:
        if args.p:
            _check_ps(alpha, args.p)
            ps = list(args.p)
        else:
            # ten interior points of (-1, alpha)
            ps = [-1.0 + (alpha + 1.0) * k / 11.0 for k in range(1, 11)]
        grid.extend((alpha, p) for p in ps)
    return grid


def cmd_gamma(args) -> Table:
    table = Table("gamma", ["alpha", "p", "closed_form", "quadrature", "abs_diff"])

    def row(pair):
        alpha, p = pair
        closed = gamma_general(alpha, p)
        quad = gamma_by_quadrature(alpha, p, args.rel_tol).value
        return {"alpha": alpha, "p": p, "closed_form": closed, "quadrature": quad, "abs_diff": abs(closed - quad)}

    for r in _map(row, _gamma_grid(args)):
        table.rows.append(r)
        if r["abs_diff"] > GAMMA_TOL * max(1.0, abs(r["closed_form"])):
            table.failures.append(f"alpha={r['alpha']} p={r['p']}: |diff| {r['abs_diff']:.3g}")
    return table


def _laplacian_pairs(args) -> list[tuple[float, float]]:
    if not args.alpha and not args.p:
        return list(DEFAULT_LAPLACIAN_PAIRS)
    alphas = _check_alphas(args.alpha or sorted({a for a, _ in DEFAULT_LAPLACIAN_PAIRS}))
    if not args.p:
        return [(a, 0.5 * (a - 1.0)) for a in alphas]
    for alpha in alphas:
        _check_ps(alpha, args.p)
    return [(a, p) for a in alphas for p in args.p]


def cmd_laplacian_check(args) -> Table:
    xs = args.x or list(DEFAULT_X)
    if any(x <= 0.0 for x in xs):
        raise UsageError("x values must be positive")
    table = Table("laplacian-check", ["alpha", "p", "x", "pv_value", "predicted", "rel_err"])
    items = [(a, p, x) for a, p in _laplacian_pairs(args) for x in xs]

    def row(item):
        alpha, p, x = item
        pv = pv_laplacian_power(alpha, p, x, args.rel_tol).value
        predicted = gamma_general(alpha, p) * x ** (p - alpha)
        scale = abs(predicted)
        rel = abs(pv - predicted) / scale if scale > 0.0 else abs(pv)
        return {"alpha": alpha, "p": p, "x": x, "pv_value": pv, "predicted": predicted, "rel_err": rel}

    for r in _map(row, items):
        table.rows.append(r)
        if r["rel_err"] > LAPLACIAN_TOL:
            table.failures.append(f"alpha={r['alpha']} p={r['p']} x={r['x']}: rel_err {r['rel_err']:.3g}")
    return table


def cmd_rayleigh(args) -> Table:
    alphas = _check_alphas(args.alpha or DEFAULT_RAYLEIGH_ALPHAS)
    ns = args.n or list(DEFAULT_NS)
    if any(n < 2 for n in ns) or any(b <= a for a, b in zip(ns, ns[1:])):
        raise UsageError("n values must be at least 2 and strictly increasing")
    columns = [
        "n",
        "alpha",
        "energy",
        "weighted_norm",
        "quotient",
        "kappa",
        "excess",
        "excess_times_log_n",
        "remainder",
        "tolerance",
        "profile",
    ]
    table = Table("rayleigh", columns)
    for alpha in alphas:
        reports = convergence_scan(ns, alpha, args.rel_tol)
        table.rows.extend(r.row() for r in reports)
        verdict = check_scan(reports)
        if not verdict.above_kappa:
            table.failures.append(f"alpha={alpha}: excess below -tolerance")
        if not verdict.decreasing:
            table.failures.append(f"alpha={alpha}: excess not decreasing in n")
    return table


def cmd_hardy_fuzz(args) -> Table:
    alphas = _check_alphas(args.alpha or DEFAULT_FUZZ_ALPHAS)
    seeds = args.seeds if args.seeds is not None else list(range(args.count))
    table = Table("hardy-fuzz", ["seed", "alpha", "energy", "weighted_norm", "margin", "tolerance", "pass"])
    items = [(s, a) for s in seeds for a in alphas]

    def row(item):
        seed, alpha = item
        rep = hardy_margin(fuzz_test_function(seed), alpha, args.rel_tol)
        return {
            "seed": seed,
            "alpha": alpha,
            "energy": rep.energy,
            "weighted_norm": rep.weighted_norm,
            "margin": rep.margin,
            "tolerance": rep.tolerance,
            "pass": bool(rep.passed),
        }

    for r in _map(row, items):
        table.rows.append(r)
        if not r["pass"]:
            table.failures.append(f"seed={r['seed']} alpha={r['alpha']}: margin {r['margin']:.3g}")
    return table


def cmd_kernel_bound(args) -> Table:
    xs = args.x or list(TAIL_KERNEL_X)
    if any(x <= 0.0 for x in xs):
        raise UsageError("x values must be positive")
    cases = list(TAIL_KERNEL_CASES)
    if args.alpha or args.p:
        alphas = _check_alphas(args.alpha or sorted({a for _, a in cases}))
        rs = args.p or [0.0]
        for alpha in alphas:
            _check_ps(alpha, rs)
        cases = [(r, a) for a in alphas for r in rs]
    table = Table("kernel-bound", ["x", "a", "r", "alpha", "integral", "normalized_ratio"])
    items = [(x, a, r, al) for r, al in cases for x in xs for a in TAIL_KERNEL_A]

    def row(item):
        x, a, r, alpha = item
        value = tail_kernel_integral(x, a, r, alpha, args.rel_tol).value
        ratio = value / (a ** (-alpha) * max(a, x) ** r)
        return {"x": x, "a": a, "r": r, "alpha": alpha, "integral": value, "normalized_ratio": ratio}

    table.rows.extend(_map(row, items))
    worst = max(r["normalized_ratio"] for r in table.rows)
    if worst > (1.0 + KERNEL_SLACK) * TAIL_KERNEL_CONSTANT:
        table.failures.append(f"max ratio {worst:.6g} exceeds {TAIL_KERNEL_CONSTANT:.6g} by more than 5%")
    return table


COMMANDS = {
    "constants": cmd_constants,
    "gamma": cmd_gamma,
    "laplacian-check": cmd_laplacian_check,
    "rayleigh": cmd_rayleigh,
    "hardy-fuzz": cmd_hardy_fuzz,
    "kernel-bound": cmd_kernel_bound,
}


# ---------------------------------------------------------------------------
# output


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def render(table: Table, fmt: str) -> str:
    if fmt == "json":
        rows = [{c: _json_value(row[c]) for c in table.columns} for row in table.rows]
        return json.dumps(rows, indent=1) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_cell(row[c]) for c in table.columns])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="halfhardy",
        description="Verification tables for the sharp fractional Hardy inequality on the half-line and half-space.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    names = list(COMMANDS) + ["all"]
    helps = {
        "constants": "closed-form constants and the combined-constant identity",
        "gamma": "gamma(alpha, p): closed form against quadrature",
        "laplacian-check": "principal-value operator on x^p against gamma(alpha, p) x^(p - alpha)",
        "rayleigh": "Rayleigh quotients of the extremal sequence",
        "hardy-fuzz": "Hardy margins of seeded random test functions",
        "kernel-bound": "normalised tail-kernel integrals against the frozen constant",
        "all": "every table with default settings",
    }
    for name in names:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--d", type=_int_list, help="comma-separated dimensions")
        p.add_argument("--alpha", type=_float_list, help="comma-separated alpha values in (0, 2)")
        p.add_argument("--p", type=_float_list, help="comma-separated exponents (r for kernel-bound)")
        p.add_argument("--x", type=_float_list, help="comma-separated evaluation points")
        p.add_argument("--n", type=_int_list, help="comma-separated increasing n values")
        p.add_argument("--seeds", type=_seed_list, help="seed list '1,2,3' or range 'START:STOP'")
        p.add_argument("--count", type=int, default=200, help="number of seeds from 0 when --seeds is absent")
        p.add_argument("--rel-tol", type=_positive, default=1e-10, help="quadrature relative tolerance")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument(
            "--out",
            type=Path,
            help="output file (a directory for 'all'); standard output when omitted",
        )
    return parser


def _write(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage; our contract reserves 2 for failed checks
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.count < 0:
        print("error: --count must be non-negative", file=sys.stderr)
        return EXIT_USAGE

    if args.command == "all":
        names = list(COMMANDS)
        if args.out is not None:
            args.out.mkdir(parents=True, exist_ok=True)
    else:
        names = [args.command]

    status = EXIT_OK
    for name in names:
        try:
            table = COMMANDS[name](args)
        except (UsageError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except QuadratureError as exc:
            print(f"{name}: quadrature failed: {exc}", file=sys.stderr)
            status = EXIT_FAILED
            continue
        text = render(table, args.format)
        if args.command == "all":
            if args.out is not None:
                _write(text, args.out / f"{name}.{args.format}")
            else:
                sys.stdout.write(f"# {name}\n{text}")
        else:
            _write(text, args.out)
        for failure in table.failures:
            print(f"{name}: FAIL {failure}", file=sys.stderr)
        if not table.passed:
            status = EXIT_FAILED
    return status


if __name__ == "__main__":
    raise SystemExit(main())
