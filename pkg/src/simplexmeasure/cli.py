"""Command-line interface: density grids, figure data, Monte Carlo and invariant checks.

Families are given as JSON, inline or by file path::

    {"schema": 1, "family": "multigamma", "alpha": [2, 3], "beta": [1, 2]}
    {"schema": 1, "family": "lognormal", "mu": [0, 0], "sigma": [[1, 0], [0, 1]]}
    {"schema": 1, "family": "multichi", "k": [1, 2]}
    {"schema": 1, "family": "radialreciprocal", "s": 2, "n": 2}
    {"schema": 1, "family": "dirac", "point": [1, 2]}

``schema`` defaults to 1.  Exit codes: 0 success, 2 argument or validation
error, 3 evaluation error, 4 dimension mismatch, 5 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import measures as M
from .checks import CHI_NOTE, SUITES, run_suite
from .errors import DomainError, QuadratureError
from .pushforward import closed_form, lebesgue_chart_density
from .sampling import ALGORITHM, MCThresholds, SeededGenerator, mc_verify

EXIT_OK, EXIT_USAGE, EXIT_EVAL, EXIT_DIM, EXIT_VERIFY = 0, 2, 3, 4, 5
SEED_ENV = "SIMPLEXMEASURE_SEED"


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class GridSpec:
    """Barycentric lattice on the open simplex.

    Points are ``(a + 1/(n+1)) / resolution`` for nonnegative integer vectors
    ``a`` summing to ``resolution - 1``: ``resolution`` points along each
    edge direction, all strictly inside, and the set is closed under
    coordinate permutations.  A margin ``m`` shrinks the lattice toward the
    barycenter so every coordinate is at least ``m``.
    """

    n: int
    resolution: int
    margin: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("dimension must be >= 1")
        if self.resolution < 2:
            raise DomainError("resolution must be >= 2")
        if not (0.0 <= self.margin < 1.0 / (self.n + 1)):
            raise DomainError(f"margin must lie in [0, {1.0 / (self.n + 1):.6g}) for n={self.n}")

    def barycentric(self) -> np.ndarray:
        r, m = self.resolution, self.n + 1
        rows = []
        # Stars and bars: compositions of r - 1 into m nonnegative parts.
        for bars in itertools.combinations(range(r - 1 + m - 1), m - 1):
            edges = (-1, *bars, r - 1 + m - 1)
            rows.append([edges[i + 1] - edges[i] - 1 for i in range(m)])
        a = np.array(rows, dtype=float)
        b = (a + 1.0 / m) / r
        return self.margin + (1.0 - m * self.margin) * b

    def points(self) -> np.ndarray:
        return self.barycentric()[:, : self.n]


def ternary_embed(b):
    """Isometric map of barycentric ``(b1, b2, b3)`` onto the unit equilateral triangle."""
    b = np.asarray(b, dtype=float)
    return np.stack([b[..., 1] + 0.5 * b[..., 2], (math.sqrt(3) / 2) * b[..., 2]], axis=-1)


def _fmt(v):
    return repr(float(v))


def _write_csv(out, header, rows):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])


def _family(text):
    try:
        return M.family_from_json(text)
    except DomainError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc


def _density_family(text):
    f = _family(text)
    if isinstance(f, M.DiracAt):
        raise CliError(EXIT_EVAL, "the transformed Dirac measure is an atom and has no density")
    return f


def _evaluate(td, x, lebesgue):
    try:
        g = lebesgue_chart_density(td, x) if lebesgue else td(x)
    except (QuadratureError, FloatingPointError, OverflowError) as exc:
        raise CliError(EXIT_EVAL, f"evaluation failed: {exc}") from exc
    g = np.atleast_1d(np.asarray(g, dtype=float))
    if not np.all(np.isfinite(g)):
        raise CliError(EXIT_EVAL, "density is not finite at some grid point")
    return g


def _grid(n, resolution, margin):
    try:
        return GridSpec(n, resolution, margin)
    except DomainError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc


def cmd_density(args, out):
    f = _density_family(args.family)
    spec = _grid(f.n, args.grid, args.margin)
    x = spec.points()
    g = _evaluate(closed_form(f), x, args.lebesgue)
    _write_csv(out, [f"x{i + 1}" for i in range(f.n)] + ["g"], np.column_stack([x, g]))
    return EXIT_OK


def cmd_figure(args, out):
    f = _density_family(args.family)
    td = closed_form(f)
    if args.kind == "bivariate-curve":
        if f.n != 1:
            raise CliError(EXIT_DIM, f"bivariate-curve needs a two-coordinate family, got n={f.n}")
        if args.resolution < 2:
            raise CliError(EXIT_USAGE, "resolution must be >= 2")
        p = (np.arange(args.resolution) + 0.5) / args.resolution
        g = _evaluate(td, p[:, None], lebesgue=True)
        _write_csv(out, ["p", "g_lebesgue"], np.column_stack([p, g]))
    else:
        if f.n != 2:
            raise CliError(EXIT_DIM, f"ternary-heatmap needs a three-coordinate family, got n={f.n}")
        b = _grid(2, args.resolution, 0.0).barycentric()
        g = _evaluate(td, b[:, :2], lebesgue=False)
        _write_csv(out, ["u", "v", "g"], np.column_stack([ternary_embed(b), g]))
    return EXIT_OK


def default_seed():
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise CliError(EXIT_USAGE, f"{SEED_ENV} must be an integer, got {raw!r}") from None


def cmd_mc_verify(args, out):
    f = _density_family(args.family)
    target = _density_family(args.against) if args.against else f
    if target.n != f.n:
        raise CliError(EXIT_DIM, f"family dimension {f.n} differs from --against dimension {target.n}")
    if f.n > 2:
        raise CliError(EXIT_DIM, "histogram verification supports n in {1, 2}")
    seed = default_seed() if args.seed is None else args.seed
    try:
        g = SeededGenerator(seed)
        report = mc_verify(f, closed_form(target), g, args.samples, args.bins, MCThresholds())
    except DomainError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from exc
    except QuadratureError as exc:
        raise CliError(EXIT_EVAL, f"evaluation failed: {exc}") from exc
    payload = report.to_dict()
    payload.update(seed=seed, generator=ALGORITHM, family=M.family_to_json(f),
                   against=M.family_to_json(target))
    out.write(json.dumps(payload, indent=2) + "\n")
    return EXIT_OK if report.verdict == "pass" else EXIT_VERIFY


def cmd_check(args, out):
    start = time.perf_counter()
    results = run_suite(args.suite)
    passed = all(r.passed for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} value={r.value:.3g} tol={r.tolerance:.3g}",
              file=sys.stderr)
    payload = {
        "suite": args.suite,
        "passed": passed,
        "seconds": time.perf_counter() - start,
        "results": [r.to_dict() for r in results],
        "notes": [CHI_NOTE],
    }
    out.write(json.dumps(payload, indent=2, default=str) + "\n")
    return EXIT_OK if passed else EXIT_VERIFY


def build_parser():
    parser = argparse.ArgumentParser(prog="simplexmeasure", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density", help="transformed density on a simplex lattice (CSV)")
    p.add_argument("--family", required=True, help="family JSON or path to a JSON file")
    p.add_argument("--grid", type=int, required=True, help="lattice resolution per edge")
    p.add_argument("--margin", type=float, default=0.0, help="minimum barycentric coordinate")
    p.add_argument("--lebesgue", action="store_true", help="Lebesgue chart density instead of mu_C")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("figure", help="figure data grids (CSV)")
    p.add_argument("kind", choices=["bivariate-curve", "ternary-heatmap"])
    p.add_argument("--family", required=True)
    p.add_argument("--resolution", type=int, default=200)
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("mc-verify", help="Monte Carlo check of a closed form (JSON)")
    p.add_argument("--family", required=True, help="family to sample")
    p.add_argument("--against", help="family whose closed form is tested (default: --family)")
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=None, help=f"PCG64 seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--bins", type=int, default=50)
    p.set_defaults(func=cmd_mc_verify)

    p = sub.add_parser("check", help="run invariant suites (JSON)")
    p.add_argument("--suite", choices=[*SUITES, "all"], default="all")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
