"""``shapespace`` command line.

Exit codes: 0 success, 2 parse error or invalid option, 3 dimension mismatch,
4 unsupported p, 5 solver failure, 6 invalid algebra element.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import errors as E
from .geodesic import aligned_geodesic, constant_speed_check, geodesic_between, quotient_coefficients
from .io import dumps, measure_to_json, read_algebra, read_curve, read_measure, write_curve, write_measure
from .isometry import flow_pushforward, to_coefficients
from .measure import TestFunction, barycenter
from .shapedist import ShapeSolverConfig, shape_distance, shape_distance_oracle_2d
from .tangent import continuity_residual, flow_norm_invariance, orbit_subspace
from .transport import wasserstein_entropic, wasserstein_exact, wasserstein_oracle

EXIT_OK, EXIT_PARSE, EXIT_DIM, EXIT_P, EXIT_SOLVER, EXIT_ALGEBRA = 0, 2, 3, 4, 5, 6


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _g(x: float) -> str:
    return f"{x:.6g}"


def _emit(args, payload: dict, table: str) -> None:
    text = dumps(payload) if args.format == "json" else table + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _load(path: str):
    try:
        return read_measure(path)
    except (E.ParseError, E.NegativeWeightError, E.ZeroTotalMassError, E.DimensionMismatchError) as exc:
        raise CliError(EXIT_PARSE, f"cannot parse {path}: {exc}") from None


def _same_dim(mu, nu, a: str, b: str) -> None:
    if mu.n != nu.n:
        raise CliError(EXIT_DIM, f"dimension mismatch: {a} is in R^{mu.n}, {b} is in R^{nu.n}")


def _config(args) -> ShapeSolverConfig:
    return ShapeSolverConfig(
        p=args.p,
        restarts=args.restarts,
        rel_tol=args.rel_tol,
        seed=args.seed,
        inner_solver="entropic-then-exact" if args.epsilon else "exact",
        entropic_epsilon=args.epsilon or 1e-3,
    )


def _matrix_table(M) -> str:
    return "\n".join("  [" + " ".join(f"{v:>10.6g}" for v in row) + "]" for row in np.atleast_2d(M))


# --------------------------------------------------------------------------


def cmd_dist(args) -> int:
    mu, nu = _load(args.mu), _load(args.nu)
    _same_dim(mu, nu, args.mu, args.nu)
    if args.solver == "entropic":
        res = wasserstein_entropic(mu, nu, args.p, epsilon=args.epsilon or 1e-2)
    elif args.solver == "oracle":
        res = wasserstein_oracle(mu, nu, args.p)
    else:
        res = wasserstein_exact(mu, nu, args.p)
    if args.coupling:
        Path(args.coupling).write_text(dumps(res.coupling.to_json()))
    payload = {
        "distance": res.distance,
        "cost": res.cost,
        "p": res.p,
        "solver": res.solver,
        "iterations": res.iterations,
    }
    table = "\n".join(
        [f"distance  {_g(res.distance)}", f"cost      {_g(res.cost)}", f"p         {_g(res.p)}", f"solver    {res.solver}"]
    )
    _emit(args, payload, table)
    return EXIT_OK


def cmd_shape_dist(args) -> int:
    mu, nu = _load(args.mu), _load(args.nu)
    _same_dim(mu, nu, args.mu, args.nu)
    if args.oracle_2d:
        if mu.n != 2:
            raise CliError(EXIT_DIM, f"--oracle-2d needs planar measures, got R^{mu.n}")
        res = shape_distance_oracle_2d(mu, nu, args.oracle_2d, args.p)
    else:
        if args.p != 2:
            raise CliError(EXIT_P, f"shape-dist supports p=2 only (got p={args.p}); use --oracle-2d N")
        res = shape_distance(mu, nu, _config(args))
    g = res.minimizer
    payload = {
        "distance": res.distance,
        "p": args.p,
        "solver": res.solver,
        "certified": res.certified,
        "minimizer": g.to_json(),
        "det": round(g.det),
        "restarts_used": res.restarts_used,
        "inner_iterations": res.inner_iterations,
        "converged": res.converged,
        "restart_values": res.restart_values,
    }
    table = "\n".join(
        [
            f"distance        {_g(res.distance)}",
            f"solver          {res.solver}{' (certified)' if res.certified else ''}",
            "R =",
            _matrix_table(g.rotation),
            "t = " + " ".join(_g(v) for v in g.translation),
            f"det R           {g.det:+.0f}",
            f"restarts        {res.restarts_used}",
            f"inner iters     {res.inner_iterations}",
            f"converged       {res.converged}",
        ]
    )
    _emit(args, payload, table)
    return EXIT_OK


def cmd_geodesic(args) -> int:
    mu, nu = _load(args.mu), _load(args.nu)
    _same_dim(mu, nu, args.mu, args.nu)
    times = None
    if args.times:
        times = [float(t) for t in args.times.split(",")]
    if args.align_first:
        curve, g = aligned_geodesic(mu, nu, args.samples, _config(args), args.oracle_2d)
        if times is not None:
            curve = geodesic_between(mu, g.push(nu), times=times)
    else:
        curve = geodesic_between(mu, nu, args.samples, times)
    try:
        dev = constant_speed_check(curve)
    except E.DegenerateEndpointsError:
        dev = None
    if args.output:
        write_curve(curve, args.output)
    payload = {
        "samples": len(curve),
        "aligned": bool(args.align_first),
        "constant_speed_deviation": dev,
        "curve": args.output or curve.to_json(),
    }
    table = "\n".join(
        [
            f"samples                   {len(curve)}",
            f"aligned                   {bool(args.align_first)}",
            "constant-speed deviation  " + ("n/a (endpoints coincide)" if dev is None else _g(dev)),
        ]
        + ([f"curve written to          {args.output}"] if args.output else [])
    )
    sys.stdout.write(dumps(payload) if args.format == "json" else table + "\n")
    return EXIT_OK


def cmd_quotient(args) -> int:
    try:
        curve = read_curve(args.curve)
    except (E.ParseError, ValueError) as exc:
        raise CliError(EXIT_PARSE, f"cannot parse {args.curve}: {exc}") from None
    if args.p != 2:
        raise CliError(EXIT_P, "quotient coefficients are computed for p=2 only")
    if args.oracle_2d and curve.n != 2:
        raise CliError(EXIT_DIM, f"--oracle-2d needs a planar curve, got R^{curve.n}")
    rep = quotient_coefficients(curve, _config(args), args.oracle_2d, args.tolerance)
    try:
        dev = constant_speed_check(curve)
    except E.DegenerateEndpointsError:
        dev = None
    payload = rep.to_json()
    payload["wasserstein_constant_speed_deviation"] = dev
    table = rep.to_table() + "\nW-level constant-speed deviation: " + ("n/a" if dev is None else _g(dev))
    _emit(args, payload, table)
    return EXIT_OK


def cmd_tangent(args) -> int:
    mu = _load(args.mu)
    rep = orbit_subspace(mu, args.rank_tol)
    if args.matrix_csv:
        np.savetxt(args.matrix_csv, rep.evaluation_matrix, delimiter=",", fmt="%.17g")
    payload = rep.to_json()
    n = mu.n
    labels = [f"P{i + 1}" for i in range(n)] + [
        f"M{i + 1}{j + 1}" for i in range(n) for j in range(i + 1, n)
    ]
    kern = [
        "  " + " ".join(f"{c:+.6g}*{lab}" for c, lab in zip(to_coefficients(X), labels) if abs(c) > 1e-12)
        for X in rep.kernel_basis
    ]
    table = "\n".join(
        [
            f"atoms m                 {mu.m}",
            f"dimension n             {mu.n}",
            f"dim T_mu W = m*n        {rep.tangent_dim}",
            f"dim iso(n)              {mu.n * (mu.n + 1) // 2}",
            f"rank (dim U_mu)         {rep.rank}",
            f"shape tangent dim       {rep.shape_tangent_dim}",
            f"kernel dim              {rep.kernel_dim}",
            "singular values         " + " ".join(_g(s) for s in rep.singular_values),
            "kernel basis" + ("            none" if not kern else ":"),
        ]
        + kern
    )
    _emit(args, payload, table)
    return EXIT_OK


def cmd_flow(args) -> int:
    mu = _load(args.mu)
    try:
        X = read_algebra(args.algebra)
    except E.SkewnessViolationError as exc:
        raise CliError(EXIT_ALGEBRA, f"{args.algebra}: {exc}") from None
    except (E.ParseError, ValueError) as exc:
        raise CliError(EXIT_PARSE, f"cannot parse {args.algebra}: {exc}") from None
    _same_dim(mu, X, args.mu, args.algebra)
    mt = flow_pushforward(mu, X, args.t)
    payload: dict = {"t": args.t}
    lines = [f"t  {_g(args.t)}"]
    if args.checks:
        width = 1.0 + mu.diameter()
        phi = TestFunction.gaussian(barycenter(mu) + 0.5, width)
        res = continuity_residual(mu, X, phi, (0.25, 0.5, 0.75), 1e-4)
        inv = flow_norm_invariance(mu, X)
        payload.update(continuity_residual=res, flow_norm_invariance=inv)
        lines += [f"continuity residual     {_g(res)}", f"flow norm invariance    {_g(inv)}"]
    if args.output:
        write_measure(mt, args.output)
        lines.append(f"measure written to {args.output}")
    else:
        payload["measure"] = measure_to_json(mt)
    sys.stdout.write(dumps(payload) if args.format == "json" else "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_fixtures(args) -> int:
    from .fixtures import generate_corpus

    paths = generate_corpus(args.outdir, seed=args.seed, count=args.count)
    sys.stdout.write(f"wrote {len(paths)} files to {args.outdir}\n")
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=float, default=2.0, help="transport exponent (>= 1)")
    common.add_argument("--format", choices=("json", "table"), default="table")
    common.add_argument("--output", help="write the main output here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--restarts", type=int, default=16)
    common.add_argument("--rel-tol", type=float, default=1e-9)
    common.add_argument("--epsilon", type=float, default=None, help="entropic regularization")
    common.add_argument("--oracle-2d", type=int, default=None, metavar="N", help="planar grid oracle with N angles")

    ap = argparse.ArgumentParser(prog="shapespace", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", parents=[common], help="Wasserstein distance")
    p.add_argument("mu")
    p.add_argument("nu")
    p.add_argument("--solver", choices=("exact", "entropic", "oracle"), default="exact")
    p.add_argument("--coupling", help="write the transport plan JSON here")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("shape-dist", parents=[common], help="shape distance (Wasserstein modulo E(n))")
    p.add_argument("mu")
    p.add_argument("nu")
    p.set_defaults(func=cmd_shape_dist)

    p = sub.add_parser("geodesic", parents=[common], help="displacement interpolation")
    p.add_argument("mu")
    p.add_argument("nu")
    p.add_argument("--samples", type=int, default=5)
    p.add_argument("--times", help="explicit comma-separated sample times")
    p.add_argument("--align-first", action="store_true", help="replace nu by its best-aligned copy")
    p.set_defaults(func=cmd_geodesic)

    p = sub.add_parser("quotient", parents=[common], help="quotient coefficients of a sampled curve")
    p.add_argument("curve")
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.set_defaults(func=cmd_quotient)

    p = sub.add_parser("tangent", parents=[common], help="orbit subspace and shape tangent dimension")
    p.add_argument("mu")
    p.add_argument("--rank-tol", type=float, default=1e-8)
    p.add_argument("--matrix-csv", help="export the scaled evaluation matrix")
    p.set_defaults(func=cmd_tangent)

    p = sub.add_parser("flow", parents=[common], help="push a measure along a Killing flow")
    p.add_argument("mu")
    p.add_argument("algebra")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--checks", action="store_true", help="run continuity and norm-invariance checks")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("fixtures", parents=[common], help="regenerate the seeded fixture corpus")
    p.add_argument("outdir")
    p.add_argument("--count", type=int, default=5)
    p.set_defaults(func=cmd_fixtures)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.p < 1:
        sys.stderr.write("error: --p must be >= 1\n")
        return EXIT_P
    try:
        return args.func(args)
    except CliError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.code
    except E.SkewnessViolationError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ALGEBRA
    except (E.DimensionMismatchError, E.DimensionNot2Error) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DIM
    except E.UnsupportedPError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_P
    except (E.ParseError, E.ConfigInvalidError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_PARSE
    except E.ShapeSpaceError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_SOLVER
    except ValueError as exc:
        # out-of-range numeric options (e.g. --samples 1)
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
