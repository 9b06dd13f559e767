"""Command-line front end.

Subcommands: theta, pressure, bounds, classify, spectrum, eigenfun, cantor,
wseries, selftest.  Each command echoes its configuration (and its hash)
into every artifact; identical configurations produce byte-identical
output.  Exit codes: 0 ok, 2 config error, 3 resource cap, 4 numeric
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .eigen_lab import (
    backward_limit,
    build_kernel,
    cantor_ifs,
    cohomology_residual,
    distinct_truncation_values,
    eigen_residual,
    h_series,
    orthogonality_gram,
    w_series,
)
from .errors import (
    ClassificationError,
    DomainError,
    NumericError,
    ProbeError,
    ResourceError,
    TransferLabError,
    ValidationError,
)
from .exact import qq, to_complex
from .function_norms import besov_atomic_upper, bv_norm, homogeneity_probe
from .interval_maps import theta_infinity, theta_sum, verify_lebesgue_invariance
from .io import csv_lines, format_float, json_artifact, load_map, write_lines
from .observables import StepFunction, lp_norm
from .spectral_bounds import bound_bb_new, bound_main, classify_norm, pressure
from .transfer_operator import invariant_density, spectrum, ulam_matrix


def _parse_z(text: str) -> complex:
    try:
        return complex(text.replace("i", "j"))
    except ValueError as exc:
        raise ValidationError(f"cannot parse complex number {text!r}") from exc


def _emit_json(result, config, out):
    payload = json_artifact(result, config, __version__)
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def cmd_theta(args) -> int:
    config = {"command": "theta", "map": args.map, "beta": args.beta, "kmax": args.kmax}
    pmap = load_map(args.map)
    rows = []
    fekete = math.inf
    for k in range(1, args.kmax + 1):
        s = theta_sum(pmap, args.beta, k)
        fekete = min(fekete, s ** (1.0 / k))
        rows.append((k, s, fekete))
    write_lines(
        csv_lines(("k", "theta_sum", "fekete_running"), rows, config, __version__),
        args.out,
    )
    return 0


def cmd_pressure(args) -> int:
    config = {
        "command": "pressure",
        "map": args.map,
        "beta": args.beta,
        "method": args.method,
        "kmax": args.kmax,
    }
    pmap = load_map(args.map)
    report = pressure(pmap, args.beta, method=args.method, k_max=args.kmax)
    _emit_json(report.to_jsonable(), config, args.out)
    return 0


def cmd_bounds(args) -> int:
    config = {
        "command": "bounds",
        "map": args.map,
        "s": args.s,
        "r": args.r,
        "kmax": args.kmax,
    }
    pmap = load_map(args.map)
    result = {}
    if args.s is not None:
        result["main"] = bound_main(pmap, args.s, k_max=args.kmax).to_jsonable()
        result["lower_bound"] = result["main"]["lower_bound"]
    result["bb_new"] = bound_bb_new(
        pmap, r=args.r, k_max=args.kmax
    ).to_jsonable() if (pmap.is_linear or args.r is not None) else None
    _emit_json(result, config, args.out)
    return 0


NORM_REGISTRY = {
    "bv": lambda s: bv_norm,
    "l1": lambda s: (lambda f: lp_norm(f, 1)),
    "l2": lambda s: (lambda f: lp_norm(f, 2)),
    "sup": lambda s: (lambda f: lp_norm(f, math.inf)),
    "besov": lambda s: (lambda f: besov_atomic_upper(f, s).cost),
}


def cmd_classify(args) -> int:
    config = {"command": "classify", "map": args.map, "norm": args.norm, "s": args.s}
    if args.norm == "besov" and args.s is None:
        raise ValidationError("--norm besov needs --s")
    if args.norm not in NORM_REGISTRY:
        raise ValidationError(f"unknown norm {args.norm!r}; choose from {sorted(NORM_REGISTRY)}")
    pmap = load_map(args.map)
    norm = NORM_REGISTRY[args.norm](args.s)
    result = classify_norm(pmap, norm, norm_id=args.norm)
    _emit_json(result.to_jsonable(), config, args.out)
    return 0


def cmd_spectrum(args) -> int:
    config = {"command": "spectrum", "map": args.map, "resolution": args.resolution}
    pmap = load_map(args.map)
    matrix = ulam_matrix(pmap, args.resolution)
    report = spectrum(matrix)
    rows = [(z.real, z.imag, abs(z)) for z in report.eigenvalues]
    write_lines(csv_lines(("re", "im", "modulus"), rows, config, __version__), args.out)
    if args.matrix_out:
        lines = [",".join(format_float(x) for x in row) for row in matrix.entries]
        with open(args.matrix_out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        with open(args.matrix_out + ".json", "w") as fh:
            json.dump(matrix.to_jsonable_sidecar(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def cmd_eigenfun(args) -> int:
    z = _parse_z(args.z)
    config = {
        "command": "eigenfun",
        "map": args.map,
        "z": [z.real, z.imag],
        "n": args.n,
        "order": args.order,
        "gram_lmax": args.gram_lmax,
    }
    pmap = load_map(args.map)
    psi = build_kernel(pmap)
    series = h_series(pmap, psi, z, n=args.n, order=args.order)
    ok, residual = eigen_residual(pmap, series)
    gram = orthogonality_gram(pmap, psi, args.gram_lmax)
    size = args.gram_lmax + 1
    offdiag = max(
        (abs(to_complex(gram[i][j])) for i in range(size) for j in range(size) if i != j),
        default=0.0,
    )
    coh = cohomology_residual(pmap, psi, series) if pmap.is_linear else None
    result = {
        "z": [z.real, z.imag],
        "n": args.n,
        "order": args.order,
        "exact_shift_ok": bool(ok),
        "residual_l1": residual,
        "tail_bound": series.tail_bound,
        "gram_offdiag_max": offdiag,
        "cohomology_residual": coh,
        "kernel_residual_l1": psi.residual_l1,
    }
    _emit_json(result, config, args.out)
    if args.values_out:
        grid = [qq(j, args.grid) for j in range(args.grid)]
        rows = [
            (format_float(float(x)), to_complex(series.sum(x)).real, to_complex(series.sum(x)).imag)
            for x in grid
        ]
        write_lines(
            csv_lines(("x", "re_h", "im_h"), rows, config, __version__), args.values_out
        )
    return 0


def cmd_cantor(args) -> int:
    z = _parse_z(args.z)
    config = {
        "command": "cantor",
        "map": args.map,
        "z": [z.real, z.imag],
        "n": args.n,
        "depth": args.depth,
        "samples": args.samples,
    }
    pmap = load_map(args.map)
    psi = build_kernel(pmap)
    ifs = cantor_ifs(psi, z, args.n)
    rows = []
    for j in range(args.samples):
        x = qq(2 * j + 1, 2 * args.samples)
        value = to_complex(backward_limit(pmap, ifs, psi, x, args.depth))
        rows.append((float(x), value.real, value.imag, args.depth))
    result = dict(ifs.certificate())
    result["distinct_truncation_values"] = distinct_truncation_values(
        ifs.values, z, args.n, min(args.depth, 10)
    )
    _emit_json(result, config, args.out)
    if args.samples_out:
        write_lines(
            csv_lines(("x", "re_h", "im_h", "depth"), rows, config, __version__),
            args.samples_out,
        )
    return 0


def cmd_wseries(args) -> int:
    z = _parse_z(args.z)
    config = {
        "command": "wseries",
        "map": args.map,
        "z": [z.real, z.imag],
        "n": args.n,
        "resolution": args.resolution,
        "terms": args.terms,
    }
    pmap = load_map(args.map)
    if args.observable == "kernel":
        psi = build_kernel(pmap)
    else:
        # centered half-indicator: mean zero but not in the kernel in general
        psi = StepFunction((qq(0), qq(1, 2), qq(1)), (0.5, -0.5))
    report = w_series(pmap, psi, z, args.n, resolution=args.resolution, terms=args.terms)
    _emit_json(report.to_jsonable(), config, args.out)
    return 0


def cmd_selftest(args) -> int:
    from .fixtures import map_d2, map_l3, map_w2

    checks = []

    def record(name, ok):
        checks.append((name, bool(ok)))
        print(f"{'PASS' if ok else 'FAIL'}  {name}")

    d2, l3, w2 = map_d2(), map_l3(), map_w2()
    k2 = build_kernel(d2)
    record("d2 kernel exact", k2.residual_l1 == 0.0)
    k3 = build_kernel(l3)
    record("l3 kernel exact", k3.residual_l1 == 0.0)
    kw = build_kernel(w2)
    record("w2 kernel residual <= 1e-6", kw.residual_l1 <= 1e-6)
    record(
        "d2 theta exact",
        all(
            theta_sum(d2, b, k) == 2.0 ** (k * (1 - b))
            for b in (0.0, 0.5, 1.0, 1.5)
            for k in range(1, 8)
        ),
    )
    record(
        "pressure methods agree",
        abs(
            pressure(l3, 0.5, "weighted_matrix").exp_pressure
            - pressure(l3, 0.5, "theta_limit", k_max=8).exp_pressure
        )
        < 1e-6,
    )
    series = h_series(d2, k2, 0.4, n=1, order=6)
    ok, res = eigen_residual(d2, series)
    record("d2 eigen shift exact", ok and abs(res - 0.4**7) < 1e-15)
    gram = orthogonality_gram(d2, k2, 4)
    record(
        "d2 gram identity",
        all(gram[i][j] == (1 if i == j else 0) for i in range(5) for j in range(5)),
    )
    record("ifs separation flags", (not cantor_ifs(k2, 0.5, 1).separation_ok) and cantor_ifs(k2, 0.5, 3).separation_ok)
    ws = w_series(d2, k2, 0.9, 2, resolution=64, terms=6)
    record("w-series vanishes on kernel", ws.converged and max(ws.term_norms) == 0.0)
    matrix = ulam_matrix(w2, 256)
    dens = invariant_density(matrix)
    record(
        "w2 ulam density constant",
        float(np.max(np.abs(dens.values_as_complex() - 1.0))) < 1e-4,
    )
    ok_inv, defect = verify_lebesgue_invariance(w2)
    record("w2 lebesgue invariant", ok_inv)
    failures = [name for name, ok in checks if not ok]
    if failures:
        print(f"{len(failures)} selftest check(s) failed: {failures}")
        return 4
    print(f"all {len(checks)} selftest checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="transferlab",
        description="Transfer-operator growth quantities, eigenfunctions and spectral bounds",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_map(p):
        p.add_argument("--map", required=True, help="map JSON path or bundled name (d2/l3/w2)")
        p.add_argument("--out", default=None, help="output path (default stdout)")

    p = sub.add_parser("theta", help="growth-sum table over iteration levels")
    add_map(p)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--kmax", type=int, default=8)
    p.set_defaults(func=cmd_theta)

    p = sub.add_parser("pressure", help="exp of the topological pressure")
    add_map(p)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--method", choices=("auto", "weighted_matrix", "theta_limit"), default="auto")
    p.add_argument("--kmax", type=int, default=8)
    p.set_defaults(func=cmd_pressure)

    p = sub.add_parser("bounds", help="essential-spectral-radius lower bounds")
    add_map(p)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--kmax", type=int, default=10)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("classify", help="Case I/II classification of a norm")
    add_map(p)
    p.add_argument("--norm", required=True, help="bv | l1 | l2 | sup | besov")
    p.add_argument("--s", type=float, default=None, help="smoothness for --norm besov")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("spectrum", help="Ulam eigenvalue cloud")
    add_map(p)
    p.add_argument("--resolution", type=int, required=True)
    p.add_argument("--matrix-out", default=None, help="also dump the dense matrix CSV here")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("eigenfun", help="truncated eigenfunction series report")
    add_map(p)
    p.add_argument("--z", required=True, help="complex eigenvalue, e.g. 0.4 or 0.4i or -0.3+0.2j")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--order", type=int, default=8)
    p.add_argument("--gram-lmax", type=int, default=4)
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--values-out", default=None, help="CSV of series values on a grid")
    p.set_defaults(func=cmd_eigenfun)

    p = sub.add_parser("cantor", help="IFS certificate and attractor samples")
    add_map(p)
    p.add_argument("--z", required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--samples", type=int, default=128)
    p.add_argument("--samples-out", default=None, help="CSV of backward-limit samples")
    p.set_defaults(func=cmd_cantor)

    p = sub.add_parser("wseries", help="Ulam-propagated complementary series")
    add_map(p)
    p.add_argument("--z", required=True)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--resolution", type=int, default=512)
    p.add_argument("--terms", type=int, default=12)
    p.add_argument("--observable", choices=("kernel", "centered-half"), default="centered-half")
    p.set_defaults(func=cmd_wseries)

    p = sub.add_parser("selftest", help="run the bundled fixture checks")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, DomainError) as exc:
        _emit_error(exc)
        return 2
    except ResourceError as exc:
        _emit_error(exc)
        return 3
    except (NumericError, ClassificationError, ProbeError, TransferLabError) as exc:
        _emit_error(exc)
        return 4


def _emit_error(exc: Exception):
    sys.stderr.write(
        json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n"
    )


if __name__ == "__main__":
    sys.exit(main())
