"""Command-line entry point.

Exit codes: 0 pass or success, 1 bound violated (or Monte Carlo inconclusive),
2 hypotheses not met, 3 input error.  Reports go to stdout, diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import certify, diffops, gaussian, io, laplacian, selftest
from .hoeffding import decompose

EXIT_OK, EXIT_FAIL, EXIT_NA, EXIT_INPUT = 0, 1, 2, 3
VERDICT_EXIT = {
    certify.PASS: EXIT_OK,
    certify.FAIL: EXIT_FAIL,
    certify.INCONCLUSIVE: EXIT_FAIL,
    certify.NOT_APPLICABLE: EXIT_NA,
}
CSV_COLUMNS = "theorem,c,bound,measured,ci,verdict,slack"
MIN_MC_SAMPLES = 1000
DIFFOPS = ("D", "d", "dplus", "grad_norm_d", "grad_norm_dplus", "iterated_d", "iterated_dplus",
           "hess_hs2_D2", "hess_hs2_d2", "D_ij", "d_ij")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise io.InputError(f"{self.prog}: {message}")


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    method: str = "exact"
    samples: int = certify.DEFAULT_SAMPLES
    seed: int = 0
    tol: float | None = None
    csv: bool = False
    rescale: bool = False

    def validate(self):
        if self.method == "mc" and self.samples < MIN_MC_SAMPLES:
            raise io.InputError(f"--samples must be at least {MIN_MC_SAMPLES} for Monte Carlo")
        if self.tol is not None and not self.tol >= np.finfo(float).eps:
            raise io.InputError("tolerance overrides must be at least machine epsilon")
        if self.seed < 0:
            raise io.InputError("--seed must be nonnegative")


def _threads():
    raw = os.environ.get("CONC_LAB_THREADS")
    if raw is None:
        return None
    if not raw.isdigit() or int(raw) < 1:
        raise io.InputError("CONC_LAB_THREADS must be a positive integer")
    return int(raw)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="conclab", description="Second-order concentration numerics on finite product spaces.")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def inputs(sp):
        sp.add_argument("--space", required=True, help="space JSON file")
        sp.add_argument("--function", required=True, help="function JSON file")

    sp = sub.add_parser("decompose", help="Hoeffding decomposition")
    inputs(sp)
    sp.add_argument("--method", choices=("auto", "walsh", "generic"), default="auto")

    sp = sub.add_parser("diffops", help="dump a difference-operator field as a dense table")
    inputs(sp)
    sp.add_argument("--op", choices=DIFFOPS, required=True)
    sp.add_argument("--i", type=int, help="first coordinate (0-based)")
    sp.add_argument("--j", type=int, help="second coordinate (0-based)")

    sp = sub.add_parser("spectrum", help="check L f_d = d(d-1) f_d per degree")
    inputs(sp)
    sp.add_argument("--tol", type=float, default=1e-9)

    sp = sub.add_parser("certify", help="certify a concentration statement")
    sp.add_argument("theorem", choices=certify.THEOREMS)
    inputs(sp)
    sp.add_argument("--method", choices=("exact", "mc"), default="exact")
    sp.add_argument("--samples", type=int, default=certify.DEFAULT_SAMPLES)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--rescale", action="store_true")
    sp.add_argument("--csv", action="store_true", help=f"one line: {CSV_COLUMNS}")
    sp.add_argument("--sigma2", type=float)
    sp.add_argument("--sigma2t", type=float)
    sp.add_argument("--t", type=float, default=0.1)
    sp.add_argument("--gamma", choices=("d", "dplus"), default="d")

    sp = sub.add_parser("mlsi", help="modified log-Sobolev check")
    inputs(sp)
    sp.add_argument("--gamma", choices=("d", "dplus"), default="d")
    sp.add_argument("--sigma2", type=float)
    sp.add_argument("--csv", action="store_true")

    sp = sub.add_parser("gaussian", help="Gaussian quadratic forms")
    sp.add_argument("action", choices=("certify", "poincare", "itgrad"))
    sp.add_argument("--A", required=True, help="matrix JSON file")
    sp.add_argument("--l", help="linear term JSON file")
    sp.add_argument("--first-order", action="store_true", help="use the constant allowing a linear term")
    sp.add_argument("--sigma2", type=float, default=1.0)
    sp.add_argument("--samples", type=int, default=gaussian.DEFAULT_SAMPLES)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--h", type=float, default=1e-4)
    sp.add_argument("--count", type=int, default=1000)
    sp.add_argument("--csv", action="store_true")

    sp = sub.add_parser("selftest", help="run the internal invariant suite")
    sp.add_argument("--seed", type=int, default=20240601)
    return p


def _load_f(args):
    space = io.parse_space(io.load_json(args.space))
    return io.parse_function(io.load_json(args.function), space)


def _emit_cert(cert, as_csv: bool) -> tuple[int, str]:
    text = io.csv_line(cert.csv_fields()) if as_csv else io.dumps(cert.to_json())
    return VERDICT_EXIT[cert.verdict], text


def _diffop(f, args):
    op = args.op
    if op in ("D", "d", "dplus", "D_ij", "d_ij"):
        if args.i is None or (op.endswith("ij") and args.j is None):
            raise io.InputError(f"--op {op} needs --i" + (" and --j" if op.endswith("ij") else ""))
        n = f.space.n
        if not 0 <= args.i < n or (args.j is not None and not 0 <= args.j < n):
            raise io.InputError(f"coordinates must lie in 0..{n - 1}")
        if op == "d_ij" and args.i == args.j:
            raise io.InputError("d_ij needs i != j")
    table = {
        "D": lambda: diffops.D_i(f, args.i),
        "d": lambda: diffops.d_i(f, args.i),
        "dplus": lambda: diffops.dplus_i(f, args.i),
        "grad_norm_d": lambda: diffops.grad_norm(f, "d"),
        "grad_norm_dplus": lambda: diffops.grad_norm(f, "dplus"),
        "iterated_d": lambda: diffops.iterated_d(f),
        "iterated_dplus": lambda: diffops.iterated_dplus(f),
        "hess_hs2_D2": lambda: diffops.hess_hs2(f, "D2"),
        "hess_hs2_d2": lambda: diffops.hess_hs2(f, "d2"),
        "D_ij": lambda: diffops.D_ij(f, args.i, args.j),
        "d_ij": lambda: diffops.d_ij(f, args.i, args.j),
    }
    g = table[op]()
    return {"op": op, "i": args.i, "j": args.j, "values": g.values}


def _gaussian(args) -> tuple[int, str]:
    A = io.parse_matrix(io.load_json(args.A))
    ell = io.parse_vector(io.load_json(args.l)) if args.l else None
    try:
        q = gaussian.QuadraticForm(A, ell)
    except ValueError as exc:
        raise io.InputError(str(exc)) from exc
    if args.action == "certify":
        RunConfig("gaussian", "mc", args.samples, args.seed).validate()
        fn = gaussian.certify_kontinuierlich_1ordn if args.first_order else gaussian.certify_kontinuierlich
        return _emit_cert(fn(q, args.sigma2, args.samples, args.seed), args.csv)
    if args.action == "poincare":
        if ell is not None and np.any(ell != 0):
            raise io.InputError("poincare needs l = 0")
        rep = gaussian.poincare_hessian_check(q)
    else:
        if args.h <= 0 or args.count < 1:
            raise io.InputError("--h must be positive and --count at least 1")
        rep = gaussian.itgrad_hess_check(q, h=args.h, count=args.count, seed=args.seed)
    return (EXIT_OK if rep.ok else EXIT_FAIL), io.dumps(rep.to_json())


def _dispatch(args) -> tuple[int, str]:
    cmd = args.subcommand
    if cmd == "selftest":
        rows = selftest.run(args.seed)
        ok = all(r["ok"] for r in rows)
        return (EXIT_OK if ok else EXIT_FAIL), io.dumps({"ok": ok, "checks": rows})
    if cmd == "gaussian":
        return _gaussian(args)
    if cmd == "certify":
        cfg = RunConfig(cmd, args.method, args.samples, args.seed, csv=args.csv, rescale=args.rescale)
    elif cmd == "spectrum":
        cfg = RunConfig(cmd, tol=args.tol)
    else:
        cfg = RunConfig(cmd)
    cfg.validate()
    f = _load_f(args)
    if cmd == "decompose":
        dec = decompose(f, args.method)
        return EXIT_OK, io.dumps({"terms": dec.to_json(), "degree_norms2": dec.degree_norms2()})
    if cmd == "diffops":
        return EXIT_OK, io.dumps(_diffop(f, args))
    if cmd == "spectrum":
        rep = laplacian.spectrum(f, args.tol)
        return (EXIT_OK if rep.ok else EXIT_FAIL), io.dumps(rep.to_json())
    if cmd == "mlsi":
        return _emit_cert(certify.mlsi_check(f, args.gamma, args.sigma2), args.csv)
    options = {"sigma2": args.sigma2, "sigma2t": args.sigma2t, "t": args.t, "gamma": args.gamma}
    cert = certify.certify(args.theorem, f, cfg.method, cfg.samples, cfg.seed, cfg.rescale, **options)
    return _emit_cert(cert, cfg.csv)


def run(argv=None) -> tuple[int, str]:
    """Parse and execute; returns (exit code, stdout text)."""
    try:
        _threads()  # computation is single-threaded; the cap is validated only
        args = build_parser().parse_args(argv)
        return _dispatch(args)
    except (io.InputError, ValueError, ArithmeticError) as exc:
        print(f"conclab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT, ""


def main(argv=None) -> int:
    code, text = run(argv)
    if text:
        sys.stdout.write(text + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
