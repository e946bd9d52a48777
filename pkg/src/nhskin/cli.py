"""Command-line interface.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .classify import predict_class
from .eig import ConvergenceError, InverseIterationError, eigenpairs, eigenvalues, write_eigenvectors
from .lattice import Boundary, ModelSpec, assemble, build_chain
from .nonbloch import DisconnectedError, UnsupportedFamilyError, beta_magnitude
from .pointgap import OnSpectrumError, WindingError, interior_reference, spectral_curve, winding_number
from .skin import SkinConfig, dipr_columns, write_state_csv

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2
NUMERIC_ERRORS = (ConvergenceError, InverseIterationError, OnSpectrumError, WindingError, DisconnectedError, np.linalg.LinAlgError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("global options")
    g.add_argument("--out", default=argparse.SUPPRESS, help="output file (default: stdout)")
    g.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker processes for sweeps")
    g.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="numerical tolerance")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for randomized verification")


def _opt(args, name, default=None):
    return getattr(args, name, default)


def load_model(arg: str) -> ModelSpec:
    """``--model`` value: inline JSON or a path to a JSON file."""
    text = arg
    if not arg.lstrip().startswith("{"):
        try:
            text = Path(arg).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read model file {arg}: {exc.strerror}") from exc
    try:
        return ModelSpec.from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise UsageError(f"model is not valid JSON: {exc}") from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid model: {exc}") from exc


def _emit(args, text: str) -> None:
    out = _opt(args, "out")
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _pair(text: str) -> tuple[float, float]:
    try:
        a, b = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}") from None
    return a, b


# ---------------------------------------------------------------- commands


def cmd_spectrum(args) -> int:
    spec = load_model(args.model)
    M = assemble(build_chain(spec))
    kw = {"backend": args.backend}
    if _opt(args, "tol") is not None:
        kw["tol"] = args.tol
    need_vectors = bool(args.vectors or args.states or args.plot)
    sp = eigenpairs(M, **kw) if need_vectors else eigenvalues(M, **kw)
    doc = sp.to_dict()
    if args.vectors:
        write_eigenvectors(args.vectors, sp.eigenvectors)
        doc["eigenvectors"] = str(args.vectors)
    cfg = SkinConfig(args.delta)
    if args.states:
        write_state_csv(args.states, sp, cfg)
    if args.plot:
        from .plotting import plot_spectrum

        pbc = None
        if spec.boundary is Boundary.OBC:
            pbc = spectral_curve(spec, 512)
        plot_spectrum(sp.eigenvalues, args.plot, pbc=pbc, dipr=dipr_columns(sp.eigenvectors, cfg.delta))
    _emit(args, json.dumps(doc))
    return EXIT_OK


def cmd_classify(args) -> int:
    spec = load_model(args.model)
    if spec.boundary is not Boundary.OBC:
        raise UsageError("classify applies to open chains; set \"boundary\": \"obc\"")
    _emit(args, json.dumps(predict_class(build_chain(spec)).to_dict()))
    return EXIT_OK


def cmd_beta(args) -> int:
    spec = load_model(args.model)
    res = beta_magnitude(spec) if _opt(args, "tol") is None else beta_magnitude(spec, args.tol)
    _emit(args, json.dumps(res.to_dict()))
    return EXIT_OK


def cmd_critical(args) -> int:
    from .sweep import Axis, overlays_for

    spec = load_model(args.model)
    first = {"hn": "t", "mosaic_dimer": "u", "mosaic_trimer": "w", "mosaic_aah": "lambda"}[spec.family.value]
    try:
        ax1 = Axis(first, *args.x_range, args.samples)
        ax2 = Axis("gamma", *args.gamma_range, args.samples)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    try:
        curves = overlays_for(spec, ax1, ax2, samples=args.samples)
    except UnsupportedFamilyError as exc:
        raise UsageError(str(exc)) from exc
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["curve", first, "gamma"])
    for c in curves:
        for x, y in c["points"]:
            w.writerow([c["label"], repr(float(x)), repr(float(y))])
    _emit(args, buf.getvalue())
    return EXIT_OK


def cmd_winding(args) -> int:
    spec = load_model(args.model)
    if args.e0 is None:
        res = interior_reference(spec, args.nk)
        if res is None:
            _emit(args, json.dumps({"schema": 1, "reference": None, "winding": 0, "k_samples": args.nk}))
            return EXIT_OK
    else:
        res = winding_number(spec, complex(*args.e0), args.nk)
    _emit(args, json.dumps(res.to_dict()))
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .sweep import SweepConfig, export_csv, export_json, run_sweep, write_csv

    try:
        cfg = SweepConfig.load(args.config)
    except OSError as exc:
        raise UsageError(f"cannot read sweep config {args.config}: {exc.strerror}") from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid sweep config: {exc}") from exc
    if _opt(args, "tol") is not None:
        cfg = dataclasses.replace(cfg, tol=args.tol)
    pd = run_sweep(cfg, threads=_opt(args, "threads", 1) or 1)
    out = _opt(args, "out")
    if out:
        export_csv(pd, out)
    else:
        write_csv(pd, sys.stdout)
    if args.json:
        export_json(pd, args.json)
    if args.plot:
        from .plotting import plot_phase_diagram

        plot_phase_diagram(pd, args.plot)
    nerr = sum(e is not None for e in pd.errors.ravel())
    if nerr:
        print(f"warning: {nerr} cells failed, see the JSON export for details", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .acceptance import run_all

    only = None
    if args.only:
        try:
            only = [int(x) for x in args.only.split(",")]
        except ValueError:
            raise UsageError(f"--only expects comma-separated criterion numbers, got {args.only!r}") from None
        if any(k not in range(1, 9) for k in only):
            raise UsageError("criteria are numbered 1 to 8")
    results = run_all(seed=_opt(args, "seed", 0) or 0, threads=_opt(args, "threads", 1) or 1, only=only)
    text = "\n".join(r.line() for r in results)
    _emit(args, text)
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nhskin", description="Spectra and skin-effect phase diagrams of nonreciprocal chains.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(p)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        _global_flags(sp)
        sp.set_defaults(func=fn)
        return sp

    model_help = "model spec: path to a JSON file or inline JSON"
    s = add("spectrum", cmd_spectrum, "eigenvalues (and optionally eigenvectors) of one model")
    s.add_argument("--model", required=True, help=model_help)
    s.add_argument("--backend", choices=["qr", "lapack"], default="qr")
    s.add_argument("--vectors", help="write eigenvectors to this binary file")
    s.add_argument("--states", help="write per-state CSV (n, Re(E), Im(E), dipr)")
    s.add_argument("--delta", type=float, default=0.25, help="dIPR offset (default 0.25)")
    s.add_argument("--plot", help="render the spectrum to this image file")

    s = add("classify", cmd_classify, "predicted spectral class of an open chain")
    s.add_argument("--model", required=True, help=model_help)

    s = add("beta", cmd_beta, "|beta| and skin side from the unit-cell hoppings")
    s.add_argument("--model", required=True, help=model_help)

    s = add("critical", cmd_critical, "analytic |beta| = 1 curves as CSV polylines")
    s.add_argument("--model", required=True, help="template model (fixes the family, kappa and other parameters)")
    s.add_argument("--x-range", type=_pair, default=(-2.0, 2.0), help="range of the non-gamma parameter")
    s.add_argument("--gamma-range", type=_pair, default=(-1.5, 1.5))
    s.add_argument("--samples", type=int, default=201)

    s = add("winding", cmd_winding, "spectral winding number of the PBC bands")
    s.add_argument("--model", required=True, help=model_help)
    s.add_argument("--e0", type=_pair, help="reference energy re,im (default: deepest interior point)")
    s.add_argument("--nk", type=int, default=256)

    s = add("sweep", cmd_sweep, "phase diagram over two parameters")
    s.add_argument("--config", required=True, help="sweep config JSON")
    s.add_argument("--json", help="also write the full diagram as JSON")
    s.add_argument("--plot", help="render the dMIPR heatmap to this image file")

    s = add("verify", cmd_verify, "run the acceptance criteria")
    s.add_argument("--only", help="comma-separated criterion numbers")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if _opt(args, "threads") is not None and args.threads < 1:
        parser.error("--threads must be positive")
    if getattr(args, "nk", 256) < 64:
        parser.error("--nk must be at least 64")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except UsageError as exc:
        print(f"nhskin: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS as exc:
        print(f"nhskin: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"nhskin: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
