"""Command line entry point ``fsewald``.

Exit codes: 0 success, 2 invalid or infeasible parameters, 3 I/O failure.
"""
import argparse
import json
import logging
import sys

import numba

from ..core import KernelDomainError, KernelKind, ParameterError
from ..estimates import error_budget, reference_rms
from .runner import RunSpec, build_config, generate_system, obtain_green, run, sweep_xi

EXIT_OK, EXIT_PARAM, EXIT_IO = 0, 2, 3

log = logging.getLogger("fsewald")


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kernel", choices=[k.name.lower() for k in KernelKind], default="stokeslet")
    common.add_argument("--n", type=int, default=1000, help="number of sources")
    size = common.add_mutually_exclusive_group()
    size.add_argument("--box", type=float, help="side L of the source cube")
    size.add_argument("--density", type=float, help="sources per unit volume; sets L = (n/density)^(1/3)")
    common.add_argument("--xi", type=float, help="Ewald splitting parameter (default: density heuristic)")
    common.add_argument("--tol", type=float, help="target relative RMS error")
    common.add_argument("--rc", type=float, help="real-space cut-off radius")
    common.add_argument("--grid-m", type=int, dest="M", help="grid intervals across the box")
    common.add_argument("--support-p", type=int, dest="P", help="Gaussian support in grid points (even)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--oracle-cap", type=int, default=50_000,
                        help="largest n checked against direct summation")
    common.add_argument("--repeats", type=int, default=3, help="timed repetitions after the warm-up")
    common.add_argument("--deterministic", action="store_true",
                        help="single-chunk gridding for bitwise-reproducible output")
    common.add_argument("--threads", type=int, help="worker threads for compiled loops and FFTs")
    common.add_argument("--out", help="report file (default: stdout)")
    common.add_argument("--cache-dir", help="directory for precomputed Green's function files")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="fsewald", description="Free-space spectral Ewald sums for Stokes potentials.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="one timed run with error against the direct sum")
    sw = sub.add_parser("sweep", parents=[common], help="repeat a run over values of one parameter")
    sw.add_argument("--axis", choices=("P", "M", "rc", "N", "xi"), required=True)
    sw.add_argument("--values", type=_floats, required=True, help="comma-separated, ascending")
    tu = sub.add_parser("tune", parents=[common],
                        help="choose rc, M, P for a tolerance; optionally time a range of xi")
    tu.add_argument("--xi-values", type=_floats, help="xi candidates to time (first one is the baseline)")
    sub.add_parser("precompute", parents=[common], help="build and cache the mollified Green's function")
    return p


def _spec(args, **extra) -> RunSpec:
    box, density = args.box, args.density
    if box is None and density is None:
        box = 1.0
    tol = args.tol
    if tol is None and None in (args.rc, args.M, args.P):
        tol = 1e-8
    return RunSpec(kernel=args.kernel, n=args.n, box=box, density=density, seed=args.seed, xi=args.xi,
                   tol=tol, rc=args.rc, M=args.M, P=args.P, oracle_cap=args.oracle_cap,
                   repeats=args.repeats, deterministic=args.deterministic, cache_dir=args.cache_dir,
                   **extra)


def _emit(text: str, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(args) -> str:
    if args.format:
        return args.format
    return "json" if args.out and args.out.lower().endswith(".json") else "csv"


def _tune(args) -> int:
    spec = _spec(args)
    if args.xi_values:
        report = sweep_xi(spec, args.xi_values)
        _emit(report.to_json() if _fmt(args) == "json" else report.to_csv(), args.out)
        return EXIT_OK
    system = generate_system(spec.kernel, spec.n, spec.box_for(spec.n), spec.seed)
    cfg = build_config(spec, system)
    ref = reference_rms(system.kind, system.n, system.box, system.q)
    budget = error_budget(system.kind, system.q, cfg)
    out = dict(cfg.as_dict(), predicted_real_rms=budget.predicted_real_rms,
               predicted_fourier_rms=budget.predicted_fourier_rms,
               predicted_gridding_rms=budget.predicted_gridding_rms,
               predicted_rel_error=budget.predicted_total_rms / ref)
    if _fmt(args) == "json":
        _emit(json.dumps(out, indent=2) + "\n", args.out)
    else:
        _emit(",".join(out) + "\n" + ",".join(str(v) for v in out.values()) + "\n", args.out)
    return EXIT_OK


def _precompute(args) -> int:
    if not args.cache_dir:
        raise ParameterError("precompute needs --cache-dir")
    spec = _spec(args)
    system = generate_system(spec.kernel, spec.n, spec.box_for(spec.n), spec.seed)
    cfg = build_config(spec, system)
    green, secs, cached = obtain_green(system.kind, cfg, args.cache_dir)
    info = {"kind": green.kind.name.lower(), "M_ext": green.m_ext, "L_ext": green.L_ext,
            "h": green.h, "R": green.R, "seconds": secs, "cached": cached}
    _emit(json.dumps(info) + "\n", args.out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARAM if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.threads is not None:
            if not 1 <= args.threads <= numba.config.NUMBA_NUM_THREADS:
                raise ParameterError(f"--threads must be in [1, {numba.config.NUMBA_NUM_THREADS}]")
            numba.set_num_threads(args.threads)
        if args.command == "tune":
            return _tune(args)
        if args.command == "precompute":
            return _precompute(args)
        extra = {"axis": args.axis, "values": args.values} if args.command == "sweep" else {}
        report = run(_spec(args, **extra))
        if args.out:
            report.write(args.out, _fmt(args))
            log.info("wrote %s", args.out)
        else:
            _emit(report.to_json() if _fmt(args) == "json" else report.to_csv(), None)
        return EXIT_OK
    except (ParameterError, KernelDomainError) as exc:
        print(f"fsewald: parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except OSError as exc:
        print(f"fsewald: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except MemoryError:
        print("fsewald: parameter error: grid too large for available memory", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
