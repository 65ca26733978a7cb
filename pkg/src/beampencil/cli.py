"""Command-line entry point.

Exit codes: 0 success, 2 when a verified theorem fails, 1 for usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .assembly import AssemblyError, assemble_pencil
from .eigen import (
    NearSingularWarning,
    NotConvergedError,
    ReductionError,
    compute_spectrum,
    inertia_index,
    reconstruct_eigenfunction,
)
from .oscillation import locate_zeros
from .problem import BoundaryKind, ConfigError, load_problem
from .sturm import DisconjugacyError, NotAdmissibleError, admissible_sup, sigma_solution, transform_pencil
from .verify import DEFAULT_TOL, run_verification, spectrum_for

log = logging.getLogger("beampencil")

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(obj, out):
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_spectrum(args, spec, mesh, options):
    sp = compute_spectrum(spec, mesh)
    out = sp.to_json()
    out["negative_converged"] = sp.neg_converged.tolist()
    out["positive_converged"] = sp.pos_converged.tolist()
    out["problem"] = spec.to_json()
    return out, EXIT_OK


def cmd_inertia(args, spec, mesh, options):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NearSingularWarning)
        ind = inertia_index(assemble_pencil(spec, mesh), args.lam)
    near = any(issubclass(w.category, NearSingularWarning) for w in caught)
    if near:
        log.warning("A - lambda*B is near-singular at lambda=%r", args.lam)
    return {"lambda": args.lam, "ind": ind, "n_elements": mesh.n_elements, "near_singular": near}, EXIT_OK


def cmd_admissible(args, spec, mesh, options):
    return admissible_sup(spec.p, mesh).to_json(), EXIT_OK


def cmd_transform(args, spec, mesh, options):
    prof = sigma_solution(spec.p, args.lam, admissible_sup(spec.p, mesh))
    model = transform_pencil(spec, args.lam, prof)
    out = model.to_json(args.stride)
    out.update(omega=prof.omega, sigma_choice=prof.choice)
    return out, EXIT_OK


def cmd_oscillation(args, spec, mesh, options):
    if args.index == 0:
        raise ConfigError("--index must be nonzero")
    ef = reconstruct_eigenfunction(compute_spectrum(spec, mesh), args.index, options.samples)
    out = locate_zeros(ef).to_json()
    out.update(index=args.index, **{"lambda": ef.lam})
    return out, EXIT_OK


def _write_eigenfunctions(directory, spec, mesh, options, pair):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    specs = [spec.with_bc(bc) for bc in BoundaryKind] if pair else [spec]
    for s in specs:
        sp = spectrum_for(s, mesh, DEFAULT_TOL)
        counts = sp.converged_count
        indices = [-(k + 1) for k in range(min(5, counts["negative"]))]
        if counts["positive"]:
            indices.append(1)
        for idx in indices:
            ef = reconstruct_eigenfunction(sp, idx, options.samples)
            tag = f"n{-idx}" if idx < 0 else f"p{idx}"
            np.savetxt(directory / f"{s.bc.value}_{tag}.csv",
                       np.column_stack([ef.xs, ef.y, ef.dy, ef.ddy]),
                       delimiter=",", header="x,y,dy,ddy", comments="", fmt="%.17g")


def cmd_verify(args, spec, mesh, options):
    if args.seed is not None:
        options = type(options)(samples=options.samples, seed=args.seed)
    report = run_verification(spec, mesh, options, pair=args.pair)
    if args.emit_eigenfunctions:
        _write_eigenfunctions(args.emit_eigenfunctions, spec, mesh, options, args.pair)
    return report.to_json(timings=not args.no_timings), EXIT_FAIL if report.failed else EXIT_OK


def build_parser():
    parser = _Parser(prog="beampencil", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="JSON problem file")
        sp.add_argument("--out", help="write JSON here instead of stdout")
        sp.set_defaults(func=fn)
        return sp

    add("spectrum", cmd_spectrum, "signed spectrum with convergence flags")
    add("inertia", cmd_inertia, "negative index of inertia of T(lambda)").add_argument(
        "--lambda", dest="lam", type=float, required=True)
    add("admissible", cmd_admissible, "upper end of the admissible set Lambda(p)")
    tr = add("transform", cmd_transform, "tabulated model coefficients after the change of variable")
    tr.add_argument("--lambda", dest="lam", type=float, required=True)
    tr.add_argument("--stride", type=int, default=1, help="keep every k-th grid point")
    add("oscillation", cmd_oscillation, "interior zeros of one eigenfunction").add_argument(
        "--index", type=int, required=True, help="signed eigenvalue index, e.g. -3 or 1")
    ve = add("verify", cmd_verify, "run every theorem check and print the report")
    ve.add_argument("--pair", action="store_true", help="solve both boundary families and check interlacing")
    ve.add_argument("--emit-eigenfunctions", metavar="DIR", help="write x,y,dy,ddy CSV files here")
    ve.add_argument("--seed", type=int, help="override the config seed")
    ve.add_argument("--no-timings", action="store_true", help="omit the timings field")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "stride", 1) < 1:
        parser.error("--stride must be >= 1")
    try:
        spec, mesh, options = load_problem(args.config)
        result, code = args.func(args, spec, mesh, options)
    except (OSError, ConfigError, NotAdmissibleError, NotConvergedError, IndexError,
            AssemblyError, ReductionError, DisconjugacyError) as exc:
        print(f"beampencil: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(result, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
