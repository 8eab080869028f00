#!/usr/bin/env python3

"""
Precision bounds and protocol simulations for estimating a Lorentz-violating kappa.

Subcommands compute the QFI of probe states, the QCRB curve and QFI scaling data,
NOON parity and Dicke J_x^2 protocol scans, and the conversion of a kappa precision
into a bound on C_0^(2). Data goes to --out (or standard output), logs go to standard
error. Every run that writes files also writes <out>.manifest.json with the parameters
and sha256 digests of its outputs.

Exit status: 0 on success, 1 if a computation failed, 2 on invalid arguments.
"""

# SPDX-License-Identifier: Apache-2.0

import argparse
import contextlib
import logging
import math
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pydantic

from lsv_metrology import FIG1_DEFAULTS, FIG2_DEFAULTS, FIT_MIN_POINTS, MIN_MOMENT_GRID_POINTS, __version__
from lsv_metrology.analysis import SensitivityInput, improvement_ratios, kappa_to_c02, power_law_fit, qcrb_curve
from lsv_metrology.errors import UnboundedPrecisionError
from lsv_metrology.metrology import FRAMES, EstimationContext, probe_qfi, qcrb, qfi_cat, qfi_dicke_fast
from lsv_metrology.protocols import GridSpec, moment_fit_terms, moment_scan, optimal_moment_sweep, parity_scan
from lsv_metrology.states import (
    SQRT_HALF,
    dicke_balanced,
    noon_state,
    paired_dfs_cat,
    product_state,
    twin_fock_superposition,
)
from lsv_metrology.utils import (
    dump_json,
    even_grid,
    file_digest,
    parallel_map,
    parse_spin,
    parse_sweep,
    render_csv,
    sibling_path,
    write_json,
    write_text,
)

log = logging.getLogger(__name__)

STATES = ["noon", "dicke", "pairs", "twinfock", "product"]
EVEN_STATES = ["dicke", "pairs", "twinfock"]


class RunManifest(pydantic.BaseModel):
    """Parameters, tool version, wall time and output digests of one CLI run."""

    command: str
    parameters: Dict[str, Any]
    version: str = __version__
    wall_time_s: float = pydantic.Field(ge=0)
    outputs: Dict[str, str]
    "file name to sha256 hex digest"


@contextlib.contextmanager
def _argument(flag: str):
    """Prefix value errors raised in the block with the offending flag."""
    try:
        yield
    except ValueError as e:
        raise ValueError(f"argument {flag}: {e}") from e


def _validated(model, **fields):
    """Construct a pydantic record, reporting the first invalid field as its CLI flag."""
    try:
        return model(**fields)
    except pydantic.ValidationError as e:
        error = e.errors()[0]
        flag = "--" + str(error["loc"][0]).replace("_", "-") if error["loc"] else "arguments"
        raise ValueError(f"argument {flag}: {error['msg']}") from e


class _Outputs:
    """Writes command outputs and the manifest that lists them."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.out: Optional[Path] = Path(args.out) if args.out else None
        self.written: List[Path] = []
        self.started = time.monotonic()

    def _emit(self, path: Optional[Path], text: str):
        if path is None:
            sys.stdout.write(text)
            return
        self.written.append(write_text(path, text))
        log.info("Wrote %s", path)

    def table(self, header: Sequence[str], rows: List[Sequence[Any]]):
        if self.args.format == "json":
            text = dump_json({"rows": [dict(zip(header, row)) for row in rows]})
        else:
            text = render_csv(header, rows)
        self._emit(self.out, text)

    def record(self, record: Dict[str, Any], suffix: Optional[str] = None):
        if suffix is None:
            self._emit(self.out, dump_json(record))
        else:
            self._emit(sibling_path(self.out, suffix), dump_json(record))

    def finish(self) -> int:
        if self.out is not None:
            parameters = {
                key: str(value) if isinstance(value, Path) else value
                for key, value in vars(self.args).items()
                if key != "func"
            }
            manifest = RunManifest(
                command=self.args.subcommand,
                parameters=parameters,
                wall_time_s=time.monotonic() - self.started,
                outputs={path.name: file_digest(path) for path in self.written},
            )
            path = write_json(sibling_path(self.out, ".manifest.json"), manifest.model_dump())
            log.debug("Wrote manifest %s listing %d outputs", path, len(self.written))
        return 0


def _context(args: argparse.Namespace, N: int = 1) -> EstimationContext:
    return _validated(EstimationContext, T=args.T, nu=args.nu, N=N)


def _parse_amps(text: str) -> Tuple[complex, complex, complex]:
    items = [complex(item.strip().replace("i", "j")) for item in text.split(",")]
    if len(items) != 3:
        raise ValueError(f"expected three comma-separated amplitudes for m=+1,0,-1, got {text!r}")
    return items[0], items[1], items[2]


def _check_particles(N: int, even: bool):
    if even and (N < 2 or N % 2):
        raise ValueError(f"N must be even and at least 2, got {N}")
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")


def _state_qfi(args: argparse.Namespace) -> Tuple[Fraction, float]:
    """Return the spin j and the QFI of the probe selected by --state."""
    spin_one = args.state != "pairs"
    with _argument("--j"):
        j = parse_spin(args.j) if args.j is not None else Fraction(1 if spin_one else Fraction(7, 2))
        if spin_one and j != 1:
            raise ValueError(f"--state {args.state} is built from spin-1 particles, got j={j}")
    with _argument("--n"):
        _check_particles(args.n, args.state in EVEN_STATES)

    if args.state == "noon":
        return j, qfi_cat(noon_state(args.n))
    if args.state == "twinfock":
        return j, qfi_cat(twin_fock_superposition(args.n))
    if args.state == "dicke":
        return j, qfi_dicke_fast(args.n, frame=args.frame)
    if args.state == "pairs":
        m_hi = args.m_hi if args.m_hi is not None else j
        m_lo = args.m_lo if args.m_lo is not None else (Fraction(0) if j.denominator == 1 else Fraction(1, 2))
        with _argument("--m-hi/--m-lo"):
            cat = paired_dfs_cat(args.n, j=j, m_hi=m_hi, m_lo=m_lo)
        return j, qfi_cat(cat)
    with _argument("--amps"):
        amps = _parse_amps(args.amps) if args.amps else (SQRT_HALF, SQRT_HALF, 0)
        state = product_state(args.n, amps)
    return j, probe_qfi(state, frame=args.frame)


def qfi_command_handler(args: argparse.Namespace) -> int:
    """Handle the qfi subcommand."""
    outputs = _Outputs(args)
    ctx = _context(args, N=max(args.n, 1))
    j, qfi = _state_qfi(args)
    bound = None
    if qfi > 0:
        bound = qcrb(qfi, ctx)
    else:
        log.warning("State %s is an eigenstate of the generator, the QCRB is undefined", args.state)
    outputs.record(
        {
            "state": args.state,
            "N": args.n,
            "j": str(j),
            "frame": args.frame,
            "F_Q": qfi,
            "qcrb": bound,
            "T": ctx.T,
            "nu": ctx.nu,
        }
    )
    return outputs.finish()


def fig1_command_handler(args: argparse.Namespace) -> int:
    """Handle the fig1 subcommand: SQL, HL and Dicke QCRB per even N."""
    outputs = _Outputs(args)
    ctx = _context(args)
    with _argument("--n-min/--n-max/--points"):
        even_grid(args.n_min, args.n_max, args.points)
    rows = qcrb_curve(args.n_min, args.n_max, args.points, ctx, frame=args.frame, pbar=args.progress)
    last = rows[-1]
    log.info("Dicke QCRB in the %s frame, %.3g dB over the SQL at N=%d", args.frame, last.improvement_db, last.N)
    header = ["N", "dk_sql", "dk_hl", "dk_dicke", "improvement_db"]
    outputs.table(header, [[row.N, row.dk_sql, row.dk_hl, row.dk_dicke, row.improvement_db] for row in rows])
    return outputs.finish()


def fig2_command_handler(args: argparse.Namespace) -> int:
    """Handle the fig2 subcommand: Dicke QFI per even N and its power law fit."""
    outputs = _Outputs(args)
    with _argument("--n-min/--n-max/--points"):
        grid = even_grid(args.n_min, args.n_max, args.points)
        if len(grid) < FIT_MIN_POINTS:
            raise ValueError(f"power law fit needs at least {FIT_MIN_POINTS} values of N, got {len(grid)}")

    values = parallel_map(lambda N: qfi_dicke_fast(N, frame=args.frame), grid, desc="Dicke QFI", pbar=args.progress)
    fit = power_law_fit(list(zip(grid, values)))
    log.info("Dicke QFI scales as %.4g * N^%.4f (R^2 = %.6f, frame %s)", fit.prefactor, fit.gamma, fit.r2, args.frame)

    outputs.table(["N", "fq_dicke"], [[N, value] for N, value in zip(grid, values)])
    outputs.record(
        {
            "a": fit.prefactor,
            "gamma": fit.gamma,
            "r2": fit.r2,
            "n_range": list(fit.n_range),
            "points": fit.points,
            "frame": args.frame,
        },
        ".fit.json",
    )
    return outputs.finish()


def parity_command_handler(args: argparse.Namespace) -> int:
    """Handle the parity subcommand: simulated vs. closed-form NOON parity."""
    outputs = _Outputs(args)
    with _argument("--n"):
        _check_particles(args.n, even=False)
    grid = _validated(GridSpec, kt_min=args.kt_min, kt_max=args.kt_max, points=args.points, refine=False)
    scan = parity_scan(args.n, grid, pbar=args.progress)
    header = ["kt", "parity_sim", "parity_closed_form", "abs_diff"]
    outputs.table(header, [[p.kt, p.parity_sim, p.parity_closed_form, p.abs_diff] for p in scan.points])
    return outputs.finish()


def _moment_grid(args: argparse.Namespace) -> GridSpec:
    return _validated(GridSpec, kt_min=args.kt_min, kt_max=args.kt_max, points=args.points, refine=not args.no_refine)


def moment_command_handler(args: argparse.Namespace) -> int:
    """Handle the moment subcommand: J_x^2 protocol on the balanced Dicke state."""
    outputs = _Outputs(args)
    ctx = _context(args)
    grid = _moment_grid(args)

    if args.sweep is not None:
        with _argument("--sweep"):
            Ns = parse_sweep(args.sweep)
            for N in Ns:
                _check_particles(N, even=True)
            if len(Ns) < FIT_MIN_POINTS:
                raise ValueError(f"power law fit needs at least {FIT_MIN_POINTS} values of N, got {len(Ns)}")
        sweep = optimal_moment_sweep(Ns, ctx, grid, pbar=args.progress)
        rows = [[r.N, r.kt, r.delta_kappa, qcrb(qfi_dicke_fast(r.N), ctx)] for r in sweep.optima]
        outputs.table(["N", "kt", "dk", "qcrb"], rows)
        a, b = moment_fit_terms(sweep.fit)
        log.info("Optimal J_x^2 precision scales as %.4g / N^%.4f", a, b)
        outputs.record(
            {
                "a": a,
                "b": b,
                "gamma": sweep.fit.gamma,
                "r2": sweep.fit.r2,
                "n_range": list(sweep.fit.n_range),
                "points": sweep.fit.points,
            },
            ".fit.json",
        )
        return outputs.finish()

    with _argument("--n"):
        _check_particles(args.n, even=True)
    ctx = ctx.model_copy(update={"N": args.n})
    scan = moment_scan(dicke_balanced(args.n), grid, ctx, pbar=args.progress)
    if scan.optimum is None:
        raise UnboundedPrecisionError(f"Every grid point has a vanishing slope for N={args.n}")
    rows = [[p.kt, p.mean_jx2, p.var_jx2, p.slope, p.delta_kappa] for p in scan.points]
    outputs.table(["kt", "mean_jx2", "var_jx2", "slope", "dk"], rows)
    optimum = scan.optimum.model_dump()
    optimum["qcrb"] = qcrb(qfi_dicke_fast(args.n), ctx)
    outputs.record(optimum, ".optimum.json")
    return outputs.finish()


def sensitivity_command_handler(args: argparse.Namespace) -> int:
    """Handle the sensitivity subcommand: kappa precision to a C_0^(2) bound."""
    outputs = _Outputs(args)
    inp = _validated(
        SensitivityInput,
        delta_kappa_over_2pi=args.delta_kappa_over_2pi,
        energy_ratio=args.energy_ratio,
        jz2_fluct=args.jz2_fluct,
    )
    record: Dict[str, Any] = {"c02_bound": kappa_to_c02(inp), **inp.model_dump()}
    if args.n is not None:
        with _argument("--n"):
            record["improvement"] = improvement_ratios(args.n).model_dump()
    outputs.record(record)
    return outputs.finish()


def add_common_arguments(parser: argparse.ArgumentParser, out_required: bool = False):
    """Add arguments shared by all subcommands."""
    parser.add_argument(
        "--out",
        type=Path,
        required=out_required,
        help="Output file; sibling files and <out>.manifest.json are written next to it"
        + ("" if out_required else " (default: standard output, no manifest)"),
    )
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default="WARNING",
        help="Set the logging level (default: %(default)s)",
    )
    parser.add_argument("--progress", action="store_true", help="Show progress bars on standard error")


def add_estimation_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--T", type=float, default=1.0, help="Probe duration T in seconds (default: %(default)s)")
    parser.add_argument("--nu", type=int, default=1, help="Number of experimental trials (default: %(default)s)")


def add_format_argument(parser: argparse.ArgumentParser):
    parser.add_argument(
        "--format", choices=["csv", "json"], default="csv", help="Table serialization (default: %(default)s)"
    )


def add_frame_argument(parser: argparse.ArgumentParser, default: str):
    parser.add_argument(
        "--frame",
        choices=FRAMES,
        default=default,
        help="Generator frame of the Dicke state: lab uses sum (j_z)^2, ramsey sum (j_y)^2 (default: %(default)s)",
    )


def add_qfi_parser(subparsers):
    """Add qfi subcommand parser."""
    parser = subparsers.add_parser("qfi", description="QFI and QCRB of a probe state as one JSON record")
    parser.set_defaults(func=qfi_command_handler)
    parser.add_argument("--state", choices=STATES, required=True, help="Probe state")
    parser.add_argument("--n", type=int, required=True, help="Particle count N")
    parser.add_argument("--j", help="Single-particle spin, e.g. 7/2 (default: 1, or 7/2 for pairs)")
    parser.add_argument("--m-hi", help="Magnetic number of the first pair branch (default: j)")
    parser.add_argument("--m-lo", help="Magnetic number of the second pair branch (default: 1/2 or 0)")
    parser.add_argument(
        "--amps", help="Single-particle amplitudes m=+1,0,-1 of the product state (default: 0.7071,0.7071,0)"
    )
    add_frame_argument(parser, "lab")
    add_estimation_arguments(parser)
    add_common_arguments(parser)


def add_fig1_parser(subparsers):
    """Add fig1 subcommand parser."""
    parser = subparsers.add_parser("fig1", description="SQL, HL and Dicke-state QCRB over log-spaced even N")
    parser.set_defaults(func=fig1_command_handler)
    parser.add_argument("--n-min", type=int, default=FIG1_DEFAULTS[0], help="Smallest N (default: %(default)s)")
    parser.add_argument("--n-max", type=int, default=FIG1_DEFAULTS[1], help="Largest N (default: %(default)s)")
    parser.add_argument(
        "--points", type=int, default=FIG1_DEFAULTS[2], help="Number of N values (default: %(default)s)"
    )
    add_frame_argument(parser, "lab")
    add_estimation_arguments(parser)
    add_format_argument(parser)
    add_common_arguments(parser)


def add_fig2_parser(subparsers):
    """Add fig2 subcommand parser."""
    parser = subparsers.add_parser("fig2", description="Dicke-state QFI over log-spaced even N and its power law fit")
    parser.set_defaults(func=fig2_command_handler)
    parser.add_argument("--n-min", type=int, default=FIG2_DEFAULTS[0], help="Smallest N (default: %(default)s)")
    parser.add_argument("--n-max", type=int, default=FIG2_DEFAULTS[1], help="Largest N (default: %(default)s)")
    parser.add_argument(
        "--points", type=int, default=FIG2_DEFAULTS[2], help="Number of N values (default: %(default)s)"
    )
    add_frame_argument(parser, "ramsey")
    add_format_argument(parser)
    add_common_arguments(parser, out_required=True)


def add_parity_parser(subparsers):
    """Add parity subcommand parser."""
    parser = subparsers.add_parser("parity", description="Simulated and closed-form NOON parity over kappa t")
    parser.set_defaults(func=parity_command_handler)
    parser.add_argument("--n", type=int, required=True, help="Particle count N")
    parser.add_argument("--kt-min", type=float, default=0.0, help="First kappa t (default: %(default)s)")
    parser.add_argument("--kt-max", type=float, default=math.pi, help="Last kappa t (default: %(default)s)")
    parser.add_argument("--points", type=int, default=64, help="Number of kappa t values (default: %(default)s)")
    add_format_argument(parser)
    add_common_arguments(parser)


def add_moment_parser(subparsers):
    """Add moment subcommand parser."""
    parser = subparsers.add_parser(
        "moment", description="J_x^2 error-propagation precision of the balanced Dicke state over kappa t"
    )
    parser.set_defaults(func=moment_command_handler)
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--n", type=int, help="Particle count N of a single scan")
    group.add_argument("--sweep", help="Particle counts of an optimum sweep, e.g. 10:60:even or 10,20,40")
    parser.add_argument(
        "--kt-min", type=float, default=0.0, help="First kappa t, 0 excludes kappa t = 0 (default: %(default)s)"
    )
    parser.add_argument("--kt-max", type=float, default=math.pi / 2, help="Last kappa t (default: %(default)s)")
    parser.add_argument(
        "--points", type=int, default=MIN_MOMENT_GRID_POINTS, help="Number of kappa t values (default: %(default)s)"
    )
    parser.add_argument("--no-refine", action="store_true", help="Skip the golden-section refinement of the optimum")
    add_estimation_arguments(parser)
    add_format_argument(parser)
    add_common_arguments(parser, out_required=True)


def add_sensitivity_parser(subparsers):
    """Add sensitivity subcommand parser."""
    parser = subparsers.add_parser("sensitivity", description="Convert a kappa/2pi precision into a C_0^(2) bound")
    parser.set_defaults(func=sensitivity_command_handler)
    parser.add_argument("--delta-kappa-over-2pi", type=float, required=True, help="Precision of kappa/2pi in Hz")
    parser.add_argument(
        "--energy-ratio",
        type=float,
        default=8.6e15,
        help="Delta E / (h C_0^(2)) of the transition in Hz (default: %(default)s)",
    )
    parser.add_argument("--jz2-fluct", type=float, default=1.0, help="Delta(j_z^2) of the probe (default: %(default)s)")
    parser.add_argument("--n", type=int, help="Also report SQL and HL gain factors at this particle count")
    add_common_arguments(parser)


def parse_args(args_override: list = None):
    """Parse command-line arguments."""
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="subcommand")
    subparsers.required = True

    add_qfi_parser(subparsers)
    add_fig1_parser(subparsers)
    add_fig2_parser(subparsers)
    add_parity_parser(subparsers)
    add_moment_parser(subparsers)
    add_sensitivity_parser(subparsers)

    return parser.parse_args(args_override)


def main(args_override: list = None) -> int:
    """Run one subcommand and return its exit status."""

    args = parse_args(args_override)

    if args.log_level == "DEBUG":
        logging.basicConfig(
            level=args.log_level,
            format="[%(levelname)-7s] %(asctime)s %(name)s:%(lineno)d %(message)s",
        )
    elif args.log_level == "INFO":
        logging.basicConfig(
            level=args.log_level,
            format="[%(levelname)-7s] %(message)s",
        )
    else:
        logging.basicConfig(
            level=args.log_level,
            format="%(message)s",
        )

    try:
        return args.func(args)
    except ValueError as e:
        log.error("error: %s", e)
        log.debug("Exception with stack trace:", exc_info=True)
        return 2
    except (RuntimeError, OSError) as e:
        log.error("Aborting with exception %s", e)
        log.debug("Exception with stack trace:", exc_info=True)
    return 1


if __name__ == "__main__":
    app_status = main()
    log.info("Exit lsv-metrology with status %d", app_status)
    sys.exit(app_status)
