"""Command-line front end.

Structured artifacts (instances, schemes, reports) are JSON, sweeps are CSV
and tables go through rich. Exit codes: 0 success, 2 invalid input, 3
verification or invariant failure, 4 capacity cap exceeded.
"""

import argparse
import sys
from collections.abc import Sequence
from fractions import Fraction
from pathlib import Path

from pydantic import BaseModel, ValidationError
from rich.console import Console
from rich.table import Table

from app.alignment import adaptive_walk
from app.bounds import bound_consistency, eval_bounds
from app.channel import ChannelInstance, sample_generic_instance, sample_instance, t_family
from app.errors import InputError, UnsupportedError, WorkbenchError
from app.logger import get_logger, set_level
from app.models import BoundTable, Scheme, SchemeDocument
from app.schemes import build_chain_scheme, build_orthogonal_scheme, load_pattern, random_search
from app.selftest import results_table, run_selftest
from app.subspace import parse_rational
from app.sweep import load_sweep_config, run_sweep, write_csv
from app.verify import (
    check_sparsity_requirement,
    check_width_requirement,
    grid_witness,
    scheme_from_document,
    scheme_to_document,
    verify_decoding,
)

logger = get_logger(__name__)

console = Console()

EXIT_OK = 0
EXIT_FAILED = 3


# ============================================================================
# Input / output helpers
# ============================================================================


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _read(path: Path) -> str:
    try:
        return path.read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e


def load_instance(path: Path) -> ChannelInstance:
    return ChannelInstance.model_validate_json(_read(path))


def load_scheme(path: Path) -> Scheme:
    return scheme_from_document(SchemeDocument.model_validate_json(_read(path)))


def _emit(model: BaseModel, out: Path | None) -> None:
    text = model.model_dump_json(indent=2)
    if out is None:
        print(text)
    else:
        out.write_text(text + "\n")
        logger.info("Wrote %s", out)


# ============================================================================
# Subcommands
# ============================================================================


def cmd_gen(args: argparse.Namespace) -> int:
    sample = sample_generic_instance if args.generic else sample_instance
    _emit(sample(args.k, args.l, args.t, args.bits, args.seed), args.out)
    return EXIT_OK


def cmd_scheme(args: argparse.Namespace) -> int:
    if args.kind == "orthogonal":
        if args.instance is not None:
            instance = load_instance(args.instance)
            k, l, t = instance.k, instance.l, instance.t
        elif args.k is None or args.l is None:
            raise InputError("orthogonal schemes need --k and --l (or an instance file)")
        else:
            k, l, t = args.k, args.l, args.t
        d = t * l // k if args.d is None else args.d
        scheme = build_orthogonal_scheme(k, l, t, d)
    else:
        if args.instance is None or args.pattern is None:
            raise InputError("chain schemes need an instance file and --pattern")
        scheme = build_chain_scheme(load_instance(args.instance), load_pattern(args.pattern))
    _emit(scheme_to_document(scheme), args.out)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    report = verify_decoding(instance, load_scheme(args.scheme))
    _emit(report, args.out)
    return EXIT_OK if report.feasible else EXIT_FAILED


def _widths_table(instance: ChannelInstance, scheme: Scheme) -> tuple[Table, bool]:
    report = check_width_requirement(instance, scheme)
    table = Table(title=f"width requirement (eps = {report.eps})")
    for column in ("user", "map", "width", "bound", "status"):
        table.add_column(column)
    for c in report.checks:
        table.add_row(
            str(c.i), f"T_{c.i}{c.j}{c.k}", str(c.width), str(c.bound), "ok" if c.passed else "FAIL"
        )
    if not report.applicable:
        table.caption = "not applicable: per-user dimensions differ"
    return table, report.all_pass


def _sparsity_table(instance: ChannelInstance, scheme: Scheme) -> tuple[Table, bool]:
    report = check_sparsity_requirement(instance, scheme)
    table = Table(title=f"sparsity requirement (eps = {report.eps})")
    for column in ("user", "N", "sp_N", "bound", "status"):
        table.add_column(column)
    for c in report.checks:
        status = "ok" if c.passed else "FAIL"
        if c.heuristic:
            status += " (heuristic)"
        table.add_row(str(c.i), str(c.n), str(c.sp), str(c.bound), status)
    if not report.applicable:
        table.caption = "not applicable: per-user dimensions differ"
    return table, report.all_pass


def cmd_analyze(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    scheme = load_scheme(args.scheme)
    if args.what == "witness":
        if instance.k < 4 or instance.t != 1:
            raise UnsupportedError("the grid witness needs k ≥ 4 and t = 1")
        report = verify_decoding(instance, scheme)
        eps = args.eps if args.eps is not None else report.eps
        if eps is None:
            raise InputError("--eps is required for schemes with unequal dimensions")
        family = t_family(instance)
        witness = grid_witness(
            scheme.subspace(args.user),
            family.members[0],
            family.members[1],
            args.n,
            eps,
            instance.l,
        )
        _emit(witness, args.out)
        return EXIT_OK if witness.inequality_holds else EXIT_FAILED

    build = _widths_table if args.what == "widths" else _sparsity_table
    table, passed = build(instance, scheme)
    console.print(table)
    return EXIT_OK if passed else EXIT_FAILED


def bounds_table(table: BoundTable) -> Table:
    rendered = Table(title=f"bounds for K={table.k}, L={table.l}, T={table.t}")
    for column in ("bound", "exact", "lower", "upper", "decimal"):
        rendered.add_column(column)
    for name in (
        "bresler_eq1",
        "cj_eq2",
        "thm1",
        "thm2",
        "thm3",
        "thm4_l_min",
        "thm5_l_min",
        "thm6_l_min",
    ):
        value = getattr(table, name)
        if value is None:
            continue
        exact = "" if value.exact is None else str(value.exact)
        rendered.add_row(name, exact, str(value.lower), str(value.upper), value.decimal)
    rendered.caption = f"m = {table.m}, N = {table.cj_n}, C = {table.c}"
    return rendered


def cmd_bounds(args: argparse.Namespace) -> int:
    table = eval_bounds(args.k, args.l, args.t, args.eps, args.c)
    if args.json:
        _emit(table, args.out)
    else:
        console.print(bounds_table(table))
    if args.instance is not None and args.scheme is not None:
        report = verify_decoding(load_instance(args.instance), load_scheme(args.scheme))
        if report.feasible and not all(bound_consistency(report, table).values()):
            return EXIT_FAILED
    return EXIT_OK


def cmd_walk(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    scheme = load_scheme(args.scheme)
    family = t_family(instance)
    s = args.s if args.s else range(1, family.m + 1)
    result = adaptive_walk(
        scheme.subspace(args.user),
        family,
        s,
        args.a,
        mode=args.mode,
        check_sparsity=not args.no_sparsity,
    )
    _emit(result, args.out)
    guarantees = (result.dim_guarantee, result.width_guarantee, result.sparsity_guarantee)
    return EXIT_FAILED if False in guarantees else EXIT_OK


def cmd_search(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    result = random_search(instance, args.d, args.restarts, args.seed, args.parallel)
    logger.info(
        "Search finished after %s trials: %s",
        result.stats.trials,
        "found" if result.scheme is not None else "no feasible scheme",
    )
    if result.scheme is not None and args.out is not None:
        _emit(scheme_to_document(result.scheme), args.out)
    else:
        _emit(result, None)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    sweep = load_sweep_config(args.config)
    if args.parallel is not None:
        sweep = sweep.model_copy(update={"parallel": args.parallel})
    rows = run_sweep(sweep)
    out = args.out or sweep.output
    if out is None:
        write_csv(rows, sys.stdout)
    else:
        with open(out, "w", newline="") as f:
            write_csv(rows, f)
        logger.info("Wrote %s rows to %s", len(rows), out)
    return EXIT_OK


def cmd_selftest(args: argparse.Namespace) -> int:
    results = run_selftest(quick=args.quick)
    console.print(results_table(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


# ============================================================================
# Parser
# ============================================================================


def _add_shape(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--k", type=int, required=required, help="number of users")
    parser.add_argument("--l", type=int, required=required, help="channel diversity")
    parser.add_argument("--t", type=int, default=1, help="coherence length")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iawidth", description="Exact interference alignment workbench"
    )
    parser.add_argument("--verbose", action="store_true", help="log at DEBUG level")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="sample a channel instance")
    _add_shape(gen)
    gen.add_argument("--bits", type=int, default=None)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--generic", action="store_true", help="resample degenerate draws")
    gen.add_argument("--out", type=Path)
    gen.set_defaults(handler=cmd_gen)

    scheme = sub.add_parser("scheme", help="build a scheme")
    scheme.add_argument("kind", choices=["orthogonal", "chain"])
    scheme.add_argument("instance", type=Path, nargs="?")
    _add_shape(scheme, required=False)
    scheme.add_argument("--d", type=int)
    scheme.add_argument("--pattern", type=Path)
    scheme.add_argument("--out", type=Path)
    scheme.set_defaults(handler=cmd_scheme)

    verify = sub.add_parser("verify", help="check the decoding condition")
    verify.add_argument("instance", type=Path)
    verify.add_argument("scheme", type=Path)
    verify.add_argument("--out", type=Path)
    verify.set_defaults(handler=cmd_verify)

    analyze = sub.add_parser("analyze", help="necessary-condition checks")
    analyze.add_argument("what", choices=["widths", "sparsity", "witness"])
    analyze.add_argument("instance", type=Path)
    analyze.add_argument("scheme", type=Path)
    analyze.add_argument("--user", type=int, default=2)
    analyze.add_argument("--n", type=int, default=1, help="N for the grid witness")
    analyze.add_argument("--eps", type=_rational)
    analyze.add_argument("--out", type=Path)
    analyze.set_defaults(handler=cmd_analyze)

    bounds = sub.add_parser("bounds", help="evaluate the closed-form bounds")
    _add_shape(bounds)
    bounds.add_argument("--eps", type=_rational)
    bounds.add_argument("--c", type=_rational, default=Fraction(1))
    bounds.add_argument("--json", action="store_true")
    bounds.add_argument("--instance", type=Path, help="check a scheme's DoF against the table")
    bounds.add_argument("--scheme", type=Path)
    bounds.add_argument("--out", type=Path)
    bounds.set_defaults(handler=cmd_bounds)

    walk = sub.add_parser("walk", help="adaptive extension/contraction walk")
    walk.add_argument("instance", type=Path)
    walk.add_argument("scheme", type=Path)
    walk.add_argument("--user", type=int, default=2)
    walk.add_argument("--a", type=_rational, nargs="+", required=True, help="thresholds")
    walk.add_argument("--s", type=int, nargs="*", help="usable family indices (1-based)")
    walk.add_argument("--mode", choices=["extension", "contraction"], default="extension")
    walk.add_argument("--no-sparsity", action="store_true")
    walk.add_argument("--out", type=Path)
    walk.set_defaults(handler=cmd_walk)

    search = sub.add_parser("search", help="seeded random scheme search")
    search.add_argument("instance", type=Path)
    search.add_argument("--d", type=int, required=True)
    search.add_argument("--restarts", type=int, default=100)
    search.add_argument("--seed", type=int, default=0)
    search.add_argument("--parallel", type=int, default=1)
    search.add_argument("--out", type=Path, help="write the found scheme here")
    search.set_defaults(handler=cmd_search)

    sweep = sub.add_parser("sweep", help="run a parameter sweep to CSV")
    sweep.add_argument("--config", type=Path, required=True)
    sweep.add_argument("--parallel", type=int)
    sweep.add_argument("--out", type=Path)
    sweep.set_defaults(handler=cmd_sweep)

    selftest = sub.add_parser("selftest", help="run the invariant suite")
    selftest.add_argument("--quick", action="store_true")
    selftest.set_defaults(handler=cmd_selftest)

    return parser


def run_command(argv: Sequence[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 2
    if args.verbose:
        set_level("DEBUG")
    try:
        return args.handler(args)
    except WorkbenchError as e:
        logger.error("%s: %s", type(e).__name__, e.message)
        print(f"error: {e.message}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        logger.error("Invalid document: %s", e)
        print(f"error: invalid document ({e.error_count()} errors)", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))
