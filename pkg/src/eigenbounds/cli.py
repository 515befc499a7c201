"""Command-line front end.

Subcommands::

    eigenbounds constants --domain K1 --degree 0 --refine 5 --mode rigorous --format json
    eigenbounds neumann   --domain SQUARE --refine 4 --count 3
    eigenbounds table1    --refine 5 --format md --compact
    eigenbounds table3    --refine 3 --format csv --out table3.csv

Exit status: 0 on success, 2 if a rigorous run could not certify every
bound (results are still written, flagged ``certified=false``), 1 on usage,
configuration or I/O errors.  Output files are only opened once the
computation has finished.
"""
from __future__ import annotations

import argparse
import io
import sys

from .assembly import dump_matrix, projection_pencil
from .bounds import (
    AssemblyCache,
    RunConfig,
    constant_enclosure_pipeline,
    neumann_pipeline,
    table1,
    table3,
)
from .errors import EigenBoundsError
from .mesh import DOMAIN_NAMES
from .report import ReportTable, emit_report

__all__ = ["build_parser", "run_command", "main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_UNCERTIFIED = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that raises instead of exiting with status 2."""

    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _add_common(p, refine_default):
    p.add_argument("--refine", type=int, default=refine_default, help="uniform refinement level")
    p.add_argument("--mode", choices=("fast", "rigorous"), default="rigorous")
    p.add_argument("--format", choices=("json", "csv", "md"), default="json", dest="fmt")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--compact", action="store_true", help="compact interval notation in Markdown")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eigenbounds", description="Certified eigenvalue bounds and projection error constants.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("constants", help="enclose C_k on one domain")
    p.add_argument("--domain", required=True, choices=DOMAIN_NAMES)
    p.add_argument("--degree", type=int, default=0)
    p.add_argument("--dump-mesh", default=None, help="write the refined mesh as JSON to this path")
    p.add_argument(
        "--dump-matrices", default=None, help="write the constrained CR pencil (A then B) as plain text to this path"
    )
    _add_common(p, 3)

    p = sub.add_parser("neumann", help="Neumann Laplacian eigenvalue enclosures")
    p.add_argument("--domain", required=True, choices=DOMAIN_NAMES)
    p.add_argument("--count", type=int, default=3)
    p.add_argument("--dump-mesh", default=None, help="write the refined mesh as JSON to this path")
    _add_common(p, 3)

    p = sub.add_parser("table1", help="C_0..C_2 on the reference triangles")
    _add_common(p, 5)
    p = sub.add_parser("table3", help="C_0..C_2 on the reference tetrahedra")
    _add_common(p, 3)
    return parser


def _validate(args):
    if args.refine < 0:
        raise UsageError("--refine must be >= 0")
    if getattr(args, "degree", 0) < 0:
        raise UsageError("--degree must be >= 0")
    if getattr(args, "count", 1) < 1:
        raise UsageError("--count must be >= 1")
    if args.compact and args.fmt != "md":
        raise UsageError("--compact only applies to --format md")


def _pencil_text(args, cache) -> str:
    kind = "interval" if args.mode == "rigorous" else "float"
    mesh = cache.mesh(args.domain, args.refine)
    pencil = projection_pencil(
        mesh,
        "CR",
        args.degree,
        kind,
        forms=cache.forms(args.domain, args.refine, "CR", kind),
        boundary=cache.boundary(args.domain, args.refine, "CR", kind),
    )
    buf = io.StringIO()
    dump_matrix(pencil.A, buf, "A")
    dump_matrix(pencil.B, buf, "B")
    return buf.getvalue()


def _compute(args, cache) -> ReportTable:
    if args.command == "constants":
        rows = [constant_enclosure_pipeline(RunConfig(args.domain, args.degree, args.refine, args.mode, args.fmt), cache)]
        layout = "generic"
    elif args.command == "neumann":
        rows = neumann_pipeline(RunConfig(args.domain, 0, args.refine, args.mode, args.fmt), args.count, cache)
        layout = "generic"
    elif args.command == "table1":
        rows, layout = table1(args.refine, args.mode, cache=cache), "table1"
    else:
        rows, layout = table3(args.refine, args.mode, cache=cache), "table3"
    return ReportTable(rows, layout=layout, format=args.fmt, compact=args.compact)


def run_command(argv=None, stdout=None, stderr=None) -> int:
    """Parse ``argv``, run the pipeline and write the report; returns the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        _validate(args)
    except UsageError as exc:
        print(exc, file=stderr)
        return EXIT_USAGE
    try:
        cache = AssemblyCache()
        table = _compute(args, cache)
        mesh_text = matrix_text = None
        if getattr(args, "dump_mesh", None):
            mesh_text = cache.mesh(args.domain, args.refine).to_json()
        if getattr(args, "dump_matrices", None):
            matrix_text = _pencil_text(args, cache)
    except (EigenBoundsError, ValueError) as exc:
        print(f"eigenbounds: error: {exc}", file=stderr)
        return EXIT_USAGE
    try:
        if mesh_text is not None:
            with open(args.dump_mesh, "w", encoding="utf-8") as fh:
                fh.write(mesh_text)
        if matrix_text is not None:
            with open(args.dump_matrices, "w", encoding="utf-8") as fh:
                fh.write(matrix_text)
        emit_report(table, args.out if args.out else stdout)
    except OSError as exc:
        print(f"eigenbounds: cannot write output: {exc}", file=stderr)
        return EXIT_USAGE
    if args.mode == "rigorous" and not all(r.certified for r in table.rows):
        failed = [f"{r.domain}/k={r.k}" for r in table.rows if not r.certified]
        print(f"eigenbounds: certification failed for {', '.join(failed)}", file=stderr)
        return EXIT_UNCERTIFIED
    return EXIT_OK


def main() -> None:  # pragma: no cover - thin wrapper
    sys.exit(run_command())
