"""Serialisation of enclosure rows: newline-delimited JSON, CSV and Markdown."""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from decimal import ROUND_CEILING, ROUND_FLOOR, Decimal
from typing import Sequence

from .bounds import TABLE1_DOMAINS, TABLE3_DOMAINS, ConstantEnclosure
from .errors import ConfigurationError

__all__ = [
    "ReportTable",
    "CSV_COLUMNS",
    "format_float",
    "record_to_json",
    "compact_notation",
    "render",
    "emit_report",
]

CSV_COLUMNS = ("domain", "k", "lo", "hi", "certified", "refine_level", "mode", "h")
LAYOUTS = ("table1", "table3", "generic")
FORMATS = ("json", "csv", "md")


@dataclass
class ReportTable:
    rows: Sequence[ConstantEnclosure]
    layout: str = "generic"
    format: str = "json"
    compact: bool = False

    def __post_init__(self):
        if self.layout not in LAYOUTS:
            raise ConfigurationError(f"unknown layout {self.layout!r}")
        if self.format not in FORMATS:
            raise ConfigurationError(f"unknown format {self.format!r}")
        allowed = {"table1": TABLE1_DOMAINS, "table3": TABLE3_DOMAINS}.get(self.layout)
        if allowed is not None:
            for r in self.rows:
                if r.domain not in allowed or r.k not in (0, 1, 2):
                    raise ConfigurationError(f"row ({r.domain}, k={r.k}) does not fit layout {self.layout}")


def format_float(x: float) -> str:
    """17 significant digits, '.' decimal point; non-finite values as JSON-style tokens."""
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return "%.17g" % x


def _json_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format_float(v)
    if v is None:
        return "null"
    return json.dumps(v)


def record_to_json(row: ConstantEnclosure) -> str:
    rec = row.to_record()
    return "{" + ", ".join(f"{json.dumps(k)}: {_json_value(v)}" for k, v in rec.items()) + "}"


# ---------------------------------------------------------------------------
# compact notation
# ---------------------------------------------------------------------------

def _decimal_pair(lo: float, hi: float, digits: int):
    """lo rounded down and hi rounded up on a common decimal grid.

    Rounding starts from the shortest decimal that reads back as the same
    float, so 0.1755 renders as 0.1755 and not as 0.1754999...
    """
    dlo, dhi = Decimal(repr(float(lo))), Decimal(repr(float(hi)))
    mag = max(abs(dlo), abs(dhi))
    if mag == 0:
        return "0", "0"
    quantum = Decimal(1).scaleb(mag.adjusted() - digits + 1)
    dlo = dlo.quantize(quantum, rounding=ROUND_FLOOR)
    dhi = dhi.quantize(quantum, rounding=ROUND_CEILING)
    return format(dlo, "f"), format(dhi, "f")


def compact_notation(lo: float, hi: float, digits: int = 4) -> str:
    """Shared decimal prefix with differing tails as sub/superscript.

    >>> compact_notation(0.3183, 0.3186)
    '0.318_3^6'
    >>> compact_notation(0.1755, 0.1760)
    '0.17_{55}^{60}'
    """
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return f"[{format_float(lo)}, {format_float(hi)}]"
    slo, shi = _decimal_pair(lo, hi, digits)
    if len(slo) != len(shi) or slo[:1] == "-" or shi[:1] == "-":
        return f"[{slo}, {shi}]"
    n = 0
    while n < len(slo) and slo[n] == shi[n]:
        n += 1
    if n == len(slo):
        return slo
    prefix, a, b = slo[:n], slo[n:], shi[n:]
    if "." in a or "." in b or prefix.endswith("."):  # no fractional digit is shared
        return f"[{slo}, {shi}]"

    def wrap(s):
        return s if len(s) == 1 else "{" + s + "}"

    return f"{prefix}_{wrap(a)}^{wrap(b)}"


def _interval_text(row: ConstantEnclosure, compact: bool) -> str:
    if not math.isfinite(row.hi):
        return f"[{_decimal_pair(row.lo, row.lo, 6)[0]}, inf]"
    if compact:
        return compact_notation(row.lo, row.hi)
    slo, shi = _decimal_pair(row.lo, row.hi, 6)
    return f"[{slo}, {shi}]"


# ---------------------------------------------------------------------------
# renderers
# ---------------------------------------------------------------------------

def _csv(table: ReportTable) -> str:
    out = io.StringIO()
    out.write(",".join(CSV_COLUMNS) + "\n")
    for r in table.rows:
        fields = [
            r.domain,
            str(r.k),
            format_float(r.lo),
            format_float(r.hi),
            "true" if r.certified else "false",
            str(r.refine_level),
            r.mode,
            format_float(r.h_used),
        ]
        out.write(",".join(fields) + "\n")
    return out.getvalue()


def _json(table: ReportTable) -> str:
    return "".join(record_to_json(r) + "\n" for r in table.rows)


def _md_grid(table: ReportTable, domains) -> str:
    cells = {(r.domain, r.k): r for r in table.rows}
    lines = ["| | " + " | ".join(domains) + " |", "|---|" + "---|" * len(domains)]
    for k in (0, 1, 2):
        row = [f"C_{k}"]
        for d in domains:
            r = cells.get((d, k))
            if r is None:
                row.append("")
            else:
                mark = "" if r.certified or r.mode == "fast" else " (uncertified)"
                row.append(_interval_text(r, table.compact) + mark)
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def _md_generic(table: ReportTable) -> str:
    lines = [
        "| domain | quantity | k | enclosure | certified | refine_level | mode | h |",
        "|---|---|---|---|---|---|---|---|",
    ]
    for r in table.rows:
        lines.append(
            f"| {r.domain} | {r.quantity} | {r.k} | {_interval_text(r, table.compact)} | "
            f"{'true' if r.certified else 'false'} | {r.refine_level} | {r.mode} | {r.h_used:.4g} |"
        )
    return "\n".join(lines) + "\n"


def render(table: ReportTable) -> str:
    if table.format == "csv":
        return _csv(table)
    if table.format == "json":
        return _json(table)
    if table.layout == "table1":
        return _md_grid(table, TABLE1_DOMAINS)
    if table.layout == "table3":
        return _md_grid(table, TABLE3_DOMAINS)
    return _md_generic(table)


def emit_report(table: ReportTable, sink) -> None:
    """Write the rendered table to a text stream or a path."""
    text = render(table)
    if hasattr(sink, "write"):
        sink.write(text)
        return
    with open(sink, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
