"""Convergence-table rendering and atomic file output."""

from __future__ import annotations

import csv
import io
import logging
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Final, Iterable, Sequence

from frac_oga.errors import InputError
from frac_oga.numerics.metrics import FdmRecord, IterationRecord

_log = logging.getLogger("frac_oga.export")

OUTPUT_FORMATS: Final[tuple[str, ...]] = ("csv", "markdown")

TABLE_HEADER: Final[tuple[str, ...]] = (
    "N",
    "loss",
    "loss_order",
    "l2",
    "l2_order",
    "h1",
    "h1_order",
    "linf",
    "linf_order",
)
FDM_HEADER: Final[tuple[str, ...]] = ("M", "l2", "l2_order", "linf", "linf_order")
INDEX_HEADER: Final[tuple[str, ...]] = ("alpha", "relu_power", "grid_intervals", "status", "table")
# The sidecar keeps every table column at full precision plus per-row flags.
FULL_HEADER: Final[tuple[str, ...]] = (*TABLE_HEADER, "undefined_orders", "stagnated")
_EXTENSIONS: Final[dict[str, str]] = {"csv": ".csv", "markdown": ".md"}


def table_filename(alpha: float, relu_power: int, grid_intervals: int, output_format: str = "csv") -> str:
    ext = _EXTENSIONS.get(output_format, ".csv")
    return f"table_alpha{float(alpha):g}_k{int(relu_power)}_M{int(grid_intervals)}{ext}"


def path_for_format(path: Path, output_format: str) -> Path:
    """Swap a .csv or .md suffix to match the format; other suffixes are left alone."""
    path = Path(path)
    if path.suffix.lower() in _EXTENSIONS.values():
        return path.with_suffix(_EXTENSIONS.get(output_format, ".csv"))
    return path


def sidecar_path(path: Path) -> Path:
    return path.with_name(f"{path.stem}.full.csv")


def atomic_write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_name = f".{path.name}.tmp.{os.getpid()}.{time.time_ns()}"
    tmp_path = path.parent / tmp_name
    try:
        tmp_path.write_bytes(data)
        os.replace(tmp_path, path)
    finally:
        try:
            if tmp_path.exists():
                tmp_path.unlink(missing_ok=True)
        except Exception:
            pass


def format_error(value: float) -> str:
    return "%.2e" % value


def format_order(value: float) -> str:
    text = "%.2f" % value
    return "0.00" if text == "-0.00" else text


def _full(value: float) -> str:
    return "%.17g" % value


def _table_rows(records: Sequence[IterationRecord]) -> list[list[str]]:
    return [
        [
            str(r.n),
            format_error(r.loss),
            format_order(r.loss_order),
            format_error(r.l2),
            format_order(r.l2_order),
            format_error(r.h1),
            format_order(r.h1_order),
            format_error(r.linf),
            format_order(r.linf_order),
        ]
        for r in records
    ]


def _full_rows(records: Sequence[IterationRecord]) -> list[list[str]]:
    return [
        [
            str(r.n),
            *(_full(v) for v in (r.loss, r.loss_order, r.l2, r.l2_order, r.h1, r.h1_order, r.linf, r.linf_order)),
            ";".join(r.undefined_orders),
            "1" if r.stagnated else "0",
        ]
        for r in records
    ]


def render_csv(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def render_markdown(header: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines.extend("| " + " | ".join(row) + " |" for row in rows)
    return "\n".join(lines) + "\n"


def render_table(records: Sequence[IterationRecord], output_format: str = "csv") -> str:
    if output_format not in OUTPUT_FORMATS:
        raise InputError(f"unknown output format {output_format!r}; expected csv or markdown")
    rows = _table_rows(records)
    if output_format == "markdown":
        return render_markdown(TABLE_HEADER, rows)
    return render_csv(TABLE_HEADER, rows)


def render_full_csv(records: Sequence[IterationRecord]) -> str:
    return render_csv(FULL_HEADER, _full_rows(records))


def write_table(path: Path, records: Sequence[IterationRecord], output_format: str = "csv") -> tuple[Path, Path]:
    """Write the rounded table and its full-precision `.full.csv` sidecar."""
    path = Path(path)
    full = sidecar_path(path)
    atomic_write_bytes(path, render_table(records, output_format).encode("utf-8"))
    atomic_write_bytes(full, render_full_csv(records).encode("utf-8"))
    _log.info("table_written path=%s rows=%d format=%s", path, len(records), output_format)
    return path, full


def render_fdm_table(records: Sequence[FdmRecord], output_format: str = "csv") -> str:
    rows = [
        [str(r.intervals), format_error(r.l2), format_order(r.l2_order), format_error(r.linf), format_order(r.linf_order)]
        for r in records
    ]
    if output_format == "markdown":
        return render_markdown(FDM_HEADER, rows)
    return render_csv(FDM_HEADER, rows)


@dataclass(frozen=True)
class IndexEntry:
    alpha: float
    relu_power: int
    grid_intervals: int
    status: str
    table: str


def render_index(entries: Sequence[IndexEntry]) -> str:
    rows = [[f"{e.alpha:g}", str(e.relu_power), str(e.grid_intervals), e.status, e.table] for e in entries]
    return render_csv(INDEX_HEADER, rows)


def write_index(out_dir: Path, entries: Sequence[IndexEntry]) -> Path:
    path = Path(out_dir) / "index.csv"
    atomic_write_bytes(path, render_index(entries).encode("utf-8"))
    _log.info("index_written path=%s cells=%d", path, len(entries))
    return path
