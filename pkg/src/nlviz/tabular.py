"""Uniform tabular loading for benchmark databases and user datasets.

Tables are immutable after load and safe to share across workers. Numeric
columns polluted by empty-string cells are deliberately NOT coerced: the
pollution is surfaced via ColumnInfo.coercion_note so downstream failures
stay observable. Coercion is an explicit opt-in.
"""

from __future__ import annotations

import csv
import io
import re
import sqlite3
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MissingDatabase, MissingTable, ParseFailure, UnreadableFile

Cell = str | int | float | None

DEFAULT_MAX_CELLS = 1_000_000

_NUMBER_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_DATE_RES = (
    re.compile(r"^\d{4}-\d{2}-\d{2}([T ]\d{2}:\d{2}(:\d{2}(\.\d+)?)?)?$"),  # ISO-8601
    re.compile(r"^\d{1,2}/\d{1,2}/\d{4}$"),
    re.compile(r"^\d{1,2}-[A-Za-z]{3}-\d{4}$"),
)


@dataclass(frozen=True)
class ColumnInfo:
    name: str
    inferred_kind: str  # numeric | text | datetime | unknown
    null_count: int = 0
    coercion_note: str | None = None


@dataclass(frozen=True)
class TableData:
    name: str
    columns: tuple[str, ...]
    rows: tuple[tuple[Cell, ...], ...]

    def __post_init__(self) -> None:
        seen = set()
        for col in self.columns:
            if col in seen:
                raise ParseFailure(f"duplicate column name {col!r} in table {self.name!r}")
            seen.add(col)
        for i, row in enumerate(self.rows):
            if len(row) != len(self.columns):
                raise ParseFailure(
                    f"row {i} of table {self.name!r} has {len(row)} cells, "
                    f"expected {len(self.columns)}"
                )

    def column_values(self, name: str) -> list[Cell]:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]


@dataclass(frozen=True)
class DatasetProfile:
    table: TableData
    column_info: tuple[ColumnInfo, ...] = field(default=())

    @property
    def column_names(self) -> tuple[str, ...]:
        return self.table.columns


def _is_number_text(value: str) -> bool:
    return bool(_NUMBER_RE.match(value.strip()))


def _is_date_text(value: str) -> bool:
    v = value.strip()
    return any(rx.match(v) for rx in _DATE_RES)


def _check_size(n_rows: int, n_cols: int, max_cells: int, source: str) -> None:
    if n_rows * max(n_cols, 1) > max_cells:
        raise UnreadableFile(
            f"{source}: table exceeds the in-memory limit of {max_cells} cells"
        )


def load_sqlite_table(
    db_path: str | Path,
    table_name: str,
    max_cells: int = DEFAULT_MAX_CELLS,
) -> TableData:
    """Load one table from a SQLite file, column order preserved, NULL -> None."""
    path = Path(db_path)
    if not path.is_file():
        raise MissingDatabase(f"database file not found: {path}")
    try:
        conn = sqlite3.connect(f"file:{path}?mode=ro", uri=True)
    except sqlite3.Error as exc:
        raise UnreadableFile(f"cannot open {path}: {exc}") from exc
    try:
        try:
            cur = conn.execute(
                "SELECT name FROM sqlite_master WHERE type in ('table','view')"
            )
            names = {r[0] for r in cur.fetchall()}
        except sqlite3.DatabaseError as exc:
            raise UnreadableFile(f"{path} is not a readable SQLite file: {exc}") from exc
        actual = _resolve_table_name(table_name, names)
        if actual is None:
            raise MissingTable(f"table {table_name!r} not found in {path}")
        cur = conn.execute(f'SELECT * FROM "{actual}"')
        columns = tuple(d[0] for d in cur.description)
        rows = []
        for raw in cur:
            rows.append(tuple(_from_sqlite(cell) for cell in raw))
            if len(rows) * len(columns) > max_cells:
                _check_size(len(rows), len(columns), max_cells, str(path))
        return TableData(name=actual, columns=columns, rows=tuple(rows))
    finally:
        conn.close()


def _resolve_table_name(requested: str, available: set[str]) -> str | None:
    if requested in available:
        return requested
    lowered = {n.lower(): n for n in available}
    return lowered.get(requested.lower())


def _from_sqlite(cell: object) -> Cell:
    if cell is None or isinstance(cell, (int, float, str)):
        return cell
    if isinstance(cell, bytes):
        return cell.decode("utf-8", errors="replace")
    return str(cell)


def load_delimited(
    path: str | Path,
    name: str | None = None,
    max_cells: int = DEFAULT_MAX_CELLS,
) -> TableData:
    """Load a UTF-8 comma-delimited file; first row is the header."""
    path = Path(path)
    if not path.is_file():
        raise MissingDatabase(f"dataset file not found: {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise UnreadableFile(f"{path} is not valid UTF-8: {exc}") from exc
    return parse_delimited(text, name=name or path.stem, max_cells=max_cells)


def parse_delimited(
    text: str,
    name: str = "dataset",
    max_cells: int = DEFAULT_MAX_CELLS,
) -> TableData:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseFailure("delimited input is empty; a header row is required")
    rows: list[tuple[Cell, ...]] = []
    for i, raw in enumerate(reader):
        if len(raw) != len(header):
            raise ParseFailure(
                f"row {i + 1} has {len(raw)} cells under a {len(header)}-column header"
            )
        rows.append(tuple(_parse_cell(c) for c in raw))
        _check_size(len(rows), len(header), max_cells, name)
    return TableData(name=name, columns=tuple(header), rows=tuple(rows))


def _parse_cell(text: str) -> Cell:
    if _is_number_text(text):
        try:
            return int(text)
        except ValueError:
            return float(text)
    return text


def export_delimited(table: TableData) -> str:
    """Serialize back to comma-delimited text. SQL NULL is written as an
    empty field (CSV has no null), so NULL-bearing tables do not round-trip."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow(["" if cell is None else cell for cell in row])
    return out.getvalue()


def profile_columns(table: TableData) -> DatasetProfile:
    """Derive per-column kind and null statistics; total, never raises."""
    infos = []
    for idx, col in enumerate(table.columns):
        values = [row[idx] for row in table.rows]
        infos.append(_profile_one(col, values))
    return DatasetProfile(table=table, column_info=tuple(infos))


def _profile_one(name: str, values: list[Cell]) -> ColumnInfo:
    null_count = sum(1 for v in values if v is None)
    present = [v for v in values if v is not None]
    if not present:
        return ColumnInfo(name=name, inferred_kind="unknown", null_count=null_count)

    empties = sum(1 for v in present if isinstance(v, str) and v.strip() == "")
    filled = [v for v in present if not (isinstance(v, str) and v.strip() == "")]
    if not filled:
        return ColumnInfo(name=name, inferred_kind="text", null_count=null_count,
                          coercion_note="column holds only empty strings")

    all_numeric = all(
        isinstance(v, (int, float)) or (isinstance(v, str) and _is_number_text(v))
        for v in filled
    )
    if all_numeric:
        if empties:
            return ColumnInfo(
                name=name,
                inferred_kind="text",
                null_count=null_count,
                coercion_note="numeric column contains empty strings",
            )
        return ColumnInfo(name=name, inferred_kind="numeric", null_count=null_count)

    all_dates = all(isinstance(v, str) and _is_date_text(v) for v in filled)
    if all_dates and not empties:
        return ColumnInfo(name=name, inferred_kind="datetime", null_count=null_count)

    return ColumnInfo(name=name, inferred_kind="text", null_count=null_count)


def coerce_empty_to_null(table: TableData) -> TableData:
    """Opt-in cleanup: empty-string cells in otherwise-numeric columns become NULL."""
    profile = profile_columns(table)
    target_cols = {
        info.name
        for info in profile.column_info
        if info.coercion_note == "numeric column contains empty strings"
    }
    if not target_cols:
        return table
    indices = {table.columns.index(c) for c in target_cols}
    rows = []
    for row in table.rows:
        rows.append(tuple(
            None if (i in indices and isinstance(c, str) and c.strip() == "") else c
            for i, c in enumerate(row)
        ))
    return TableData(name=table.name, columns=table.columns, rows=tuple(rows))
