from __future__ import annotations

import sqlite3
from pathlib import Path

import pytest

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def make_sqlite(tmp_path):
    """Create a throwaway SQLite database from (table, columns, rows) specs."""

    def _make(name: str, tables: dict[str, tuple[list[str], list[tuple]]]) -> Path:
        path = tmp_path / f"{name}.sqlite"
        conn = sqlite3.connect(path)
        try:
            for table, (columns, rows) in tables.items():
                cols = ", ".join(f'"{c}"' for c in columns)
                conn.execute(f'CREATE TABLE "{table}" ({cols})')
                if rows:
                    marks = ", ".join("?" for _ in columns)
                    conn.executemany(
                        f'INSERT INTO "{table}" VALUES ({marks})', rows
                    )
            conn.commit()
        finally:
            conn.close()
        return path

    return _make
