"""CSV intake for the renderer.

The producing toolkit writes each artifact as optional note lines
("# ..."), one header row, then data rows printed with 17 significant
digits.  The loader keeps the notes for captions, types every column
as float64 when all its entries parse and leaves it as strings
otherwise, and verifies documented schemas by column name so a
mismatch points at the offending column instead of failing somewhere
inside a plotting call.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SchemaError


@dataclass
class Table:
    """One loaded CSV: named columns plus the note lines above the header."""

    path: Path
    columns: dict
    notes: tuple = ()

    def __getitem__(self, name):
        return self.columns[name]

    def __len__(self):
        for values in self.columns.values():
            return len(values)
        return 0


def load_table(path) -> Table:
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"input CSV {path} does not exist")
    with open(path, newline="") as fh:
        raw = fh.read().splitlines()

    # note lines may contain commas, so split them off before csv parsing
    notes = tuple(line[1:].strip() for line in raw if line.startswith("#"))
    records = list(csv.reader(line for line in raw
                              if line and not line.startswith("#")))
    if not records:
        raise SchemaError(f"{path.name}: no header row")

    header = [name.strip() for name in records[0]]
    if len(set(header)) != len(header):
        raise SchemaError(f"{path.name}: duplicate column names in header")
    for i, row in enumerate(records[1:], start=2):
        if len(row) != len(header):
            raise SchemaError(f"{path.name}: row {i} has {len(row)} fields, "
                              f"header has {len(header)}")

    columns = {}
    for idx, name in enumerate(header):
        values = [row[idx] for row in records[1:]]
        try:
            columns[name] = np.array(values, dtype=float)
        except ValueError:
            columns[name] = np.array(values, dtype=str)
    return Table(path=path, columns=columns, notes=notes)


def require_columns(table: Table, required) -> Table:
    missing = [name for name in required if name not in table.columns]
    if missing:
        found = ", ".join(table.columns) or "none"
        raise SchemaError(
            f"{table.path.name}: missing required column(s) "
            + ", ".join(repr(name) for name in missing)
            + f" (found: {found})")
    return table


def numeric_column(table: Table, name: str) -> np.ndarray:
    values = table[name]
    if values.dtype != np.float64:
        raise SchemaError(f"{table.path.name}: column {name!r} is not numeric")
    return values
