"""Tabular estimate reports with deterministic CSV serialization.

Every quantitative check in the toolkit produces an ``EstimateReport``: a
flat table of data rows plus one summary row per checked bound.  The CSV
layout is fixed so downstream consumers can rely on it: the data columns of
the specific check come first, then the three summary columns
``sup_ratio, refinement_delta, pass``.  Data rows leave the summary columns
empty; summary rows leave the data columns (except the leading id column)
empty.  Header notes are written as leading ``#`` comment lines.

Floats are printed with 17 significant digits so identical inputs always
produce byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


def format_value(v) -> str:
    """Render a cell deterministically; floats get 17 significant digits."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "PASS" if v else "FAIL"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    if isinstance(v, int):
        return str(v)
    return str(v)


@dataclass
class BoundSummary:
    """Outcome of one checked bound.

    ``sup_ratio`` holds the headline number of the check (a supremum ratio,
    a fitted constant, an exponent, ...) and ``refinement_delta`` the
    stability or residual figure attached to it; the report's notes say
    which is which when the check is not a plain sup-ratio bound.
    """

    bound_id: str
    sup_ratio: float
    refinement_delta: float
    passed: bool
    note: str = ""


@dataclass
class EstimateReport:
    check_id: str
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    summaries: list[BoundSummary] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    SUMMARY_COLUMNS = ("sup_ratio", "refinement_delta", "pass")

    def add_row(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(
                f"row has {len(values)} cells, expected {len(self.columns)}"
            )
        self.rows.append(tuple(values))

    def add_summary(self, summary: BoundSummary) -> None:
        self.summaries.append(summary)

    def passed(self) -> bool:
        return bool(self.summaries) and all(s.passed for s in self.summaries)

    def summary(self, bound_id: str) -> BoundSummary:
        for s in self.summaries:
            if s.bound_id == bound_id:
                return s
        raise KeyError(f"no summary for bound {bound_id!r}")

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# check: {self.check_id}\n")
            for note in self.notes:
                fh.write(f"# {note}\n")
            header = ",".join(self.columns + self.SUMMARY_COLUMNS)
            fh.write(header + "\n")
            blank_summary = ("",) * len(self.SUMMARY_COLUMNS)
            for row in self.rows:
                cells = tuple(format_value(v) for v in row) + blank_summary
                fh.write(",".join(cells) + "\n")
            pad = ("",) * (len(self.columns) - 1)
            for s in self.summaries:
                cells = (
                    (s.bound_id,)
                    + pad
                    + (
                        format_value(s.sup_ratio),
                        format_value(s.refinement_delta),
                        "PASS" if s.passed else "FAIL",
                    )
                )
                fh.write(",".join(cells) + "\n")
