"""CSV ingestion with user-supplied column and value mappings."""

from __future__ import annotations

import csv
import json
from collections.abc import Collection
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .cdr import DOMAINS, GLOBAL, RATINGS, SENTINEL, RawRecord
from .errors import InputError, MalformedCsv, UnmappedValue

ANALYSIS_FIELDS = DOMAINS + (GLOBAL,)
ID_FIELDS = ("subject", "rater", "visit", "phase")

MISSING = None

DEFAULT_VALUES: dict[str, float | None] = {
    "0": 0.0,
    "0.0": 0.0,
    "0.5": 0.5,
    ".5": 0.5,
    "1": 1.0,
    "1.0": 1.0,
    "2": 2.0,
    "2.0": 2.0,
    "3": 3.0,
    "3.0": 3.0,
    "-1": SENTINEL,
    "-1.0": SENTINEL,
    "": MISSING,
    "NA": MISSING,
    "NaN": MISSING,
    "nan": MISSING,
}


@dataclass
class ColumnMapping:
    """Where each logical field lives in a CSV export and how to read cells.

    ``values`` maps stripped cell text to a rating, the ``-1`` sentinel, or
    ``None`` for a missing value.
    """

    columns: dict[str, str]
    values: dict[str, float | None] = field(default_factory=lambda: dict(DEFAULT_VALUES))
    delimiter: str = ","

    def __post_init__(self):
        missing = [f for f in ANALYSIS_FIELDS if f not in self.columns]
        if missing:
            raise InputError(f"column mapping lacks analysis fields {missing}")
        unknown = set(self.columns) - set(ANALYSIS_FIELDS) - set(ID_FIELDS)
        if unknown:
            raise InputError(f"column mapping has unknown fields {sorted(unknown)}")
        for raw, value in self.values.items():
            if value is not None and float(value) not in RATINGS and float(value) != SENTINEL:
                raise InputError(f"value mapping {raw!r} -> {value!r} is not a rating or the -1 sentinel")

    @classmethod
    def from_dict(cls, doc: dict) -> ColumnMapping:
        values = dict(DEFAULT_VALUES)
        if doc.get("replace_default_values"):
            values = {}
        values.update(doc.get("values", {}))
        return cls(dict(doc["columns"]), values, doc.get("delimiter", ","))

    @classmethod
    def identity(cls) -> ColumnMapping:
        """Columns named exactly like the logical fields."""
        return cls({f: f for f in ANALYSIS_FIELDS + ID_FIELDS})


def load_mapping(path: str | Path) -> ColumnMapping:
    return ColumnMapping.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def mapping_template(name: str) -> ColumnMapping:
    """One of the shipped templates: ``"adni"`` or ``"lasi-dad"``."""
    fname = {"adni": "adni_mapping.json", "lasi-dad": "lasi_dad_mapping.json"}[name]
    text = resources.files("cdrdag.data").joinpath(fname).read_text("utf-8")
    return ColumnMapping.from_dict(json.loads(text))


@dataclass
class LoadReport:
    rows_read: int = 0
    cells_remapped: int = 0
    unmapped_failures: int = 0
    rows_skipped: int = 0
    rows_filtered: int = 0

    def as_dict(self) -> dict:
        return dict(vars(self))


def _canonical(value: float | None) -> str | None:
    if value is None:
        return None
    return {0.0: "0", 0.5: "0.5", 1.0: "1", 2.0: "2", 3.0: "3", SENTINEL: "-1"}[float(value)]


def load_csv(
    path: str | Path,
    mapping: ColumnMapping | None = None,
    strict: bool = True,
    phases: Collection[str] | None = None,
) -> tuple[list[RawRecord], LoadReport]:
    """Read raw records, keeping sentinels and missing values for the cleaner.

    With ``strict`` the first unmapped analysis cell raises
    :class:`UnmappedValue`; otherwise such rows are skipped and counted.
    Line numbers count the header as line 1. ``phases`` keeps only rows
    whose mapped phase column holds one of the given labels.
    """
    mapping = mapping or ColumnMapping.identity()
    if phases is not None and "phase" not in mapping.columns:
        raise InputError("phase filtering needs a 'phase' column in the mapping")
    path = Path(path)
    report = LoadReport()
    records: list[RawRecord] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=mapping.delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedCsv(1, "empty file, expected a header row") from None
        except csv.Error as exc:
            raise MalformedCsv(1, str(exc)) from None
        header = [h.strip() for h in header]
        pos = {}
        for logical, col in mapping.columns.items():
            if col not in header:
                if logical in ANALYSIS_FIELDS:
                    raise MalformedCsv(1, f"header lacks column {col!r} for {logical}")
                continue
            pos[logical] = header.index(col)
        if phases is not None and "phase" not in pos:
            raise MalformedCsv(1, f"header lacks column {mapping.columns['phase']!r} for phase")
        line = 1
        while True:
            try:
                row = next(reader)
            except StopIteration:
                break
            except csv.Error as exc:
                raise MalformedCsv(reader.line_num, str(exc)) from None
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise MalformedCsv(line, f"expected {len(header)} fields, found {len(row)}")
            report.rows_read += 1
            if phases is not None and row[pos["phase"]].strip() not in phases:
                report.rows_filtered += 1
                continue
            values = {}
            failed = False
            for logical in ANALYSIS_FIELDS:
                cell = row[pos[logical]].strip()
                if cell not in mapping.values:
                    if strict:
                        raise UnmappedValue(mapping.columns[logical], cell, line)
                    report.unmapped_failures += 1
                    failed = True
                    continue
                value = mapping.values[cell]
                if _canonical(value) != cell:
                    report.cells_remapped += 1
                values[logical] = value
            if failed:
                report.rows_skipped += 1
                continue
            ids = {f: (row[pos[f]].strip() if f in pos else None) for f in ID_FIELDS}
            records.append(
                RawRecord(
                    scores={k: values[k] for k in DOMAINS},
                    cdr=values[GLOBAL],
                    subject=ids["subject"] if ids["subject"] is not None else str(line),
                    visit=ids["visit"] or None,
                    rater=ids["rater"] or None,
                    phase=ids["phase"] or None,
                    line=line,
                )
            )
    return records, report


def write_cohort_csv(path: str | Path, d, include_ids: bool = True) -> None:
    """Write a CDR dataset with rating labels under the logical column names."""
    names = d.names
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow((["subject"] if include_ids else []) + list(ANALYSIS_FIELDS))
        for i, row in enumerate(d.rows):
            labels = [d.variables[names.index(f)].levels[row[names.index(f)]] for f in ANALYSIS_FIELDS]
            w.writerow(([f"S{i:06d}"] if include_ids else []) + labels)
