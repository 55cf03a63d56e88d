"""Feature tables: loading, schema inference, subsampling and pooling.

A :class:`FeatureTable` is column-oriented. Continuous columns are float64
arrays; binary and categorical columns are arrays of string tokens.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

REFERENCE = "reference"
DEFAULT_CONTINUOUS_THRESHOLD = 10


class DataError(ValueError):
    """Raised for malformed or inconsistent input tables."""


class FeatureKind(str, enum.Enum):
    BINARY = "binary"
    CATEGORICAL = "categorical"
    CONTINUOUS = "continuous"

    @classmethod
    def parse(cls, value: str | "FeatureKind") -> "FeatureKind":
        try:
            return cls(value)
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise DataError(f"unknown feature kind {value!r}; expected one of: {valid}") from None


@dataclass(frozen=True)
class FeatureSchema:
    names: tuple[str, ...]
    kinds: tuple[FeatureKind, ...]

    def __post_init__(self):
        if not self.names:
            raise DataError("schema must contain at least one feature")
        if len(self.names) != len(self.kinds):
            raise DataError("schema names and kinds differ in length")
        dupes = sorted({n for n in self.names if self.names.count(n) > 1})
        if dupes:
            raise DataError(f"duplicate feature names: {dupes}")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str | FeatureKind]]) -> "FeatureSchema":
        pairs = list(pairs)
        return cls(tuple(n for n, _ in pairs), tuple(FeatureKind.parse(k) for _, k in pairs))

    @classmethod
    def from_json(cls, path: str | Path, header: Sequence[str] | None = None) -> "FeatureSchema":
        """Read a sidecar mapping ``{column: kind}``.

        When ``header`` is given the schema follows header order, which must
        list exactly the sidecar's columns.
        """
        with open(path) as fh:
            mapping = json.load(fh)
        if not isinstance(mapping, dict):
            raise DataError(f"{path}: schema sidecar must be a JSON object")
        if header is None:
            return cls.from_pairs(mapping.items())
        missing = [h for h in header if h not in mapping]
        extra = [k for k in mapping if k not in header]
        if missing or extra:
            raise DataError(f"{path}: schema/header mismatch (missing={missing}, extra={extra})")
        return cls.from_pairs((h, mapping[h]) for h in header)

    def to_dict(self) -> dict[str, str]:
        return {n: k.value for n, k in zip(self.names, self.kinds)}

    def kind(self, name: str) -> FeatureKind:
        return self.kinds[self.index(name)]

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DataError(f"unknown feature {name!r}") from None

    def __len__(self) -> int:
        return len(self.names)

    def diff(self, other: "FeatureSchema") -> list[str]:
        """Column names on which two schemas disagree (presence, kind or position)."""
        out = []
        for i, name in enumerate(self.names):
            if name not in other.names:
                out.append(name)
            elif other.index(name) != i or other.kind(name) != self.kinds[i]:
                out.append(name)
        out.extend(n for n in other.names if n not in self.names)
        return out


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FeatureTable:
    schema: FeatureSchema
    columns: tuple[np.ndarray, ...]
    source: str = REFERENCE

    def __post_init__(self):
        if len(self.columns) != len(self.schema):
            raise DataError("column count does not match schema")
        lengths = {len(c) for c in self.columns}
        if len(lengths) != 1:
            raise DataError(f"columns have unequal lengths: {sorted(lengths)}")
        if lengths.pop() < 1:
            raise DataError("table must contain at least one row")
        for name, kind, col in zip(self.schema.names, self.schema.kinds, self.columns):
            if kind is FeatureKind.CONTINUOUS:
                if col.dtype.kind != "f" or not np.all(np.isfinite(col)):
                    raise DataError(f"column {name!r}: continuous values must be finite reals")
            elif kind is FeatureKind.BINARY and len(np.unique(col)) > 2:
                raise DataError(f"column {name!r}: binary column has more than two distinct values")
            _freeze(col)

    @classmethod
    def from_columns(cls, data: Mapping[str, Sequence], kinds: Mapping[str, str | FeatureKind],
                     source: str = REFERENCE) -> "FeatureTable":
        schema = FeatureSchema.from_pairs((n, kinds[n]) for n in data)
        cols = []
        for name, kind in zip(schema.names, schema.kinds):
            if kind is FeatureKind.CONTINUOUS:
                cols.append(np.asarray(data[name], dtype=np.float64).copy())
            else:
                cols.append(np.array([_token(v) for v in data[name]], dtype=object))
        return cls(schema, tuple(cols), source)

    @property
    def n_rows(self) -> int:
        return len(self.columns[0])

    def __len__(self) -> int:
        return self.n_rows

    def column(self, name: str) -> np.ndarray:
        return self.columns[self.schema.index(name)]

    def take(self, index: np.ndarray, source: str | None = None) -> "FeatureTable":
        index = np.asarray(index, dtype=np.intp)
        return FeatureTable(self.schema, tuple(c[index].copy() for c in self.columns),
                            self.source if source is None else source)

    def with_source(self, source: str) -> "FeatureTable":
        return FeatureTable(self.schema, self.columns, source)

    def to_csv(self, delimiter: str = ",") -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
        writer.writerow(self.schema.names)
        rendered = [
            [repr(float(v)) for v in col] if kind is FeatureKind.CONTINUOUS else list(col)
            for kind, col in zip(self.schema.kinds, self.columns)
        ]
        writer.writerows(zip(*rendered))
        return buf.getvalue()

    def save(self, path: str | Path, delimiter: str = ",") -> None:
        Path(path).write_text(self.to_csv(delimiter))

    def equals(self, other: "FeatureTable") -> bool:
        if self.schema != other.schema or self.n_rows != other.n_rows:
            return False
        return all(np.array_equal(a, b) for a, b in zip(self.columns, other.columns))


def _token(value) -> str:
    if isinstance(value, float) and value.is_integer():
        return str(int(value))
    return str(value)


def _as_float(cell: str) -> float | None:
    try:
        v = float(cell)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def _read_rows(path: str | Path, delimiter: str) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh, delimiter=delimiter)
            rows = [r for r in reader if r]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i} has {len(row)} cells, expected {len(header)}")
    return header, body


def _infer_kind(cells: list[str], threshold: int) -> FeatureKind:
    distinct = set(cells)
    if len(distinct) == 2:
        return FeatureKind.BINARY
    if len(distinct) > threshold and all(_as_float(c) is not None for c in distinct):
        return FeatureKind.CONTINUOUS
    return FeatureKind.CATEGORICAL


def infer_schema(path: str | Path, delimiter: str = ",",
                 threshold: int = DEFAULT_CONTINUOUS_THRESHOLD) -> FeatureSchema:
    """Guess column kinds from a delimited file.

    Exactly two distinct tokens give a binary column; all-numeric columns
    with more than ``threshold`` distinct values are continuous; anything
    else is categorical.
    """
    header, body = _read_rows(path, delimiter)
    if not body:
        raise DataError(f"{path}: no data rows")
    cols = list(zip(*body))
    return FeatureSchema(tuple(header), tuple(_infer_kind([c.strip() for c in col], threshold)
                                              for col in cols))


def load_table(path: str | Path, schema: FeatureSchema | None = None, source: str = REFERENCE,
               delimiter: str = ",", drop_incomplete: bool = False,
               threshold: int = DEFAULT_CONTINUOUS_THRESHOLD) -> FeatureTable:
    header, body = _read_rows(path, delimiter)
    if not body:
        raise DataError(f"{path}: no data rows")
    body = [[c.strip() for c in row] for row in body]

    incomplete = [i for i, row in enumerate(body) if any(c == "" for c in row)]
    if incomplete:
        if not drop_incomplete:
            i = incomplete[0]
            col = header[body[i].index("")]
            raise DataError(f"{path}: missing value at row {i}, column {col!r} "
                            f"({len(incomplete)} incomplete rows; pass drop_incomplete to skip)")
        skip = set(incomplete)
        body = [row for i, row in enumerate(body) if i not in skip]
        if not body:
            raise DataError(f"{path}: every row is incomplete")

    if schema is None:
        cols = list(zip(*body))
        schema = FeatureSchema(tuple(header), tuple(_infer_kind(list(c), threshold) for c in cols))
    elif list(schema.names) != header:
        raise DataError(f"{path}: header {header} does not match schema {list(schema.names)}")

    columns = []
    for j, (name, kind) in enumerate(zip(schema.names, schema.kinds)):
        raw = [row[j] for row in body]
        if kind is FeatureKind.CONTINUOUS:
            values = np.empty(len(raw), dtype=np.float64)
            for i, cell in enumerate(raw):
                v = _as_float(cell)
                if v is None:
                    raise DataError(f"{path}: row {i}, column {name!r}: cannot parse {cell!r} as a finite real")
                values[i] = v
            columns.append(values)
        else:
            columns.append(np.array(raw, dtype=object))
    try:
        return FeatureTable(schema, tuple(columns), source)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def subsample(table: FeatureTable, n: int, seed: int) -> FeatureTable:
    """Draw ``n`` rows uniformly without replacement, keeping file order."""
    if n < 1:
        raise DataError("subsample size must be positive")
    if n > table.n_rows:
        raise DataError(f"cannot subsample {n} rows from a table of {table.n_rows}")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(table.n_rows, size=n, replace=False))
    return table.take(idx)


@dataclass(frozen=True)
class LabeledPool:
    """Generated rows followed by baseline rows, with label 1 for generated."""

    table: FeatureTable
    labels: np.ndarray
    e_g: float
    n_generated: int
    sources: tuple[str, str] = field(default=("generated", REFERENCE))

    @property
    def n_rows(self) -> int:
        return self.table.n_rows

    def relabel(self, labels: np.ndarray) -> "LabeledPool":
        labels = _freeze(np.asarray(labels, dtype=np.int8).copy())
        n_gen = int(labels.sum())
        return LabeledPool(self.table, labels, n_gen / len(labels), n_gen, self.sources)


def merge_label(gen: FeatureTable, ref: FeatureTable) -> LabeledPool:
    if gen.schema != ref.schema:
        raise DataError(f"schema mismatch between {gen.source!r} and {ref.source!r}: "
                        f"differing columns {gen.schema.diff(ref.schema)}")
    cols = []
    for g, r in zip(gen.columns, ref.columns):
        cols.append(np.concatenate([g, r]))
    table = FeatureTable(gen.schema, tuple(cols), f"{gen.source}+{ref.source}")
    labels = np.zeros(gen.n_rows + ref.n_rows, dtype=np.int8)
    labels[: gen.n_rows] = 1
    return LabeledPool(table, _freeze(labels), gen.n_rows / (gen.n_rows + ref.n_rows),
                       gen.n_rows, (gen.source, ref.source))
