"""Two-level count data: per-area event counts ``r`` out of populations ``n``."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class DataError(ValueError):
    """Raised for malformed or inconsistent count data."""


@dataclass(frozen=True)
class CityRecord:
    id: int
    n: int
    r: int

    def __post_init__(self):
        if self.n < 1:
            raise DataError(f"area {self.id}: population n={self.n} must be >= 1")
        if self.r < 0:
            raise DataError(f"area {self.id}: count r={self.r} must be >= 0")
        if self.r > self.n:
            raise DataError(f"area {self.id}: count r={self.r} exceeds population n={self.n}")

    @property
    def rate(self) -> float:
        return self.r / self.n


@dataclass(frozen=True)
class Dataset:
    """Ordered, immutable collection of area records.

    Totals are always recomputed from the records.
    """

    records: tuple[CityRecord, ...]
    name: str = field(default="data", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if not self.records:
            raise DataError("dataset has no records")
        seen = set()
        for rec in self.records:
            if rec.id in seen:
                raise DataError(f"duplicate area id {rec.id}")
            seen.add(rec.id)

    def __len__(self):
        return len(self.records)

    @property
    def m(self) -> int:
        return len(self.records)

    @property
    def R(self) -> int:
        return sum(rec.r for rec in self.records)

    @property
    def N(self) -> int:
        return sum(rec.n for rec in self.records)

    @cached_property
    def ids(self) -> np.ndarray:
        return np.array([rec.id for rec in self.records], dtype=np.int64)

    @cached_property
    def r(self) -> np.ndarray:
        out = np.array([rec.r for rec in self.records], dtype=float)
        out.flags.writeable = False
        return out

    @cached_property
    def n(self) -> np.ndarray:
        out = np.array([rec.n for rec in self.records], dtype=float)
        out.flags.writeable = False
        return out

    def index_of(self, area_id: int) -> int:
        for i, rec in enumerate(self.records):
            if rec.id == area_id:
                return i
        raise KeyError(f"no area with id {area_id}")

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[int]], name: str = "data") -> "Dataset":
        return cls(tuple(CityRecord(int(i), int(n), int(r)) for i, n, r in rows), name=name)


def _parse_count(text: str, column: str, row_no: int) -> int:
    try:
        value = int(text.strip())
    except (ValueError, AttributeError):
        raise DataError(f"row {row_no}: column {column!r} is not an integer: {text!r}") from None
    if value < 0:
        raise DataError(f"row {row_no}: column {column!r} is negative: {value}")
    return value


def load_csv(path) -> Dataset:
    """Read a CSV with header ``id,n,r``. Row numbers in errors count the header as row 1."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file")
        missing = {"id", "n", "r"} - {f.strip() for f in reader.fieldnames}
        if missing:
            raise DataError(f"{path}: missing column(s) {sorted(missing)}")
        records = []
        for row_no, row in enumerate(reader, start=2):
            row = {k.strip(): v for k, v in row.items() if k is not None}
            if any(row.get(c) in (None, "") for c in ("id", "n", "r")):
                raise DataError(f"row {row_no}: expected columns id,n,r")
            area_id = _parse_count(row["id"], "id", row_no)
            n = _parse_count(row["n"], "n", row_no)
            r = _parse_count(row["r"], "r", row_no)
            if r > n:
                raise DataError(f"row {row_no}: area {area_id} has r={r} > n={n}")
            if n < 1:
                raise DataError(f"row {row_no}: area {area_id} has n=0")
            records.append(CityRecord(area_id, n, r))
    if not records:
        raise DataError(f"{path}: empty file")
    return Dataset(tuple(records), name=path.stem)


def write_csv(data: Dataset, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "n", "r"])
        for rec in data.records:
            w.writerow([rec.id, rec.n, rec.r])


# Male lung cancer deaths (r) among men aged 45-54, and city size (n),
# 84 Missouri cities, 1972-1981. Rows are (id, n, r).
_MISSOURI = (
    (1, 1019, 2), (2, 1512, 8), (3, 1424, 8), (4, 54155, 402),
    (5, 447, 1), (6, 1907, 12), (7, 1755, 11), (8, 5756, 42),
    (9, 509, 2), (10, 350, 1), (11, 473, 2), (12, 329, 1),
    (13, 7137, 55), (14, 430, 2), (15, 304, 1), (16, 163, 0),
    (17, 163, 0), (18, 159, 0), (19, 281, 1), (20, 154, 0),
    (21, 889, 6), (22, 260, 1), (23, 371, 2), (24, 232, 1),
    (25, 228, 1), (26, 343, 2), (27, 454, 3), (28, 323, 2),
    (29, 311, 2), (30, 784, 6), (31, 426, 3), (32, 184, 1),
    (33, 181, 1), (34, 177, 1), (35, 177, 1), (36, 291, 2),
    (37, 170, 1), (38, 158, 1), (39, 274, 2), (40, 150, 1),
    (41, 265, 2), (42, 257, 2), (43, 254, 2), (44, 28937, 251),
    (45, 445, 4), (46, 447, 4), (47, 329, 3), (48, 206, 2),
    (49, 313, 3), (50, 314, 3), (51, 314, 3), (52, 202, 2),
    (53, 198, 2), (54, 183, 2), (55, 292, 3), (56, 178, 2),
    (57, 287, 3), (58, 282, 3), (59, 164, 2), (60, 164, 2),
    (61, 1923, 18), (62, 3672, 34), (63, 261, 3), (64, 581, 6),
    (65, 550, 6), (66, 431, 5), (67, 399, 5), (68, 286, 4),
    (69, 592, 7), (70, 246, 4), (71, 547, 7), (72, 438, 6),
    (73, 202, 4), (74, 790, 10), (75, 648, 9), (76, 354, 6),
    (77, 730, 10), (78, 144, 4), (79, 1093, 14), (80, 384, 7),
    (81, 278, 6), (82, 596, 10), (83, 1889, 28), (84, 22514, 334),
)


def missouri() -> Dataset:
    """The 84-city Missouri lung cancer mortality data."""
    return Dataset.from_rows(_MISSOURI, name="missouri")
