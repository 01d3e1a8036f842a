"""Finite rational point clouds and their CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

from ..rationals import as_point, format_point


class DuplicatePointError(ValueError):
    def __init__(self, pairs: list[tuple[int, int]]):
        shown = ", ".join(f"{i}={j}" for i, j in pairs[:10])
        super().__init__(f"duplicate points (index pairs): {shown}")
        self.pairs = pairs


@dataclass(frozen=True)
class PointCloud:
    n: int
    points: tuple
    provenance: str = "external"

    @classmethod
    def from_points(cls, points: Iterable[Sequence], provenance: str = "external", n: int | None = None) -> "PointCloud":
        pts = tuple(as_point(p) for p in points)
        if n is None:
            if not pts:
                raise ValueError("empty cloud needs an explicit dimension")
            n = len(pts[0])
        if any(len(p) != n for p in pts):
            raise ValueError(f"all points must have dimension {n}")
        seen: dict[tuple, int] = {}
        dups = []
        for i, p in enumerate(pts):
            if p in seen:
                dups.append((seen[p], i))
            else:
                seen[p] = i
        if dups:
            raise DuplicatePointError(dups)
        return cls(n, pts, provenance)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def translated(self, v: Sequence) -> "PointCloud":
        v = as_point(v)
        return PointCloud(self.n, tuple(tuple(a + b for a, b in zip(p, v)) for p in self.points), self.provenance)

    def scaled(self, s) -> "PointCloud":
        from ..rationals import as_fraction

        s = as_fraction(s)
        return PointCloud(self.n, tuple(tuple(a * s for a in p) for p in self.points), self.provenance)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"coord_{j}" for j in range(self.n)])
        for p in self.points:
            w.writerow(format_point(p))
        return buf.getvalue()


def read_cloud_csv(text: str, provenance: str = "external") -> PointCloud:
    """Parse ``p/q`` coordinates; a header row and a leading ``ball_index`` column are optional."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError("no rows in cloud file")
    skip_first_col = False
    if rows[0] and not _looks_numeric(rows[0][0]):
        header = [c.strip() for c in rows[0]]
        skip_first_col = header[0] == "ball_index"
        rows = rows[1:]
        if skip_first_col:
            provenance = "stage"
    pts = [r[1:] if skip_first_col else r for r in rows]
    return PointCloud.from_points(pts, provenance=provenance)


def load_cloud(path: str, provenance: str = "external") -> PointCloud:
    with open(path, newline="") as fh:
        return read_cloud_csv(fh.read(), provenance)


def _looks_numeric(cell: str) -> bool:
    cell = cell.strip()
    if not cell:
        return False
    try:
        as_point([cell])
    except (ValueError, ZeroDivisionError):
        return False
    return True
