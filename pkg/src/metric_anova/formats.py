"""Reading and writing patterns, labels, distance matrices and scalar data.

Pattern CSV
    header ``pattern_id,x,y``, one row per point. Patterns without points are
    listed in a manifest ``<stem>.manifest.csv`` (column ``pattern_id``) that
    gives the full id list and its order.
Pattern JSON
    ``[{"id": ..., "points": [[x, y], ...]}, ...]``.
Distance CSV
    a header row of ids, then the full square matrix. Floats are written with
    ``repr`` so a read-back is exact.
Labels CSV
    ``pattern_id,group`` or ``pattern_id,factorA,factorB``.
Scalar CSV
    ``id,value,group[,factorB]``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .core import GroupLayout, TwoWayLayout
from .pattern_space import DistanceMatrix, PointPattern


class DataError(ValueError):
    """Malformed input file; the message names the file and line."""


def _float(text: str, where: str) -> float:
    try:
        v = float(text)
    except (TypeError, ValueError):
        raise DataError(f"{where}: cannot parse number {text!r}") from None
    if not math.isfinite(v):
        raise DataError(f"{where}: non-finite value {text!r}")
    return v


def manifest_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".manifest.csv")


def _check_header(header, expected, path):
    got = [h.strip() for h in header] if header else None
    if got != list(expected):
        raise DataError(f"{path}:1: expected header {','.join(expected)}, got {header}")


# ---------------------------------------------------------------- patterns

def read_patterns_csv(path, manifest=None) -> tuple[list[str], list[PointPattern]]:
    path = Path(path)
    points: dict[str, list] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        _check_header(next(reader, None), ("pattern_id", "x", "y"), path)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise DataError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            where = f"{path}:{lineno}"
            pid = row[0].strip()
            if not pid:
                raise DataError(f"{where}: empty pattern_id")
            points.setdefault(pid, []).append((_float(row[1], where), _float(row[2], where)))
    ids = list(points)
    manifest = manifest_path(path) if manifest is None else Path(manifest)
    if manifest.exists():
        with open(manifest, newline="") as fh:
            reader = csv.reader(fh)
            _check_header(next(reader, None), ("pattern_id",), manifest)
            listed = [row[0].strip() for row in reader if row and row[0].strip()]
        unknown = set(ids) - set(listed)
        if unknown:
            raise DataError(f"{manifest}: pattern ids missing from manifest: {sorted(unknown)}")
        ids = listed
    return ids, [PointPattern(np.array(points.get(i, []), dtype=float).reshape(-1, 2)) for i in ids]


def write_patterns_csv(path, ids, patterns, manifest: bool = True) -> None:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pattern_id", "x", "y"])
        for pid, pat in zip(ids, patterns):
            for x, y in pat.points:
                w.writerow([pid, repr(float(x)), repr(float(y))])
    if manifest:
        with open(manifest_path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["pattern_id"])
            for pid in ids:
                w.writerow([pid])


def read_patterns_json(path) -> tuple[list[str], list[PointPattern]]:
    path = Path(path)
    try:
        records = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(records, list):
        raise DataError(f"{path}: expected a JSON array of pattern records")
    ids, pats = [], []
    for k, rec in enumerate(records):
        try:
            ids.append(str(rec["id"]))
            pats.append(PointPattern(np.asarray(rec["points"], dtype=float)))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}: record {k}: {exc}") from None
    return ids, pats


def write_patterns_json(path, ids, patterns) -> None:
    records = [{"id": i, "points": p.points.tolist()} for i, p in zip(ids, patterns)]
    Path(path).write_text(json.dumps(records))


def read_patterns(path):
    """Dispatch on the file suffix (``.json`` or CSV)."""
    if Path(path).suffix.lower() == ".json":
        return read_patterns_json(path)
    return read_patterns_csv(path)


# ---------------------------------------------------------------- matrices

def write_distance_csv(target, D: DistanceMatrix) -> None:
    """Write to a path or an open text stream."""
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([str(i) for i in D.ids])
        for row in D.data:
            w.writerow([repr(float(v)) for v in row])
    if isinstance(target, io.TextIOBase) or hasattr(target, "write"):
        emit(target)
    else:
        with open(target, "w", newline="") as fh:
            emit(fh)


def read_distance_csv(path) -> DistanceMatrix:
    path = Path(path)
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh)]
    if not rows:
        raise DataError(f"{path}:1: empty file")
    ids = [h.strip() for h in rows[0]]
    body = [(k, r) for k, r in enumerate(rows[1:], start=2) if r]
    if len(body) != len(ids):
        raise DataError(f"{path}: header lists {len(ids)} ids but {len(body)} matrix rows follow")
    data = np.empty((len(ids), len(ids)))
    for i, (lineno, r) in enumerate(body):
        if len(r) != len(ids):
            raise DataError(f"{path}:{lineno}: expected {len(ids)} fields, got {len(r)}")
        data[i] = [_float(v, f"{path}:{lineno}") for v in r]
    try:
        return DistanceMatrix(data, tuple(ids))
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


# ------------------------------------------------------------------ labels

def read_labels_csv(path):
    """Return ``(ids, columns)`` where ``columns`` holds one or two label lists."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "pattern_id" or len(header) not in (2, 3):
            raise DataError(f"{path}:1: expected header pattern_id,group or pattern_id,factorA,factorB")
        width = len(header)
        ids, cols = [], [[] for _ in range(width - 1)]
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise DataError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
            ids.append(row[0].strip())
            for c, v in zip(cols, row[1:]):
                c.append(v.strip())
    if len(set(ids)) != len(ids):
        raise DataError(f"{path}: duplicate pattern_id")
    return ids, cols


def align_labels(data_ids, label_ids, columns, path="labels"):
    """Reorder label columns to follow ``data_ids``."""
    pos = {pid: k for k, pid in enumerate(label_ids)}
    missing = [i for i in data_ids if str(i) not in pos]
    if missing:
        raise DataError(f"{path}: no label for ids {missing[:5]}")
    order = [pos[str(i)] for i in data_ids]
    return [[c[k] for k in order] for c in columns]


def layout_from_columns(columns):
    try:
        if len(columns) == 1:
            return GroupLayout(columns[0])
        return TwoWayLayout(columns[0], columns[1])
    except ValueError as exc:
        raise DataError(str(exc)) from None


# ------------------------------------------------------------------ scalar

def read_scalar_csv(path):
    """Return ``(ids, values, label_columns)``."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or [h.strip() for h in header[:3]] != ["id", "value", "group"] or len(header) > 4:
            raise DataError(f"{path}:1: expected header id,value,group[,factorB]")
        width = len(header)
        ids, values, cols = [], [], [[] for _ in range(width - 2)]
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise DataError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
            ids.append(row[0].strip())
            values.append(_float(row[1], f"{path}:{lineno}"))
            for c, v in zip(cols, row[2:]):
                c.append(v.strip())
    return ids, np.array(values), cols


# ------------------------------------------------------------- embeddings

def write_embedding_csv(path, ids, coordinates) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pattern_id"] + [f"dim{d + 1}" for d in range(coordinates.shape[1])])
        for pid, row in zip(ids, coordinates):
            w.writerow([pid] + [repr(float(v)) for v in row])
