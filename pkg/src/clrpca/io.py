"""CSV/JSON serialization, atomic file writes, and run manifests.

All floats are emitted with 17 significant digits so write-then-read
round-trips reproduce matrices exactly.  Writes go through a temp file and an
atomic rename.  Each command records a manifest (command line, config
snapshot, seeds, version, timestamps, input digests) next to its outputs;
primary outputs themselves contain no timestamps, so reruns with identical
inputs and seeds are byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from datetime import datetime, timezone
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .errors import InputError

MANIFEST_NAME = "manifest.json"


def fmt(x: float) -> str:
    """Format a float with 17 significant digits (full double precision)."""
    return format(float(x), ".17g")


def atomic_write_text(path: str, text: str) -> None:
    """Write text to path via a temp file in the same directory + rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj, path: str) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def read_labeled_csv(path: str):
    """Read a labeled matrix: header row of column labels, label-first rows.

    Returns ``(values, row_ids, col_ids)``.  Malformed cells raise
    :class:`InputError` naming the offending line.
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: file is empty") from None
        if len(header) < 2:
            raise InputError(f"{path}, line 1: expected a label column plus data columns")
        col_ids = tuple(h.strip() for h in header[1:])
        row_ids, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise InputError(
                    f"{path}, line {lineno}: expected {len(header)} cells, got {len(row)}"
                )
            row_ids.append(row[0].strip())
            try:
                rows.append([float(cell) for cell in row[1:]])
            except ValueError as exc:
                raise InputError(f"{path}, line {lineno}: non-numeric cell ({exc})") from exc
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.array(rows, dtype=float), tuple(row_ids), col_ids


def write_labeled_csv(path: str, values: np.ndarray, row_ids: Optional[Sequence[str]],
                      col_ids: Optional[Sequence[str]], corner: str = "id") -> None:
    values = np.asarray(values, dtype=float)
    n, p = values.shape
    row_ids = list(row_ids) if row_ids is not None else [f"r{i}" for i in range(n)]
    col_ids = list(col_ids) if col_ids is not None else [f"c{j}" for j in range(p)]
    lines = [",".join([corner] + col_ids)]
    for rid, row in zip(row_ids, values):
        lines.append(",".join([rid] + [fmt(x) for x in row]))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_matrix_csv(path: str) -> np.ndarray:
    """Read a dense header-free numeric CSV."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = []
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row:
                    continue
                try:
                    rows.append([float(cell) for cell in row])
                except ValueError as exc:
                    raise InputError(f"{path}, line {lineno}: non-numeric cell ({exc})") from exc
    except OSError as exc:
        raise InputError(f"cannot open {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InputError(f"{path}: ragged rows (widths {sorted(widths)})")
    return np.array(rows, dtype=float)


def write_matrix_csv(path: str, A: np.ndarray) -> None:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    lines = [",".join(fmt(x) for x in row) for row in A]
    atomic_write_text(path, "\n".join(lines) + "\n")


def matrix_envelope(A: np.ndarray) -> dict:
    """JSON envelope with shape metadata for a dense matrix."""
    A = np.asarray(A, dtype=float)
    return {"shape": list(A.shape), "values": A.tolist()}


def matrix_from_envelope(obj: dict) -> np.ndarray:
    try:
        A = np.array(obj["values"], dtype=float)
        shape = tuple(obj["shape"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad matrix envelope: {exc}") from exc
    if A.shape != shape:
        raise InputError(f"matrix envelope shape {shape} does not match values {A.shape}")
    return A


def write_mse_table(path: str, table) -> None:
    """Method-by-(mean, se) CSV for a simulation run."""
    lines = ["method,mean,se"]
    for method, mean, se in zip(table.methods, table.means, table.ses):
        lines.append(f"{method},{fmt(mean)},{fmt(se)}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_records(path: str, table) -> None:
    """Per-(replicate, method) fit diagnostics for a simulation run."""
    lines = ["replicate,method,distance,best_alpha,gram_max_dev,degenerate,iterations,converged"]
    for r in table.records:
        lines.append(
            f"{r.replicate},{r.method},{fmt(r.distance)},{fmt(r.best_alpha)},"
            f"{fmt(r.gram_max_dev)},{int(r.degenerate)},{r.iterations},{int(r.converged)}"
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_manifest(out_dir: str, command: str, config: dict, seeds: dict,
                   inputs: Sequence[str]) -> str:
    """Record how a command was run; one manifest per output directory."""
    manifest = {
        "command": command,
        "config": config,
        "seeds": seeds,
        "software_version": __version__,
        "timestamp_utc": datetime.now(timezone.utc).isoformat(),
        "input_digests": {os.path.basename(p): file_digest(p) for p in inputs},
    }
    path = os.path.join(out_dir, MANIFEST_NAME)
    dump_json(manifest, path)
    return path
