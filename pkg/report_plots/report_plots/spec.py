"""Plot job description shared by both figure types."""

from __future__ import annotations

import os
from dataclasses import dataclass


@dataclass(frozen=True)
class PlotSpec:
    """Where to read, where to write, and how densely to label.

    ``max_labels`` caps the number of annotated loading labels so that
    wide-vocabulary biplots stay legible; the cap keeps the labels with the
    largest loading norms, deterministically.
    """

    input_path: str
    output_path: str
    title: str = ""
    max_labels: int = 40

    def validate(self) -> None:
        if not os.path.isfile(self.input_path):
            raise FileNotFoundError(f"input file does not exist: {self.input_path}")
        out_dir = os.path.dirname(os.path.abspath(self.output_path)) or "."
        if not os.path.isdir(out_dir):
            raise FileNotFoundError(f"output directory does not exist: {out_dir}")
        if not os.access(out_dir, os.W_OK):
            raise PermissionError(f"output directory is not writable: {out_dir}")
        if self.max_labels < 0:
            raise ValueError(f"max_labels must be >= 0, got {self.max_labels}")


def parse_csv_rows(path: str, required: tuple) -> list:
    """Read a small CSV into dict rows, validating the required columns."""
    import csv

    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        missing = [c for c in required if c not in fields]
        if missing:
            raise ValueError(f"{path}: missing column(s) {missing}; found {fields}")
        return list(reader)
